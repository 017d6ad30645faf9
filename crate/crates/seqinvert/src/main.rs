use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use seqinvert::cli::{self, Overrides};

/// Nonparametric Bayesian inversion experiments on a sequence model.
#[derive(Parser, Debug)]
#[command(name = "seqinvert", version, about)]
struct Args {
    /// Path to a JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Name of a built-in preset (see --list-presets).
    #[arg(long)]
    preset: Option<String>,

    /// Output directory for CSV results and the run manifest.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed override; falls back to SEQINVERT_SEED, then to the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker-thread cap (no effect in sequential builds).
    #[arg(long)]
    threads: Option<usize>,

    /// List available presets and exit.
    #[arg(long)]
    list_presets: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();

    if args.list_presets {
        for name in cli::preset_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }

    let seed = match resolve_seed(args.seed) {
        Ok(seed) => seed,
        Err(msg) => {
            eprintln!("seqinvert: {msg}");
            return ExitCode::from(2);
        }
    };

    #[cfg(feature = "parallel")]
    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("seqinvert: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let Some(out_dir) = args.out.as_deref() else {
        eprintln!("seqinvert: --out DIR is required");
        return ExitCode::from(2);
    };

    let config = match cli::resolve_config(args.config.as_ref(), args.preset.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("seqinvert: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let overrides = Overrides {
        seed,
        threads: args.threads,
    };
    match cli::run(config, out_dir, &overrides) {
        Ok(manifest) => {
            eprintln!(
                "seqinvert: {} finished in {:.2}s, {} output file(s) in {}",
                manifest.experiment,
                manifest.wall_seconds,
                manifest.outputs.len(),
                out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("seqinvert: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SEQINVERT_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| format!("SEQINVERT_SEED must be a u64: {e}")),
        Err(_) => Ok(None),
    }
}
