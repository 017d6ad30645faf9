//! Experiment configuration, presets, dispatch and run manifests.
//!
//! A run is described by a single JSON document with a versioned
//! schema; unknown keys are rejected. The same configuration and seed
//! always produce byte-identical CSV outputs, independent of thread
//! count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiments::{
    band_replication, contraction_study, coverage_study, rate_prediction, BandsConfig,
    PriorTemplate, StudyConfig, TruthSpec,
};
use crate::operators::Operator;
use crate::transform::max_orthonormality_defect;

/// Errors at the command-line boundary, mapped to exit codes:
/// parse failures exit 2, constraint violations 3, I/O 4.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Library(Error::Io(_)) => 4,
            CliError::Library(_) => 3,
        }
    }
}

/// The experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Contraction,
    Coverage,
    Bands,
    /// Checks all constraints and the discrete-orthogonality premise
    /// without producing result tables.
    Validate,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Contraction => "contraction",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Bands => "bands",
            ExperimentKind::Validate => "validate",
        }
    }
}

fn default_replicates() -> usize {
    1
}
fn default_gamma() -> f64 {
    0.05
}
fn default_mc_draws() -> usize {
    100_000
}
fn default_noise_sd() -> f64 {
    1.0
}
fn default_band_draw_count() -> usize {
    1000
}
fn default_grid_points() -> usize {
    201
}

/// A complete experiment description (JSON schema version 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub operator: Operator,
    pub prior: PriorTemplate,
    pub truth: TruthSpec,
    pub n_list: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    /// Prior regularities to sweep; defaults to the template's alpha.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_band_draw_count")]
    pub band_draw_count: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if cfg.schema_version != 1 {
            return Err(CliError::Parse(format!(
                "unsupported schema_version {} (expected 1)",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Library(Error::Io(e)))?;
        Self::from_json(&text)
    }

    fn alpha_sweep(&self) -> Vec<f64> {
        self.alphas
            .clone()
            .unwrap_or_else(|| vec![self.prior.alpha])
    }

    fn study_config(&self, alpha: f64) -> StudyConfig {
        StudyConfig {
            operator: self.operator,
            prior: self.prior.with_alpha(alpha),
            truth: self.truth.clone(),
            n_list: self.n_list.clone(),
            replicates: self.replicates,
            gamma: self.gamma,
            seed: self.seed,
            mc_draws: self.mc_draws,
            noise_sd: self.noise_sd,
        }
    }

    fn bands_config(&self) -> BandsConfig {
        BandsConfig {
            operator: self.operator,
            prior: self.prior,
            truth: self.truth.clone(),
            n_list: self.n_list.clone(),
            alphas: self.alpha_sweep(),
            draw_count: self.band_draw_count,
            keep_fraction: 1.0 - self.gamma,
            grid_points: self.grid_points,
            seed: self.seed,
            noise_sd: self.noise_sd,
        }
    }
}

/// Checked-in experiment presets, embedded in the binary.
pub const PRESETS: &[(&str, &str)] = &[
    ("figure1", include_str!("../presets/figure1.json")),
    ("figure2", include_str!("../presets/figure2.json")),
    ("thm1_rate", include_str!("../presets/thm1_rate.json")),
    ("thm3_coverage", include_str!("../presets/thm3_coverage.json")),
];

/// Names of the available presets.
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Loads a preset configuration by name.
pub fn preset(name: &str) -> Result<Config, CliError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            CliError::Parse(format!(
                "unknown preset `{name}` (available: {})",
                preset_names().join(", ")
            ))
        })?;
    Config::from_json(text)
}

/// Record of a completed run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment: String,
    pub config: Config,
    pub seed: u64,
    pub threads: Option<usize>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub git_describe: Option<String>,
}

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn git_describe() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let text = String::from_utf8(out.stdout).ok()?;
    let trimmed = text.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_string())
    }
}

fn write_output(
    out_dir: &Path,
    name: String,
    body: Vec<u8>,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    let path = out_dir.join(&name);
    fs::write(&path, body).map_err(|e| CliError::Library(Error::Io(e)))?;
    outputs.push(name);
    Ok(())
}

/// Runs the configured experiment, writing result CSVs and a
/// `manifest.json` into `out_dir`.
pub fn run(mut config: Config, out_dir: &Path, overrides: &Overrides) -> Result<RunManifest, CliError> {
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    let started_unix = unix_now();
    let clock = Instant::now();

    fs::create_dir_all(out_dir).map_err(|e| CliError::Library(Error::Io(e)))?;
    let mut outputs: Vec<String> = Vec::new();

    match config.experiment {
        ExperimentKind::Contraction => {
            let sweep = config.alpha_sweep();
            let suffixed = config.alphas.is_some();
            for alpha in sweep {
                let table = contraction_study(&config.study_config(alpha))?;
                let mut buf = Vec::new();
                table.write_csv(&mut buf).map_err(Error::Io)?;
                let name = if suffixed {
                    format!("contraction_alpha{alpha}.csv")
                } else {
                    "contraction.csv".to_string()
                };
                write_output(out_dir, name, buf, &mut outputs)?;
            }
        }
        ExperimentKind::Coverage => {
            let sweep = config.alpha_sweep();
            let suffixed = config.alphas.is_some();
            for alpha in sweep {
                let table = coverage_study(&config.study_config(alpha))?;
                let mut buf = Vec::new();
                table.write_csv(&mut buf).map_err(Error::Io)?;
                let name = if suffixed {
                    format!("coverage_alpha{alpha}.csv")
                } else {
                    "coverage.csv".to_string()
                };
                write_output(out_dir, name, buf, &mut outputs)?;
            }
        }
        ExperimentKind::Bands => {
            let cells = band_replication(&config.bands_config())?;
            for cell in cells {
                let mut buf = Vec::new();
                cell.write_csv(&mut buf).map_err(Error::Io)?;
                let name = format!("bands_n{}_alpha{}.csv", cell.n, cell.alpha);
                write_output(out_dir, name, buf, &mut outputs)?;
            }
        }
        ExperimentKind::Validate => {
            validate(&config)?;
        }
    }

    // every listed output must exist and be non-empty
    for name in &outputs {
        let meta = fs::metadata(out_dir.join(name)).map_err(|e| CliError::Library(Error::Io(e)))?;
        if meta.len() == 0 {
            return Err(CliError::Library(Error::Invalid(format!(
                "output file {name} is empty"
            ))));
        }
    }

    let manifest = RunManifest {
        schema_version: 1,
        experiment: config.experiment.name().to_string(),
        seed: config.seed,
        threads: overrides.threads,
        config,
        started_unix,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        outputs,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        git_describe: git_describe(),
    };
    let body = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    fs::write(out_dir.join("manifest.json"), body).map_err(|e| CliError::Library(Error::Io(e)))?;
    Ok(manifest)
}

/// Constraint checks shared by all experiments, exercised explicitly by
/// the `validate` experiment kind.
fn validate(config: &Config) -> Result<(), CliError> {
    for alpha in config.alpha_sweep() {
        let study = config.study_config(alpha);
        study.validate()?;
        rate_prediction(&config.operator, &study.prior, config.truth.beta())?;
        study.prior.instantiate(study.n_list[0])?;
    }
    // spot-check the discrete orthogonality premise at a small size
    let n = config.n_list.first().copied().unwrap_or(64).min(64).max(8);
    let defect = max_orthonormality_defect(&config.operator, n)?;
    if defect > 1e-12 {
        return Err(CliError::Library(Error::Invalid(format!(
            "discrete orthogonality defect {defect} at n = {n} exceeds 1e-12"
        ))));
    }
    Ok(())
}

/// Resolves the configuration source given on the command line.
pub fn resolve_config(
    config_path: Option<&PathBuf>,
    preset_name: Option<&str>,
) -> Result<Config, CliError> {
    match (config_path, preset_name) {
        (Some(path), None) => Config::from_file(path),
        (None, Some(name)) => preset(name),
        _ => Err(CliError::Parse(
            "exactly one of --config and --preset must be given".into(),
        )),
    }
}
