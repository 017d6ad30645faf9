//! End-to-end synthetic experiment drivers.
//!
//! Three studies mirror the theory: contraction (posterior risk against
//! the predicted rate), coverage (frequentist probability that the
//! credible ball contains the truth), and band replication (posterior
//! draw envelopes on a plotting grid). Replicates are embarrassingly
//! parallel with per-replicate derived seeds and order-independent
//! aggregation, so parallel and serial runs produce identical tables.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::credible::{band_draws, covers, credible_radius};
use crate::error::{Error, Result};
use crate::grid::DesignGrid;
use crate::operators::{
    catalog_signal, CatalogSignal, IllPosedness, Operator, SeriesEvaluator, SignalCoefficients,
};
use crate::par;
use crate::posterior::{Posterior, PriorDecay, PriorSpec};
use crate::rng::{seeds, substream};
use crate::stats::fit_slope;
use crate::transform::{project_values, synthesize_grid, Observations, ProjectionMethod};

/// Prior parameters without the truncation level, which is bound to
/// each sample size when instantiated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorTemplate {
    pub decay: PriorDecay,
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub rho: f64,
    #[serde(default = "default_one")]
    pub s: f64,
}

fn default_one() -> f64 {
    1.0
}

impl PriorTemplate {
    pub fn polynomial(alpha: f64, rho: f64) -> Self {
        Self {
            decay: PriorDecay::Polynomial,
            alpha,
            rho,
            s: 1.0,
        }
    }

    pub fn exponential(alpha: f64, s: f64) -> Self {
        Self {
            decay: PriorDecay::Exponential,
            alpha,
            rho: 1.0,
            s,
        }
    }

    /// Prior with truncation coupled to the sample size `n`.
    pub fn instantiate(&self, n: usize) -> Result<PriorSpec> {
        match self.decay {
            PriorDecay::Polynomial => PriorSpec::polynomial(self.alpha, self.rho, n),
            PriorDecay::Exponential => PriorSpec::exponential(self.alpha, self.s, n),
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }
}

/// How the true signal is specified in a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    Catalog { name: CatalogSignal },
    PowerLaw { exponent: f64, beta: f64 },
    Coefficients { coeffs: Vec<f64>, beta: f64 },
}

impl TruthSpec {
    /// Smoothness tag of the signal.
    pub fn beta(&self) -> f64 {
        match self {
            TruthSpec::Catalog {
                name: CatalogSignal::VolterraTruth,
            } => 1.0,
            TruthSpec::Catalog {
                name: CatalogSignal::HeatTruth,
            } => 2.49,
            TruthSpec::PowerLaw { beta, .. } => *beta,
            TruthSpec::Coefficients { beta, .. } => *beta,
        }
    }

    /// Coefficients stored to length `len` (explicit coefficient lists
    /// keep their own length when shorter; the tail is implicitly zero).
    pub fn materialize(&self, len: usize) -> SignalCoefficients {
        match self {
            TruthSpec::Catalog { name } => catalog_signal(*name, len),
            TruthSpec::PowerLaw { exponent, beta } => {
                SignalCoefficients::power_law(len, *exponent, *beta)
            }
            TruthSpec::Coefficients { coeffs, beta } => {
                let mut c = coeffs.clone();
                c.truncate(len);
                SignalCoefficients::new(c, *beta)
            }
        }
    }
}

/// Storage length for the true signal: the mild regime needs a long
/// tail (the aliasing remainder decays polynomially), the extreme
/// regime only a short one.
pub fn truth_storage_len(op: &Operator, max_n: usize) -> usize {
    match op.ill_posedness() {
        IllPosedness::Mild { .. } => 16 * max_n,
        IllPosedness::Extreme { .. } => max_n + 64,
    }
}

/// Configuration shared by the contraction and coverage studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub operator: Operator,
    pub prior: PriorTemplate,
    pub truth: TruthSpec,
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub gamma: f64,
    pub seed: u64,
    pub mc_draws: usize,
    pub noise_sd: f64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Invalid("n_list must not be empty".into()));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid("n_list must be strictly increasing".into()));
        }
        if self.n_list[0] < 2 {
            return Err(Error::GridTooSmall { n: self.n_list[0] });
        }
        if self.replicates == 0 {
            return Err(Error::Invalid("replicates must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::GammaOutOfRange { gamma: self.gamma });
        }
        if self.noise_sd < 0.0 {
            return Err(Error::NonPositive {
                name: "noise_sd",
                value: self.noise_sd,
            });
        }
        Ok(())
    }
}

/// Draws `Y_i = Af(x_i) + noise_sd * xi_i` with i.i.d. standard normal
/// noise from `substream(seed, 0)`; the noise path is retained on the
/// returned observations.
pub fn generate_observations(
    op: &Operator,
    truth: &SignalCoefficients,
    grid: &DesignGrid,
    noise_sd: f64,
    seed: u64,
) -> Result<Observations> {
    let g = synthesize_grid(op, truth, grid)?;
    let mut rng = substream(seed, 0);
    let xi: Vec<f64> = (0..grid.n())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y: Vec<f64> = g.iter().zip(&xi).map(|(g, x)| g + noise_sd * x).collect();
    Ok(Observations::with_noise(*grid, y, noise_sd, xi))
}

/// Contraction-rate regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Mild,
    Extreme,
}

/// The predicted contraction rate `eps_n = eps_{n,1} v eps_{n,2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    regime: Regime,
    prior_decay: PriorDecay,
    alpha: f64,
    beta: f64,
    rho: f64,
    p: f64,
    s: f64,
}

impl RatePrediction {
    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `(eps_{n,1}, eps_{n,2})`.
    ///
    /// Mild regime: `(rho^2 n)^{-(beta/(2a+2p+1) ^ 1)}` and
    /// `rho (rho^2 n)^{-a/(2a+2p+1)}`. Extreme regime:
    /// `(log(rho^2 n))^{-beta/s}` and `rho (log(rho^2 n))^{-a/s}`.
    /// With an exponential-decay prior in the extreme regime both
    /// components equal `(log n)^{-beta/s}`.
    pub fn epsilon_components(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        match (self.regime, self.prior_decay) {
            (Regime::Mild, _) => {
                let denom = 2.0 * self.alpha + 2.0 * self.p + 1.0;
                let scaled = self.rho * self.rho * nf;
                let e1 = scaled.powf(-(self.beta / denom).min(1.0));
                let e2 = self.rho * scaled.powf(-self.alpha / denom);
                (e1, e2)
            }
            (Regime::Extreme, PriorDecay::Polynomial) => {
                let log_scaled = (self.rho * self.rho * nf).ln();
                let e1 = log_scaled.powf(-self.beta / self.s);
                let e2 = self.rho * log_scaled.powf(-self.alpha / self.s);
                (e1, e2)
            }
            (Regime::Extreme, PriorDecay::Exponential) => {
                let e = nf.ln().powf(-self.beta / self.s);
                (e, e)
            }
        }
    }

    pub fn epsilon(&self, n: usize) -> f64 {
        let (e1, e2) = self.epsilon_components(n);
        e1.max(e2)
    }

    /// Closed-form exponent for the unscaled prior (`rho = 1`): the
    /// power of `n` (mild) or of `log n` (extreme). `None` when a
    /// nontrivial scaling is in play.
    pub fn exponent(&self) -> Option<f64> {
        match (self.regime, self.prior_decay) {
            _ if self.rho != 1.0 => None,
            (Regime::Mild, _) => {
                Some(-self.alpha.min(self.beta) / (2.0 * self.alpha + 2.0 * self.p + 1.0))
            }
            (Regime::Extreme, PriorDecay::Polynomial) => {
                Some(-self.alpha.min(self.beta) / self.s)
            }
            (Regime::Extreme, PriorDecay::Exponential) => Some(-self.beta / self.s),
        }
    }
}

/// Builds the rate prediction for an operator/prior/truth combination,
/// enforcing the mild-regime constraint `beta + p > 1/2`.
pub fn rate_prediction(
    op: &Operator,
    prior: &PriorTemplate,
    truth_beta: f64,
) -> Result<RatePrediction> {
    match op.ill_posedness() {
        IllPosedness::Mild { p } => {
            if prior.decay == PriorDecay::Exponential {
                return Err(Error::Invalid(
                    "exponential-decay priors are only analysed in the extreme regime".into(),
                ));
            }
            if truth_beta + p <= 0.5 {
                return Err(Error::SmoothnessConstraint { sum: truth_beta + p });
            }
            Ok(RatePrediction {
                regime: Regime::Mild,
                prior_decay: prior.decay,
                alpha: prior.alpha,
                beta: truth_beta,
                rho: prior.rho,
                p,
                s: 1.0,
            })
        }
        IllPosedness::Extreme { p, s } => Ok(RatePrediction {
            regime: Regime::Extreme,
            prior_decay: prior.decay,
            alpha: prior.alpha,
            beta: truth_beta,
            rho: prior.rho,
            p,
            s: if prior.decay == PriorDecay::Exponential {
                prior.s
            } else {
                s
            },
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRow {
    pub n: usize,
    pub risk_mean: f64,
    pub risk_sd: f64,
}

/// Per-size posterior risk with the fitted decay slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTable {
    pub rows: Vec<ContractionRow>,
    /// Least-squares slope of `log risk` against `log n` (mild) or
    /// `log log n` (extreme); the smallest size is dropped as burn-in.
    pub slope: f64,
    /// Predicted risk exponent `2 * rate exponent` when available.
    pub predicted_risk_exponent: Option<f64>,
}

impl ContractionTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,risk_mean,risk_sd,slope")?;
        for row in &self.rows {
            writeln!(w, "{},{},{},{}", row.n, row.risk_mean, row.risk_sd, self.slope)?;
        }
        Ok(())
    }
}

fn replicate_risks(
    cfg: &StudyConfig,
    truth: &SignalCoefficients,
    n: usize,
) -> Result<Vec<f64>> {
    let prior = cfg.prior.instantiate(n)?;
    let grid = DesignGrid::new(n, cfg.operator.design_family())?;
    let a: Vec<f64> = (1..n).map(|k| cfg.operator.sv(k)).collect();
    let lambda: Vec<f64> = (1..n).map(|k| prior.lambda(k)).collect();
    let noiseless = synthesize_grid(&cfg.operator, truth, &grid)?;
    let risks = par::map_indexed(cfg.replicates, |rep| {
        let seed = seeds::replicate_noise(cfg.seed, n, rep);
        let mut rng = substream(seed, 0);
        let y: Vec<f64> = noiseless
            .iter()
            .map(|&g| g + cfg.noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let u = project_values(&cfg.operator, &grid, &y, ProjectionMethod::Auto)
            .expect("validated grid");
        let post = Posterior::from_components(n, &a, &lambda, &u);
        post.risk(truth)
    });
    Ok(risks)
}

/// Monte Carlo contraction study: mean and standard deviation of the
/// posterior risk per sample size, plus the fitted log-log slope.
pub fn contraction_study(cfg: &StudyConfig) -> Result<ContractionTable> {
    cfg.validate()?;
    let rate = rate_prediction(&cfg.operator, &cfg.prior, cfg.truth.beta())?;
    let truth = cfg
        .truth
        .materialize(truth_storage_len(&cfg.operator, *cfg.n_list.last().unwrap()));
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let risks = replicate_risks(cfg, &truth, n)?;
        let mean = risks.iter().sum::<f64>() / risks.len() as f64;
        let sd = if risks.len() > 1 {
            (risks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (risks.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        rows.push(ContractionRow {
            n,
            risk_mean: mean,
            risk_sd: sd,
        });
    }

    // burn-in: drop the smallest size when enough points remain
    let fit_rows: &[ContractionRow] = if rows.len() >= 3 { &rows[1..] } else { &rows };
    let slope = if fit_rows.len() >= 2 {
        let xs: Vec<f64> = fit_rows
            .iter()
            .map(|r| match rate.regime() {
                Regime::Mild => (r.n as f64).ln(),
                Regime::Extreme => (r.n as f64).ln().ln(),
            })
            .collect();
        let ys: Vec<f64> = fit_rows.iter().map(|r| r.risk_mean.ln()).collect();
        fit_slope(&xs, &ys)
    } else {
        f64::NAN
    };

    Ok(ContractionTable {
        rows,
        slope,
        predicted_risk_exponent: rate.exponent().map(|e| 2.0 * e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRow {
    pub n: usize,
    pub coverage: f64,
    pub radius_mean: f64,
}

/// Per-size empirical coverage of the credible ball.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTable {
    pub rows: Vec<CoverageRow>,
}

impl CoverageTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,coverage,radius_mean")?;
        for row in &self.rows {
            writeln!(w, "{},{},{}", row.n, row.coverage, row.radius_mean)?;
        }
        Ok(())
    }
}

/// Coverage study: for each sample size, computes the credible radius
/// (once -- the posterior spread does not depend on the data), then the
/// fraction of replicates whose posterior mean lies within the radius
/// of the truth.
pub fn coverage_study(cfg: &StudyConfig) -> Result<CoverageTable> {
    cfg.validate()?;
    rate_prediction(&cfg.operator, &cfg.prior, cfg.truth.beta())?;
    let truth = cfg
        .truth
        .materialize(truth_storage_len(&cfg.operator, *cfg.n_list.last().unwrap()));
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let prior = cfg.prior.instantiate(n)?;
        let grid = DesignGrid::new(n, cfg.operator.design_family())?;
        let a: Vec<f64> = (1..n).map(|k| cfg.operator.sv(k)).collect();
        let lambda: Vec<f64> = (1..n).map(|k| prior.lambda(k)).collect();

        let shape = Posterior::from_components(n, &a, &lambda, &vec![0.0; n - 1]);
        let ball = credible_radius(&shape, cfg.gamma, cfg.mc_draws, seeds::radius(cfg.seed, n))?;

        let noiseless = synthesize_grid(&cfg.operator, &truth, &grid)?;
        let hits = par::map_indexed(cfg.replicates, |rep| {
            let seed = seeds::replicate_noise(cfg.seed, n, rep);
            let mut rng = substream(seed, 0);
            let y: Vec<f64> = noiseless
                .iter()
                .map(|&g| g + cfg.noise_sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let u = project_values(&cfg.operator, &grid, &y, ProjectionMethod::Auto)
                .expect("validated grid");
            let post = Posterior::from_components(n, &a, &lambda, &u);
            usize::from(covers(&ball, &post, &truth))
        });
        rows.push(CoverageRow {
            n,
            coverage: hits.iter().sum::<usize>() as f64 / cfg.replicates as f64,
            radius_mean: ball.radius(),
        });
    }
    Ok(CoverageTable { rows })
}

/// Configuration of the band-replication driver.
#[derive(Debug, Clone, PartialEq)]
pub struct BandsConfig {
    pub operator: Operator,
    pub prior: PriorTemplate,
    pub truth: TruthSpec,
    pub n_list: Vec<usize>,
    /// Prior regularities to sweep (typically under/match/over-smoothing).
    pub alphas: Vec<f64>,
    pub draw_count: usize,
    pub keep_fraction: f64,
    pub grid_points: usize,
    pub seed: u64,
    pub noise_sd: f64,
}

/// One `(n, alpha)` cell of the band replication: posterior mean, kept
/// posterior draws and the truth, all evaluated on a plotting grid.
#[derive(Debug, Clone)]
pub struct BandCell {
    pub n: usize,
    pub alpha: f64,
    pub xs: Vec<f64>,
    pub truth_values: Vec<f64>,
    pub mean_values: Vec<f64>,
    /// Kept draws, closest to the posterior mean first; row `i` is one
    /// draw evaluated at all grid points.
    pub draw_values: Vec<Vec<f64>>,
}

impl BandCell {
    /// Pointwise band envelope `(min, max)` over the kept draws.
    pub fn envelope(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.xs.len();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for row in &self.draw_values {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        (lo, hi)
    }

    /// Average width of the band envelope over the grid.
    pub fn mean_band_width(&self) -> f64 {
        let (lo, hi) = self.envelope();
        lo.iter().zip(&hi).map(|(a, b)| b - a).sum::<f64>() / lo.len() as f64
    }

    /// Fraction of grid points where the truth escapes the envelope.
    pub fn truth_exclusion_fraction(&self) -> f64 {
        let (lo, hi) = self.envelope();
        let excluded = self
            .truth_values
            .iter()
            .enumerate()
            .filter(|(j, t)| **t < lo[*j] || **t > hi[*j])
            .count();
        excluded as f64 / self.xs.len() as f64
    }

    /// Writes `x,truth,mean,draw_0001,...` rows, one per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "x,truth,mean")?;
        for d in 1..=self.draw_values.len() {
            write!(w, ",draw_{d:04}")?;
        }
        writeln!(w)?;
        for j in 0..self.xs.len() {
            write!(w, "{},{},{}", self.xs[j], self.truth_values[j], self.mean_values[j])?;
            for row in &self.draw_values {
                write!(w, ",{}", row[j])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Uniform plotting grid on `[0, 1]`.
pub fn plotting_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|j| j as f64 / (points - 1) as f64)
        .collect()
}

/// Replicates the figure protocol: for each `(n, alpha)` draw one data
/// set, compute the posterior, draw `draw_count` posterior samples,
/// keep the fraction closest to the posterior mean, and evaluate mean,
/// draws, and truth on the plotting grid.
pub fn band_replication(cfg: &BandsConfig) -> Result<Vec<BandCell>> {
    if cfg.alphas.is_empty() {
        return Err(Error::Invalid("alphas must not be empty".into()));
    }
    if cfg.n_list.is_empty() {
        return Err(Error::Invalid("n_list must not be empty".into()));
    }
    let xs = plotting_grid(cfg.grid_points);
    let max_n = *cfg.n_list.iter().max().unwrap();
    let truth = cfg
        .truth
        .materialize(truth_storage_len(&cfg.operator, max_n));
    let truth_eval = SeriesEvaluator::new(&cfg.operator, &xs);
    let truth_values = truth_eval.evaluate(truth.coeffs());

    let mut cells = Vec::new();
    for &n in &cfg.n_list {
        let grid = DesignGrid::new(n, cfg.operator.design_family())?;
        for (ai, &alpha) in cfg.alphas.iter().enumerate() {
            let prior = cfg.prior.with_alpha(alpha).instantiate(n)?;
            let obs = generate_observations(
                &cfg.operator,
                &truth,
                &grid,
                cfg.noise_sd,
                seeds::band_data(cfg.seed, n, ai),
            )?;
            let u = project_values(&cfg.operator, &grid, obs.y(), ProjectionMethod::Auto)?;
            let a: Vec<f64> = (1..n).map(|k| cfg.operator.sv(k)).collect();
            let lambda: Vec<f64> = (1..n).map(|k| prior.lambda(k)).collect();
            let post = Posterior::from_components(n, &a, &lambda, &u);

            let kept = band_draws(
                &post,
                cfg.draw_count,
                cfg.keep_fraction,
                seeds::band_draws(cfg.seed, n, ai),
            )?;
            let draw_values = kept.evaluate_on_grid(&post, &cfg.operator, &xs);
            let mean_values = SeriesEvaluator::new(&cfg.operator, &xs).evaluate(post.mean());

            cells.push(BandCell {
                n,
                alpha,
                xs: xs.clone(),
                truth_values: truth_values.clone(),
                mean_values,
                draw_values,
            });
        }
    }
    Ok(cells)
}
