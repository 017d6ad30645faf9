//! Credible balls around the posterior mean and frequentist coverage.
//!
//! The posterior covariance does not depend on the data, so the radius
//! `r_{n,gamma}` solving `Pi(||f - fhat|| <= r | U) = 1 - gamma` is a
//! quantile of `X_n = sum_k sigma_k^2 Z_k^2`, a weighted chi-square law.
//! The default quantile method is Monte Carlo with a deterministic
//! per-draw stream layout; a closed-form route exists for the
//! single-coordinate case, where `X_n / sigma_1^2` is chi-square(1).

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operators::{Operator, SeriesEvaluator, SignalCoefficients};
use crate::par;
use crate::posterior::Posterior;
use crate::rng::substream;
use crate::stats::chi_square1_quantile;

/// How a credible radius was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantileMethod {
    MonteCarlo,
    SeriesExact,
}

/// A closed posterior ball `{ f : ||f - fhat|| <= radius }` of mass
/// `1 - gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleBall {
    gamma: f64,
    radius: f64,
    radius_se: f64,
    method: QuantileMethod,
    mc_draws: usize,
}

impl CredibleBall {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Monte Carlo standard error of the radius (zero for the exact
    /// method and for degenerate posteriors).
    pub fn radius_se(&self) -> f64 {
        self.radius_se
    }

    pub fn method(&self) -> QuantileMethod {
        self.method
    }

    pub fn mc_draws(&self) -> usize {
        self.mc_draws
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::GammaOutOfRange { gamma });
    }
    Ok(())
}

/// Monte Carlo radius: the empirical `(1-gamma)`-quantile (order
/// statistic at `ceil((1-gamma) * mc_draws)`) of `sum_k sigma_k^2 Z_k^2`
/// over `mc_draws` standard-normal vectors. Draw `d` uses
/// `substream(seed, d)`, so the result is bit-reproducible for any
/// thread count.
pub fn credible_radius(
    post: &Posterior,
    gamma: f64,
    mc_draws: usize,
    seed: u64,
) -> Result<CredibleBall> {
    check_gamma(gamma)?;
    if mc_draws < 10_000 {
        return Err(Error::Invalid(format!(
            "mc_draws must be at least 10000 (got {mc_draws})"
        )));
    }
    let variance = post.variance().to_vec();
    let mut values = par::map_indexed(mc_draws, |d| {
        let mut rng = substream(seed, d as u64);
        variance
            .iter()
            .map(|&v| {
                let z: f64 = rng.sample(StandardNormal);
                v * z * z
            })
            .sum::<f64>()
    });
    values.sort_unstable_by(f64::total_cmp);
    let idx = (((1.0 - gamma) * mc_draws as f64).ceil() as usize).clamp(1, mc_draws);
    let r_sq = values[idx - 1];

    // quantile standard error from the local order-statistic spacing
    let h = (mc_draws / 100).max(1);
    let lo = idx.saturating_sub(h).max(1);
    let hi = (idx + h).min(mc_draws);
    let spacing = (values[hi - 1] - values[lo - 1]) / (hi - lo) as f64;
    let rsq_se = (gamma * (1.0 - gamma) * mc_draws as f64).sqrt() * spacing;
    let radius = r_sq.sqrt();
    let radius_se = if radius > 0.0 {
        rsq_se / (2.0 * radius)
    } else {
        0.0
    };

    Ok(CredibleBall {
        gamma,
        radius,
        radius_se,
        method: QuantileMethod::MonteCarlo,
        mc_draws,
    })
}

/// Exact radius for posteriors with exactly one non-degenerate
/// coordinate: `radius^2 = sigma^2 * chi^2_1(1 - gamma)`.
pub fn credible_radius_exact(post: &Posterior, gamma: f64) -> Result<CredibleBall> {
    check_gamma(gamma)?;
    let nonzero: Vec<f64> = post
        .variance()
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .collect();
    if nonzero.len() != 1 {
        return Err(Error::Invalid(format!(
            "series-exact radius needs exactly one positive variance (found {})",
            nonzero.len()
        )));
    }
    let radius = (nonzero[0] * chi_square1_quantile(1.0 - gamma)).sqrt();
    Ok(CredibleBall {
        gamma,
        radius,
        radius_se: 0.0,
        method: QuantileMethod::SeriesExact,
        mc_draws: 0,
    })
}

/// Whether the truth lies in the closed ball around the posterior mean.
/// The distance includes the truth's stored tail beyond the truncation
/// level.
pub fn covers(ball: &CredibleBall, post: &Posterior, truth: &SignalCoefficients) -> bool {
    let mut dist_sq = 0.0;
    for (k, &m) in post.mean().iter().enumerate() {
        let d = m - truth.get(k + 1);
        dist_sq += d * d;
    }
    for &c in truth.coeffs().iter().skip(post.n() - 1) {
        dist_sq += c * c;
    }
    dist_sq.sqrt() <= ball.radius()
}

/// The posterior draws closest to the posterior mean, stored as draw
/// indices so that large draw sets never need to be materialized at
/// once. Ties in the distance are broken by draw index.
#[derive(Debug, Clone)]
pub struct KeptDraws {
    seed: u64,
    count: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

/// Draws `count` posterior samples (draw `d` from `substream(seed, d)`,
/// the same layout as [`Posterior::sample`]), ranks them by L2 distance
/// to the posterior mean, and keeps the closest
/// `floor(keep_fraction * count)`.
pub fn band_draws(
    post: &Posterior,
    count: usize,
    keep_fraction: f64,
    seed: u64,
) -> Result<KeptDraws> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Invalid(format!(
            "keep_fraction must lie in (0, 1] (got {keep_fraction})"
        )));
    }
    if count == 0 {
        return Err(Error::Invalid("draw count must be positive".into()));
    }
    let variance = post.variance().to_vec();
    // distance to the mean only needs the noise part of each draw
    let dist: Vec<f64> = par::map_indexed(count, |d| {
        let mut rng = substream(seed, d as u64);
        variance
            .iter()
            .map(|&v| {
                let z: f64 = rng.sample(StandardNormal);
                v * z * z
            })
            .sum::<f64>()
            .sqrt()
    });
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let keep = ((keep_fraction * count as f64).floor() as usize).clamp(1, count);
    order.truncate(keep);
    let distances = order.iter().map(|&d| dist[d]).collect();
    Ok(KeptDraws {
        seed,
        count,
        indices: order,
        distances,
    })
}

impl KeptDraws {
    /// Kept draw indices, closest first.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Distances to the posterior mean, aligned with [`indices`].
    ///
    /// [`indices`]: KeptDraws::indices
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Total number of draws before trimming.
    pub fn draw_count(&self) -> usize {
        self.count
    }

    /// Materializes the kept draws as coefficient vectors.
    pub fn coefficient_rows(&self, post: &Posterior) -> Vec<Vec<f64>> {
        par::map_indexed(self.indices.len(), |i| {
            post.sample_one(self.seed, self.indices[i])
        })
    }

    /// Evaluates every kept draw on `xs`; row `i` holds draw
    /// `indices()[i]` evaluated at all points.
    pub fn evaluate_on_grid(&self, post: &Posterior, op: &Operator, xs: &[f64]) -> Vec<Vec<f64>> {
        let eval = SeriesEvaluator::new(op, xs);
        par::map_indexed(self.indices.len(), |i| {
            let coeffs = post.sample_one(self.seed, self.indices[i]);
            eval.evaluate(&coeffs)
        })
    }

    /// Coefficient matrix export: rows are kept draws, columns are the
    /// eigenbasis coordinates.
    pub fn write_coefficients_csv<W: Write>(
        &self,
        post: &Posterior,
        mut w: W,
    ) -> std::io::Result<()> {
        write!(w, "draw")?;
        for k in 1..post.n() {
            write!(w, ",k{k}")?;
        }
        writeln!(w)?;
        for &d in &self.indices {
            let row = post.sample_one(self.seed, d);
            write!(w, "{d}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Function-space export in long format: one `draw,x,value` row per
    /// kept draw and grid point.
    pub fn write_function_values_csv<W: Write>(
        &self,
        post: &Posterior,
        op: &Operator,
        xs: &[f64],
        mut w: W,
    ) -> std::io::Result<()> {
        writeln!(w, "draw,x,value")?;
        let rows = self.evaluate_on_grid(post, op, xs);
        for (i, row) in rows.iter().enumerate() {
            let d = self.indices[i];
            for (x, v) in xs.iter().zip(row) {
                writeln!(w, "{d},{x},{v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::Posterior;

    /// Posterior with prescribed per-coordinate mean and variance, built
    /// through the normal-normal update: pick `a = 1/sqrt(2 n v)` and
    /// `lambda = 2v`, which makes the update denominator exactly 2.
    fn diag_posterior(n: usize, variance: Vec<f64>, mean: Vec<f64>) -> Posterior {
        let nf = n as f64;
        let mut a = Vec::with_capacity(n - 1);
        let mut lambda = Vec::with_capacity(n - 1);
        let mut u = Vec::with_capacity(n - 1);
        for (&v, &m) in variance.iter().zip(&mean) {
            if v > 0.0 {
                let ak = 1.0 / (2.0 * nf * v).sqrt();
                a.push(ak);
                lambda.push(2.0 * v);
                u.push(m / (nf * ak * v));
            } else {
                assert_eq!(m, 0.0, "zero-variance coordinates must have zero mean");
                a.push(1.0);
                lambda.push(0.0);
                u.push(0.0);
            }
        }
        let post = Posterior::from_components(n, &a, &lambda, &u);
        for (got, want) in post.variance().iter().zip(&variance) {
            assert!((got - want).abs() < 1e-12 * want.max(1.0));
        }
        for (got, want) in post.mean().iter().zip(&mean) {
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
        }
        post
    }

    #[test]
    fn degenerate_posterior_radius_zero() {
        let post = diag_posterior(4, vec![0.0; 3], vec![0.0; 3]);
        let ball = credible_radius(&post, 0.05, 10_000, 1).unwrap();
        assert_eq!(ball.radius(), 0.0);
    }

    #[test]
    fn single_coordinate_matches_chi_square() {
        // sigma_1^2 = 0.01, rest zero; radius^2 = 0.01 * 3.8415
        let mut variance = vec![0.0; 7];
        variance[0] = 0.01;
        let post = diag_posterior(8, variance, vec![0.0; 7]);
        let exact = credible_radius_exact(&post, 0.05).unwrap();
        assert!((exact.radius().powi(2) - 0.01 * 3.841458820694124).abs() < 1e-12);

        let mc = credible_radius(&post, 0.05, 200_000, 9).unwrap();
        assert!(
            (mc.radius() - exact.radius()).abs() < 3.0 * mc.radius_se().max(1e-4),
            "mc {} exact {} se {}",
            mc.radius(),
            exact.radius(),
            mc.radius_se()
        );
    }

    #[test]
    fn gamma_domain_checked() {
        let post = diag_posterior(4, vec![0.0; 3], vec![0.0; 3]);
        assert!(matches!(
            credible_radius(&post, 0.0, 10_000, 1),
            Err(Error::GammaOutOfRange { .. })
        ));
        assert!(matches!(
            credible_radius(&post, 1.0, 10_000, 1),
            Err(Error::GammaOutOfRange { .. })
        ));
    }

    #[test]
    fn radius_scales_with_sigma() {
        // scaling all variances by c scales the radius by sqrt(c) exactly
        // when the same seed (hence the same Z draws) is used
        let v1 = vec![0.5, 0.25, 0.125];
        let v4: Vec<f64> = v1.iter().map(|v| 4.0 * v).collect();
        let p1 = diag_posterior(4, v1, vec![0.0; 3]);
        let p4 = diag_posterior(4, v4, vec![0.0; 3]);
        let b1 = credible_radius(&p1, 0.2, 20_000, 3).unwrap();
        let b4 = credible_radius(&p4, 0.2, 20_000, 3).unwrap();
        assert!((b4.radius() - 2.0 * b1.radius()).abs() < 1e-12);
    }

    #[test]
    fn radius_monotone_in_gamma_and_variance() {
        let post = diag_posterior(6, vec![0.4, 0.3, 0.2, 0.1, 0.05], vec![0.0; 5]);
        let r1 = credible_radius(&post, 0.05, 20_000, 5).unwrap().radius();
        let r2 = credible_radius(&post, 0.2, 20_000, 5).unwrap().radius();
        let r3 = credible_radius(&post, 0.5, 20_000, 5).unwrap().radius();
        assert!(r1 >= r2 && r2 >= r3);

        let bigger = diag_posterior(6, vec![0.5, 0.4, 0.3, 0.2, 0.15], vec![0.0; 5]);
        let rb = credible_radius(&bigger, 0.05, 20_000, 5).unwrap().radius();
        assert!(rb >= r1);
    }

    #[test]
    fn radius_reproducible() {
        let post = diag_posterior(6, vec![0.4, 0.3, 0.2, 0.1, 0.05], vec![0.0; 5]);
        let a = credible_radius(&post, 0.05, 15_000, 11).unwrap();
        let b = credible_radius(&post, 0.05, 15_000, 11).unwrap();
        assert_eq!(a.radius().to_bits(), b.radius().to_bits());
    }

    #[test]
    fn covers_trivial_cases() {
        let truth = SignalCoefficients::new(vec![1.0], 1.0);
        let post = diag_posterior(4, vec![0.01, 0.01, 0.01], vec![1.0, 0.0, 0.0]);
        let ball = CredibleBall {
            gamma: 0.05,
            radius: 0.25,
            radius_se: 0.0,
            method: QuantileMethod::MonteCarlo,
            mc_draws: 10_000,
        };
        // fhat = truth
        assert!(covers(&ball, &post, &truth));

        // fhat = 0, truth = e_1, radius 0.5 -> distance 1 > 0.5
        let zero_post = diag_posterior(4, vec![0.0; 3], vec![0.0; 3]);
        let ball_half = CredibleBall {
            radius: 0.5,
            ..ball
        };
        assert!(!covers(&ball_half, &zero_post, &truth));

        // closed ball: boundary counts as covered
        let ball_one = CredibleBall {
            radius: 1.0,
            ..ball
        };
        assert!(covers(&ball_one, &zero_post, &truth));
    }

    #[test]
    fn self_consistency_of_fresh_draws() {
        // fraction of fresh posterior draws inside the ball ~ 1 - gamma
        let n = 40;
        let variance: Vec<f64> = (1..n).map(|k| 0.8 * (k as f64).powf(-1.5)).collect();
        let post = diag_posterior(n, variance, vec![0.0; n - 1]);
        for gamma in [0.05, 0.2, 0.5] {
            let m = 100_000;
            let ball = credible_radius(&post, gamma, m, 21).unwrap();
            let inside = (0..m)
                .filter(|&d| {
                    let draw = post.sample_one(417, d);
                    let dist: f64 = draw
                        .iter()
                        .zip(post.mean())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    dist <= ball.radius()
                })
                .count();
            let frac = inside as f64 / m as f64;
            let tol = 2.0 * (gamma * (1.0 - gamma) / m as f64).sqrt() + 3.0e-3;
            assert!(
                (frac - (1.0 - gamma)).abs() < tol,
                "gamma={gamma}: frac {frac}"
            );
        }
    }

    #[test]
    fn band_draws_counts() {
        let post = diag_posterior(6, vec![0.1; 5], vec![0.0; 5]);
        let kept = band_draws(&post, 1000, 0.95, 3).unwrap();
        assert_eq!(kept.indices().len(), 950);
        let all = band_draws(&post, 100, 1.0, 3).unwrap();
        assert_eq!(all.indices().len(), 100);
        assert!(band_draws(&post, 100, 0.0, 3).is_err());
    }

    #[test]
    fn band_draws_degenerate_ties_resolved_by_index() {
        // a fully degenerate prior forces fhat = 0 and sigma = 0
        let post = diag_posterior(6, vec![0.0; 5], vec![0.0; 5]);
        let kept = band_draws(&post, 10, 0.5, 3).unwrap();
        assert_eq!(kept.indices(), &[0, 1, 2, 3, 4]);
        for row in kept.coefficient_rows(&post) {
            assert_eq!(row.as_slice(), post.mean());
        }
    }

    #[test]
    fn kept_draws_are_the_closest_ones() {
        let post = diag_posterior(8, vec![0.2; 7], vec![0.0; 7]);
        let count = 200;
        let kept = band_draws(&post, count, 0.5, 13).unwrap();
        let max_kept = kept.distances().last().copied().unwrap();
        // every discarded draw must be at least as far away
        let kept_set: std::collections::HashSet<usize> = kept.indices().iter().copied().collect();
        for d in 0..count {
            if !kept_set.contains(&d) {
                let draw = post.sample_one(13, d);
                let dist: f64 = draw
                    .iter()
                    .zip(post.mean())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist >= max_kept);
            }
        }
    }

    #[test]
    fn grid_evaluation_matches_materialized_rows() {
        let post = diag_posterior(10, vec![0.05; 9], vec![0.3; 9]);
        let kept = band_draws(&post, 20, 0.5, 29).unwrap();
        let op = Operator::heat();
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let grid_rows = kept.evaluate_on_grid(&post, &op, &xs);
        let coef_rows = kept.coefficient_rows(&post);
        for (grow, crow) in grid_rows.iter().zip(&coef_rows) {
            for (j, &x) in xs.iter().enumerate() {
                let direct: f64 = crow
                    .iter()
                    .enumerate()
                    .map(|(idx, &c)| c * op.phi(idx + 1, x))
                    .sum();
                assert!((grow[j] - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn csv_exports() {
        let post = diag_posterior(4, vec![0.1; 3], vec![0.0; 3]);
        let kept = band_draws(&post, 10, 0.5, 1).unwrap();
        let mut buf = Vec::new();
        kept.write_coefficients_csv(&post, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("draw,k1,k2,k3\n"));
        assert_eq!(text.lines().count(), 6);

        let mut buf = Vec::new();
        kept.write_function_values_csv(&post, &Operator::heat(), &[0.0, 0.5, 1.0], &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("draw,x,value\n"));
        assert_eq!(text.lines().count(), 1 + 5 * 3);
    }
}
