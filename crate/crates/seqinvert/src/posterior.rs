//! Truncated Gaussian series prior and its conjugate posterior.
//!
//! The prior puts independent `N(0, lambda_k)` mass on the first
//! `truncation - 1` eigenbasis coefficients and a point mass at zero
//! beyond. Against the sequence model `U_k ~ N(a_k f_k, 1/n)` the
//! posterior is again an independent Gaussian product with
//!
//! ```text
//! fhat_k    = n a_k lambda_k / (n a_k^2 lambda_k + 1) U_k = b_k U_k
//! sigma_k^2 = lambda_k / (n a_k^2 lambda_k + 1)
//! tau_k     = b_k / sqrt(n)
//! ```
//!
//! All denominators are at least one, so the formulas stay stable even
//! when `a_k` underflows to zero in the extreme regime.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Operator, SignalCoefficients};
use crate::par;
use crate::rng::substream;
use crate::transform::SequenceData;

/// Prior variance decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorDecay {
    /// `lambda_k = rho^2 k^{-1-2alpha}`.
    Polynomial,
    /// `lambda_k = exp(-alpha k^s)` (scaling fixed to one).
    Exponential,
}

/// Truncated Gaussian series prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    decay: PriorDecay,
    alpha: f64,
    rho: f64,
    s: f64,
    truncation: usize,
}

impl PriorSpec {
    /// Polynomial-decay prior `lambda_k = rho^2 k^{-1-2alpha}`.
    pub fn polynomial(alpha: f64, rho: f64, truncation: usize) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(Error::NonPositive {
                name: "alpha",
                value: alpha,
            });
        }
        if rho <= 0.0 {
            return Err(Error::NonPositive {
                name: "rho",
                value: rho,
            });
        }
        check_truncation(truncation)?;
        Ok(Self {
            decay: PriorDecay::Polynomial,
            alpha,
            rho,
            s: 1.0,
            truncation,
        })
    }

    /// Exponential-decay prior `lambda_k = exp(-alpha k^s)`, `s >= 1`.
    pub fn exponential(alpha: f64, s: f64, truncation: usize) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(Error::NonPositive {
                name: "alpha",
                value: alpha,
            });
        }
        if s < 1.0 {
            return Err(Error::Invalid(format!("shape s must be >= 1 (got {s})")));
        }
        check_truncation(truncation)?;
        Ok(Self {
            decay: PriorDecay::Exponential,
            alpha,
            rho: 1.0,
            s,
            truncation,
        })
    }

    pub fn decay(&self) -> PriorDecay {
        self.decay
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn shape(&self) -> f64 {
        self.s
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Prior variance `lambda_k`; zero at and beyond the truncation level.
    pub fn lambda(&self, k: usize) -> f64 {
        if k == 0 || k >= self.truncation {
            return 0.0;
        }
        let kf = k as f64;
        match self.decay {
            PriorDecay::Polynomial => self.rho * self.rho * kf.powf(-1.0 - 2.0 * self.alpha),
            PriorDecay::Exponential => (-self.alpha * kf.powf(self.s)).exp(),
        }
    }
}

fn check_truncation(truncation: usize) -> Result<()> {
    if truncation < 2 {
        return Err(Error::Invalid(format!(
            "truncation must be at least 2 (got {truncation})"
        )));
    }
    Ok(())
}

/// Coordinatewise Gaussian posterior over the first `n - 1` coefficients.
///
/// Coordinates `k >= n` are exact point masses at zero and are stored
/// implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    n: usize,
    mean: Vec<f64>,
    variance: Vec<f64>,
    shrinkage: Vec<f64>,
    tau: Vec<f64>,
}

impl Posterior {
    /// Conjugate update of `prior` against the transformed data,
    /// with `b_k = n a_k lambda_k / (n a_k^2 lambda_k + 1)`.
    ///
    /// The prior truncation must equal the sample size.
    pub fn update(prior: &PriorSpec, op: &Operator, data: &SequenceData) -> Result<Self> {
        if prior.truncation() != data.n() {
            return Err(Error::TruncationMismatch {
                truncation: prior.truncation(),
                n: data.n(),
            });
        }
        let n = data.n();
        let a: Vec<f64> = (1..n).map(|k| op.sv(k)).collect();
        let lambda: Vec<f64> = (1..n).map(|k| prior.lambda(k)).collect();
        Ok(Self::from_components(n, &a, &lambda, data.u()))
    }

    /// Raw coordinatewise normal-normal update from singular values,
    /// prior variances and transformed observations (all length `n-1`).
    pub fn from_components(n: usize, a: &[f64], lambda: &[f64], u: &[f64]) -> Self {
        assert_eq!(a.len(), n - 1);
        assert_eq!(lambda.len(), n - 1);
        assert_eq!(u.len(), n - 1);
        let nf = n as f64;
        let sqrt_n = nf.sqrt();
        let mut mean = Vec::with_capacity(n - 1);
        let mut variance = Vec::with_capacity(n - 1);
        let mut shrinkage = Vec::with_capacity(n - 1);
        let mut tau = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            let denom = nf * a[k] * a[k] * lambda[k] + 1.0;
            let b = nf * a[k] * lambda[k] / denom;
            shrinkage.push(b);
            mean.push(b * u[k]);
            variance.push(lambda[k] / denom);
            tau.push(b / sqrt_n);
        }
        Self {
            n,
            mean,
            variance,
            shrinkage,
            tau,
        }
    }

    /// Sample size the posterior was computed from; coordinates at or
    /// beyond this index are point masses at zero.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// Multipliers `b_k` with `fhat_k = b_k U_k`.
    pub fn shrinkage(&self) -> &[f64] {
        &self.shrinkage
    }

    /// Sampling-distribution standard deviations `tau_k = b_k / sqrt(n)`.
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Draw `d` of the posterior, as `mean_k + sigma_k z_k` with the
    /// coordinates of draw `d` generated from `substream(seed, d)`.
    pub fn sample_one(&self, seed: u64, d: usize) -> Vec<f64> {
        let mut rng = substream(seed, d as u64);
        self.mean
            .iter()
            .zip(&self.variance)
            .map(|(&m, &v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// `count` independent posterior draws.
    ///
    /// Draw `d` depends only on `(seed, d)`, so output is identical for
    /// any thread count and any larger `count` extends, rather than
    /// reshuffles, a smaller one.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        par::map_indexed(count, |d| self.sample_one(seed, d))
    }

    /// Posterior second moment about `truth`:
    /// `||fhat - f0||^2 + sum_k sigma_k^2`, where the squared distance
    /// includes the truth's stored tail beyond the truncation level.
    pub fn risk(&self, truth: &SignalCoefficients) -> f64 {
        let mut acc = 0.0;
        for (k, &m) in self.mean.iter().enumerate() {
            let d = m - truth.get(k + 1);
            acc += d * d;
        }
        for &c in truth.coeffs().iter().skip(self.n - 1) {
            acc += c * c;
        }
        acc + self.variance.iter().sum::<f64>()
    }

    /// Monte Carlo estimate of the posterior mass outside the ball of
    /// the given radius around `truth`.
    pub fn mass_outside(&self, truth: &SignalCoefficients, radius: f64, draws: usize, seed: u64) -> f64 {
        let tail: f64 = truth
            .coeffs()
            .iter()
            .skip(self.n - 1)
            .map(|&c| c * c)
            .sum();
        let outside = par::map_indexed(draws, |d| {
            let draw = self.sample_one(seed, d);
            let mut dist = tail;
            for (k, &v) in draw.iter().enumerate() {
                let diff = v - truth.get(k + 1);
                dist += diff * diff;
            }
            usize::from(dist.sqrt() > radius)
        });
        outside.iter().sum::<usize>() as f64 / draws as f64
    }

    /// Writes `k,mean,variance` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,mean,variance")?;
        for (k, (m, v)) in self.mean.iter().zip(&self.variance).enumerate() {
            writeln!(w, "{},{m},{v}", k + 1)?;
        }
        Ok(())
    }
}
