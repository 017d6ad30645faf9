//! Forward operators with known singular value decomposition.
//!
//! Each operator `A` is described by its singular values `a_k`, the
//! eigenbasis `phi_k` of `A*A` on the signal side, and the conjugate
//! basis `psi_k = A phi_k / a_k` on the observation side, so that
//! `A f = sum_k a_k f_k psi_k` for `f = sum_k f_k phi_k`.
//!
//! Two canonical operators are provided (integration on `[0,1]` and the
//! heat solution map) together with two synthetic spectra for studying
//! the polynomial and exponential decay regimes in isolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFamily;

/// Decay regime of the singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IllPosedness {
    /// `a_k ~ k^{-p}`.
    Mild { p: f64 },
    /// `a_k ~ exp(-p k^s)` with `s >= 1`.
    Extreme { p: f64, s: f64 },
}

impl IllPosedness {
    pub fn is_mild(&self) -> bool {
        matches!(self, IllPosedness::Mild { .. })
    }
}

fn default_heat_time() -> f64 {
    0.02
}

/// A forward operator given through its SVD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operator {
    /// Indefinite integration `Af(x) = int_0^x f`, with
    /// `a_k = 1/((k - 1/2) pi)`, `phi_k = sqrt(2) cos((k - 1/2) pi x)`
    /// and `psi_k = sqrt(2) sin((k - 1/2) pi x)`.
    Volterra,
    /// Dirichlet heat solution map at diffusion time `time`:
    /// `a_k = exp(-k^2 pi^2 time)`, `phi_k = psi_k = sqrt(2) sin(k pi x)`.
    Heat {
        #[serde(default = "default_heat_time")]
        time: f64,
    },
    /// Sine-basis operator with `a_k = k^{-p}`.
    SyntheticMild { p: f64 },
    /// Sine-basis operator with `a_k = exp(-p k^s)`.
    SyntheticExtreme { p: f64, s: f64 },
}

impl Operator {
    pub fn heat() -> Self {
        Operator::Heat {
            time: default_heat_time(),
        }
    }

    /// Singular value `a_k`, `k >= 1`.
    ///
    /// For the extreme kinds the value underflows to subnormals and
    /// eventually to zero as `k` grows; downstream posterior formulas
    /// stay well defined because their denominators are at least 1.
    pub fn singular_value(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        Ok(self.sv(k))
    }

    #[inline]
    pub(crate) fn sv(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            Operator::Volterra => 1.0 / ((kf - 0.5) * PI),
            Operator::Heat { time } => (-kf * kf * PI * PI * time).exp(),
            Operator::SyntheticMild { p } => kf.powf(-p),
            Operator::SyntheticExtreme { p, s } => (-p * kf.powf(s)).exp(),
        }
    }

    /// Eigenbasis function `phi_k(x)` on `[0, 1]`.
    pub fn eigenbasis_eval(&self, k: usize, x: f64) -> Result<f64> {
        check_point(k, x)?;
        Ok(self.phi(k, x))
    }

    #[inline]
    pub(crate) fn phi(&self, k: usize, x: f64) -> f64 {
        let kf = k as f64;
        match self {
            Operator::Volterra => f64::sqrt(2.0) * ((kf - 0.5) * PI * x).cos(),
            _ => f64::sqrt(2.0) * (kf * PI * x).sin(),
        }
    }

    /// Conjugate basis function `psi_k(x)` on `[0, 1]`.
    pub fn conjugate_basis_eval(&self, k: usize, x: f64) -> Result<f64> {
        check_point(k, x)?;
        Ok(self.psi(k, x))
    }

    #[inline]
    pub(crate) fn psi(&self, k: usize, x: f64) -> f64 {
        let kf = k as f64;
        match self {
            Operator::Volterra => f64::sqrt(2.0) * ((kf - 0.5) * PI * x).sin(),
            _ => f64::sqrt(2.0) * (kf * PI * x).sin(),
        }
    }

    /// The grid family for which the conjugate basis is discretely
    /// orthogonal.
    pub fn design_family(&self) -> GridFamily {
        match self {
            Operator::Volterra => GridFamily::HalfInteger,
            _ => GridFamily::Integer,
        }
    }

    /// Decay regime with its `(p, s)` descriptor.
    ///
    /// The heat map has `a_k = exp(-k^2 pi^2 T)`, i.e. `p = pi^2 T` and
    /// `s = 2` in the extreme-decay parametrization.
    pub fn ill_posedness(&self) -> IllPosedness {
        match *self {
            Operator::Volterra => IllPosedness::Mild { p: 1.0 },
            Operator::Heat { time } => IllPosedness::Extreme {
                p: PI * PI * time,
                s: 2.0,
            },
            Operator::SyntheticMild { p } => IllPosedness::Mild { p },
            Operator::SyntheticExtreme { p, s } => IllPosedness::Extreme { p, s },
        }
    }

    /// `Af(x) = sum_{k <= K} a_k f_k psi_k(x)` over the stored range.
    ///
    /// The series is truncated at the stored length; use
    /// [`forward_tail_negligible`] to check that the discarded tail is
    /// below a tolerance before trusting the value.
    pub fn forward_apply(&self, f: &SignalCoefficients, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::PointOutOfDomain { x });
        }
        let mut acc = 0.0;
        for (idx, &c) in f.coeffs().iter().enumerate() {
            let k = idx + 1;
            acc += self.sv(k) * c * self.psi(k, x);
        }
        Ok(acc)
    }
}

fn check_point(k: usize, x: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::PointOutOfDomain { x });
    }
    Ok(())
}

/// Whether the last stored term of `A f` is already below `tol`
/// (`a_K |f_K| sqrt(2) < tol`), the per-term proxy for series
/// truncation control.
pub fn forward_tail_negligible(op: &Operator, f: &SignalCoefficients, tol: f64) -> bool {
    let k = f.len();
    if k == 0 {
        return true;
    }
    op.sv(k) * f.coeffs()[k - 1].abs() * f64::sqrt(2.0) < tol
}

/// A signal stored as finitely many eigenbasis coefficients together
/// with its claimed Sobolev smoothness.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCoefficients {
    coeffs: Vec<f64>,
    beta: f64,
}

impl SignalCoefficients {
    pub fn new(coeffs: Vec<f64>, beta: f64) -> Self {
        assert!(beta >= 0.0, "smoothness tag must be nonnegative");
        Self { coeffs, beta }
    }

    /// Power-law signal `f_k = k^{-exponent}` tagged with smoothness `beta`.
    pub fn power_law(len: usize, exponent: f64, beta: f64) -> Self {
        let coeffs = (1..=len).map(|k| (k as f64).powf(-exponent)).collect();
        Self::new(coeffs, beta)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `f_k` for any `k >= 1`; zero beyond the stored range.
    pub fn get(&self, k: usize) -> f64 {
        if k >= 1 && k <= self.coeffs.len() {
            self.coeffs[k - 1]
        } else {
            0.0
        }
    }

    /// Finite-range Sobolev norm `(sum_k f_k^2 k^{2 beta})^{1/2}` over
    /// the stored coefficients.
    pub fn sobolev_norm(&self, beta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let k = (idx + 1) as f64;
                c * c * k.powf(2.0 * beta)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Evaluates eigenbasis series `sum_k c_k phi_k(x)` on a fixed set of
/// points through the three-term recurrence
/// `phi_{k+1} = 2 cos(pi x) phi_k - phi_{k-1}`, so the inner loop is
/// free of trigonometric calls. Drift stays below ~1e-9 for series of
/// length 10^5.
pub struct SeriesEvaluator {
    twocos: Vec<f64>,
    prev0: Vec<f64>,
    cur0: Vec<f64>,
}

impl SeriesEvaluator {
    pub fn new(op: &Operator, xs: &[f64]) -> Self {
        let twocos = xs.iter().map(|&x| 2.0 * (PI * x).cos()).collect();
        match op {
            Operator::Volterra => {
                // c_k = cos((k - 1/2) pi x); c_0 = c_1 = cos(pi x / 2)
                let cur0: Vec<f64> = xs.iter().map(|&x| (0.5 * PI * x).cos()).collect();
                Self {
                    twocos,
                    prev0: cur0.clone(),
                    cur0,
                }
            }
            _ => {
                // s_k = sin(k pi x); s_0 = 0, s_1 = sin(pi x)
                Self {
                    twocos,
                    prev0: vec![0.0; xs.len()],
                    cur0: xs.iter().map(|&x| (PI * x).sin()).collect(),
                }
            }
        }
    }

    /// `sqrt(2) * sum_k coeffs[k-1] basis_k(x_j)` for every point.
    pub fn evaluate(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = self.twocos.len();
        let mut prev = self.prev0.clone();
        let mut cur = self.cur0.clone();
        let mut acc = vec![0.0; m];
        let twocos = &self.twocos[..m];
        for &c in coeffs {
            let (acc_s, prev_s, cur_s) = (&mut acc[..m], &mut prev[..m], &mut cur[..m]);
            for j in 0..m {
                acc_s[j] += c * cur_s[j];
                let next = twocos[j] * cur_s[j] - prev_s[j];
                prev_s[j] = cur_s[j];
                cur_s[j] = next;
            }
        }
        for v in &mut acc {
            *v *= f64::sqrt(2.0);
        }
        acc
    }
}

/// True signals used by the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogSignal {
    /// `f_k = k^{-3/2} sin(k)`, smoothness tag 1.
    VolterraTruth,
    /// Coefficients of `4x(x-1)(8x-5)` in the sine basis,
    /// `f_k = 8 sqrt(2) (13 + 11 (-1)^k) / (pi^3 k^3)`, smoothness tag 2.49.
    HeatTruth,
}

/// First `len` coefficients of the named catalog signal.
pub fn catalog_signal(name: CatalogSignal, len: usize) -> SignalCoefficients {
    match name {
        CatalogSignal::VolterraTruth => {
            let coeffs = (1..=len)
                .map(|k| {
                    let kf = k as f64;
                    kf.powf(-1.5) * kf.sin()
                })
                .collect();
            SignalCoefficients::new(coeffs, 1.0)
        }
        CatalogSignal::HeatTruth => {
            let coeffs = (1..=len)
                .map(|k| {
                    let kf = k as f64;
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    8.0 * f64::sqrt(2.0) * (13.0 + 11.0 * sign) / (PI.powi(3) * kf.powi(3))
                })
                .collect();
            SignalCoefficients::new(coeffs, 2.49)
        }
    }
}

/// Closed form of the heat-equation initial condition behind
/// [`CatalogSignal::HeatTruth`]: `f0(x) = 4x(x-1)(8x-5)`.
pub fn heat_truth_function(x: f64) -> f64 {
    4.0 * x * (x - 1.0) * (8.0 * x - 5.0)
}
