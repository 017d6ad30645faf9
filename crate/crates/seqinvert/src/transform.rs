//! From point observations to the truncated sequence model.
//!
//! At the operator's design grid the conjugate basis is *exactly*
//! orthonormal under the empirical inner product
//! `<f, g>_d = (1/n) sum_i f(x_i) g(x_i)`, and every basis function with
//! index `j >= n` aliases onto a single base-band function with a sign:
//!
//! * sine basis at the integer grid: `psi_j = +psi_r` for `r = j mod 2n`
//!   when `r < n`, `psi_j = -psi_{2n-r}` when `n < r < 2n`, and
//!   `psi_j = 0` on the grid when `r` is `0` or `n`;
//! * quarter-wave sine basis at the half-integer grid: period `4n`, with
//!   reflections at `n + 1/2` and sign flips every half period.
//!
//! Projecting `Y` onto the first `n - 1` basis functions therefore turns
//! the regression model into `U_k = a_k f_k + R_k + zeta_k / sqrt(n)`,
//! where the aliasing remainder `R_k` collects the signal's tail
//! frequencies and `zeta_k` is again standard Gaussian noise.

use std::f64::consts::SQRT_2;
use std::io::{BufRead, Write};

use crate::dst;
use crate::error::{Error, Result};
use crate::grid::{DesignGrid, GridFamily};
use crate::operators::{Operator, SignalCoefficients};
use crate::par;

/// Point observations `Y_i = Af(x_i) + noise_sd * xi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    grid: DesignGrid,
    y: Vec<f64>,
    noise_sd: f64,
    xi: Option<Vec<f64>>,
}

impl Observations {
    pub fn new(grid: DesignGrid, y: Vec<f64>, noise_sd: f64) -> Result<Self> {
        if y.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                actual: y.len(),
            });
        }
        Ok(Self {
            grid,
            y,
            noise_sd,
            xi: None,
        })
    }

    /// Synthetic observations that remember the noise path, so model
    /// identities can be verified realization by realization.
    pub(crate) fn with_noise(
        grid: DesignGrid,
        y: Vec<f64>,
        noise_sd: f64,
        xi: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(y.len(), grid.n());
        debug_assert_eq!(xi.len(), grid.n());
        Self {
            grid,
            y,
            noise_sd,
            xi: Some(xi),
        }
    }

    pub fn grid(&self) -> &DesignGrid {
        &self.grid
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// The retained standard-normal noise of a synthetic draw, if any.
    pub fn xi(&self) -> Option<&[f64]> {
        self.xi.as_deref()
    }

    /// Writes `x,y` rows; `f64` display is shortest-round-trip, so the
    /// file reproduces the values exactly on re-import.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y")?;
        for (x, y) in self.grid.points().zip(&self.y) {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }

    /// Reads `x,y` rows, inferring the grid family from the design
    /// points.
    pub fn read_csv<R: BufRead>(r: R, noise_sd: f64) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                if line != "x,y" {
                    return Err(Error::Invalid(format!(
                        "expected header `x,y`, got `{line}`"
                    )));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (xs_str, ys_str) = line.split_once(',').ok_or_else(|| {
                Error::Invalid(format!("malformed csv row {}: `{line}`", lineno + 1))
            })?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("row {}: {e}", lineno + 1)))
            };
            xs.push(parse(xs_str)?);
            ys.push(parse(ys_str)?);
        }
        let n = xs.len();
        if n < 2 {
            return Err(Error::GridTooSmall { n });
        }
        let family = if (xs[0] * n as f64 - 1.0).abs() < 1e-9 {
            GridFamily::Integer
        } else if (xs[0] * n as f64 - 0.5).abs() < 1e-9 {
            GridFamily::HalfInteger
        } else {
            return Err(Error::Invalid(format!(
                "design points match neither i/n nor (i-1/2)/n (x_1 = {})",
                xs[0]
            )));
        };
        let grid = DesignGrid::new(n, family)?;
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.point(i + 1)).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "design point {} = {x} does not lie on the {family:?} grid",
                    i + 1
                )));
            }
        }
        Observations::new(grid, ys, noise_sd)
    }
}

/// The transformed observations `U_1..U_{n-1}` with their sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    u: Vec<f64>,
    n: usize,
}

impl SequenceData {
    pub fn new(u: Vec<f64>, n: usize) -> Result<Self> {
        if u.len() + 1 != n {
            return Err(Error::LengthMismatch {
                expected: n - 1,
                actual: u.len(),
            });
        }
        Ok(Self { u, n })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Noise scale of the sequence model, `1/sqrt(n)`.
    pub fn noise_scale(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }
}

/// How to evaluate the projection sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMethod {
    /// Direct `O(n^2)` summation; the reference implementation.
    Naive,
    /// FFT-backed sine transform, `O(n log n)`.
    Fast,
    /// Naive up to `n = 2048`, fast above.
    #[default]
    Auto,
}

fn effective_method(method: ProjectionMethod, n: usize) -> ProjectionMethod {
    match method {
        ProjectionMethod::Auto => {
            if n <= 2048 {
                ProjectionMethod::Naive
            } else {
                ProjectionMethod::Fast
            }
        }
        m => m,
    }
}

/// Checks that the grid is the discretely orthogonal one for `op`.
pub fn validate_family(op: &Operator, grid: &DesignGrid) -> Result<()> {
    let expected = op.design_family();
    if grid.family() != expected {
        return Err(Error::FamilyMismatch {
            expected,
            actual: grid.family(),
        });
    }
    Ok(())
}

/// Alias of basis index `j` into the base band, as `(base, sign)`.
///
/// `None` means the function vanishes identically on the grid. Base
/// indices run over `1..n` for the integer family and `1..=n` for the
/// half-integer family.
pub fn fold_index(family: GridFamily, n: usize, j: usize) -> Option<(usize, f64)> {
    debug_assert!(j >= 1);
    match family {
        GridFamily::Integer => {
            let r = j % (2 * n);
            if r == 0 || r == n {
                None
            } else if r < n {
                Some((r, 1.0))
            } else {
                Some((2 * n - r, -1.0))
            }
        }
        GridFamily::HalfInteger => {
            let r = (j - 1) % (4 * n) + 1;
            if r <= n {
                Some((r, 1.0))
            } else if r <= 2 * n {
                Some((2 * n + 1 - r, 1.0))
            } else if r <= 3 * n {
                Some((r - 2 * n, -1.0))
            } else {
                Some((4 * n + 1 - r, -1.0))
            }
        }
    }
}

/// Empirical inner product `<psi_j, psi_k>_d` by direct summation.
pub fn discrete_inner(op: &Operator, grid: &DesignGrid, j: usize, k: usize) -> f64 {
    let n = grid.n() as f64;
    grid.points()
        .map(|x| op.psi(j, x) * op.psi(k, x))
        .sum::<f64>()
        / n
}

/// Projects raw grid values onto the first `n - 1` conjugate basis
/// functions: `out[k-1] = (1/n) sum_i v_i psi_k(x_i)`.
pub fn project_values(
    op: &Operator,
    grid: &DesignGrid,
    values: &[f64],
    method: ProjectionMethod,
) -> Result<Vec<f64>> {
    if values.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            actual: values.len(),
        });
    }
    validate_family(op, grid)?;
    let n = grid.n();
    match effective_method(method, n) {
        ProjectionMethod::Naive => {
            let pts: Vec<f64> = grid.points().collect();
            Ok(par::map_indexed(n - 1, |ki| {
                let k = ki + 1;
                let mut acc = 0.0;
                for (x, &v) in pts.iter().zip(values) {
                    acc += v * op.psi(k, *x);
                }
                acc / n as f64
            }))
        }
        ProjectionMethod::Fast => {
            let scale = SQRT_2 / n as f64;
            let mut out = match grid.family() {
                GridFamily::Integer => dst::dst1(&values[..n - 1]),
                GridFamily::HalfInteger => dst::dst4(values),
            };
            out.truncate(n - 1);
            for v in &mut out {
                *v *= scale;
            }
            Ok(out)
        }
        ProjectionMethod::Auto => unreachable!(),
    }
}

/// Transforms observations into the sequence model (default method).
pub fn project(op: &Operator, obs: &Observations) -> Result<SequenceData> {
    project_with(op, obs, ProjectionMethod::default())
}

/// Transforms observations into the sequence model with an explicit
/// projection method.
pub fn project_with(
    op: &Operator,
    obs: &Observations,
    method: ProjectionMethod,
) -> Result<SequenceData> {
    let u = project_values(op, obs.grid(), obs.y(), method)?;
    SequenceData::new(u, obs.grid().n())
}

/// Evaluates `A f` at every design point by folding the coefficient
/// sequence into the base band and applying one sine transform; exact
/// up to rounding, `O(K + n log n)`.
pub fn synthesize_grid(
    op: &Operator,
    f: &SignalCoefficients,
    grid: &DesignGrid,
) -> Result<Vec<f64>> {
    validate_family(op, grid)?;
    let n = grid.n();
    let family = grid.family();
    let base_len = match family {
        GridFamily::Integer => n - 1,
        GridFamily::HalfInteger => n,
    };
    let mut folded = vec![0.0; base_len];
    for (idx, &c) in f.coeffs().iter().enumerate() {
        let j = idx + 1;
        if let Some((base, sign)) = fold_index(family, n, j) {
            folded[base - 1] += sign * op.sv(j) * c;
        }
    }
    match family {
        GridFamily::Integer => {
            let mut g: Vec<f64> = dst::dst1(&folded).iter().map(|v| SQRT_2 * v).collect();
            g.push(0.0); // psi_k(1) = 0 for the sine basis
            Ok(g)
        }
        GridFamily::HalfInteger => {
            Ok(dst::dst4(&folded).iter().map(|v| SQRT_2 * v).collect())
        }
    }
}

/// The aliasing remainder `R_k = <A f^r, psi_k>_d`, where `f^r` zeroes
/// all coefficients below index `n`; exact finite sum via the fold map.
pub fn measured_remainder(
    op: &Operator,
    f: &SignalCoefficients,
    grid: &DesignGrid,
    k: usize,
) -> Result<f64> {
    let n = grid.n();
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    if k >= n {
        return Err(Error::IndexOutOfRange { k, limit: n });
    }
    Ok(measured_remainders(op, f, grid)?[k - 1])
}

/// All remainders `R_1..R_{n-1}` in one pass over the stored tail.
pub fn measured_remainders(
    op: &Operator,
    f: &SignalCoefficients,
    grid: &DesignGrid,
) -> Result<Vec<f64>> {
    validate_family(op, grid)?;
    let n = grid.n();
    let mut r = vec![0.0; n - 1];
    for (idx, &c) in f.coeffs().iter().enumerate().skip(n - 1) {
        let j = idx + 1;
        debug_assert!(j >= n);
        if let Some((base, sign)) = fold_index(grid.family(), n, j) {
            if base < n {
                r[base - 1] += sign * op.sv(j) * c;
            }
        }
    }
    Ok(r)
}

/// Riemann zeta on `(1, inf)` by Euler-Maclaurin, absolute error
/// below 1e-13 for `q >= 1.05`.
pub(crate) fn zeta(q: f64) -> f64 {
    debug_assert!(q > 1.0);
    let cutoff = 2000usize;
    let mut sum = 0.0;
    for l in 1..cutoff {
        sum += (l as f64).powf(-q);
    }
    let m = cutoff as f64;
    // integral tail + boundary + first Bernoulli corrections
    sum + m.powf(1.0 - q) / (q - 1.0) + 0.5 * m.powf(-q) + q * m.powf(-q - 1.0) / 12.0
        - q * (q + 1.0) * (q + 2.0) * m.powf(-q - 3.0) / 720.0
}

/// Closed-form upper bound on `sup_{k < n} R_k^2` over the ellipsoid
/// `{ ||f||_beta <= k_norm }`.
///
/// Mild decay: `k_norm^2 n^{-2(beta+p)} zeta(2(beta+p))`, valid when
/// `beta + p > 1/2`. Extreme decay: `k_norm^2 e^{-2pn} / (1 - e^{-2p})`.
pub fn remainder_bound(op: &Operator, beta: f64, k_norm: f64, n: usize) -> Result<f64> {
    match op.ill_posedness() {
        crate::operators::IllPosedness::Mild { p } => {
            let q = beta + p;
            if q <= 0.5 {
                return Err(Error::SmoothnessConstraint { sum: q });
            }
            Ok(k_norm * k_norm * (n as f64).powf(-2.0 * q) * zeta(2.0 * q))
        }
        crate::operators::IllPosedness::Extreme { p, .. } => {
            let geo = 1.0 / (1.0 - (-2.0 * p).exp());
            Ok(k_norm * k_norm * (-2.0 * p * n as f64).exp() * geo)
        }
    }
}

/// Largest deviation of the base-band Gram matrix from the identity,
/// `max_{1 <= j,k < n} |<psi_j, psi_k>_d - delta_jk|`.
pub fn max_orthonormality_defect(op: &Operator, n: usize) -> Result<f64> {
    let grid = DesignGrid::new(n, op.design_family())?;
    let pts: Vec<f64> = grid.points().collect();
    // rows of the basis matrix, k = 1..n-1
    let rows: Vec<Vec<f64>> =
        par::map_indexed(n - 1, |ki| pts.iter().map(|&x| op.psi(ki + 1, x)).collect());
    let defects = par::map_indexed(n - 1, |ji| {
        let mut worst: f64 = 0.0;
        for ki in ji..n - 1 {
            let dot: f64 = rows[ji]
                .iter()
                .zip(&rows[ki])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64;
            let expect = if ji == ki { 1.0 } else { 0.0 };
            worst = worst.max((dot - expect).abs());
        }
        worst
    });
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Summary of one aliasing block `j in { l n, ..., (l+1) n - 1 }`
/// against a fixed base frequency `k`.
#[derive(Debug, Clone, Copy)]
pub struct AliasBlockCheck {
    /// Number of block indices with `| |<psi_j, psi_k>_d| - 1 | <= tol`.
    pub unit_count: usize,
    /// Worst deviation of those from exactly one in absolute value.
    pub unit_defect: f64,
    /// Largest magnitude among the remaining block indices.
    pub off_unit_max: f64,
}

/// Scans one aliasing block by direct summation.
pub fn alias_block_check(
    op: &Operator,
    n: usize,
    k: usize,
    l: usize,
    tol: f64,
) -> Result<AliasBlockCheck> {
    if k == 0 || k >= n {
        return Err(Error::IndexOutOfRange { k, limit: n });
    }
    let grid = DesignGrid::new(n, op.design_family())?;
    let mut unit_count = 0;
    let mut unit_defect: f64 = 0.0;
    let mut off_unit_max: f64 = 0.0;
    for j in l * n..(l + 1) * n {
        let v = discrete_inner(op, &grid, j, k).abs();
        if (v - 1.0).abs() <= tol {
            unit_count += 1;
            unit_defect = unit_defect.max((v - 1.0).abs());
        } else {
            off_unit_max = off_unit_max.max(v);
        }
    }
    Ok(AliasBlockCheck {
        unit_count,
        unit_defect,
        off_unit_max,
    })
}
