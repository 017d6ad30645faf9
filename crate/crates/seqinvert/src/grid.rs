//! Deterministic design grids on the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two grid families with exact discrete orthogonality.
///
/// The sine basis is discretely orthogonal at the integer grid
/// `x_i = i/n`; the shifted (quarter-wave) sine basis at the
/// half-integer grid `x_i = (i - 1/2)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamily {
    Integer,
    HalfInteger,
}

/// `n` deterministic sample points in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignGrid {
    n: usize,
    family: GridFamily,
}

impl DesignGrid {
    pub fn new(n: usize, family: GridFamily) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall { n });
        }
        Ok(Self { n, family })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> GridFamily {
        self.family
    }

    /// The i-th design point, for `i` in `1..=n`.
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.n);
        match self.family {
            GridFamily::Integer => i as f64 / self.n as f64,
            GridFamily::HalfInteger => (i as f64 - 0.5) / self.n as f64,
        }
    }

    /// All design points in increasing order.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n).map(move |i| self.point(i))
    }
}
