//! Discrete sine transforms backing the fast projection/synthesis path.
//!
//! Both transforms are computed through a complex FFT of length `2n`
//! (or `2(N+1)`), which keeps them exact up to rounding while staying
//! `O(n log n)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static FFT_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    FFT_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let dir = if inverse {
                    FftDirection::Inverse
                } else {
                    FftDirection::Forward
                };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

/// DST-I: `out[k-1] = sum_{i=1}^{N} x[i-1] sin(pi i k / (N+1))` for
/// `k = 1..=N`, where `N = x.len()`.
pub fn dst1(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = 2 * (n + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for (i, &v) in x.iter().enumerate() {
        buf[i + 1].re = v;
        buf[m - 1 - i].re = -v;
    }
    plan(m, false).process(&mut buf);
    (1..=n).map(|k| -0.5 * buf[k].im).collect()
}

/// DST-IV: `out[k-1] = sum_{i=1}^{N} x[i-1] sin(pi (i-1/2)(k-1/2) / N)`
/// for `k = 1..=N`, where `N = x.len()`.
pub fn dst4(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = 2 * n;
    let w = PI / (2.0 * m as f64);
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for (j, &v) in x.iter().enumerate() {
        // x_j * exp(i pi j / (2N))
        let ang = 2.0 * w * j as f64;
        buf[j] = Complex::from_polar(v, ang);
    }
    plan(m, true).process(&mut buf);
    (0..n)
        .map(|k| {
            let ang = w * (2 * k + 1) as f64;
            (Complex::from_polar(1.0, ang) * buf[k]).im
        })
        .collect()
}
