//! Lyapunov functional along a wave profile.
//!
//! ```text
//! L(xi) = W1 + d1 S* W2 + d2 I* W3
//! W1 = c S* g(S/S*) + c I* g(I/I*),   g(x) = x - 1 - ln x
//! W2 = int_{xi-1}^{xi} g(S/S*) - int_{xi}^{xi+1} g(S/S*)
//! ```
//!
//! `W3` is `W2` with `I/I*`. Integrals use the trapezoid rule on the profile grid.

use thiserror::Error;

use crate::model::{Equilibria, ModelParams};
use crate::profile::WaveProfile;

/// Infected level below which `ln(I/I*)` is not evaluated.
pub const I_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("g is defined for x > 0, got {0}")]
    Domain(f64),
    #[error("no endemic equilibrium")]
    NoEndemic,
    #[error("I <= {floor:e} within one unit of xi = {xi}")]
    BelowFloor { xi: f64, floor: f64 },
    #[error("xi index {index} outside the evaluation window")]
    OutsideWindow { index: usize },
    #[error("I never exceeds the floor on the evaluation window")]
    NoValidPoints,
    #[error("stride must be positive")]
    ZeroStride,
}

/// `g(x) = x - 1 - ln x`.
pub fn g(x: f64) -> Result<f64, LyapunovError> {
    if x > 0.0 {
        Ok(g_unchecked(x))
    } else {
        Err(LyapunovError::Domain(x))
    }
}

fn g_unchecked(x: f64) -> f64 {
    // ln_1p keeps g accurate near its minimum
    let u = x - 1.0;
    u - u.ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValue {
    pub l: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

/// Functional at grid index `j` of the profile.
pub fn lyapunov_value(
    p: &WaveProfile,
    j: usize,
    eq: &Equilibria,
    params: &ModelParams,
) -> Result<LyapunovValue, LyapunovError> {
    let (s_star, i_star) = eq.endemic.ok_or(LyapunovError::NoEndemic)?;
    let m = p.m;
    if j < m || j + m >= p.len() {
        return Err(LyapunovError::OutsideWindow { index: j });
    }
    if let Some(k) = (j - m..=j + m).find(|&k| !(p.i[k] > I_FLOOR)) {
        return Err(LyapunovError::BelowFloor {
            xi: p.xi[k],
            floor: I_FLOOR,
        });
    }
    Ok(value_at(p, j, s_star, i_star, params))
}

fn value_at(
    p: &WaveProfile,
    j: usize,
    s_star: f64,
    i_star: f64,
    params: &ModelParams,
) -> LyapunovValue {
    let m = p.m;
    let h = 1.0 / m as f64;
    let gs = |k: usize| g_unchecked(p.s[k] / s_star);
    let gi = |k: usize| g_unchecked(p.i[k] / i_star);
    let trap = |f: &dyn Fn(usize) -> f64, a: usize, b: usize| {
        let inner: f64 = (a + 1..b).map(f).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    };
    let w1 = p.c * s_star * gs(j) + p.c * i_star * gi(j);
    let w2 = trap(&gs, j - m, j) - trap(&gs, j, j + m);
    let w3 = trap(&gi, j - m, j) - trap(&gi, j, j + m);
    let l = w1 + params.d1() * s_star * w2 + params.d2() * i_star * w3;
    LyapunovValue { l, w1, w2, w3 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSeries {
    pub xi: Vec<f64>,
    pub l: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
    /// First abscissa whose unit neighbourhood clears [`I_FLOOR`].
    pub valid_from: f64,
    /// `max_j (L_{j+1} - L_j)`.
    pub max_increase: f64,
    pub tol_mono: f64,
}

impl LyapunovSeries {
    pub fn monotone(&self) -> bool {
        self.max_increase <= self.tol_mono
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Evaluates `L` at every `stride`-th grid point of `[-X+1, X-1]` from the
/// first point whose unit neighbourhood clears the floor.
pub fn lyapunov_series(
    p: &WaveProfile,
    eq: &Equilibria,
    params: &ModelParams,
    stride: usize,
) -> Result<LyapunovSeries, LyapunovError> {
    if stride == 0 {
        return Err(LyapunovError::ZeroStride);
    }
    let (s_star, i_star) = eq.endemic.ok_or(LyapunovError::NoEndemic)?;
    let m = p.m;
    let end = p.len() - m;
    // the last index below the floor anywhere left of the window end shifts the start
    let start = match (0..end + m).rev().find(|&k| !(p.i[k] > I_FLOOR)) {
        None => m,
        Some(k) => (k + m + 1).max(m),
    };
    if start >= end {
        return Err(LyapunovError::NoValidPoints);
    }
    let mut series = LyapunovSeries {
        xi: Vec::new(),
        l: Vec::new(),
        w1: Vec::new(),
        w2: Vec::new(),
        w3: Vec::new(),
        valid_from: p.xi[start],
        max_increase: f64::NEG_INFINITY,
        tol_mono: 0.0,
    };
    for j in (start..end).step_by(stride) {
        let v = value_at(p, j, s_star, i_star, params);
        series.xi.push(p.xi[j]);
        series.l.push(v.l);
        series.w1.push(v.w1);
        series.w2.push(v.w2);
        series.w3.push(v.w3);
    }
    let max_abs = series.l.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    series.tol_mono = 1e-6 * (1.0 + max_abs);
    series.max_increase = series
        .l
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(series)
}
