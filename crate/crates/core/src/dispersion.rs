//! The characteristic function of the linearised infected equation at the
//! disease-free state, and everything derived from it.
//!
//! ```text
//! Delta(lambda, c) = d2 (e^lambda + e^-lambda - 2) - c lambda + beta S0 f'(0) - mu2
//! ```
//!
//! For fixed `c` the function is strictly convex in `lambda` with its minimum at
//! `asinh(c / (2 d2))`, and it is strictly decreasing in `c` for `lambda > 0`.
//! The critical speed `c*` is the unique speed whose minimum touches zero.

use std::fmt;

use thiserror::Error;

use crate::incidence::Incidence;
use crate::model::ModelParams;
use crate::roots::{bisect, RootError};

/// Absolute tolerance on root residuals of `Delta` and `h`.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispersionError {
    #[error("R0 = {r0} <= 1: no critical speed")]
    SubcriticalR0 { r0: f64 },
    #[error("speed c = {c} is not above the critical speed c* = {c_star}")]
    NotSupercritical { c: f64, c_star: f64 },
    #[error("wave speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("decay rate must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("root finder failed: {0}")]
    Root(#[from] RootError),
}

/// `Delta(., .)` bound to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    d2: f64,
    /// `beta S0 f'(0) - mu2`, the value at `lambda = 0`.
    offset: f64,
}

impl Characteristic {
    pub fn new(params: &ModelParams, inc: &Incidence) -> Self {
        let gain = params.beta() * params.disease_free() * inc.f_prime_at_zero();
        Characteristic {
            d2: params.d2(),
            offset: gain - params.mu2(),
        }
    }

    pub fn delta(&self, lambda: f64, c: f64) -> f64 {
        self.d2 * (lambda.exp() + (-lambda).exp() - 2.0) - c * lambda + self.offset
    }

    /// `d Delta / d lambda`.
    pub fn delta_lambda(&self, lambda: f64, c: f64) -> f64 {
        self.d2 * (lambda.exp() - (-lambda).exp()) - c
    }

    /// `d^2 Delta / d lambda^2`.
    pub fn delta_lambda2(&self, lambda: f64) -> f64 {
        self.d2 * (lambda.exp() + (-lambda).exp())
    }

    /// The minimiser of `Delta(., c)` over `lambda > 0`: the zero of
    /// `2 d2 sinh(lambda) = c`.
    pub fn argmin(&self, c: f64) -> f64 {
        (c / (2.0 * self.d2)).asinh()
    }

    pub fn min_value(&self, c: f64) -> f64 {
        self.delta(self.argmin(c), c)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

/// `Delta(lambda, c)` for the given model.
pub fn delta(lambda: f64, c: f64, params: &ModelParams, inc: &Incidence) -> f64 {
    Characteristic::new(params, inc).delta(lambda, c)
}

fn require_supercritical_r0(params: &ModelParams, inc: &Incidence) -> Result<(), DispersionError> {
    let r0 = params.basic_reproduction_number(inc);
    if r0 <= 1.0 {
        Err(DispersionError::SubcriticalR0 { r0 })
    } else {
        Ok(())
    }
}

/// `(c*, lambda*)`: the tangency point where `Delta = dDelta/dlambda = 0`.
///
/// Bisects on `c` the strictly decreasing map `c -> min_lambda Delta(lambda, c)`.
pub fn critical_speed(
    params: &ModelParams,
    inc: &Incidence,
) -> Result<(f64, f64), DispersionError> {
    require_supercritical_r0(params, inc)?;
    let ch = Characteristic::new(params, inc);
    let m = |c: f64| ch.min_value(c);

    let mut lo = 1e-6;
    let mut hi = 1.0;
    while m(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..200 {
        c = 0.5 * (lo + hi);
        let v = m(c);
        if v.abs() < 1e-12 || c <= lo || c >= hi {
            break;
        }
        if v > 0.0 {
            lo = c;
        } else {
            hi = c;
        }
    }
    Ok((c, ch.argmin(c)))
}

/// Position of `c` relative to the critical speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedClass {
    Below,
    Critical,
    Above,
}

impl fmt::Display for SpeedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpeedClass::Below => "below",
            SpeedClass::Critical => "critical",
            SpeedClass::Above => "above",
        })
    }
}

/// Half-width of the band around `c*` that counts as critical.
pub fn critical_tolerance(c_star: f64) -> f64 {
    1e-9 * (1.0 + c_star)
}

pub fn classify_against(c: f64, c_star: f64) -> SpeedClass {
    let tol = critical_tolerance(c_star);
    if c < c_star - tol {
        SpeedClass::Below
    } else if (c - c_star).abs() <= tol {
        SpeedClass::Critical
    } else {
        SpeedClass::Above
    }
}

pub fn classify_speed(
    c: f64,
    params: &ModelParams,
    inc: &Incidence,
) -> Result<SpeedClass, DispersionError> {
    let (c_star, _) = critical_speed(params, inc)?;
    Ok(classify_against(c, c_star))
}

/// The two positive roots `lambda1 < lambda* < lambda2` of `Delta(., c)` for
/// a supercritical speed.
pub fn decay_roots(
    c: f64,
    params: &ModelParams,
    inc: &Incidence,
) -> Result<(f64, f64), DispersionError> {
    let (c_star, lambda_star) = critical_speed(params, inc)?;
    if classify_against(c, c_star) != SpeedClass::Above {
        return Err(DispersionError::NotSupercritical { c, c_star });
    }
    let ch = Characteristic::new(params, inc);
    let f = |l: f64| ch.delta(l, c);
    let l1 = bisect(f, 0.0, lambda_star, 0.0)?;
    let mut hi = (2.0 * lambda_star).max(1.0);
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let l2 = bisect(f, lambda_star, hi, 0.0)?;
    Ok((l1, l2))
}

/// Result of [`analyze_speed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionResult {
    pub c_star: f64,
    pub lambda_star: f64,
    pub c: f64,
    pub class: SpeedClass,
    /// `(lambda1, lambda2)`, present iff the speed is above critical.
    pub roots: Option<(f64, f64)>,
}

pub fn analyze_speed(
    c: f64,
    params: &ModelParams,
    inc: &Incidence,
) -> Result<DispersionResult, DispersionError> {
    let (c_star, lambda_star) = critical_speed(params, inc)?;
    let class = classify_against(c, c_star);
    let roots = if class == SpeedClass::Above {
        Some(decay_roots(c, params, inc)?)
    } else {
        None
    };
    Ok(DispersionResult {
        c_star,
        lambda_star,
        c,
        class,
        roots,
    })
}

/// Positive root of `h(omega, c) = d2 (e^omega + e^-omega - 2) - c omega - mu2`.
pub fn omega_root(c: f64, params: &ModelParams) -> Result<f64, DispersionError> {
    if !(c > 0.0) {
        return Err(DispersionError::NonPositiveSpeed(c));
    }
    let (d2, mu2) = (params.d2(), params.mu2());
    let h = |w: f64| d2 * (w.exp() + (-w).exp() - 2.0) - c * w - mu2;
    let mut hi = 1.0;
    while h(hi) <= 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(h, 0.0, hi, 0.0)?)
}

/// Derivatives of a root speed `c_hat(lambda_hat)` with respect to `beta`,
/// `d2` and `R0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub dc_dbeta: f64,
    pub dc_dd2: f64,
    pub dc_dr0: f64,
}

pub fn speed_sensitivity(
    lambda_hat: f64,
    params: &ModelParams,
    inc: &Incidence,
) -> Result<Sensitivity, DispersionError> {
    if !(lambda_hat > 0.0) {
        return Err(DispersionError::NonPositiveLambda(lambda_hat));
    }
    Ok(Sensitivity {
        dc_dbeta: params.disease_free() * inc.f_prime_at_zero() / lambda_hat,
        dc_dd2: (lambda_hat.exp() + (-lambda_hat).exp() - 2.0) / lambda_hat,
        dc_dr0: params.mu2() / lambda_hat,
    })
}
