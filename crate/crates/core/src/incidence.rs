//! Incidence-rate families `f(I)`.
//!
//! Every family satisfies `f(0) = 0`, `f' > 0` and `f(I)/I` non-increasing.
//! Parameters are checked once, when an [`Incidence`] is constructed; the
//! evaluation methods then only reject negative or non-finite arguments.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncidenceError {
    #[error("invalid {kind} parameter {name} = {value}: must satisfy {constraint}")]
    InvalidParameter {
        kind: &'static str,
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("incidence argument I = {0} outside [0, inf)")]
    Domain(f64),
    #[error("assumption check needs a non-empty grid")]
    EmptyGrid,
    #[error("assumption grid must be strictly increasing and positive (offending index {0})")]
    BadGrid(usize),
}

/// The raw, unvalidated description of an incidence family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidenceKind {
    /// `f(I) = I`.
    Bilinear,
    /// `f(I) = I / (1 + alpha I)`.
    Saturated { alpha: f64 },
    /// `f(I) = I / (1 + alpha I^p)` with `0 < p < 1`.
    SaturatedPower { alpha: f64, p: f64 },
    /// `f(I) = I / (1 + k I + sqrt(1 + 2 k I))`.
    HeesterbeekMetz { k: f64 },
    /// `f(I) = I / (eps^a + I^a)^g` with `a g < 1`.
    PowerSaturation {
        eps: f64,
        alpha_exp: f64,
        gamma_exp: f64,
    },
    /// `f(I) = k ln(1 + nu I / k)`.
    LogInsect { nu: f64, k_cap: f64 },
}

impl IncidenceKind {
    pub fn tag(&self) -> &'static str {
        match self {
            IncidenceKind::Bilinear => "bilinear",
            IncidenceKind::Saturated { .. } => "saturated",
            IncidenceKind::SaturatedPower { .. } => "saturated_power",
            IncidenceKind::HeesterbeekMetz { .. } => "heesterbeek_metz",
            IncidenceKind::PowerSaturation { .. } => "power_saturation",
            IncidenceKind::LogInsect { .. } => "log_insect",
        }
    }
}

impl fmt::Display for IncidenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A validated incidence family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    kind: IncidenceKind,
}

fn positive(kind: &'static str, name: &'static str, value: f64) -> Result<(), IncidenceError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(IncidenceError::InvalidParameter {
            kind,
            name,
            value,
            constraint: "value > 0",
        })
    }
}

impl Incidence {
    pub fn new(kind: IncidenceKind) -> Result<Self, IncidenceError> {
        let tag = kind.tag();
        match kind {
            IncidenceKind::Bilinear => {}
            IncidenceKind::Saturated { alpha } => positive(tag, "alpha", alpha)?,
            IncidenceKind::SaturatedPower { alpha, p } => {
                positive(tag, "alpha", alpha)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(IncidenceError::InvalidParameter {
                        kind: tag,
                        name: "p",
                        value: p,
                        constraint: "0 < p < 1",
                    });
                }
            }
            IncidenceKind::HeesterbeekMetz { k } => positive(tag, "k", k)?,
            IncidenceKind::PowerSaturation {
                eps,
                alpha_exp,
                gamma_exp,
            } => {
                positive(tag, "eps", eps)?;
                positive(tag, "alpha_exp", alpha_exp)?;
                positive(tag, "gamma_exp", gamma_exp)?;
                if alpha_exp * gamma_exp >= 1.0 {
                    return Err(IncidenceError::InvalidParameter {
                        kind: tag,
                        name: "alpha_exp*gamma_exp",
                        value: alpha_exp * gamma_exp,
                        constraint: "alpha_exp * gamma_exp < 1",
                    });
                }
            }
            IncidenceKind::LogInsect { nu, k_cap } => {
                positive(tag, "nu", nu)?;
                positive(tag, "k_cap", k_cap)?;
            }
        }
        Ok(Incidence { kind })
    }

    pub fn bilinear() -> Self {
        Incidence {
            kind: IncidenceKind::Bilinear,
        }
    }

    pub fn kind(&self) -> IncidenceKind {
        self.kind
    }

    fn check_arg(i: f64) -> Result<(), IncidenceError> {
        if i.is_finite() && i >= 0.0 {
            Ok(())
        } else {
            Err(IncidenceError::Domain(i))
        }
    }

    /// `f(I)`.
    pub fn f(&self, i: f64) -> Result<f64, IncidenceError> {
        Self::check_arg(i)?;
        Ok(self.f_unchecked(i))
    }

    /// `f'(I)`, from the analytic derivative of each closed form.
    pub fn f_prime(&self, i: f64) -> Result<f64, IncidenceError> {
        Self::check_arg(i)?;
        Ok(self.f_prime_unchecked(i))
    }

    /// `f(I)` without the domain check; callers guarantee `I >= 0`.
    #[inline]
    pub(crate) fn f_unchecked(&self, i: f64) -> f64 {
        if i == 0.0 {
            return 0.0;
        }
        match self.kind {
            IncidenceKind::Bilinear => i,
            IncidenceKind::Saturated { alpha } => i / (1.0 + alpha * i),
            IncidenceKind::SaturatedPower { alpha, p } => i / (1.0 + alpha * i.powf(p)),
            IncidenceKind::HeesterbeekMetz { k } => i / (1.0 + k * i + (1.0 + 2.0 * k * i).sqrt()),
            IncidenceKind::PowerSaturation {
                eps,
                alpha_exp,
                gamma_exp,
            } => i / (eps.powf(alpha_exp) + i.powf(alpha_exp)).powf(gamma_exp),
            IncidenceKind::LogInsect { nu, k_cap } => k_cap * (nu * i / k_cap).ln_1p(),
        }
    }

    #[inline]
    pub(crate) fn f_prime_unchecked(&self, i: f64) -> f64 {
        match self.kind {
            IncidenceKind::Bilinear => 1.0,
            IncidenceKind::Saturated { alpha } => {
                let d = 1.0 + alpha * i;
                1.0 / (d * d)
            }
            IncidenceKind::SaturatedPower { alpha, p } => {
                let ip = if i == 0.0 { 0.0 } else { i.powf(p) };
                let d = 1.0 + alpha * ip;
                (1.0 + alpha * (1.0 - p) * ip) / (d * d)
            }
            IncidenceKind::HeesterbeekMetz { k } => {
                let r = (1.0 + 2.0 * k * i).sqrt();
                let d = 1.0 + k * i + r;
                (d - i * (k + k / r)) / (d * d)
            }
            IncidenceKind::PowerSaturation {
                eps,
                alpha_exp,
                gamma_exp,
            } => {
                let ea = eps.powf(alpha_exp);
                let ia = if i == 0.0 { 0.0 } else { i.powf(alpha_exp) };
                (ea + ia).powf(-gamma_exp - 1.0) * (ea + (1.0 - alpha_exp * gamma_exp) * ia)
            }
            IncidenceKind::LogInsect { nu, k_cap } => nu / (1.0 + nu * i / k_cap),
        }
    }

    /// `f'(0)` in closed form.
    pub fn f_prime_at_zero(&self) -> f64 {
        match self.kind {
            IncidenceKind::Bilinear
            | IncidenceKind::Saturated { .. }
            | IncidenceKind::SaturatedPower { .. } => 1.0,
            IncidenceKind::HeesterbeekMetz { .. } => 0.5,
            IncidenceKind::PowerSaturation {
                eps,
                alpha_exp,
                gamma_exp,
            } => eps.powf(-alpha_exp * gamma_exp),
            IncidenceKind::LogInsect { nu, .. } => nu,
        }
    }

    /// `lim_{I -> inf} f(I)` when finite.
    pub fn supremum(&self) -> Option<f64> {
        match self.kind {
            IncidenceKind::Saturated { alpha } => Some(1.0 / alpha),
            IncidenceKind::HeesterbeekMetz { k } => Some(1.0 / k),
            _ => None,
        }
    }

    /// Checks the testable parts of the incidence assumptions on a grid.
    pub fn check_assumptions(&self, grid: &[f64]) -> Result<AssumptionReport, IncidenceError> {
        if grid.is_empty() {
            return Err(IncidenceError::EmptyGrid);
        }
        for (idx, &x) in grid.iter().enumerate() {
            if !(x.is_finite() && x > 0.0) || (idx > 0 && x <= grid[idx - 1]) {
                return Err(IncidenceError::BadGrid(idx));
            }
        }
        let mut report = AssumptionReport {
            nonnegative: true,
            increasing: true,
            ratio_nonincreasing: true,
            worst_ratio_increase: 0.0,
        };
        let mut prev_ratio: Option<f64> = None;
        for &x in grid {
            let fx = self.f_unchecked(x);
            report.nonnegative &= fx >= 0.0;
            report.increasing &= self.f_prime_unchecked(x) > 0.0;
            let ratio = fx / x;
            if let Some(prev) = prev_ratio {
                let rise = (ratio - prev) / prev.abs().max(f64::MIN_POSITIVE);
                report.worst_ratio_increase = report.worst_ratio_increase.max(rise);
                if rise > 1e-12 {
                    report.ratio_nonincreasing = false;
                }
            }
            prev_ratio = Some(ratio);
        }
        Ok(report)
    }
}

/// Verdicts of [`Incidence::check_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    pub nonnegative: bool,
    pub increasing: bool,
    pub ratio_nonincreasing: bool,
    /// Largest relative increase of `f(I)/I` between consecutive grid points.
    pub worst_ratio_increase: f64,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.increasing && self.ratio_nonincreasing
    }
}
