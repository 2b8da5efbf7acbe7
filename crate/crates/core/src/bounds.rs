//! Explicit upper and lower solutions of the wave equations.
//!
//! ```text
//! S+(xi) = S0                         I+(xi) = e^{lambda1 xi}
//! S-(xi) = max(S0 (1 - M1 e^{eps1 xi}), 0)
//! I-(xi) = max(e^{lambda1 xi} (1 - M2 e^{eps2 xi}), 0)
//! ```
//!
//! The amplitudes are chosen constructively: `M1` from the explicit sufficient
//! bound, `M2` by doubling until the four differential inequalities hold on a
//! fine grid.

use thiserror::Error;

use crate::dispersion::{self, Characteristic, DispersionError};
use crate::incidence::Incidence;
use crate::model::ModelParams;

/// Largest tolerated violation of any of the four inequalities.
pub const VIOLATION_TOL: f64 = 1e-9;

const MAX_DOUBLINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(
        "bounds still fail after {doublings} doublings of M2: inequality {inequality} violated by {violation:e} at xi = {xi}"
    )]
    VerificationExhausted {
        doublings: usize,
        inequality: usize,
        violation: f64,
        xi: f64,
    },
    #[error("grid step {0} outside (0, 0.1]")]
    BadStep(f64),
}

/// A constructed pair of upper and lower solutions for one speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    pub c: f64,
    pub s0: f64,
    pub lambda1: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub m1: f64,
    pub m2: f64,
    /// `ln(1/M1) / eps1`, where `S-` reaches zero.
    pub x1_kink: f64,
    /// `ln(1/M2) / eps2`, where `I-` reaches zero.
    pub x2_kink: f64,
    /// At `c = c*` the infected lower solution degenerates to `I- = 0`.
    pub critical: bool,
}

/// Values of the four bounds at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValues {
    pub s_upper: f64,
    pub s_lower: f64,
    pub i_upper: f64,
    pub i_lower: f64,
}

/// Leading-order coefficient of the `S-` inequality, positive for small `eps`.
fn s_lower_gap(eps: f64, c: f64, params: &ModelParams) -> f64 {
    params.d1() * (2.0 - eps.exp() - (-eps).exp()) + params.mu1() + c * eps
}

fn susceptible_lower(c: f64, lambda1: f64, params: &ModelParams, inc: &Incidence) -> (f64, f64) {
    let mut eps_hat = 1.0;
    while s_lower_gap(eps_hat, c, params) <= 0.0 {
        eps_hat *= 0.5;
    }
    let eps1 = (0.5 * lambda1).min(eps_hat);
    // M1 >= 1 keeps the kink at xi <= 0, where e^{(lambda1 - eps1) xi} <= 1.
    let m1 = (params.beta() * inc.f_prime_at_zero() / s_lower_gap(eps1, c, params)).max(1.0);
    (eps1, m1)
}

impl BoundSet {
    /// Builds and verifies bounds for a supercritical speed.
    pub fn build(c: f64, params: &ModelParams, inc: &Incidence) -> Result<Self, BoundsError> {
        let (lambda1, lambda2) = dispersion::decay_roots(c, params, inc)?;
        let ch = Characteristic::new(params, inc);
        let (eps1, m1) = susceptible_lower(c, lambda1, params, inc);
        let eps2 = eps1.min(0.5 * (lambda2 - lambda1));
        let gap = -ch.delta(lambda1 + eps2, c);
        let mut m2 = ((eps2 / eps1) * m1 + 1.0).max(1.0 / gap + 1.0);

        let mut last = None;
        for doubling in 0..=MAX_DOUBLINGS {
            let b = BoundSet {
                c,
                s0: params.disease_free(),
                lambda1,
                eps1,
                eps2,
                m1,
                m2,
                x1_kink: (1.0 / m1).ln() / eps1,
                x2_kink: (1.0 / m2).ln() / eps2,
                critical: false,
            };
            let lo = b.x2_kink.min(-20.0) - 2.0;
            let report = b.verify(params, inc, 0.01, (lo, 5.0))?;
            if report.passed() {
                return Ok(b);
            }
            last = Some((doubling, report));
            m2 *= 2.0;
        }
        let (doublings, report) = last.expect("loop runs at least once");
        let (inequality, violation, xi) = report.worst();
        Err(BoundsError::VerificationExhausted {
            doublings,
            inequality,
            violation,
            xi,
        })
    }

    /// Bounds at the critical speed: `I+ = e^{lambda* xi}`, `I- = 0`.
    pub fn critical(params: &ModelParams, inc: &Incidence) -> Result<Self, BoundsError> {
        let (c_star, lambda_star) = dispersion::critical_speed(params, inc)?;
        let (eps1, m1) = susceptible_lower(c_star, lambda_star, params, inc);
        Ok(BoundSet {
            c: c_star,
            s0: params.disease_free(),
            lambda1: lambda_star,
            eps1,
            eps2: 0.0,
            m1,
            m2: 0.0,
            x1_kink: (1.0 / m1).ln() / eps1,
            x2_kink: f64::NEG_INFINITY,
            critical: true,
        })
    }

    pub fn s_upper(&self, _xi: f64) -> f64 {
        self.s0
    }

    pub fn i_upper(&self, xi: f64) -> f64 {
        (self.lambda1 * xi).exp()
    }

    pub fn s_lower(&self, xi: f64) -> f64 {
        (self.s0 * (1.0 - self.m1 * (self.eps1 * xi).exp())).max(0.0)
    }

    pub fn i_lower(&self, xi: f64) -> f64 {
        if self.critical {
            return 0.0;
        }
        ((self.lambda1 * xi).exp() * (1.0 - self.m2 * (self.eps2 * xi).exp())).max(0.0)
    }

    pub fn eval(&self, xi: f64) -> BoundValues {
        BoundValues {
            s_upper: self.s_upper(xi),
            s_lower: self.s_lower(xi),
            i_upper: self.i_upper(xi),
            i_lower: self.i_lower(xi),
        }
    }

    fn s_lower_slope(&self, xi: f64) -> f64 {
        let e = (self.eps1 * xi).exp();
        if 1.0 - self.m1 * e > 0.0 {
            -self.s0 * self.m1 * self.eps1 * e
        } else {
            0.0
        }
    }

    fn i_lower_slope(&self, xi: f64) -> f64 {
        if self.critical {
            return 0.0;
        }
        let e2 = (self.eps2 * xi).exp();
        if 1.0 - self.m2 * e2 > 0.0 {
            let e1 = (self.lambda1 * xi).exp();
            self.lambda1 * e1 - self.m2 * (self.lambda1 + self.eps2) * e1 * e2
        } else {
            0.0
        }
    }

    /// Signed slacks of the four inequalities at `xi`; each is `>= 0` when the
    /// inequality holds.
    pub fn slacks(&self, xi: f64, params: &ModelParams, inc: &Incidence) -> [f64; 4] {
        let (lam, beta, mu1, mu2, d1, d2) = (
            params.lambda(),
            params.beta(),
            params.mu1(),
            params.mu2(),
            params.d1(),
            params.d2(),
        );
        let c = self.c;
        let j = |g: &dyn Fn(f64) -> f64| g(xi + 1.0) + g(xi - 1.0) - 2.0 * g(xi);
        let v = self.eval(xi);
        let f = |i: f64| inc.f_unchecked(i);

        // upper solutions are constant / pure exponential, slopes are exact
        let e1 =
            d1 * j(&|x| self.s_upper(x)) + lam - mu1 * v.s_upper - beta * v.s_upper * f(v.i_lower);
        let e2 = d2 * j(&|x| self.i_upper(x)) - c * self.lambda1 * v.i_upper
            + beta * v.s_upper * f(v.i_upper)
            - mu2 * v.i_upper;
        let e3 = d1 * j(&|x| self.s_lower(x)) - c * self.s_lower_slope(xi) + lam
            - mu1 * v.s_lower
            - beta * v.s_lower * f(v.i_upper);
        let e4 = d2 * j(&|x| self.i_lower(x)) - c * self.i_lower_slope(xi)
            + beta * v.s_lower * f(v.i_lower)
            - mu2 * v.i_lower;
        [-e1, -e2, e3, e4]
    }

    /// Checks the four inequalities on a uniform grid over `range`, skipping
    /// points within two steps of either kink.
    pub fn verify(
        &self,
        params: &ModelParams,
        inc: &Incidence,
        grid_step: f64,
        range: (f64, f64),
    ) -> Result<BoundsReport, BoundsError> {
        if !(grid_step > 0.0 && grid_step <= 0.1) {
            return Err(BoundsError::BadStep(grid_step));
        }
        let exclusion = 2.0 * grid_step;
        let n = ((range.1 - range.0) / grid_step).floor() as usize;
        let mut report = BoundsReport {
            max_violation: [0.0; 4],
            worst_xi: [range.0; 4],
            rows: Vec::with_capacity(n + 1),
        };
        for k in 0..=n {
            let xi = range.0 + k as f64 * grid_step;
            if (xi - self.x1_kink).abs() <= exclusion || (xi - self.x2_kink).abs() <= exclusion {
                continue;
            }
            let slack = self.slacks(xi, params, inc);
            for (q, &s) in slack.iter().enumerate() {
                if -s > report.max_violation[q] {
                    report.max_violation[q] = -s;
                    report.worst_xi[q] = xi;
                }
            }
            report.rows.push((xi, slack));
        }
        Ok(report)
    }
}

/// Outcome of [`BoundSet::verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// Largest violation (`max(-slack, 0)`) per inequality.
    pub max_violation: [f64; 4],
    pub worst_xi: [f64; 4],
    /// `(xi, slacks)` for every evaluated grid point.
    pub rows: Vec<(f64, [f64; 4])>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.max_violation.iter().all(|&v| v <= VIOLATION_TOL)
    }

    /// `(inequality number 1..=4, violation, xi)` of the worst violation.
    pub fn worst(&self) -> (usize, f64, f64) {
        let (q, v) =
            self.max_violation
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (q, &v)| if v > acc.1 { (q, v) } else { acc },
                );
        (q + 1, v, self.worst_xi[q])
    }
}
