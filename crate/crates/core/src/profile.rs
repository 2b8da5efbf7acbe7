//! Traveling-wave profiles from the truncated fixed-point problem on `[-X, X]`.
//!
//! Each sweep of the operator solves two linear first-order problems
//!
//! ```text
//! c S' + (2 d1 + mu1 + alpha) S = d1 (phi(xi+1) + phi(xi-1)) + Lambda + alpha phi - beta phi f(psi)
//! c I' + (2 d2 + mu2) I         = d2 (psi(xi+1) + psi(xi-1)) + beta phi f(psi)
//! ```
//!
//! from the left endpoint. The grid spacing is `1/m`, so the unit shifts are
//! index shifts by `m`.

use thiserror::Error;

use crate::bounds::{BoundSet, BoundsError};
use crate::dispersion::{self, DispersionError, SpeedClass};
use crate::incidence::Incidence;
use crate::model::{Equilibria, ModelError, ModelParams};

/// Final-iterate clamp magnitude above which a converged profile is flagged.
pub const CLAMP_FLAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("speed c = {c} is below the critical speed c* = {c_star}")]
    SpeedBelowCritical { c: f64, c_star: f64 },
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver option {name} = {value}: must satisfy {constraint}")]
    InvalidOption {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("half-width X = {x_half} must exceed -X2 = {min}")]
    WindowTooNarrow { x_half: f64, min: f64 },
    #[error("input arrays have lengths {phi} and {psi}; grid has {expected} points")]
    GridMismatch {
        phi: usize,
        psi: usize,
        expected: usize,
    },
    #[error("alpha = {alpha} is below the monotonicity bound {required}")]
    AlphaTooSmall { alpha: f64, required: f64 },
    #[error("no convergence after {iters} iterations (last change {change:e})")]
    NotConverged {
        iters: usize,
        change: f64,
        profile: Box<WaveProfile>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Half-width `X` of the window.
    pub x_half: f64,
    /// Grid points per unit length.
    pub m: usize,
    /// Sup-norm change between sweeps that counts as converged.
    pub tol: f64,
    /// Iteration budget; `None` means 5000, or 50000 at the critical speed.
    pub max_iters: Option<usize>,
    /// Relaxation weight in `(0, 1]`.
    pub damping: f64,
    /// `I_cap = i_cap_factor * max(I*, 1)` bounds the iterates and `alpha`.
    pub i_cap_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            x_half: 40.0,
            m: 20,
            tol: 1e-10,
            max_iters: None,
            damping: 1.0,
            i_cap_factor: 2.0,
        }
    }
}

pub const DEFAULT_MAX_ITERS: usize = 5000;

impl SolverOptions {
    pub fn effective_max_iters(&self, critical: bool) -> usize {
        self.max_iters.unwrap_or(if critical {
            10 * DEFAULT_MAX_ITERS
        } else {
            DEFAULT_MAX_ITERS
        })
    }

    /// Number of grid points, `2 X m + 1`.
    pub fn grid_len(&self) -> Result<usize, ProfileError> {
        let bad = |name, value, constraint| {
            Err(ProfileError::InvalidOption {
                name,
                value,
                constraint,
            })
        };
        if self.m < 10 {
            return bad("profile.m", self.m as f64, "m >= 10");
        }
        if !(self.x_half.is_finite() && self.x_half >= 2.0) {
            return bad("profile.X", self.x_half, "X >= 2");
        }
        let steps = self.x_half * self.m as f64;
        if (steps - steps.round()).abs() > 1e-9 {
            return bad("profile.X", self.x_half, "X * m is an integer");
        }
        if !(self.tol > 0.0) {
            return bad("profile.tol", self.tol, "tol > 0");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("profile.damping", self.damping, "0 < damping <= 1");
        }
        if !(self.i_cap_factor >= 1.0 && self.i_cap_factor.is_finite()) {
            return bad(
                "profile.i_cap_factor",
                self.i_cap_factor,
                "i_cap_factor >= 1",
            );
        }
        Ok(2 * steps.round() as usize + 1)
    }
}

/// The truncated problem for one speed and window: grid, bounds and shift `alpha`.
#[derive(Debug, Clone)]
pub struct TruncatedProblem {
    pub c: f64,
    pub m: usize,
    pub x_half: f64,
    pub alpha: f64,
    pub bounds: BoundSet,
    pub xi: Vec<f64>,
    params: ModelParams,
    inc: Incidence,
    s_left: f64,
    i_left: f64,
}

impl TruncatedProblem {
    /// Left data default to `(S-(-X), I-(-X))`.
    pub fn new(
        c: f64,
        params: &ModelParams,
        inc: &Incidence,
        bounds: BoundSet,
        x_half: f64,
        m: usize,
        alpha: f64,
    ) -> Self {
        let n = 2 * (x_half * m as f64).round() as usize + 1;
        let h = 1.0 / m as f64;
        let xi: Vec<f64> = (0..n).map(|j| -x_half + j as f64 * h).collect();
        TruncatedProblem {
            c,
            m,
            x_half,
            alpha,
            bounds,
            s_left: bounds.s_lower(-x_half),
            i_left: bounds.i_lower(-x_half),
            xi,
            params: *params,
            inc: *inc,
        }
    }

    /// Replaces the left data `(S(-X), I(-X))`.
    pub fn with_left_data(mut self, s: f64, i: f64) -> Self {
        self.s_left = s;
        self.i_left = i;
        self
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// One application of the operator to `(phi, psi)`.
    pub fn apply(&self, phi: &[f64], psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ProfileError> {
        let n = self.len();
        if phi.len() != n || psi.len() != n {
            return Err(ProfileError::GridMismatch {
                phi: phi.len(),
                psi: psi.len(),
                expected: n,
            });
        }
        let psi_max = psi.iter().fold(0.0f64, |a, &b| a.max(b));
        let required = self.params.beta() * self.inc.f_prime_at_zero() * psi_max;
        if self.alpha < required {
            return Err(ProfileError::AlphaTooSmall {
                alpha: self.alpha,
                required,
            });
        }
        let p = &self.params;
        let (beta, d1, d2) = (p.beta(), p.d1(), p.d2());
        let mut h1 = Vec::with_capacity(n);
        let mut h2 = Vec::with_capacity(n);
        for j in 0..n {
            let infection = beta * phi[j] * self.inc.f_unchecked(psi[j]);
            let s_nb = self.neighbours(phi, j, |x| self.bounds.s_lower(x));
            let i_nb = self.neighbours(psi, j, |x| self.bounds.i_lower(x));
            h1.push(d1 * s_nb + p.lambda() + self.alpha * phi[j] - infection);
            h2.push(d2 * i_nb + infection);
        }
        let s = self.integrate(&h1, 2.0 * d1 + p.mu1() + self.alpha, self.s_left);
        let i = self.integrate(&h2, 2.0 * d2 + p.mu2(), self.i_left);
        Ok((s, i))
    }

    /// `a(xi+1) + a(xi-1)`; beyond `X` the value at `X`, below `-X` the given lower solution.
    fn neighbours(&self, a: &[f64], j: usize, lower: impl Fn(f64) -> f64) -> f64 {
        let n = a.len();
        let right = if j + self.m < n {
            a[j + self.m]
        } else {
            a[n - 1]
        };
        let left = if j >= self.m {
            a[j - self.m]
        } else {
            lower(self.xi[j] - 1.0)
        };
        right + left
    }

    /// Solves `c y' + k y = H` exactly for the piecewise-linear interpolant of `H`.
    fn integrate(&self, forcing: &[f64], k: f64, y0: f64) -> Vec<f64> {
        let h = 1.0 / self.m as f64;
        let kappa = k / self.c;
        let a = kappa * h;
        let e = (-a).exp();
        // -expm1 keeps the weights accurate when a is small
        let one_minus_e = -(-a).exp_m1();
        let w0 = (one_minus_e - a * e) / (kappa * kappa * h);
        let w1 = one_minus_e / kappa - w0;
        let mut y = Vec::with_capacity(forcing.len());
        y.push(y0);
        for j in 1..forcing.len() {
            let prev = y[j - 1];
            y.push(prev * e + (w0 * forcing[j - 1] + w1 * forcing[j]) / self.c);
        }
        y
    }
}

/// Free-function form of [`TruncatedProblem::apply`].
pub fn apply_truncated_operator(
    problem: &TruncatedProblem,
    phi: &[f64],
    psi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ProfileError> {
    problem.apply(phi, psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub c: f64,
    pub x_half: f64,
    pub m: usize,
    pub xi: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub alpha_shift: f64,
    pub i_cap: f64,
    pub iters: usize,
    /// Sup-norm change of the last sweep.
    pub last_change: f64,
    pub residual_s: Vec<f64>,
    pub residual_i: Vec<f64>,
    /// Grid points where the last sweep was clamped into the bound box.
    pub clamp_count: usize,
    /// Largest clamp correction in the last sweep.
    pub clamp_max: f64,
    pub critical: bool,
    pub bounds: BoundSet,
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Index range of `[-X+1, X-1]`.
    pub fn window(&self) -> std::ops::Range<usize> {
        self.m..self.len() - self.m
    }

    /// Sup residuals over `[-X+1, X-1]`.
    pub fn sup_residual(&self) -> (f64, f64) {
        let w = self.window();
        (
            sup_abs(&self.residual_s[w.clone()]),
            sup_abs(&self.residual_i[w]),
        )
    }

    /// True when the last sweep needed a clamp larger than [`CLAMP_FLAG_TOL`].
    pub fn clamp_flagged(&self) -> bool {
        self.clamp_max > CLAMP_FLAG_TOL
    }

    /// Largest violation of `S- <= S <= S0`, `I- <= I <= I+` on the grid.
    pub fn sandwich_violation(&self) -> f64 {
        let b = &self.bounds;
        let mut worst = 0.0f64;
        for ((&x, &s), &i) in self.xi.iter().zip(&self.s).zip(&self.i) {
            let v = b.eval(x);
            worst = worst
                .max(v.s_lower - s)
                .max(s - v.s_upper)
                .max(v.i_lower - i)
                .max(i - v.i_upper);
        }
        worst
    }
}

fn sup_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Wave-equation residuals at every grid point. Shifts leaving the grid use
/// the same extension as the operator; the sup over `[-X+1, X-1]` never needs it.
pub fn residual_arrays(
    c: f64,
    m: usize,
    s: &[f64],
    i: &[f64],
    bounds: &BoundSet,
    params: &ModelParams,
    inc: &Incidence,
) -> (Vec<f64>, Vec<f64>) {
    let n = s.len();
    let h = 1.0 / m as f64;
    let x_half = (n - 1) as f64 * h / 2.0;
    let xi = |j: usize| -x_half + j as f64 * h;
    let shift = |a: &[f64], j: usize, lower: &dyn Fn(f64) -> f64| {
        let right = if j + m < n { a[j + m] } else { a[n - 1] };
        let left = if j >= m { a[j - m] } else { lower(xi(j) - 1.0) };
        right + left - 2.0 * a[j]
    };
    let (lam, beta, mu1, mu2, d1, d2) = (
        params.lambda(),
        params.beta(),
        params.mu1(),
        params.mu2(),
        params.d1(),
        params.d2(),
    );
    let mut rs = Vec::with_capacity(n);
    let mut ri = Vec::with_capacity(n);
    for j in 0..n {
        let ds = derivative(s, j, h);
        let di = derivative(i, j, h);
        let infection = beta * s[j] * inc.f_unchecked(i[j]);
        let js = shift(s, j, &|x| bounds.s_lower(x));
        let ji = shift(i, j, &|x| bounds.i_lower(x));
        rs.push(c * ds - d1 * js - lam + mu1 * s[j] + infection);
        ri.push(c * di - d2 * ji - infection + mu2 * i[j]);
    }
    (rs, ri)
}

/// Fourth-order centered difference, second-order near the ends.
fn derivative(a: &[f64], j: usize, h: f64) -> f64 {
    let n = a.len();
    if j >= 2 && j + 2 < n {
        (a[j - 2] - 8.0 * a[j - 1] + 8.0 * a[j + 1] - a[j + 2]) / (12.0 * h)
    } else if j == 0 {
        (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h)
    } else if j == n - 1 {
        (3.0 * a[n - 1] - 4.0 * a[n - 2] + a[n - 3]) / (2.0 * h)
    } else {
        (a[j + 1] - a[j - 1]) / (2.0 * h)
    }
}

/// Sup residuals over `[-X+1, X-1]` for arrays on a grid of spacing `1/m`.
pub fn residual(p: &WaveProfile, params: &ModelParams, inc: &Incidence) -> (f64, f64) {
    let (rs, ri) = residual_arrays(p.c, p.m, &p.s, &p.i, &p.bounds, params, inc);
    let w = p.window();
    (sup_abs(&rs[w.clone()]), sup_abs(&ri[w]))
}

/// `(max(|S(-X) - S0|, |I(-X)|), max(|S(X-1) - S*|, |I(X-1) - I*|))`.
/// The right gap is `None` without an endemic equilibrium.
pub fn boundary_gaps(p: &WaveProfile, eq: &Equilibria) -> (f64, Option<f64>) {
    let left = (p.s[0] - eq.s0).abs().max(p.i[0].abs());
    let j = p.len() - 1 - p.m;
    let right = eq
        .endemic
        .map(|(s_star, i_star)| (p.s[j] - s_star).abs().max((p.i[j] - i_star).abs()));
    (left, right)
}

/// Iterates the truncated operator to a fixed point.
pub fn solve_profile(
    c: f64,
    params: &ModelParams,
    inc: &Incidence,
    opts: &SolverOptions,
) -> Result<WaveProfile, ProfileError> {
    let n = opts.grid_len()?;
    let (c_star, _) = dispersion::critical_speed(params, inc)?;
    let critical = match dispersion::classify_against(c, c_star) {
        SpeedClass::Below => return Err(ProfileError::SpeedBelowCritical { c, c_star }),
        SpeedClass::Critical => true,
        SpeedClass::Above => false,
    };
    let bounds = if critical {
        BoundSet::critical(params, inc)?
    } else {
        BoundSet::build(c, params, inc)?
    };
    // at c = c* the lower solution is zero, so x2_kink = -inf and the check is vacuous
    if !critical && opts.x_half <= -bounds.x2_kink {
        return Err(ProfileError::WindowTooNarrow {
            x_half: opts.x_half,
            min: -bounds.x2_kink,
        });
    }
    let c = bounds.c;
    let eq = params.equilibria(inc)?;
    let i_cap = opts.i_cap_factor * eq.i_star().unwrap_or(0.0).max(1.0);
    let fp0 = inc.f_prime_at_zero();
    let alpha = params.beta() * fp0 * (bounds.lambda1 * opts.x_half).exp().min(i_cap);

    let mut problem = TruncatedProblem::new(c, params, inc, bounds, opts.x_half, opts.m, alpha);
    debug_assert_eq!(problem.len(), n);
    let s_lo: Vec<f64> = problem.xi.iter().map(|&x| bounds.s_lower(x)).collect();
    let i_lo: Vec<f64> = problem.xi.iter().map(|&x| bounds.i_lower(x)).collect();
    let i_hi: Vec<f64> = problem
        .xi
        .iter()
        .map(|&x| bounds.i_upper(x).min(i_cap))
        .collect();
    let s0 = bounds.s0;

    // The critical lower solution is identically zero, which is itself a fixed
    // point of the infected equation; seed from above instead.
    let (mut phi, mut psi) = if critical {
        problem = problem.with_left_data(s_lo[0], i_hi[0]);
        (s_lo.clone(), i_hi.clone())
    } else {
        (s_lo.clone(), i_lo.clone())
    };

    let max_iters = opts.effective_max_iters(critical);
    let theta = opts.damping;
    let mut change = f64::INFINITY;
    let mut clamp_count = 0;
    let mut clamp_max = 0.0f64;
    let mut iters = 0;
    while iters < max_iters {
        let (mut s_new, mut i_new) = problem.apply(&phi, &psi)?;
        clamp_count = 0;
        clamp_max = 0.0;
        let mut clamp = |v: &mut f64, lo: f64, hi: f64| {
            let cl = v.clamp(lo, hi);
            if cl != *v {
                clamp_count += 1;
                clamp_max = clamp_max.max((cl - *v).abs());
                *v = cl;
            }
        };
        for j in 0..n {
            clamp(&mut s_new[j], s_lo[j], s0);
            clamp(&mut i_new[j], i_lo[j], i_hi[j]);
        }
        change = 0.0;
        for j in 0..n {
            let s = (1.0 - theta) * phi[j] + theta * s_new[j];
            let i = (1.0 - theta) * psi[j] + theta * i_new[j];
            change = change.max((s - phi[j]).abs()).max((i - psi[j]).abs());
            phi[j] = s;
            psi[j] = i;
        }
        iters += 1;
        if change < opts.tol {
            break;
        }
    }

    let (residual_s, residual_i) = residual_arrays(c, opts.m, &phi, &psi, &bounds, params, inc);
    let profile = WaveProfile {
        c,
        x_half: opts.x_half,
        m: opts.m,
        xi: problem.xi,
        s: phi,
        i: psi,
        alpha_shift: alpha,
        i_cap,
        iters,
        last_change: change,
        residual_s,
        residual_i,
        clamp_count,
        clamp_max,
        critical,
        bounds,
    };
    if change < opts.tol {
        Ok(profile)
    } else {
        Err(ProfileError::NotConverged {
            iters,
            change,
            profile: Box::new(profile),
        })
    }
}
