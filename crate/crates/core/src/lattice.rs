//! Time-domain simulation of the lattice system on sites `-N..=N`.
//!
//! ```text
//! S_n' = d1 (S_{n+1} + S_{n-1} - 2 S_n) + Lambda - beta S_n f(I_n) - mu1 S_n
//! I_n' = d2 (I_{n+1} + I_{n-1} - 2 I_n) + beta S_n f(I_n) - mu2 I_n
//! R_n' = d3 (R_{n+1} + R_{n-1} - 2 R_n) + gamma I_n - mu1 R_n
//! ```
//!
//! The ends reflect: the ghost site copies the boundary site.

use thiserror::Error;

use crate::incidence::Incidence;
use crate::model::ModelParams;

/// States larger than this abort the run.
pub const BLOWUP: f64 = 1e6;
/// A run halts when the front comes this close to `n = N`.
pub const BOUNDARY_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid lattice geometry: {0}")]
    Geometry(String),
    #[error("dt = {dt} exceeds dt_max = {dt_max}")]
    StepTooLarge { dt: f64, dt_max: f64 },
    #[error("state magnitude {value:e} at t = {t} exceeds {BLOWUP:e}")]
    Unstable { t: f64, value: f64 },
    #[error("t_end = {0} must be positive")]
    BadHorizon(f64),
    #[error("frame stride must be positive")]
    ZeroStride,
    #[error("need at least 10 samples after the transient, got {0}")]
    InsufficientSamples(usize),
    #[error("discard fraction {0} outside [0, 0.9]")]
    BadDiscard(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    /// Half-width `N`; sites are `-N..=N`.
    pub n_half: usize,
    pub t: f64,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Option<Vec<f64>>,
    /// Site values clipped from below zero.
    pub clipped: usize,
    /// Most negative value seen before clipping.
    pub min_before_clip: f64,
}

impl LatticeState {
    pub fn sites(&self) -> usize {
        2 * self.n_half + 1
    }

    /// Site label of array index `k`.
    pub fn site(&self, k: usize) -> i64 {
        k as i64 - self.n_half as i64
    }

    /// Every site at `(s, i)`.
    pub fn homogeneous(n_half: usize, s: f64, i: f64, track_r: bool) -> Self {
        let len = 2 * n_half + 1;
        LatticeState {
            n_half,
            t: 0.0,
            s: vec![s; len],
            i: vec![i; len],
            r: track_r.then(|| vec![0.0; len]),
            clipped: 0,
            min_before_clip: 0.0,
        }
    }
}

/// Disease-free state with a square bump of infection on `|n| <= bump_width`.
pub fn init_state(
    params: &ModelParams,
    inc: &Incidence,
    n_half: usize,
    bump_width: usize,
    bump_height: f64,
    track_r: bool,
) -> Result<LatticeState, LatticeError> {
    if n_half < 50 {
        return Err(LatticeError::Geometry(format!(
            "N = {n_half} must be at least 50"
        )));
    }
    if 4 * bump_width >= n_half {
        return Err(LatticeError::Geometry(format!(
            "bump width {bump_width} must be below N/4"
        )));
    }
    let cap = params.endemic_equilibrium(inc).map(|e| e.1).unwrap_or(1.0);
    if !(bump_height >= 0.0 && bump_height <= cap) {
        return Err(LatticeError::Geometry(format!(
            "bump height {bump_height} outside [0, {cap}]"
        )));
    }
    let mut state = LatticeState::homogeneous(n_half, params.disease_free(), 0.0, track_r);
    for k in n_half - bump_width..=n_half + bump_width {
        state.i[k] = bump_height;
    }
    Ok(state)
}

/// Explicit step limit `0.1 / (4 max(d1, d2) + mu2 + beta S0 f'(0))`.
pub fn dt_max(params: &ModelParams, inc: &Incidence) -> f64 {
    let diffusion = 4.0 * params.d1().max(params.d2());
    0.1 / (diffusion + params.mu2() + params.beta() * params.disease_free() * inc.f_prime_at_zero())
}

fn laplacian(a: &[f64], k: usize) -> f64 {
    let last = a.len() - 1;
    let left = if k == 0 { a[0] } else { a[k - 1] };
    let right = if k == last { a[last] } else { a[k + 1] };
    left + right - 2.0 * a[k]
}

struct Rhs<'a> {
    params: &'a ModelParams,
    inc: &'a Incidence,
}

impl Rhs<'_> {
    fn eval(&self, s: &[f64], i: &[f64], r: Option<&[f64]>, out: &mut [Vec<f64>; 3]) {
        let p = self.params;
        let [ds, di, dr] = out;
        for k in 0..s.len() {
            let infection = p.beta() * s[k] * self.inc.f_unchecked(i[k].max(0.0));
            ds[k] = p.d1() * laplacian(s, k) + p.lambda() - infection - p.mu1() * s[k];
            di[k] = p.d2() * laplacian(i, k) + infection - p.mu2() * i[k];
        }
        if let Some(r) = r {
            for k in 0..s.len() {
                dr[k] = p.d3() * laplacian(r, k) + p.gamma() * i[k] - p.mu1() * r[k];
            }
        }
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn step_rk4(
    state: &mut LatticeState,
    params: &ModelParams,
    inc: &Incidence,
    dt: f64,
) -> Result<(), LatticeError> {
    let limit = dt_max(params, inc);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(LatticeError::StepTooLarge { dt, dt_max: limit });
    }
    let n = state.sites();
    let rhs = Rhs { params, inc };
    let tracked = state.r.is_some();
    let r0 = state.r.clone().unwrap_or_default();
    let mut k: [[Vec<f64>; 3]; 4] = std::array::from_fn(|_| k_template(n, tracked));
    let mut ts = vec![0.0; n];
    let mut ti = vec![0.0; n];
    let mut tr = vec![0.0; if tracked { n } else { 0 }];
    let weights = [0.0, 0.5, 0.5, 1.0];
    for q in 0..4 {
        let (prev, rest) = k.split_at_mut(q);
        let cur = &mut rest[0];
        if q == 0 {
            rhs.eval(&state.s, &state.i, state.r.as_deref(), cur);
        } else {
            let w = weights[q] * dt;
            let last = &prev[q - 1];
            for j in 0..n {
                ts[j] = state.s[j] + w * last[0][j];
                ti[j] = state.i[j] + w * last[1][j];
            }
            for j in 0..tr.len() {
                tr[j] = r0[j] + w * last[2][j];
            }
            let r_arg = if tracked { Some(&tr[..]) } else { None };
            rhs.eval(&ts, &ti, r_arg, cur);
        }
    }
    let combine = |y: &mut [f64], c: usize| {
        for j in 0..y.len() {
            y[j] += dt / 6.0 * (k[0][c][j] + 2.0 * k[1][c][j] + 2.0 * k[2][c][j] + k[3][c][j]);
        }
    };
    combine(&mut state.s, 0);
    combine(&mut state.i, 1);
    if let Some(r) = state.r.as_mut() {
        combine(r, 2);
    }
    state.t += dt;

    let t = state.t;
    let mut clipped = 0;
    let mut min_seen = state.min_before_clip;
    let mut check = |y: &mut [f64]| -> Result<(), LatticeError> {
        for v in y.iter_mut() {
            if !v.is_finite() || v.abs() > BLOWUP {
                return Err(LatticeError::Unstable { t, value: *v });
            }
            if *v < 0.0 {
                min_seen = min_seen.min(*v);
                *v = 0.0;
                clipped += 1;
            }
        }
        Ok(())
    };
    check(&mut state.s)?;
    check(&mut state.i)?;
    if let Some(r) = state.r.as_mut() {
        check(r)?;
    }
    state.clipped += clipped;
    state.min_before_clip = min_seen;
    Ok(())
}

fn k_template(n: usize, tracked: bool) -> [Vec<f64>; 3] {
    [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; if tracked { n } else { 0 }],
    ]
}

/// Rightmost point where the linear interpolant of `n -> I_n` falls through
/// `kappa`; `-inf` when `I` never reaches `kappa`.
pub fn front_position(state: &LatticeState, kappa: f64) -> f64 {
    let i = &state.i;
    let Some(k) = i.iter().rposition(|&v| v >= kappa) else {
        return f64::NEG_INFINITY;
    };
    let n = state.site(k) as f64;
    if k + 1 == i.len() {
        return n;
    }
    n + (i[k] - kappa) / (i[k] - i[k + 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrack {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub dt: f64,
    pub frame_stride: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub frames: Vec<Frame>,
    pub track: FrontTrack,
    pub steps: usize,
    /// The front came within [`BOUNDARY_MARGIN`] sites of `n = N`.
    pub boundary_contact: bool,
}

/// Integrates to `t_end`, recording a frame and the front every `frame_stride` steps.
pub fn run(
    state: &mut LatticeState,
    params: &ModelParams,
    inc: &Incidence,
    opts: &RunOptions,
) -> Result<RunOutput, LatticeError> {
    if !(opts.t_end > 0.0) {
        return Err(LatticeError::BadHorizon(opts.t_end));
    }
    if opts.frame_stride == 0 {
        return Err(LatticeError::ZeroStride);
    }
    let steps = (opts.t_end / opts.dt).round() as usize;
    let boundary = state.n_half as f64 - BOUNDARY_MARGIN;
    let mut out = RunOutput {
        frames: Vec::with_capacity(steps / opts.frame_stride + 1),
        track: FrontTrack {
            times: Vec::new(),
            positions: Vec::new(),
            kappa: opts.kappa,
        },
        steps: 0,
        boundary_contact: false,
    };
    let record = |state: &LatticeState, out: &mut RunOutput| {
        let x = front_position(state, opts.kappa);
        out.frames.push(Frame {
            t: state.t,
            s: state.s.clone(),
            i: state.i.clone(),
            r: state.r.clone(),
        });
        out.track.times.push(state.t);
        out.track.positions.push(x);
        x >= boundary
    };
    if record(state, &mut out) {
        out.boundary_contact = true;
        return Ok(out);
    }
    for step in 1..=steps {
        step_rk4(state, params, inc, opts.dt)?;
        out.steps = step;
        if step % opts.frame_stride == 0 && record(state, &mut out) {
            out.boundary_contact = true;
            break;
        }
    }
    Ok(out)
}

/// Least-squares slope of front position against time and its `r^2`, after
/// dropping the first `discard_fraction` of samples and any sentinel positions.
pub fn estimate_speed(
    track: &FrontTrack,
    discard_fraction: f64,
) -> Result<(f64, f64), LatticeError> {
    if !(0.0..=0.9).contains(&discard_fraction) {
        return Err(LatticeError::BadDiscard(discard_fraction));
    }
    let skip = (discard_fraction * track.times.len() as f64).floor() as usize;
    let (t, x): (Vec<f64>, Vec<f64>) = track
        .times
        .iter()
        .zip(&track.positions)
        .skip(skip)
        .filter(|(_, x)| x.is_finite())
        .map(|(&t, &x)| (t, x))
        .unzip();
    if t.len() < 10 {
        return Err(LatticeError::InsufficientSamples(t.len()));
    }
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - tm) * (v - tm)).sum();
    let stx: f64 = t.iter().zip(&x).map(|(a, b)| (a - tm) * (b - xm)).sum();
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let slope = stx / stt;
    let r2 = if sxx == 0.0 {
        1.0
    } else {
        stx * stx / (stt * sxx)
    };
    Ok((slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (ModelParams, Incidence) {
        (ModelParams::reference(), Incidence::bilinear())
    }

    #[test]
    fn initial_bump() {
        let (p, inc) = reference();
        let s = init_state(&p, &inc, 200, 3, 0.1, false).unwrap();
        assert_eq!(s.i.iter().filter(|&&v| v > 0.0).count(), 7);
        assert!(s.s.iter().all(|&v| v == 2.0));
        assert!(init_state(&p, &inc, 200, 50, 0.1, false).is_err());
        assert!(init_state(&p, &inc, 40, 3, 0.1, false).is_err());
        assert!(init_state(&p, &inc, 200, 3, 0.6, false).is_err());
    }

    #[test]
    fn disease_free_state_is_stationary() {
        let (p, inc) = reference();
        let dt = dt_max(&p, &inc);
        assert!((dt - 0.01).abs() < 1e-15);
        let mut s = init_state(&p, &inc, 60, 3, 0.0, true).unwrap();
        for _ in 0..100 {
            step_rk4(&mut s, &p, &inc, dt).unwrap();
        }
        assert!(s.s.iter().all(|&v| (v - 2.0).abs() < 1e-13));
        assert!(s.i.iter().all(|&v| v == 0.0));
        assert!(s.r.as_ref().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_large_step() {
        let (p, inc) = reference();
        let mut s = init_state(&p, &inc, 60, 3, 0.1, false).unwrap();
        let err = step_rk4(&mut s, &p, &inc, 2.0 * dt_max(&p, &inc)).unwrap_err();
        assert!(matches!(err, LatticeError::StepTooLarge { .. }));
    }

    #[test]
    fn front_position_cases() {
        let mut s = LatticeState::homogeneous(50, 2.0, 0.0, false);
        assert_eq!(front_position(&s, 0.5), f64::NEG_INFINITY);
        for k in 0..s.sites() {
            s.i[k] = if s.site(k) <= 10 { 1.0 } else { 0.0 };
        }
        assert_eq!(front_position(&s, 0.5), 10.5);
        assert_eq!(front_position(&s, 1.5), f64::NEG_INFINITY);
    }

    #[test]
    fn speed_fit() {
        let times: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let line = FrontTrack {
            positions: times.iter().map(|t| 3.0 * t + 1.0).collect(),
            times: times.clone(),
            kappa: 0.5,
        };
        let (c, r2) = estimate_speed(&line, 0.0).unwrap();
        assert!((c - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let back = FrontTrack {
            positions: times.iter().map(|t| -2.0 * t).collect(),
            times: times.clone(),
            kappa: 0.5,
        };
        assert!(estimate_speed(&back, 0.2).unwrap().0 < 0.0);
        let short = FrontTrack {
            positions: vec![0.0; 5],
            times: times[..5].to_vec(),
            kappa: 0.5,
        };
        assert!(matches!(
            estimate_speed(&short, 0.0),
            Err(LatticeError::InsufficientSamples(5))
        ));
    }

    #[test]
    fn frame_count() {
        let (p, inc) = reference();
        let mut s = init_state(&p, &inc, 60, 3, 0.1, false).unwrap();
        let opts = RunOptions {
            t_end: 1.0,
            dt: 0.01,
            frame_stride: 7,
            kappa: 0.05,
        };
        let out = run(&mut s, &p, &inc, &opts).unwrap();
        assert_eq!(out.steps, 100);
        assert_eq!(out.frames.len(), 100 / 7 + 1);
    }
}
