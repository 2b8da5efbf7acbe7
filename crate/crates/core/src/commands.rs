//! Command drivers: each reads a [`RunConfig`], writes its artifacts and a
//! `manifest.txt` into the output directory, and returns a report.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bounds::{BoundSet, BoundsError, BoundsReport};
use crate::config::{ConfigError, RunConfig};
use crate::dispersion::{self, DispersionError, SpeedClass};
use crate::incidence::IncidenceError;
use crate::lattice::{self, LatticeError, RunOptions};
use crate::lyapunov::{self, LyapunovError, LyapunovSeries};
use crate::model::{Equilibria, ModelError};
use crate::output::{fmt_f64, write_columns, write_manifest, Report, RowWriter};
use crate::profile::{self, ProfileError, WaveProfile};

/// Residual bound for a profile to count as a wave.
pub const RESIDUAL_TOL: f64 = 1e-4;
/// Allowed excursion of a profile outside the bound box.
pub const SANDWICH_TOL: f64 = 1e-8;
/// Allowed distance of the left end from the disease-free state.
pub const LEFT_GAP_TOL: f64 = 1e-3;
/// Allowed distance of the right end from the endemic state, relative to `max(S*, I*)`.
pub const RIGHT_GAP_REL_TOL: f64 = 0.05;
pub const BOUNDS_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Profile,
    Lyapunov,
    VerifyBounds,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Profile => "profile",
            Command::Lyapunov => "lyapunov",
            Command::VerifyBounds => "verify-bounds",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn dispersion_code(e: &DispersionError) -> &'static str {
    match e {
        DispersionError::SubcriticalR0 { .. } => "R0_SUBCRITICAL",
        DispersionError::NotSupercritical { .. } => "SPEED_BELOW_CRITICAL",
        _ => "DISPERSION_FAILURE",
    }
}

impl CliError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Io { .. }) => "CONFIG_UNREADABLE",
            CliError::Config(ConfigError::Model(_) | ConfigError::Incidence(_)) => {
                "INVALID_PARAMETER"
            }
            CliError::Config(_) => "CONFIG_INVALID",
            CliError::Model(ModelError::InvalidParameter { .. }) | CliError::Incidence(_) => {
                "INVALID_PARAMETER"
            }
            CliError::Model(ModelError::NoEndemicEquilibrium { .. }) => "NO_ENDEMIC_EQUILIBRIUM",
            CliError::Model(_) => "EQUILIBRIUM_FAILURE",
            CliError::Dispersion(e) => dispersion_code(e),
            CliError::Bounds(BoundsError::Dispersion(e)) => dispersion_code(e),
            CliError::Bounds(BoundsError::VerificationExhausted { .. }) => "BOUNDS_EXHAUSTED",
            CliError::Bounds(BoundsError::BadStep(_)) => "BOUNDS_GRID",
            CliError::Profile(e) => match e {
                ProfileError::SpeedBelowCritical { .. } => "SPEED_BELOW_CRITICAL",
                ProfileError::Dispersion(d) => dispersion_code(d),
                ProfileError::Bounds(BoundsError::Dispersion(d)) => dispersion_code(d),
                ProfileError::Bounds(_) => "BOUNDS_EXHAUSTED",
                ProfileError::Model(_) => "EQUILIBRIUM_FAILURE",
                ProfileError::InvalidOption { .. } => "CONFIG_INVALID",
                ProfileError::WindowTooNarrow { .. } => "PROFILE_WINDOW_TOO_NARROW",
                ProfileError::GridMismatch { .. } | ProfileError::AlphaTooSmall { .. } => {
                    "PROFILE_OPERATOR"
                }
                ProfileError::NotConverged { .. } => "PROFILE_NOT_CONVERGED",
            },
            CliError::Lyapunov(LyapunovError::NoEndemic) => "NO_ENDEMIC_EQUILIBRIUM",
            CliError::Lyapunov(_) => "LYAPUNOV_DOMAIN",
            CliError::Lattice(e) => match e {
                LatticeError::Geometry(_) => "LATTICE_GEOMETRY",
                LatticeError::StepTooLarge { .. } => "STEP_TOO_LARGE",
                LatticeError::Unstable { .. } => "LATTICE_UNSTABLE",
                LatticeError::InsufficientSamples(_) => "INSUFFICIENT_SAMPLES",
                _ => "CONFIG_INVALID",
            },
            CliError::Io { .. } => "IO_ERROR",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when a verification verdict failed.
    pub passed: bool,
    pub report: Report,
}

/// Runs `cmd`, writing artifacts under `out_dir`.
pub fn execute(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut report = Report::default();
    report.push("command", cmd.name());
    let result = match cmd {
        Command::Analyze => analyze(cfg, &mut report),
        Command::Simulate => simulate(cfg, out_dir, &mut report),
        Command::Profile => run_profile(cfg, out_dir, &mut report).map(|_| true),
        Command::Lyapunov => run_lyapunov(cfg, out_dir, &mut report),
        Command::VerifyBounds => verify_bounds(cfg, out_dir, &mut report),
        Command::Verify => verify(cfg, out_dir, &mut report),
    };
    let manifest = out_dir.join("manifest.txt");
    match result {
        Ok(passed) => {
            report.push("verdict", if passed { "pass" } else { "fail" });
            write_manifest(&manifest, &cfg.to_text(), &report).map_err(io_err(&manifest))?;
            Ok(Outcome { passed, report })
        }
        Err(e) => {
            report.push("error", e.code());
            write_manifest(&manifest, &cfg.to_text(), &report).map_err(io_err(&manifest))?;
            Err(e)
        }
    }
}

fn equilibria(cfg: &RunConfig, report: &mut Report) -> Result<Equilibria, CliError> {
    let eq = cfg.model.equilibria(&cfg.incidence)?;
    report.real("S0", eq.s0);
    report.real("R0", eq.r0);
    if let Some((s, i)) = eq.endemic {
        report.real("S_star", s);
        report.real("I_star", i);
    }
    Ok(eq)
}

/// `(c*, lambda*, c)` with `c` the configured profile speed.
fn speeds(cfg: &RunConfig, report: &mut Report) -> Result<(f64, f64, f64), CliError> {
    let (c_star, lambda_star) = dispersion::critical_speed(&cfg.model, &cfg.incidence)?;
    report.real("c_star", c_star);
    report.real("lambda_star", lambda_star);
    let c = cfg.profile.c.unwrap_or(1.2 * c_star);
    report.real("c", c);
    let class = dispersion::classify_against(c, c_star);
    report.push("speed_class", class);
    if class == SpeedClass::Above {
        let (l1, l2) = dispersion::decay_roots(c, &cfg.model, &cfg.incidence)?;
        report.real("lambda1", l1);
        report.real("lambda2", l2);
    }
    Ok((c_star, lambda_star, c))
}

fn assumptions(cfg: &RunConfig, report: &mut Report) -> Result<bool, CliError> {
    let grid: Vec<f64> = (0..=400)
        .map(|k| 1e-6 * 1e8f64.powf(k as f64 / 400.0))
        .collect();
    let a = cfg.incidence.check_assumptions(&grid)?;
    report.push("assumption_nonnegative", a.nonnegative);
    report.push("assumption_increasing", a.increasing);
    report.push("assumption_ratio_nonincreasing", a.ratio_nonincreasing);
    report.real("assumption_worst_ratio_increase", a.worst_ratio_increase);
    Ok(a.passed())
}

fn analyze(cfg: &RunConfig, report: &mut Report) -> Result<bool, CliError> {
    report.push("incidence", cfg.incidence.kind());
    report.real("f_prime_0", cfg.incidence.f_prime_at_zero());
    let eq = equilibria(cfg, report)?;
    let ok = assumptions(cfg, report)?;
    if eq.r0 > 1.0 {
        let (_, lambda_star, c) = speeds(cfg, report)?;
        let sens = dispersion::speed_sensitivity(lambda_star, &cfg.model, &cfg.incidence)?;
        report.real("dc_star_dbeta", sens.dc_dbeta);
        report.real("dc_star_dd2", sens.dc_dd2);
        report.real("dc_star_dR0", sens.dc_dr0);
        report.real("omega0", dispersion::omega_root(c, &cfg.model)?);
    }
    Ok(ok)
}

fn simulate(cfg: &RunConfig, out_dir: &Path, report: &mut Report) -> Result<bool, CliError> {
    let (p, inc, s) = (&cfg.model, &cfg.incidence, &cfg.sim);
    let eq = equilibria(cfg, report)?;
    let mut state = lattice::init_state(p, inc, s.n_half, s.bump_width, s.bump_height, s.track_r)?;
    let dt = s.dt.unwrap_or_else(|| lattice::dt_max(p, inc));
    let kappa = s
        .kappa
        .unwrap_or_else(|| eq.i_star().map_or(0.5 * s.bump_height, |i| 0.5 * i));
    report.real("dt", dt);
    report.real("kappa", kappa);
    let opts = RunOptions {
        t_end: s.t_end,
        dt,
        frame_stride: s.frame_stride,
        kappa,
    };
    let out = lattice::run(&mut state, p, inc, &opts)?;

    let frames = out_dir.join("frames.csv");
    let mut header = vec!["t", "n", "S", "I"];
    if s.track_r {
        header.push("R");
    }
    let mut w = RowWriter::create(&frames, &header).map_err(io_err(&frames))?;
    for f in &out.frames {
        let t = fmt_f64(f.t);
        for k in 0..f.s.len() {
            let mut row = vec![
                t.clone(),
                state.site(k).to_string(),
                fmt_f64(f.s[k]),
                fmt_f64(f.i[k]),
            ];
            if let Some(r) = &f.r {
                row.push(fmt_f64(r[k]));
            }
            w.row(&row).map_err(io_err(&frames))?;
        }
    }
    w.finish().map_err(io_err(&frames))?;
    let front = out_dir.join("front.csv");
    write_columns(
        &front,
        &["t", "front_pos"],
        &[&out.track.times, &out.track.positions],
    )
    .map_err(io_err(&front))?;

    report.push("steps", out.steps);
    report.push("frames", out.frames.len());
    report.push("boundary_contact", out.boundary_contact);
    report.push("clipped", state.clipped);
    report.real("min_before_clip", state.min_before_clip);
    report.real("max_I_final", state.i.iter().fold(0.0f64, |a, &b| a.max(b)));
    match lattice::estimate_speed(&out.track, s.discard_fraction) {
        Ok((c_est, r2)) => {
            report.real("c_est", c_est);
            report.real("r2", r2);
            if eq.r0 > 1.0 {
                let (c_star, _) = dispersion::critical_speed(p, inc)?;
                report.real("c_star", c_star);
                report.real("c_est_rel_diff", (c_est - c_star) / c_star);
            }
        }
        Err(LatticeError::InsufficientSamples(n)) => {
            report.push("c_est", format!("n/a ({n} front samples)"))
        }
        Err(e) => return Err(e.into()),
    }
    Ok(true)
}

fn solve(
    cfg: &RunConfig,
    out_dir: &Path,
    report: &mut Report,
) -> Result<(Equilibria, WaveProfile), CliError> {
    let eq = equilibria(cfg, report)?;
    let (_, _, c) = speeds(cfg, report)?;
    let result = profile::solve_profile(c, &cfg.model, &cfg.incidence, &cfg.profile.solver);
    let p = match result {
        Ok(p) => p,
        Err(ProfileError::NotConverged {
            iters,
            change,
            profile,
        }) => {
            write_profile(out_dir, &profile)?;
            report.push("iters", iters);
            report.real("last_change", change);
            return Err(ProfileError::NotConverged {
                iters,
                change,
                profile,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    write_profile(out_dir, &p)?;
    describe_profile(&p, &eq, report);
    Ok((eq, p))
}

fn write_profile(out_dir: &Path, p: &WaveProfile) -> Result<(), CliError> {
    let path = out_dir.join("profile.csv");
    write_columns(
        &path,
        &["xi", "S", "I", "res_S", "res_I"],
        &[&p.xi, &p.s, &p.i, &p.residual_s, &p.residual_i],
    )
    .map_err(io_err(&path))
}

fn describe_profile(p: &WaveProfile, eq: &Equilibria, report: &mut Report) {
    let (rs, ri) = p.sup_residual();
    let (left, right) = profile::boundary_gaps(p, eq);
    report.push("critical", p.critical);
    report.real("alpha_shift", p.alpha_shift);
    report.real("i_cap", p.i_cap);
    report.push("iters", p.iters);
    report.real("last_change", p.last_change);
    report.real("residual_S", rs);
    report.real("residual_I", ri);
    report.real("left_gap", left);
    if let Some(r) = right {
        report.real("right_gap", r);
    }
    report.real("sandwich_violation", p.sandwich_violation());
    report.push("clamp_count", p.clamp_count);
    report.real("clamp_max", p.clamp_max);
    report.push("clamp_flagged", p.clamp_flagged());
}

fn run_profile(cfg: &RunConfig, out_dir: &Path, report: &mut Report) -> Result<(), CliError> {
    solve(cfg, out_dir, report).map(|_| ())
}

fn lyapunov_artifacts(
    cfg: &RunConfig,
    out_dir: &Path,
    eq: &Equilibria,
    p: &WaveProfile,
    report: &mut Report,
) -> Result<LyapunovSeries, CliError> {
    let series = lyapunov::lyapunov_series(p, eq, &cfg.model, cfg.profile.lyapunov_stride)?;
    let path = out_dir.join("lyapunov.csv");
    write_columns(
        &path,
        &["xi", "L", "W1", "W2", "W3"],
        &[&series.xi, &series.l, &series.w1, &series.w2, &series.w3],
    )
    .map_err(io_err(&path))?;
    report.real("lyapunov_valid_from", series.valid_from);
    report.real("lyapunov_max_increase", series.max_increase);
    report.real("lyapunov_tol", series.tol_mono);
    report.real(
        "lyapunov_right_edge",
        *series.l.last().expect("series is non-empty"),
    );
    report.push("lyapunov_monotone", series.monotone());
    Ok(series)
}

fn run_lyapunov(cfg: &RunConfig, out_dir: &Path, report: &mut Report) -> Result<bool, CliError> {
    let (eq, p) = solve(cfg, out_dir, report)?;
    Ok(lyapunov_artifacts(cfg, out_dir, &eq, &p, report)?.monotone())
}

fn bounds_for(cfg: &RunConfig, c_star: f64, c: f64) -> Result<BoundSet, CliError> {
    Ok(match dispersion::classify_against(c, c_star) {
        SpeedClass::Critical => BoundSet::critical(&cfg.model, &cfg.incidence)?,
        _ => BoundSet::build(c, &cfg.model, &cfg.incidence)?,
    })
}

fn bounds_artifacts(
    cfg: &RunConfig,
    out_dir: &Path,
    b: &BoundSet,
    report: &mut Report,
) -> Result<BoundsReport, CliError> {
    let lo = if b.x2_kink.is_finite() {
        (b.x2_kink - 2.0).min(-30.0)
    } else {
        -30.0
    };
    let r = b.verify(&cfg.model, &cfg.incidence, BOUNDS_STEP, (lo, 5.0))?;
    report.real("eps1", b.eps1);
    report.real("eps2", b.eps2);
    report.real("M1", b.m1);
    report.real("M2", b.m2);
    report.real("X1_kink", b.x1_kink);
    report.real("X2_kink", b.x2_kink);
    report.real("bounds_range_lo", lo);
    for q in 0..4 {
        report.real(format!("ineq{}_max_violation", q + 1), r.max_violation[q]);
    }
    report.push("bounds_passed", r.passed());
    let path = out_dir.join("bounds.csv");
    let mut w = RowWriter::create(&path, &["xi", "ineq1", "ineq2", "ineq3", "ineq4"])
        .map_err(io_err(&path))?;
    for (xi, s) in &r.rows {
        w.row([
            fmt_f64(*xi),
            fmt_f64(s[0]),
            fmt_f64(s[1]),
            fmt_f64(s[2]),
            fmt_f64(s[3]),
        ])
        .map_err(io_err(&path))?;
    }
    w.finish().map_err(io_err(&path))?;
    Ok(r)
}

fn verify_bounds(cfg: &RunConfig, out_dir: &Path, report: &mut Report) -> Result<bool, CliError> {
    equilibria(cfg, report)?;
    let (c_star, _, c) = speeds(cfg, report)?;
    let b = bounds_for(cfg, c_star, c)?;
    Ok(bounds_artifacts(cfg, out_dir, &b, report)?.passed())
}

fn verify(cfg: &RunConfig, out_dir: &Path, report: &mut Report) -> Result<bool, CliError> {
    let assumptions_ok = assumptions(cfg, report)?;
    let (eq, p) = solve(cfg, out_dir, report)?;
    let bounds_ok = bounds_artifacts(cfg, out_dir, &p.bounds, report)?.passed();
    let (rs, ri) = p.sup_residual();
    let residual_ok = rs < RESIDUAL_TOL && ri < RESIDUAL_TOL;
    let sandwich_ok = p.sandwich_violation() <= SANDWICH_TOL;
    let (left, right) = profile::boundary_gaps(&p, &eq);
    let scale = eq.endemic.map_or(1.0, |(s, i)| s.max(i));
    let gaps_ok = left < LEFT_GAP_TOL && right.is_some_and(|r| r < RIGHT_GAP_REL_TOL * scale);
    // an unconverged profile may not clear the floor; that is a failed check, not an error
    let mono_ok = match lyapunov_artifacts(cfg, out_dir, &eq, &p, report) {
        Ok(series) => series.monotone(),
        Err(CliError::Lyapunov(
            e @ (LyapunovError::BelowFloor { .. } | LyapunovError::NoValidPoints),
        )) => {
            report.push("lyapunov_error", e);
            false
        }
        Err(e) => return Err(e),
    };
    let checks = [
        ("check_assumptions", assumptions_ok),
        ("check_bounds", bounds_ok),
        ("check_residual", residual_ok),
        ("check_sandwich", sandwich_ok),
        ("check_gaps", gaps_ok),
        ("check_lyapunov", mono_ok),
    ];
    for (name, ok) in checks {
        report.push(name, if ok { "pass" } else { "fail" });
    }
    Ok(checks.iter().all(|c| c.1))
}
