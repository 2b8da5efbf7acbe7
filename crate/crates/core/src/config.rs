//! Run configuration in a line-oriented `section.key = value` format.
//!
//! Blank lines and text after `#` are ignored. Keys may appear once; unknown
//! keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::incidence::{Incidence, IncidenceError, IncidenceKind};
use crate::model::{ModelError, ModelParams};
use crate::profile::SolverOptions;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `section.key = value`")]
    Syntax { line: usize },
    #[error("duplicate key {key} on lines {first} and {second}")]
    Duplicate {
        key: String,
        first: usize,
        second: usize,
    },
    #[error("line {line}: unknown key {key}")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: {key} = {value:?} is not a valid {expected}")]
    BadValue {
        key: String,
        line: usize,
        value: String,
        expected: &'static str,
    },
    #[error("missing required key {0}")]
    Missing(String),
    #[error("invalid {key}: must satisfy {constraint}")]
    Invalid { key: String, constraint: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
}

const MODEL_KEYS: [&str; 7] = ["lambda", "beta", "mu1", "gamma", "d1", "d2", "d3"];

const KNOWN_KEYS: &[&str] = &[
    "model.lambda",
    "model.beta",
    "model.mu1",
    "model.gamma",
    "model.d1",
    "model.d2",
    "model.d3",
    "incidence.kind",
    "incidence.alpha",
    "incidence.p",
    "incidence.k",
    "incidence.eps",
    "incidence.alpha_exp",
    "incidence.gamma_exp",
    "incidence.nu",
    "incidence.k_cap",
    "sim.N",
    "sim.t_end",
    "sim.dt",
    "sim.bump_width",
    "sim.bump_height",
    "sim.frame_stride",
    "sim.kappa",
    "sim.track_R",
    "sim.discard_fraction",
    "profile.c",
    "profile.X",
    "profile.m",
    "profile.tol",
    "profile.max_iters",
    "profile.damping",
    "profile.i_cap_factor",
    "profile.lyapunov_stride",
    "output.dir",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_half: usize,
    pub t_end: f64,
    /// `None` uses the explicit step limit.
    pub dt: Option<f64>,
    pub bump_width: usize,
    pub bump_height: f64,
    pub frame_stride: usize,
    /// `None` uses `I*/2`, or half the bump height without an endemic state.
    pub kappa: Option<f64>,
    pub track_r: bool,
    pub discard_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_half: 400,
            t_end: 100.0,
            dt: None,
            bump_width: 3,
            bump_height: 0.1,
            frame_stride: 100,
            kappa: None,
            track_r: false,
            discard_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    /// `None` uses `1.2 c*`.
    pub c: Option<f64>,
    pub solver: SolverOptions,
    pub lyapunov_stride: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            c: None,
            solver: SolverOptions::default(),
            lyapunov_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub incidence: Incidence,
    pub sim: SimConfig,
    pub profile: ProfileConfig,
    pub output_dir: PathBuf,
}

struct Entry {
    value: String,
    line: usize,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.0.get(key)
    }

    fn parse<T: std::str::FromStr>(
        &self,
        key: &str,
        expected: &'static str,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    line: e.line,
                    value: e.value.clone(),
                    expected,
                }),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.parse::<f64>(key, "real number")?;
        if let (Some(x), Some(e)) = (v, self.raw(key)) {
            if !x.is_finite() {
                return Err(ConfigError::BadValue {
                    key: key.to_string(),
                    line: e.line,
                    value: e.value.clone(),
                    expected: "finite real number",
                });
            }
        }
        Ok(v)
    }

    fn required_real(&self, key: &str) -> Result<f64, ConfigError> {
        self.real(key)?
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn int(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse::<usize>(key, "non-negative integer")
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parse::<bool>(key, "boolean (true or false)")
    }
}

fn invalid(key: &str, constraint: &str) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        constraint: constraint.to_string(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() || !key.contains('.') {
                return Err(ConfigError::Syntax { line });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    line,
                });
            }
            if let Some(prev) = map.get(key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_string(),
                    first: prev.line,
                    second: line,
                });
            }
            map.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        let e = Entries(map);

        let mut m = [0.0; 7];
        for (slot, name) in m.iter_mut().zip(MODEL_KEYS) {
            let key = format!("model.{name}");
            *slot = if name == "d3" {
                e.real(&key)?.unwrap_or(0.0)
            } else {
                e.required_real(&key)?
            };
        }
        let model = ModelParams::new(m[0], m[1], m[2], m[3], m[4], m[5], m[6])?;
        let incidence = Incidence::new(parse_kind(&e)?)?;

        let ds = SimConfig::default();
        let sim = SimConfig {
            n_half: e.int("sim.N")?.unwrap_or(ds.n_half),
            t_end: e.real("sim.t_end")?.unwrap_or(ds.t_end),
            dt: e.real("sim.dt")?,
            bump_width: e.int("sim.bump_width")?.unwrap_or(ds.bump_width),
            bump_height: e.real("sim.bump_height")?.unwrap_or(ds.bump_height),
            frame_stride: e.int("sim.frame_stride")?.unwrap_or(ds.frame_stride),
            kappa: e.real("sim.kappa")?,
            track_r: e.flag("sim.track_R")?.unwrap_or(ds.track_r),
            discard_fraction: e
                .real("sim.discard_fraction")?
                .unwrap_or(ds.discard_fraction),
        };
        if !(sim.t_end > 0.0) {
            return Err(invalid("sim.t_end", "t_end > 0"));
        }
        if sim.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(invalid("sim.dt", "dt > 0"));
        }
        if sim.frame_stride == 0 {
            return Err(invalid("sim.frame_stride", "frame_stride >= 1"));
        }
        if sim.kappa.is_some_and(|k| !(k > 0.0)) {
            return Err(invalid("sim.kappa", "kappa > 0"));
        }
        if !(0.0..=0.9).contains(&sim.discard_fraction) {
            return Err(invalid(
                "sim.discard_fraction",
                "0 <= discard_fraction <= 0.9",
            ));
        }

        let dp = ProfileConfig::default();
        let solver = SolverOptions {
            x_half: e.real("profile.X")?.unwrap_or(dp.solver.x_half),
            m: e.int("profile.m")?.unwrap_or(dp.solver.m),
            tol: e.real("profile.tol")?.unwrap_or(dp.solver.tol),
            max_iters: e.int("profile.max_iters")?,
            damping: e.real("profile.damping")?.unwrap_or(dp.solver.damping),
            i_cap_factor: e
                .real("profile.i_cap_factor")?
                .unwrap_or(dp.solver.i_cap_factor),
        };
        solver.grid_len().map_err(|err| match err {
            crate::profile::ProfileError::InvalidOption {
                name, constraint, ..
            } => invalid(name, constraint),
            other => invalid("profile", &other.to_string()),
        })?;
        if solver.max_iters == Some(0) {
            return Err(invalid("profile.max_iters", "max_iters >= 1"));
        }
        let profile = ProfileConfig {
            c: e.real("profile.c")?,
            solver,
            lyapunov_stride: e
                .int("profile.lyapunov_stride")?
                .unwrap_or(dp.lyapunov_stride),
        };
        if profile.c.is_some_and(|c| !(c > 0.0)) {
            return Err(invalid("profile.c", "c > 0"));
        }
        if profile.lyapunov_stride == 0 {
            return Err(invalid("profile.lyapunov_stride", "lyapunov_stride >= 1"));
        }
        let output_dir = PathBuf::from(
            e.raw("output.dir")
                .map(|v| v.value.as_str())
                .unwrap_or("out"),
        );
        Ok(RunConfig {
            model,
            incidence,
            sim,
            profile,
            output_dir,
        })
    }

    /// The configuration as parseable text. Optional keys left automatic are
    /// written as comments; `output.dir` is omitted so that artifacts do not
    /// depend on where they are written.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.model;
        let model = [
            p.lambda(),
            p.beta(),
            p.mu1(),
            p.gamma(),
            p.d1(),
            p.d2(),
            p.d3(),
        ];
        for (name, v) in MODEL_KEYS.iter().zip(model) {
            let _ = writeln!(out, "model.{name} = {v:?}");
        }
        let kind = self.incidence.kind();
        let _ = writeln!(out, "incidence.kind = {}", kind.tag());
        for (name, v) in kind_params(&kind) {
            let _ = writeln!(out, "incidence.{name} = {v:?}");
        }
        let s = &self.sim;
        let _ = writeln!(out, "sim.N = {}", s.n_half);
        let _ = writeln!(out, "sim.t_end = {:?}", s.t_end);
        write_optional(&mut out, "sim.dt", s.dt);
        let _ = writeln!(out, "sim.bump_width = {}", s.bump_width);
        let _ = writeln!(out, "sim.bump_height = {:?}", s.bump_height);
        let _ = writeln!(out, "sim.frame_stride = {}", s.frame_stride);
        write_optional(&mut out, "sim.kappa", s.kappa);
        let _ = writeln!(out, "sim.track_R = {}", s.track_r);
        let _ = writeln!(out, "sim.discard_fraction = {:?}", s.discard_fraction);
        let pr = &self.profile;
        write_optional(&mut out, "profile.c", pr.c);
        let _ = writeln!(out, "profile.X = {:?}", pr.solver.x_half);
        let _ = writeln!(out, "profile.m = {}", pr.solver.m);
        let _ = writeln!(out, "profile.tol = {:?}", pr.solver.tol);
        match pr.solver.max_iters {
            Some(n) => {
                let _ = writeln!(out, "profile.max_iters = {n}");
            }
            None => out.push_str("# profile.max_iters = auto\n"),
        }
        let _ = writeln!(out, "profile.damping = {:?}", pr.solver.damping);
        let _ = writeln!(out, "profile.i_cap_factor = {:?}", pr.solver.i_cap_factor);
        let _ = writeln!(out, "profile.lyapunov_stride = {}", pr.lyapunov_stride);
        out
    }
}

fn write_optional(out: &mut String, key: &str, v: Option<f64>) {
    match v {
        Some(v) => {
            let _ = writeln!(out, "{key} = {v:?}");
        }
        None => {
            let _ = writeln!(out, "# {key} = auto");
        }
    }
}

fn kind_params(kind: &IncidenceKind) -> Vec<(&'static str, f64)> {
    match *kind {
        IncidenceKind::Bilinear => vec![],
        IncidenceKind::Saturated { alpha } => vec![("alpha", alpha)],
        IncidenceKind::SaturatedPower { alpha, p } => vec![("alpha", alpha), ("p", p)],
        IncidenceKind::HeesterbeekMetz { k } => vec![("k", k)],
        IncidenceKind::PowerSaturation {
            eps,
            alpha_exp,
            gamma_exp,
        } => {
            vec![
                ("eps", eps),
                ("alpha_exp", alpha_exp),
                ("gamma_exp", gamma_exp),
            ]
        }
        IncidenceKind::LogInsect { nu, k_cap } => vec![("nu", nu), ("k_cap", k_cap)],
    }
}

fn parse_kind(e: &Entries) -> Result<IncidenceKind, ConfigError> {
    let entry = e
        .raw("incidence.kind")
        .ok_or_else(|| ConfigError::Missing("incidence.kind".into()))?;
    let r = |name: &str| e.required_real(&format!("incidence.{name}"));
    let kind = match entry.value.as_str() {
        "bilinear" => IncidenceKind::Bilinear,
        "saturated" => IncidenceKind::Saturated { alpha: r("alpha")? },
        "saturated_power" => IncidenceKind::SaturatedPower {
            alpha: r("alpha")?,
            p: r("p")?,
        },
        "heesterbeek_metz" => IncidenceKind::HeesterbeekMetz { k: r("k")? },
        "power_saturation" => IncidenceKind::PowerSaturation {
            eps: r("eps")?,
            alpha_exp: r("alpha_exp")?,
            gamma_exp: r("gamma_exp")?,
        },
        "log_insect" => IncidenceKind::LogInsect {
            nu: r("nu")?,
            k_cap: r("k_cap")?,
        },
        other => {
            return Err(ConfigError::BadValue {
                key: "incidence.kind".into(),
                line: entry.line,
                value: other.to_string(),
                expected: "incidence kind",
            })
        }
    };
    // parameters belonging to another family are almost certainly a mistake
    let used: Vec<&str> = kind_params(&kind).into_iter().map(|(n, _)| n).collect();
    for (key, entry) in e.0.range("incidence.".to_string()..) {
        let Some(name) = key.strip_prefix("incidence.") else {
            break;
        };
        if name != "kind" && !used.contains(&name) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                line: entry.line,
            });
        }
    }
    Ok(kind)
}
