//! Traveling-wave analysis for a lattice SIR epidemic model with nonlinear
//! incidence.
//!
//! The crate is organised bottom-up:
//!
//! - [`incidence`]: incidence-rate families `f(I)` and their derivatives.
//! - [`model`]: parameters, disease-free and endemic equilibria, `R0`.
//! - [`dispersion`]: the characteristic function, critical speed and decay roots.
//! - [`bounds`]: explicit upper/lower solutions and their verification.
//! - [`profile`]: the truncated fixed-point solver for wave profiles.
//! - [`lyapunov`]: the Lyapunov functional evaluated along a profile.
//! - [`lattice`]: direct time-domain simulation of the lattice system.
//! - [`config`] and [`commands`]: configuration files and CLI drivers.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod commands;
pub mod config;
pub mod dispersion;
pub mod incidence;
pub mod lattice;
pub mod lyapunov;
pub mod model;
pub mod output;
pub mod profile;
pub mod roots;

pub use bounds::{BoundSet, BoundsError, BoundsReport};
pub use dispersion::{DispersionError, SpeedClass};
pub use incidence::{Incidence, IncidenceError, IncidenceKind};
pub use lattice::{FrontTrack, LatticeError, LatticeState};
pub use lyapunov::{LyapunovError, LyapunovSeries};
pub use model::{Equilibria, ModelError, ModelParams};
pub use profile::{ProfileError, SolverOptions, WaveProfile};
