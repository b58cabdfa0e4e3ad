//! Lagrangian Navier-Stokes-Allen-Cahn laboratory.
//!
//! Exact and smoothed composite rarefaction waves of the Euler system, an
//! explicit finite-difference solver for the full NSAC dynamics, and the
//! relative-entropy diagnostics used to audit large-perturbation stability.

pub mod burgers;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod gas;
pub mod output;
pub mod presets;
pub mod profile;
pub mod quadrature;
pub mod riemann;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use burgers::{Smoothing, SmoothingConfig};
pub use gas::{phi_convex, Family, GasModel};
pub use riemann::{rarefaction_integral, solve_intermediate, EndStates, RiemannData};
pub use profile::{ProfileSample, Residuals, WaveProfile};
pub use solver::{FieldState, Grid, SolverConfig};
pub use diagnostics::{DiagnosticsReport, PerturbationState};
