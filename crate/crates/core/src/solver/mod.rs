//! Explicit finite-difference integration of the Lagrangian NSAC system
//!
//! ```text
//! v_t = u_x
//! u_t = (-p + nu u_x / v - chi_x^2 / (2 v^2))_x
//! chi_t = -v mu,            mu = -(chi_x / v)_x + chi^3 - chi
//! C_v theta_t = -p u_x + kappa (theta_x / v)_x + nu u_x^2 / v + v mu^2
//! ```
//!
//! on a truncated interval with Dirichlet data in the first and last cell, using
//! SSP-RK3 in time.

mod mms;
mod perturbation;
mod rhs;

pub use mms::{mms_convergence, Manufactured, MmsLevel, MmsStudy};
pub use perturbation::{Bump, BumpShape, PerturbationSpec, PerturbedField};
pub use rhs::{chemical_potential, rhs, rhs_navier_stokes, Forcing};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::GasModel;
use crate::profile::WaveProfile;

/// Uniform cell-centered grid; cell `i` sits at `x_min + (i + 1/2) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(format!("grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(Error::Config(format!("grid needs at least {} cells, got {n_cells}", Self::MIN_CELLS)));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_cells,
            dx: (x_max - x_min) / n_cells as f64,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_cells: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_cells)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }
}

/// Grid arrays of the unknowns at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
}

impl FieldState {
    pub fn uniform(grid: &Grid, t: f64, [v, u, theta, chi]: [f64; 4]) -> Self {
        let n = grid.n_cells;
        FieldState {
            t,
            v: vec![v; n],
            u: vec![u; n],
            theta: vec![theta; n],
            chi: vec![chi; n],
        }
    }

    /// State sampled from a pointwise function of `x`.
    pub fn from_fn(grid: &Grid, t: f64, mut f: impl FnMut(f64) -> Result<[f64; 4]>) -> Result<Self> {
        let mut s = Self::uniform(grid, t, [0.0; 4]);
        for i in 0..grid.n_cells {
            let [v, u, th, ch] = f(grid.x(i))?;
            s.v[i] = v;
            s.u[i] = u;
            s.theta[i] = th;
            s.chi[i] = ch;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn pressure(&self, gas: &GasModel) -> Vec<f64> {
        self.v.iter().zip(&self.theta).map(|(v, th)| gas.r * th / v).collect()
    }

    pub fn entropy(&self, gas: &GasModel) -> Result<Vec<f64>> {
        self.v
            .iter()
            .zip(&self.theta)
            .map(|(&v, &th)| gas.entropy_from_vtheta(v, th))
            .collect()
    }

    pub fn mu(&self, grid: &Grid) -> Vec<f64> {
        chemical_potential(grid, self)
    }

    /// Field `k` in the order `(v, u, theta, chi)`.
    pub fn field(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.v,
            1 => &self.u,
            2 => &self.theta,
            _ => &self.chi,
        }
    }

    fn field_mut(&mut self, k: usize) -> &mut [f64] {
        match k {
            0 => &mut self.v,
            1 => &mut self.u,
            2 => &mut self.theta,
            _ => &mut self.chi,
        }
    }

    fn set_cell(&mut self, i: usize, [v, u, th, ch]: [f64; 4]) {
        self.v[i] = v;
        self.u[i] = u;
        self.theta[i] = th;
        self.chi[i] = ch;
    }

    /// Overwrites the two Dirichlet cells with boundary data at `self.t`.
    pub fn apply_boundary(&mut self, grid: &Grid, boundary: &dyn Boundary) -> Result<()> {
        let last = grid.n_cells - 1;
        let left = boundary.state(self.t, grid.x(0))?;
        let right = boundary.state(self.t, grid.x(last))?;
        self.set_cell(0, left);
        self.set_cell(last, right);
        Ok(())
    }

    /// Sum of `v dx` over interior cells.
    pub fn interior_volume(&self, grid: &Grid) -> f64 {
        self.v[1..grid.n_cells - 1].iter().sum::<f64>() * grid.dx
    }

    pub fn is_finite(&self) -> bool {
        [&self.v, &self.u, &self.theta, &self.chi]
            .iter()
            .all(|a| a.iter().all(|x| x.is_finite()))
    }
}

/// Time derivatives of `(v, u, theta, chi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
}

impl Rates {
    pub fn zeros(n: usize) -> Self {
        Rates {
            v: vec![0.0; n],
            u: vec![0.0; n],
            theta: vec![0.0; n],
            chi: vec![0.0; n],
        }
    }

    fn field(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.v,
            1 => &self.u,
            2 => &self.theta,
            _ => &self.chi,
        }
    }

    fn clear_boundary(&mut self) {
        let n = self.v.len();
        for a in [&mut self.v, &mut self.u, &mut self.theta, &mut self.chi] {
            a[0] = 0.0;
            a[n - 1] = 0.0;
        }
    }

    pub fn max_abs(&self) -> f64 {
        [&self.v, &self.u, &self.theta, &self.chi]
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Dirichlet data for the end cells.
pub trait Boundary {
    /// `(v, u, theta, chi)` at `(t, x)`.
    fn state(&self, t: f64, x: f64) -> Result<[f64; 4]>;
}

/// Far-field closure by the smooth composite wave, with `chi = 1`.
pub struct ProfileBoundary<'a>(pub &'a WaveProfile);

impl Boundary for ProfileBoundary<'_> {
    fn state(&self, t: f64, x: f64) -> Result<[f64; 4]> {
        let p = self.0.eval(t, x)?;
        Ok([p.v, p.u, p.theta, 1.0])
    }
}

/// Which system the stepper integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    NavierStokesAllenCahn,
    NavierStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_cfl_h")]
    pub cfl_hyperbolic: f64,
    #[serde(default = "default_cfl_p")]
    pub cfl_parabolic: f64,
    pub t_end: f64,
    /// Interval between diagnostics ticks; steps are shortened to land on them.
    pub cadence: f64,
    #[serde(default)]
    pub model: Model,
}

fn default_cfl_h() -> f64 {
    0.4
}

fn default_cfl_p() -> f64 {
    0.15
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, cfl) in [("cfl_hyperbolic", self.cfl_hyperbolic), ("cfl_parabolic", self.cfl_parabolic)] {
            if !(cfl > 0.0 && cfl <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {cfl}")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cadence > 0.0) {
            return Err(Error::Config(format!("cadence must be positive, got {}", self.cadence)));
        }
        Ok(())
    }
}

/// Largest stable step: hyperbolic limit from the Lagrangian sound speed and a
/// parabolic limit covering viscosity, heat conduction and the unit-mobility
/// Allen-Cahn diffusion.
pub fn stable_dt(gas: &GasModel, grid: &Grid, cfg: &SolverConfig, s: &FieldState) -> f64 {
    let mut max_speed = 0.0f64;
    let mut min_v = f64::INFINITY;
    for (&v, &th) in s.v.iter().zip(&s.theta) {
        max_speed = max_speed.max(gas.lagrangian_sound_speed(v, th));
        min_v = min_v.min(v);
    }
    let diffusivity = gas.nu.max(gas.kappa / gas.cv()).max(1.0);
    let hyperbolic = cfg.cfl_hyperbolic * grid.dx / max_speed;
    let parabolic = cfg.cfl_parabolic * grid.dx * grid.dx * min_v / diffusivity;
    hyperbolic.min(parabolic)
}

/// Bookkeeping for one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    /// RK-weighted boundary velocity difference `sum_k b_k (u_R - u_L)`; the
    /// interior volume changes by exactly `dt` times this.
    pub volume_flux: f64,
}

/// SSP-RK3 stepper with preallocated stage buffers. Stages are written in
/// increment form, `x + dt (k1 + k2 + 4 k3) / 6`, so zero rates leave the state
/// bit-for-bit unchanged.
pub struct Stepper<'a> {
    pub gas: GasModel,
    pub grid: Grid,
    pub model: Model,
    boundary: &'a dyn Boundary,
    forcing: Option<&'a dyn Forcing>,
    k: [Rates; 3],
    stage: FieldState,
}

impl<'a> Stepper<'a> {
    pub fn new(
        gas: &GasModel,
        grid: &Grid,
        model: Model,
        boundary: &'a dyn Boundary,
        forcing: Option<&'a dyn Forcing>,
    ) -> Self {
        let n = grid.n_cells;
        Stepper {
            gas: *gas,
            grid: *grid,
            model,
            boundary,
            forcing,
            k: [Rates::zeros(n), Rates::zeros(n), Rates::zeros(n)],
            stage: FieldState::uniform(grid, 0.0, [0.0; 4]),
        }
    }

    fn rates(&mut self, which: usize, of_stage: bool, state: &FieldState) -> Result<()> {
        let s = if of_stage { &self.stage } else { state };
        let f = match self.model {
            Model::NavierStokesAllenCahn => rhs,
            Model::NavierStokes => rhs_navier_stokes,
        };
        f(&self.gas, &self.grid, s, self.forcing, &mut self.k[which])
    }

    // stage = state + dt * sum_j w_j k_j, then Dirichlet data at time t
    fn set_stage(&mut self, state: &FieldState, weights: &[(f64, usize)], dt: f64, t: f64) -> Result<()> {
        for f in 0..4 {
            let out = self.stage.field_mut(f);
            out.copy_from_slice(state.field(f));
            for &(w, j) in weights {
                let c = w * dt;
                for (o, &k) in out.iter_mut().zip(self.k[j].field(f)) {
                    *o += c * k;
                }
            }
        }
        self.stage.t = t;
        self.stage.apply_boundary(&self.grid, self.boundary)
    }

    fn boundary_gap(&self, s: &FieldState) -> f64 {
        let n = self.grid.n_cells;
        0.5 * (s.u[n - 2] + s.u[n - 1]) - 0.5 * (s.u[0] + s.u[1])
    }

    /// Advances `state` by `dt`.
    pub fn step(&mut self, state: &mut FieldState, dt: f64) -> Result<StepInfo> {
        let t = state.t;
        let mut flux = self.boundary_gap(state) / 6.0;
        self.rates(0, false, state)?;
        self.set_stage(state, &[(1.0, 0)], dt, t + dt)?;

        flux += self.boundary_gap(&self.stage) / 6.0;
        self.rates(1, true, state)?;
        self.set_stage(state, &[(0.25, 0), (0.25, 1)], dt, t + 0.5 * dt)?;

        flux += 2.0 * self.boundary_gap(&self.stage) / 3.0;
        self.rates(2, true, state)?;
        let [k1, k2, k3] = &self.k;
        let c = dt / 6.0;
        for (x, a, b, d) in [
            (&mut state.v, &k1.v, &k2.v, &k3.v),
            (&mut state.u, &k1.u, &k2.u, &k3.u),
            (&mut state.theta, &k1.theta, &k2.theta, &k3.theta),
            (&mut state.chi, &k1.chi, &k2.chi, &k3.chi),
        ] {
            for (((x, &a), &b), &d) in x.iter_mut().zip(a).zip(b).zip(d) {
                *x += c * (a + b + 4.0 * d);
            }
        }
        state.t = t + dt;
        state.apply_boundary(&self.grid, self.boundary)?;
        Ok(StepInfo { dt, volume_flux: flux })
    }
}

/// Receives the state after every accepted step and at every cadence tick.
pub trait Observer {
    fn on_step(&mut self, _state: &FieldState, _info: &StepInfo) -> Result<()> {
        Ok(())
    }

    fn on_tick(&mut self, state: &FieldState) -> Result<()>;

    /// Called with the last good state before an error is propagated.
    fn on_abort(&mut self, _state: &FieldState, _error: &Error) {}
}

/// Step-size history and outcome of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Integrates `state` to `cfg.t_end`, reporting to `observer` at `t = 0`, at
/// every multiple of `cfg.cadence` and at `t_end`.
pub fn run(
    gas: &GasModel,
    grid: &Grid,
    cfg: &SolverConfig,
    boundary: &dyn Boundary,
    forcing: Option<&dyn Forcing>,
    state: &mut FieldState,
    observer: &mut dyn Observer,
) -> Result<RunSummary> {
    cfg.validate()?;
    gas.validate()?;
    state.apply_boundary(grid, boundary)?;
    if let Err(e) = rhs::check_positivity(state) {
        observer.on_abort(state, &e);
        return Err(e);
    }
    let mut stepper = Stepper::new(gas, grid, cfg.model, boundary, forcing);
    observer.on_tick(state)?;
    let dt_initial = stable_dt(gas, grid, cfg, state);
    let mut summary = RunSummary {
        steps: 0,
        t_final: state.t,
        dt_initial,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
    };
    let mut tick = 1usize;
    let t_start = state.t;
    while state.t < cfg.t_end {
        let next_tick = (t_start + tick as f64 * cfg.cadence).min(cfg.t_end);
        let mut dt = stable_dt(gas, grid, cfg, state);
        let mut lands = false;
        // avoid a sliver step right before the tick
        if state.t + dt * 1.000_001 >= next_tick {
            dt = next_tick - state.t;
            lands = true;
        }
        let info = match stepper.step(state, dt) {
            Ok(info) => info,
            Err(e) => {
                observer.on_abort(state, &e);
                return Err(e);
            }
        };
        if lands {
            state.t = next_tick;
        }
        if !state.is_finite() {
            let e = Error::NonConvergence {
                solver: "SSP-RK3 time stepping",
                iterations: summary.steps,
                residual: f64::NAN,
            };
            observer.on_abort(state, &e);
            return Err(e);
        }
        summary.steps += 1;
        summary.dt_min = summary.dt_min.min(dt);
        summary.dt_max = summary.dt_max.max(dt);
        observer.on_step(state, &info)?;
        if lands {
            if let Err(e) = rhs::check_positivity(state) {
                observer.on_abort(state, &e);
                return Err(e);
            }
            observer.on_tick(state)?;
            tick += 1;
        }
    }
    summary.t_final = state.t;
    if summary.steps == 0 {
        summary.dt_min = dt_initial;
        summary.dt_max = dt_initial;
    }
    Ok(summary)
}

/// Observer that ignores everything.
pub struct NullObserver;

impl Observer for NullObserver {
    fn on_tick(&mut self, _state: &FieldState) -> Result<()> {
        Ok(())
    }
}
