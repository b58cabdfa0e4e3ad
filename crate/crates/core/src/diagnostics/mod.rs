//! Perturbation norms, relative-entropy energy and dissipation, bound monitors.
//!
//! Everything is recomputed from a `(FieldState, WaveProfile)` pair; the
//! perturbation `(phi, psi, zeta, varphi, xi) = (v - V, u - U, theta - Theta,
//! s - S, chi - 1)` is never integrated on its own. `varphi` is the entropy
//! perturbation; it is spelled out to keep it apart from the volume
//! perturbation `phi`.

mod jiang;

pub use jiang::{jiang_check, JiangProbeResult, JiangRecorder};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{phi_convex, GasModel};
use crate::profile::WaveProfile;
use crate::solver::{chemical_potential, FieldState, Grid, Observer, StepInfo};

/// Perturbation fields and the profile values they were measured against.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub t: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub varphi: Vec<f64>,
    pub xi: Vec<f64>,
    /// Profile `V`, `Theta`, `S`, `U_x` at the cell centers.
    pub big_v: Vec<f64>,
    pub big_theta: Vec<f64>,
    pub big_s: Vec<f64>,
    pub big_u_x: Vec<f64>,
}

impl PerturbationState {
    pub fn new(gas: &GasModel, grid: &Grid, state: &FieldState, profile: &WaveProfile) -> Result<Self> {
        let n = grid.n_cells;
        let mut p = PerturbationState {
            t: state.t,
            phi: Vec::with_capacity(n),
            psi: Vec::with_capacity(n),
            zeta: Vec::with_capacity(n),
            varphi: Vec::with_capacity(n),
            xi: Vec::with_capacity(n),
            big_v: Vec::with_capacity(n),
            big_theta: Vec::with_capacity(n),
            big_s: Vec::with_capacity(n),
            big_u_x: Vec::with_capacity(n),
        };
        for i in 0..n {
            let w = profile.eval(state.t, grid.x(i))?;
            p.phi.push(state.v[i] - w.v);
            p.psi.push(state.u[i] - w.u);
            p.zeta.push(state.theta[i] - w.theta);
            p.varphi.push(gas.entropy_from_vtheta(state.v[i], state.theta[i])? - w.s);
            p.xi.push(state.chi[i] - 1.0);
            p.big_v.push(w.v);
            p.big_theta.push(w.theta);
            p.big_s.push(w.s);
            p.big_u_x.push(w.u_x);
        }
        Ok(p)
    }
}

/// `int f dx` by the trapezoid rule over the cell centers.
pub fn trapezoid(f: &[f64], dx: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => (f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1])) * dx,
    }
}

/// Centered first difference; second-order one-sided at the ends.
pub fn derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    d
}

/// Three-point second difference; the end values copy their neighbours.
pub fn second_derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dx * dx);
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NormSet {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub linf: f64,
}

impl NormSet {
    pub fn of(f: &[f64], dx: f64) -> Self {
        let sq = |g: &[f64]| trapezoid(&g.iter().map(|x| x * x).collect::<Vec<_>>(), dx);
        let l2sq = sq(f);
        let d1 = sq(&derivative(f, dx));
        let d2 = sq(&second_derivative(f, dx));
        NormSet {
            l2: l2sq.sqrt(),
            h1: (l2sq + d1).sqrt(),
            h2: (l2sq + d1 + d2).sqrt(),
            linf: f.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NormTable {
    pub phi: NormSet,
    pub psi: NormSet,
    pub zeta: NormSet,
    pub varphi: NormSet,
    pub xi: NormSet,
    /// `|| zeta / sqrt(gamma - 1) ||_{L2}`.
    pub zeta_weighted_l2: f64,
}

impl NormTable {
    pub fn linf(&self) -> [f64; 5] {
        [self.phi.linf, self.psi.linf, self.zeta.linf, self.varphi.linf, self.xi.linf]
    }
}

pub const FIELD_NAMES: [&str; 5] = ["phi", "psi", "zeta", "varphi", "xi"];

pub fn norms(gas: &GasModel, grid: &Grid, p: &PerturbationState) -> NormTable {
    let zeta = NormSet::of(&p.zeta, grid.dx);
    NormTable {
        phi: NormSet::of(&p.phi, grid.dx),
        psi: NormSet::of(&p.psi, grid.dx),
        zeta,
        varphi: NormSet::of(&p.varphi, grid.dx),
        xi: NormSet::of(&p.xi, grid.dx),
        zeta_weighted_l2: zeta.l2 / (gas.gamma - 1.0).sqrt(),
    }
}

/// Relative-entropy energy
/// `int R Theta Phi(v/V) + psi^2/2 + C_v Theta Phi(theta/Theta) + xi_x^2/(2v) + xi^2 (xi+2)^2/4`.
pub fn energy_functional(gas: &GasModel, grid: &Grid, state: &FieldState, p: &PerturbationState) -> Result<f64> {
    energy_with(gas, grid, state, p, phi_convex)
}

pub(crate) fn energy_with(
    gas: &GasModel,
    grid: &Grid,
    state: &FieldState,
    p: &PerturbationState,
    phi_convex: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let xi_x = derivative(&p.xi, grid.dx);
    let mut density = Vec::with_capacity(grid.n_cells);
    for i in 0..grid.n_cells {
        let (v, th) = (state.v[i], state.theta[i]);
        let (bv, bth) = (p.big_v[i], p.big_theta[i]);
        let xi = p.xi[i];
        density.push(
            gas.r * bth * phi_convex(v / bv)?
                + 0.5 * p.psi[i] * p.psi[i]
                + gas.cv() * bth * phi_convex(th / bth)?
                + xi_x[i] * xi_x[i] / (2.0 * v)
                + 0.25 * xi * xi * (xi + 2.0) * (xi + 2.0),
        );
    }
    Ok(trapezoid(&density, grid.dx))
}

/// Dissipation `int v Theta/theta mu^2 + nu Theta/(v theta) psi_x^2 + kappa Theta/(v theta^2) zeta_x^2`.
pub fn dissipation_rate(gas: &GasModel, grid: &Grid, state: &FieldState, p: &PerturbationState) -> f64 {
    let mu = chemical_potential(grid, state);
    let psi_x = derivative(&p.psi, grid.dx);
    let zeta_x = derivative(&p.zeta, grid.dx);
    let density: Vec<f64> = (0..grid.n_cells)
        .map(|i| {
            let (v, th, bth) = (state.v[i], state.theta[i], p.big_theta[i]);
            v * bth / th * mu[i] * mu[i]
                + gas.nu * bth / (v * th) * psi_x[i] * psi_x[i]
                + gas.kappa * bth / (v * th * th) * zeta_x[i] * zeta_x[i]
        })
        .collect();
    trapezoid(&density, grid.dx)
}

/// `int [p(v,s) - p(V,s_bar) - p_v(V,s_bar) phi - p_s(V,s_bar) varphi] U_x`; nonnegative
/// for a convex pressure along an expanding profile.
pub fn wave_interaction(gas: &GasModel, grid: &Grid, p: &PerturbationState, s_bar: f64) -> Result<f64> {
    let mut density = Vec::with_capacity(grid.n_cells);
    for i in 0..grid.n_cells {
        let bv = p.big_v[i];
        let v = bv + p.phi[i];
        let s = p.big_s[i] + p.varphi[i];
        let bracket = gas.p_tilde(v, s)?
            - gas.p_tilde(bv, s_bar)?
            - gas.p_tilde_v(bv, s_bar)? * p.phi[i]
            - gas.p_tilde_s(bv, s_bar)? * (s - s_bar);
        density.push(bracket * p.big_u_x[i]);
    }
    Ok(trapezoid(&density, grid.dx))
}

/// `sum (s_i - s_bar) dx` over the interior cells.
pub fn entropy_integral(grid: &Grid, p: &PerturbationState, s_bar: f64) -> f64 {
    (1..grid.n_cells - 1).map(|i| p.big_s[i] + p.varphi[i] - s_bar).sum::<f64>() * grid.dx
}

/// Constant `C` with `E <= C (|phi|^2 + |psi|^2 + |zeta|^2 + |xi|_{H1}^2)`, built from
/// `Phi(x) <= (x - 1)^2 / (2 min(1, x)^2)` and the current field bounds.
pub fn energy_bound_constant(gas: &GasModel, state: &FieldState, p: &PerturbationState) -> f64 {
    let min = |a: &[f64]| a.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let max = |a: &[f64]| a.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let v_min = min(&state.v).min(min(&p.big_v));
    let th_min = min(&state.theta).min(min(&p.big_theta));
    let big_th_max = max(&p.big_theta);
    let xi2_max = p.xi.iter().fold(0.0f64, |m, &x| m.max((x + 2.0) * (x + 2.0)));
    [
        gas.r * big_th_max / (2.0 * v_min * v_min),
        0.5,
        gas.cv() * big_th_max / (2.0 * th_min * th_min),
        1.0 / (2.0 * v_min),
        0.25 * xi2_max,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_chi_tol")]
    pub chi_tol: f64,
    #[serde(default = "default_v_envelope")]
    pub v_envelope: [f64; 2],
    #[serde(default = "default_theta_envelope")]
    pub theta_envelope: [f64; 2],
}

fn default_chi_tol() -> f64 {
    0.01
}

fn default_v_envelope() -> [f64; 2] {
    [1e-3, 1e3]
}

fn default_theta_envelope() -> [f64; 2] {
    [1e-3, 1e3]
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            chi_tol: default_chi_tol(),
            v_envelope: default_v_envelope(),
            theta_envelope: default_theta_envelope(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
}

impl Bounds {
    pub fn empty() -> Self {
        Bounds {
            v_min: f64::INFINITY,
            v_max: f64::NEG_INFINITY,
            theta_min: f64::INFINITY,
            theta_max: f64::NEG_INFINITY,
            chi_min: f64::INFINITY,
            chi_max: f64::NEG_INFINITY,
        }
    }

    pub fn of(state: &FieldState) -> Self {
        let mut b = Self::empty();
        b.absorb(state);
        b
    }

    pub fn absorb(&mut self, state: &FieldState) {
        for &v in &state.v {
            self.v_min = self.v_min.min(v);
            self.v_max = self.v_max.max(v);
        }
        for &t in &state.theta {
            self.theta_min = self.theta_min.min(t);
            self.theta_max = self.theta_max.max(t);
        }
        for &c in &state.chi {
            self.chi_min = self.chi_min.min(c);
            self.chi_max = self.chi_max.max(c);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BoundFlags {
    pub chi_out_of_range: bool,
    pub v_out_of_envelope: bool,
    pub theta_out_of_envelope: bool,
}

impl BoundFlags {
    pub fn any(&self) -> bool {
        self.chi_out_of_range || self.v_out_of_envelope || self.theta_out_of_envelope
    }
}

/// Flags raised by a set of field bounds.
pub fn bounds_monitor(b: &Bounds, cfg: &BoundsConfig) -> BoundFlags {
    BoundFlags {
        chi_out_of_range: b.chi_min < -cfg.chi_tol || b.chi_max > 1.0 + cfg.chi_tol,
        v_out_of_envelope: b.v_min < cfg.v_envelope[0] || b.v_max > cfg.v_envelope[1],
        theta_out_of_envelope: b.theta_min < cfg.theta_envelope[0] || b.theta_max > cfg.theta_envelope[1],
    }
}

/// All scalar diagnostics at one cadence tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub t: f64,
    pub norms: NormTable,
    pub energy: f64,
    pub dissipation: f64,
    pub cumulative_dissipation: f64,
    pub wave_interaction: f64,
    pub entropy_integral: f64,
    pub bounds: Bounds,
    pub flags: BoundFlags,
    pub energy_bound_constant: f64,
    pub energy_bound_ok: bool,
    /// Largest representation residual over the probes, when probes are set.
    pub jiang_rel_error: Option<f64>,
}

impl DiagnosticsReport {
    pub fn csv_header() -> String {
        let mut cols = vec!["t".to_string()];
        for f in FIELD_NAMES {
            for n in ["l2", "h1", "h2", "linf"] {
                cols.push(format!("{f}_{n}"));
            }
        }
        cols.extend(
            [
                "zeta_weighted_l2",
                "energy",
                "dissipation",
                "cumulative_dissipation",
                "wave_interaction",
                "entropy_integral",
                "v_min",
                "v_max",
                "theta_min",
                "theta_max",
                "chi_min",
                "chi_max",
                "chi_flag",
                "v_flag",
                "theta_flag",
                "energy_bound_constant",
                "energy_bound_ok",
                "jiang_rel_error",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn csv_values(&self) -> Vec<f64> {
        let n = &self.norms;
        let mut vals = vec![self.t];
        for set in [n.phi, n.psi, n.zeta, n.varphi, n.xi] {
            vals.extend([set.l2, set.h1, set.h2, set.linf]);
        }
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        vals.extend([
            n.zeta_weighted_l2,
            self.energy,
            self.dissipation,
            self.cumulative_dissipation,
            self.wave_interaction,
            self.entropy_integral,
            self.bounds.v_min,
            self.bounds.v_max,
            self.bounds.theta_min,
            self.bounds.theta_max,
            self.bounds.chi_min,
            self.bounds.chi_max,
            flag(self.flags.chi_out_of_range),
            flag(self.flags.v_out_of_envelope),
            flag(self.flags.theta_out_of_envelope),
            self.energy_bound_constant,
            flag(self.energy_bound_ok),
            self.jiang_rel_error.unwrap_or(f64::NAN),
        ]);
        vals
    }
}

/// Single-tick report without the running integral.
pub fn report(
    gas: &GasModel,
    grid: &Grid,
    state: &FieldState,
    profile: &WaveProfile,
    bounds_cfg: &BoundsConfig,
) -> Result<DiagnosticsReport> {
    report_with(gas, grid, state, profile, bounds_cfg, phi_convex)
}

pub(crate) fn report_with(
    gas: &GasModel,
    grid: &Grid,
    state: &FieldState,
    profile: &WaveProfile,
    bounds_cfg: &BoundsConfig,
    phi: impl Fn(f64) -> Result<f64>,
) -> Result<DiagnosticsReport> {
    let p = PerturbationState::new(gas, grid, state, profile)?;
    let norms = norms(gas, grid, &p);
    let energy = energy_with(gas, grid, state, &p, phi)?;
    let bounds = Bounds::of(state);
    let c = energy_bound_constant(gas, state, &p);
    let sq = |x: f64| x * x;
    let rhs = c * (sq(norms.phi.l2) + sq(norms.psi.l2) + sq(norms.zeta.l2) + sq(norms.xi.h1));
    Ok(DiagnosticsReport {
        t: state.t,
        energy,
        dissipation: dissipation_rate(gas, grid, state, &p),
        cumulative_dissipation: 0.0,
        wave_interaction: wave_interaction(gas, grid, &p, profile.riemann.s_bar)?,
        entropy_integral: entropy_integral(grid, &p, profile.riemann.s_bar),
        flags: bounds_monitor(&bounds, bounds_cfg),
        bounds,
        energy_bound_constant: c,
        energy_bound_ok: energy >= 0.0 && energy <= rhs * (1.0 + 1e-12) + 1e-300,
        jiang_rel_error: None,
        norms,
    })
}

/// Run-level verdicts accumulated over all ticks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunVerdict {
    pub positivity_ok: bool,
    pub chi_in_range: bool,
    /// `max_t (E + int D) / (E(0) + 1)`.
    pub energy_constant: f64,
    pub energy_monitor_ok: bool,
    /// `L_inf(t_end) / max_t L_inf` per field.
    pub decay_ratios: [f64; 5],
    pub decay_ok: bool,
    /// Most negative `d/dt int (s - S) dx` between ticks.
    pub min_entropy_rate: f64,
    pub entropy_slack: f64,
    pub entropy_ok: bool,
    pub energy_bound_ok: bool,
    pub running_bounds: Bounds,
}

/// Observer computing a report at every tick and feeding an optional Jiang recorder on every step.
pub struct Monitor<'a> {
    pub gas: GasModel,
    pub grid: Grid,
    profile: &'a WaveProfile,
    bounds_cfg: BoundsConfig,
    pub reports: Vec<DiagnosticsReport>,
    pub jiang: Option<JiangRecorder>,
    running: Bounds,
    aborted: Option<Error>,
    phi: fn(f64) -> Result<f64>,
}

impl<'a> Monitor<'a> {
    pub fn new(gas: &GasModel, grid: &Grid, profile: &'a WaveProfile, bounds_cfg: BoundsConfig) -> Self {
        Monitor {
            gas: *gas,
            grid: *grid,
            profile,
            bounds_cfg,
            reports: Vec::new(),
            jiang: None,
            running: Bounds::empty(),
            aborted: None,
            phi: phi_convex,
        }
    }

    /// Replaces `Phi` in the energy; only meant for mutation smoke tests.
    #[doc(hidden)]
    pub fn with_phi(mut self, phi: fn(f64) -> Result<f64>) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_jiang(mut self, recorder: JiangRecorder) -> Self {
        self.jiang = Some(recorder);
        self
    }

    pub fn aborted(&self) -> Option<&Error> {
        self.aborted.as_ref()
    }

    pub fn last(&self) -> Option<&DiagnosticsReport> {
        self.reports.last()
    }

    pub fn verdict(&self) -> RunVerdict {
        let r = &self.reports;
        let e0 = r.first().map_or(0.0, |x| x.energy);
        let energy_constant = r
            .iter()
            .map(|x| (x.energy + x.cumulative_dissipation) / (e0 + 1.0))
            .fold(0.0, f64::max);
        let mut peaks = [0.0f64; 5];
        for x in r {
            for (p, v) in peaks.iter_mut().zip(x.norms.linf()) {
                *p = p.max(v);
            }
        }
        let last = r.last().map(|x| x.norms.linf()).unwrap_or_default();
        let mut decay_ratios = [0.0; 5];
        for k in 0..5 {
            decay_ratios[k] = if peaks[k] > 0.0 { last[k] / peaks[k] } else { 0.0 };
        }
        let entropy_slack = 1e-8 * self.grid.n_cells as f64 * self.grid.dx;
        let min_entropy_rate = r
            .windows(2)
            .map(|w| (w[1].entropy_integral - w[0].entropy_integral) / (w[1].t - w[0].t))
            .fold(f64::INFINITY, f64::min);
        let flags = bounds_monitor(&self.running, &self.bounds_cfg);
        RunVerdict {
            positivity_ok: !matches!(self.aborted, Some(Error::PositivityBreach { .. })),
            chi_in_range: !flags.chi_out_of_range,
            energy_constant,
            energy_monitor_ok: energy_constant <= 10.0,
            decay_ratios,
            decay_ok: self.aborted.is_none() && decay_ratios.iter().all(|&d| d <= 0.2),
            min_entropy_rate,
            entropy_slack,
            entropy_ok: min_entropy_rate >= -entropy_slack,
            energy_bound_ok: r.iter().all(|x| x.energy_bound_ok),
            running_bounds: self.running,
        }
    }
}

impl Observer for Monitor<'_> {
    fn on_step(&mut self, state: &FieldState, _info: &StepInfo) -> Result<()> {
        // the extremes matter between ticks too
        self.running.absorb(state);
        if let Some(j) = self.jiang.as_mut() {
            j.record(state)?;
        }
        Ok(())
    }

    fn on_tick(&mut self, state: &FieldState) -> Result<()> {
        self.running.absorb(state);
        if self.reports.is_empty() {
            if let Some(j) = self.jiang.as_mut() {
                if j.is_empty() {
                    j.record(state)?;
                }
            }
        }
        let mut rep = report_with(&self.gas, &self.grid, state, self.profile, &self.bounds_cfg, self.phi)?;
        if let Some(j) = self.jiang.as_ref() {
            rep.jiang_rel_error = j.results().iter().map(|r| r.rel_error).reduce(f64::max);
        }
        if let Some(prev) = self.reports.last() {
            rep.cumulative_dissipation =
                prev.cumulative_dissipation + 0.5 * (prev.dissipation + rep.dissipation) * (rep.t - prev.t);
        }
        self.reports.push(rep);
        Ok(())
    }

    fn on_abort(&mut self, state: &FieldState, error: &Error) {
        self.running.absorb(state);
        self.aborted = Some(error.clone());
    }
}
