//! Config-driven pipelines behind the `riemann`, `profile`, `simulate` and
//! `sweep` subcommands.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::burgers::Smoothing;
use crate::config::ExperimentConfig;
use crate::diagnostics::{JiangProbeResult, JiangRecorder, Monitor, RunVerdict};
use crate::error::{Error, Result};
use crate::gas::{phi_convex, GasModel};
use crate::output::{write_csv, write_fields, write_json, CsvWriter, RunDir};
use crate::profile::WaveProfile;
use crate::riemann::EndStates;
use crate::solver::{chemical_potential, run, stable_dt, FieldState, Grid, Observer, ProfileBoundary, RunSummary, StepInfo};
use crate::DiagnosticsReport;

/// Quantities derived from a config, echoed next to it in every run directory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub s_bar: f64,
    pub delta: f64,
    pub v_m: f64,
    pub u_m: f64,
    pub theta_m: f64,
    pub k_q: f64,
    pub t0: f64,
    pub half_width: f64,
    pub dx: f64,
    pub dt0: f64,
}

/// Everything needed to start a run.
pub struct Prepared {
    pub cfg: ExperimentConfig,
    pub gas: GasModel,
    pub ends: EndStates,
    pub profile: WaveProfile,
    pub grid: Grid,
    pub initial: FieldState,
    pub derived: Derived,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let gas = cfg.gas;
        let ends = cfg.ends.resolve(&gas)?;
        let profile = WaveProfile::new(&gas, &ends, cfg.smoothing)?;
        let half_width = match cfg.grid.half_width {
            Some(l) => l,
            None => profile.auto_half_width(cfg.solver.t_end, cfg.grid.far_field_tol)?,
        };
        let grid = Grid::symmetric(half_width, cfg.grid.n_cells)?;
        let initial = cfg.perturbation.initial_state(&profile, &grid)?;
        let smoothing = Smoothing::new(cfg.smoothing)?;
        let rd = &profile.riemann;
        let derived = Derived {
            theta_minus: ends.theta_minus,
            theta_plus: ends.theta_plus,
            s_bar: rd.s_bar,
            delta: ends.strength(),
            v_m: rd.v_m,
            u_m: rd.u_m,
            theta_m: rd.theta_m,
            k_q: smoothing.k_q,
            t0: smoothing.t0,
            half_width,
            dx: grid.dx,
            dt0: stable_dt(&gas, &grid, &cfg.solver, &initial),
        };
        Ok(Prepared {
            cfg: cfg.clone(),
            gas,
            ends,
            profile,
            grid,
            initial,
            derived,
        })
    }

    /// The config followed by a `[derived]` table.
    pub fn resolved_text(&self) -> String {
        let derived = toml::to_string(&self.derived).expect("derived values serialize");
        format!("{}\n[derived]\n{}", self.cfg.to_toml(), derived)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutcome {
    pub name: String,
    pub derived: Derived,
    pub run: Option<RunSummary>,
    pub error: Option<String>,
    pub verdict: RunVerdict,
    pub jiang: Option<Vec<JiangProbeResult>>,
    pub jiang_error: Option<String>,
    pub wave_interaction_min: f64,
    pub wave_interaction_excursion: bool,
    pub ticks: usize,
    #[serde(skip)]
    pub reports: Vec<DiagnosticsReport>,
    #[serde(skip)]
    pub final_state: FieldState,
}

impl SimulationOutcome {
    /// Largest representation residual over the probes, if the check ran.
    pub fn jiang_max_error(&self) -> Option<f64> {
        self.jiang.as_ref().map(|r| r.iter().map(|p| p.rel_error).fold(0.0, f64::max))
    }
}

struct Recorder<'a, 'p> {
    monitor: Monitor<'p>,
    out: Option<&'a RunDir>,
    diagnostics: Option<CsvWriter>,
    snapshot_every: usize,
    tick: usize,
    last_written: Option<usize>,
}

impl Recorder<'_, '_> {
    fn snapshot(&mut self, state: &FieldState) -> Result<()> {
        if let Some(dir) = self.out {
            let gas = &self.monitor.gas;
            let grid = &self.monitor.grid;
            let s = state.entropy(gas)?;
            let mu = chemical_potential(grid, state);
            write_fields(&dir.fields_path(self.tick), grid, state, &s, &mu)?;
            self.last_written = Some(self.tick);
        }
        Ok(())
    }
}

impl Observer for Recorder<'_, '_> {
    fn on_step(&mut self, state: &FieldState, info: &StepInfo) -> Result<()> {
        self.monitor.on_step(state, info)
    }

    fn on_tick(&mut self, state: &FieldState) -> Result<()> {
        self.monitor.on_tick(state)?;
        if let (Some(w), Some(rep)) = (self.diagnostics.as_mut(), self.monitor.last()) {
            w.row(&rep.csv_values())?;
        }
        if self.tick == 0 || (self.snapshot_every > 0 && self.tick % self.snapshot_every == 0) {
            self.snapshot(state)?;
        }
        self.tick += 1;
        Ok(())
    }

    fn on_abort(&mut self, state: &FieldState, error: &Error) {
        self.monitor.on_abort(state, error);
    }
}

/// Runs the configured experiment; solver failures are reported in the
/// outcome rather than returned, so the diagnostics up to the failure survive.
pub fn simulate(prep: &Prepared, out: Option<&RunDir>) -> Result<SimulationOutcome> {
    simulate_with_phi(prep, out, phi_convex)
}

#[doc(hidden)]
pub fn simulate_with_phi(prep: &Prepared, out: Option<&RunDir>, phi: fn(f64) -> Result<f64>) -> Result<SimulationOutcome> {
    let cfg = &prep.cfg;
    let mut monitor = Monitor::new(&prep.gas, &prep.grid, &prep.profile, cfg.diagnostics.bounds).with_phi(phi);
    if !cfg.diagnostics.probes.is_empty() {
        monitor = monitor.with_jiang(JiangRecorder::new(&prep.gas, &prep.grid, &prep.initial, &cfg.diagnostics.probes)?);
    }
    let diagnostics = match out {
        Some(dir) => {
            std::fs::write(dir.file("config.resolved"), prep.resolved_text())?;
            Some(CsvWriter::create(&dir.file("diagnostics.csv"), &DiagnosticsReport::csv_header())?)
        }
        None => None,
    };
    let mut rec = Recorder {
        monitor,
        out,
        diagnostics,
        snapshot_every: cfg.diagnostics.snapshot_every,
        tick: 0,
        last_written: None,
    };
    let mut state = prep.initial.clone();
    let bc = ProfileBoundary(&prep.profile);
    let result = run(&prep.gas, &prep.grid, &cfg.solver, &bc, None, &mut state, &mut rec);
    let (run_summary, error) = match result {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e)),
    };
    // the final state is always on disk, even when the cadence skipped it
    if error.is_none() {
        // the closing tick already saw this state; label the snapshot with it
        rec.tick = rec.tick.saturating_sub(1);
    }
    if rec.last_written != Some(rec.tick) {
        rec.snapshot(&state)?;
    }
    if let Some(w) = rec.diagnostics.take() {
        w.finish()?;
    }
    let monitor = rec.monitor;
    let (jiang, jiang_error) = match monitor.jiang.as_ref().map(|j| j.check()) {
        None => (None, None),
        Some(Ok(r)) => (Some(r), None),
        Some(Err(e)) => (Some(monitor.jiang.as_ref().unwrap().results()), Some(e.to_string())),
    };
    let wave_interaction_min = monitor
        .reports
        .iter()
        .map(|r| r.wave_interaction)
        .fold(f64::INFINITY, f64::min);
    let outcome = SimulationOutcome {
        name: cfg.name.clone(),
        derived: prep.derived,
        run: run_summary,
        error: error.map(|e| e.to_string()),
        verdict: monitor.verdict(),
        jiang,
        jiang_error,
        wave_interaction_min,
        wave_interaction_excursion: wave_interaction_min < cfg.diagnostics.wave_interaction_floor,
        ticks: monitor.reports.len(),
        reports: monitor.reports,
        final_state: state,
    };
    if let Some(dir) = out {
        write_json(&dir.file("summary.json"), &outcome)?;
    }
    Ok(outcome)
}

pub const RIEMANN_HEADER: &str = "xi,V,U,Theta,S";

/// Exact Riemann solution sampled in `xi = x/t` over both fans plus a margin.
pub fn riemann_table(prep: &Prepared) -> Result<Vec<Vec<f64>>> {
    let rd = &prep.profile.riemann;
    let reach = prep.cfg.sampling.reach * rd.max_speed().max(1e-3);
    let n = prep.cfg.sampling.n_points;
    (0..n)
        .map(|k| {
            let xi = -reach + 2.0 * reach * k as f64 / (n - 1) as f64;
            let s = rd.eval(xi);
            Ok(vec![xi, s.v, s.u, s.theta, s.s])
        })
        .collect()
}

pub const PROFILE_HEADER: &str = "t,x,V,U,Theta,S,V_x,U_x,g,q,r";

/// Smoothed composite wave and its residuals at the configured times.
pub fn profile_table(prep: &Prepared) -> Result<Vec<Vec<f64>>> {
    let p = &prep.profile;
    let sm = &prep.cfg.sampling;
    let speed = p.riemann.max_speed().max(1e-3);
    let mut rows = Vec::new();
    for &t in &sm.times {
        let reach = sm.reach * speed * (t + p.t0());
        for k in 0..sm.n_points {
            let x = -reach + 2.0 * reach * k as f64 / (sm.n_points - 1) as f64;
            let s = p.eval(t, x)?;
            let r = p.residuals_of(&s);
            rows.push(vec![t, x, s.v, s.u, s.theta, s.s, s.v_x, s.u_x, r.g, r.q, r.r]);
        }
    }
    Ok(rows)
}

pub fn write_riemann(prep: &Prepared, dir: &RunDir) -> Result<()> {
    std::fs::write(dir.file("config.resolved"), prep.resolved_text())?;
    write_csv(&dir.file("riemann.csv"), RIEMANN_HEADER, &riemann_table(prep)?)
}

pub fn write_profile(prep: &Prepared, dir: &RunDir) -> Result<()> {
    std::fs::write(dir.file("config.resolved"), prep.resolved_text())?;
    write_csv(&dir.file("profile.csv"), PROFILE_HEADER, &profile_table(prep)?)
}

/// One sweep member: the overrides applied and the outcome's headline numbers.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub overrides: Vec<String>,
    pub completed: bool,
    pub max_decay_ratio: f64,
    pub energy_constant: f64,
    pub min_entropy_rate: f64,
    pub chi_in_range: bool,
    pub jiang_max_error: Option<f64>,
}

pub const SWEEP_HEADER: &str = "member,completed,max_decay_ratio,energy_constant,min_entropy_rate,chi_in_range,jiang_max_error";

/// Override sets for a sweep: one per listed value of `key`, then `random`
/// members that rescale every bump amplitude by a factor drawn from
/// `[0.5, 1.5)` with the config seed.
pub fn sweep_members(cfg: &ExperimentConfig, key: Option<&str>, values: &[String], random: usize) -> Vec<(String, Vec<String>)> {
    let mut members: Vec<(String, Vec<String>)> = Vec::new();
    if let Some(k) = key {
        for v in values {
            members.push((format!("{k}={v}"), vec![format!("{k}={v}")]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for m in 0..random {
        let overrides = cfg
            .perturbation
            .bumps
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let f: f64 = rng.gen_range(0.5..1.5);
                format!("perturbation.bump.{i}.amplitude={}", b.amplitude * f)
            })
            .collect();
        members.push((format!("random-{m:03}"), overrides));
    }
    members
}

pub fn sweep(base_text: &str, base_overrides: &[String], key: Option<&str>, values: &[String], random: usize, root: &Path) -> Result<Vec<SweepRow>> {
    let base = ExperimentConfig::from_toml(base_text, base_overrides)?;
    let sweep_dir = RunDir::create(root, &format!("{}-sweep", base.name))?;
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    for (idx, (label, extra)) in sweep_members(&base, key, values, random).into_iter().enumerate() {
        let mut all = base_overrides.to_vec();
        all.extend(extra.iter().cloned());
        all.push(format!("name=\"{}-{idx:03}\"", base.name));
        let cfg = ExperimentConfig::from_toml(base_text, &all)?;
        let prep = Prepared::new(&cfg)?;
        let dir = RunDir::create(&sweep_dir.path, &cfg.name)?;
        let o = simulate(&prep, Some(&dir))?;
        let row = SweepRow {
            label,
            overrides: extra,
            completed: o.error.is_none(),
            max_decay_ratio: o.verdict.decay_ratios.iter().copied().fold(0.0, f64::max),
            energy_constant: o.verdict.energy_constant,
            min_entropy_rate: o.verdict.min_entropy_rate,
            chi_in_range: o.verdict.chi_in_range,
            jiang_max_error: o.jiang_max_error(),
        };
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        csv.push(vec![
            idx as f64,
            flag(row.completed),
            row.max_decay_ratio,
            row.energy_constant,
            row.min_entropy_rate,
            flag(row.chi_in_range),
            row.jiang_max_error.unwrap_or(f64::NAN),
        ]);
        rows.push(row);
    }
    write_csv(&sweep_dir.file("sweep.csv"), SWEEP_HEADER, &csv)?;
    write_json(&sweep_dir.file("sweep.json"), &rows)?;
    Ok(rows)
}
