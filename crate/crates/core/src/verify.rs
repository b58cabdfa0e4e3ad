//! The acceptance suite behind `nsac verify`.
//!
//! Each criterion produces a pass flag, a JSON block of the numbers it was
//! judged on and its wall time. Everything is written under
//! `<root>/verify-<level>/`, with `verdict.json` summarizing the lot.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{simulate_with_phi, sweep, write_profile, write_riemann, Prepared, SimulationOutcome};
use crate::gas::{phi_convex, Family, GasModel};
use crate::output::{write_json, RunDir};
use crate::presets::preset;
use crate::profile::WaveProfile;
use crate::solver::{mms_convergence, run, FieldState, Model, NullObserver, ProfileBoundary, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Quick => "quick",
            Level::Full => "full",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub level: Level,
    /// Criteria to run (1 to 8); empty runs all of them.
    pub only: Vec<u8>,
    /// Mutation smoke test: flip the sign of `Phi` in the energy monitor.
    pub tamper_phi: bool,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        VerifyOptions {
            level,
            only: Vec::new(),
            tamper_phi: false,
        }
    }

    fn wants(&self, id: u8) -> bool {
        self.only.is_empty() || self.only.contains(&id)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub details: Value,
}

impl CriterionResult {
    /// One line for terminals and test logs.
    pub fn line(&self) -> String {
        format!(
            "criterion {} ({}): {} in {:.2} s",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub tamper_phi: bool,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn criterion(&self, id: u8) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

pub fn verify_dir(root: &Path, level: Level) -> PathBuf {
    root.join(format!("verify-{}", level.name()))
}

/// Runs the selected criteria and writes `verdict.json`.
pub fn verify(opts: &VerifyOptions, root: &Path) -> Result<VerifyReport> {
    let dir = RunDir::create(root, &format!("verify-{}", opts.level.name()))?;
    let phi: fn(f64) -> Result<f64> = if opts.tamper_phi { flipped_phi } else { phi_convex };
    let mut criteria = Vec::new();

    // the stability runs dominate; start them first and do the rest meanwhile
    let stability = opts.wants(5) || opts.wants(6) || opts.wants(7);
    let (runs, quick_ones) = std::thread::scope(|scope| {
        let handles = stability.then(|| {
            let (fine, coarse) = match opts.level {
                Level::Quick => (2048, 1024),
                Level::Full => (4096, 2048),
            };
            let spawn = |n: usize, name: &'static str| {
                let path = dir.path.clone();
                scope.spawn(move || timed(|| stability_run(&path, name, n, phi)))
            };
            (spawn(fine, "stability"), spawn(coarse, "stability-coarse"))
        });
        let mut quick = Vec::new();
        let checks: [(u8, fn(&VerifyOptions, &RunDir) -> Result<CriterionResult>); 4] =
            [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4)];
        for (id, f) in checks {
            if opts.wants(id) {
                quick.push(f(opts, &dir));
            }
        }
        let runs = handles.map(|(a, b)| (a.join().expect("stability thread"), b.join().expect("stability thread")));
        (runs, quick)
    });
    for c in quick_ones {
        criteria.push(c?);
    }
    if let Some(((fine, t_fine), (coarse, t_coarse))) = runs {
        let fine = fine?;
        let coarse = coarse?;
        if opts.wants(5) {
            criteria.push(criterion_5(&fine, t_fine));
        }
        if opts.wants(6) {
            criteria.push(criterion_6(&fine, &coarse, t_fine.max(t_coarse)));
        }
        if opts.wants(7) {
            criteria.push(criterion_7(&fine, t_fine));
        }
    }
    if opts.wants(8) {
        criteria.push(criterion_8(&dir)?);
    }
    for c in &criteria {
        log::info!("{}", c.line());
    }
    let report = VerifyReport {
        level: opts.level,
        tamper_phi: opts.tamper_phi,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    write_json(&dir.file("verdict.json"), &report)?;
    Ok(report)
}

fn flipped_phi(x: f64) -> Result<f64> {
    Ok(-phi_convex(x)?)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn result(id: u8, name: &'static str, passed: bool, seconds: f64, budget_seconds: f64, mut details: Value) -> CriterionResult {
    let within = seconds <= budget_seconds;
    details["within_budget"] = json!(within);
    CriterionResult {
        id,
        name,
        passed: passed && within,
        seconds,
        budget_seconds,
        details,
    }
}

/// A preset with overrides applied and extra TOML appended.
pub fn preset_config(name: &str, overrides: &[String], extra: &str) -> Result<ExperimentConfig> {
    let text = preset(name).ok_or_else(|| Error::Config(format!("no preset named {name:?}")))?;
    ExperimentConfig::from_toml(&format!("{text}\n{extra}"), overrides)
}

fn overrides(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn criterion_1(_opts: &VerifyOptions, _dir: &RunDir) -> Result<CriterionResult> {
    let (details, secs) = timed(|| -> Result<(bool, Value)> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst_theta = 0.0f64;
        let mut worst_s = 0.0f64;
        let mut orders = Vec::new();
        for gamma in [1.05, 1.4, 5.0 / 3.0] {
            let gas = GasModel::new(1.0, 1.0, gamma, 1.0, 1.0)?;
            for _ in 0..1000 {
                let v = 10f64.powf(rng.gen_range(-1.0..1.0));
                let theta = 10f64.powf(rng.gen_range(-1.0..1.0));
                let s = gas.entropy_from_vtheta(v, theta)?;
                let back = gas.theta_from_vs(v, s)?;
                worst_theta = worst_theta.max((back - theta).abs() / theta);
                let s2 = gas.entropy_from_vtheta(v, back)?;
                worst_s = worst_s.max((s2 - s).abs() / s.abs().max(1.0));
            }
            // central differences at h and h/2; the ratio of errors gives the order
            for &(v, s) in &[(0.7, 0.0), (1.3, 0.4), (2.5, -0.3)] {
                let exact = gas.p_tilde_v(v, s)?;
                let fd = |h: f64| -> Result<f64> { Ok((gas.p_tilde(v + h, s)? - gas.p_tilde(v - h, s)?) / (2.0 * h)) };
                let e1 = (fd(1e-2)? - exact).abs();
                let e2 = (fd(5e-3)? - exact).abs();
                orders.push((e1 / e2).log2());
            }
        }
        let order_min = orders.iter().copied().fold(f64::INFINITY, f64::min);
        let order_max = orders.iter().copied().fold(0.0, f64::max);
        let ok = worst_theta <= 1e-12 && worst_s <= 1e-12 && (order_min - 2.0).abs() <= 0.1 && (order_max - 2.0).abs() <= 0.1;
        Ok((
            ok,
            json!({
                "samples_per_gamma": 1000,
                "theta_roundtrip_max_rel_error": worst_theta,
                "entropy_roundtrip_max_rel_error": worst_s,
                "p_tilde_v_fd_order_min": order_min,
                "p_tilde_v_fd_order_max": order_max,
            }),
        ))
    });
    let (ok, details) = details?;
    Ok(result(1, "thermodynamic closure", ok, secs, 1.0, details))
}

fn criterion_2(_opts: &VerifyOptions, dir: &RunDir) -> Result<CriterionResult> {
    let (out, secs) = timed(|| -> Result<(bool, Value)> {
        let prep = Prepared::new(&preset_config("reference", &[], "")?)?;
        write_riemann(&prep, &RunDir::create(&dir.path, "reference")?)?;
        let rd = &prep.profile.riemann;
        let gas = &prep.gas;
        let mut fan_error = 0.0f64;
        let mut points = 0;
        for (family, (lo, hi)) in [(Family::One, rd.fan1), (Family::Three, rd.fan3)] {
            for k in 0..50 {
                let xi = lo + (hi - lo) * (k as f64 + 0.5) / 50.0;
                let v = match family {
                    Family::One => rd.family_one(xi).0,
                    Family::Three => rd.family_three(xi).0,
                };
                fan_error = fan_error.max((gas.lambda(family, v, rd.s_bar)? - xi).abs() / xi.abs());
                points += 1;
            }
        }
        // one-sided values a hair either side of every fan edge
        let eta = 1e-10;
        let mut jump = 0.0f64;
        for edge in [rd.fan1.0, rd.fan1.1, rd.fan3.0, rd.fan3.1] {
            let a = rd.eval(edge - eta);
            let b = rd.eval(edge + eta);
            jump = jump.max((a.v - b.v).abs()).max((a.u - b.u).abs()).max((a.theta - b.theta).abs());
        }

        let flat = Prepared::new(&preset_config("equilibrium", &[], "")?)?;
        let fd = &flat.profile.riemann;
        let e = &flat.ends;
        let mut degenerate_exact = fd.v_m == e.v_minus
            && fd.u_m == e.u_minus
            && !fd.family_active(Family::One)
            && !fd.family_active(Family::Three);
        for k in 0..101 {
            let s = fd.eval(-5.0 + 0.1 * k as f64);
            degenerate_exact &= s.v == e.v_minus && s.u == e.u_minus;
        }

        let ok = rd.residual <= 1e-12 && fan_error <= 1e-12 && jump <= 1e-8 && degenerate_exact;
        Ok((
            ok,
            json!({
                "v_m": rd.v_m,
                "u_m": rd.u_m,
                "v_m_residual": rd.residual,
                "fan_points": points,
                "fan_self_similarity_max_rel_error": fan_error,
                "edge_jump_max": jump,
                "degenerate_exact": degenerate_exact,
            }),
        ))
    });
    let (ok, details) = out?;
    Ok(result(2, "riemann construction", ok, secs, 1.0, details))
}

/// Sup over `x` of `w_x` for one family: a coarse scan then golden-section refinement.
fn sup_slope(profile: &WaveProfile, family: Family, t: f64, reach: f64) -> Result<f64> {
    let slope = |x: f64| -> Result<f64> {
        let p = profile.eval(t, x)?;
        Ok(match family {
            Family::One => p.one.w_x,
            Family::Three => p.three.w_x,
        })
    };
    let n = 4001;
    let h = 2.0 * reach / (n - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..n {
        let x = -reach + h * k as f64;
        let s = slope(x)?;
        if s > best.0 {
            best = (s, x);
        }
    }
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if slope(c)? > slope(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(best.0.max(slope(0.5 * (a + b))?))
}

fn criterion_3(_opts: &VerifyOptions, dir: &RunDir) -> Result<CriterionResult> {
    let (out, secs) = timed(|| -> Result<(bool, Value)> {
        let prep = Prepared::new(&preset_config("reference", &[], "")?)?;
        write_profile(&prep, &RunDir::create(&dir.path, "reference")?)?;
        let p = &prep.profile;
        let speed = p.riemann.max_speed();
        let window = |t: f64| 1.5 * speed * (t + p.t0());

        // monotonicity and V_t = U_x > 0 on 5 x 2000 samples
        let mut samples = 0;
        let mut min_slope = f64::INFINITY;
        let mut min_u_x = f64::INFINITY;
        let mut max_vt_gap = 0.0f64;
        for t in [0.0, 10.0, 100.0, 1e3, 1e4] {
            let reach = window(t);
            for k in 0..2000 {
                let x = -reach + 2.0 * reach * k as f64 / 1999.0;
                let s = p.eval(t, x)?;
                min_slope = min_slope.min(s.one.w_x).min(s.three.w_x);
                min_u_x = min_u_x.min(s.u_x);
                max_vt_gap = max_vt_gap.max((s.v_t - s.u_x).abs());
                samples += 1;
            }
        }

        let times = [10.0, 100.0, 1e3, 1e4];
        let mut products = Vec::new();
        let mut non_increasing = true;
        for family in [Family::One, Family::Three] {
            let series: Vec<f64> = times
                .iter()
                .map(|&t| Ok(t * sup_slope(p, family, t, window(t))?))
                .collect::<Result<_>>()?;
            non_increasing &= series.windows(2).all(|w| w[1] <= 1.05 * w[0]);
            products.push(series);
        }

        let mut distances = Vec::new();
        for t in [1e2, 1e3, 1e4] {
            let reach = window(t);
            let xs: Vec<f64> = (0..2001).map(|k| -reach + 2.0 * reach * k as f64 / 2000.0).collect();
            distances.push(p.riemann_distance(t, &xs)?);
        }
        let decreasing = distances.windows(2).all(|w| w[1] < w[0]);

        let ok = min_slope > 0.0 && min_u_x > 0.0 && max_vt_gap <= 1e-8 && non_increasing && decreasing;
        Ok((
            ok,
            json!({
                "monotone_samples": samples,
                "min_w_x": min_slope,
                "min_u_x": min_u_x,
                "max_abs_v_t_minus_u_x": max_vt_gap,
                "times": times,
                "t_sup_w_x_family_1": products[0],
                "t_sup_w_x_family_3": products[1],
                "t_sup_w_x_non_increasing_within_5pct": non_increasing,
                "riemann_distance_times": [1e2, 1e3, 1e4],
                "riemann_distance": distances,
                "riemann_distance_strictly_decreasing": decreasing,
            }),
        ))
    });
    let (ok, details) = out?;
    Ok(result(3, "burgers and profile properties", ok, secs, 30.0, details))
}

fn criterion_4(opts: &VerifyOptions, _dir: &RunDir) -> Result<CriterionResult> {
    let (out, secs) = timed(|| -> Result<(bool, Value)> {
        let reference = preset_config("reference", &[], "")?;
        let levels: &[usize] = match opts.level {
            Level::Quick => &[64, 128, 256],
            Level::Full => &[256, 512, 1024],
        };
        let study = mms_convergence(&reference.gas, Model::NavierStokesAllenCahn, levels, 0.25, 0.4, 0.15)?;
        let min_order = study.min_order();

        // constant state held by its own Dirichlet data for 10^4 steps
        let flat = Prepared::new(&preset_config("equilibrium", &[], "")?)?;
        let bc = ProfileBoundary(&flat.profile);
        let mut s = flat.initial.clone();
        let mut stepper = Stepper::new(&flat.gas, &flat.grid, Model::NavierStokesAllenCahn, &bc, None);
        for _ in 0..10_000 {
            stepper.step(&mut s, flat.derived.dt0)?;
        }
        let drift = max_abs_diff(&s, &flat.initial);

        // a pure phase must follow the Navier-Stokes code path
        let bumps = "[[perturbation.bump]]\nfield = \"v\"\nshape = \"sech2\"\namplitude = 0.3\nwidth = 1.4\n\
                     [[perturbation.bump]]\nfield = \"u\"\nshape = \"sech2\"\namplitude = -0.2\nwidth = 1.4\n\
                     [[perturbation.bump]]\nfield = \"theta\"\nshape = \"sech2\"\namplitude = 0.1\nwidth = 1.4\n";
        let cfg = preset_config(
            "reference",
            &overrides(&["grid.n_cells=512", "grid.half_width=40.0", "solver.t_end=1.0", "solver.cadence=1.0"]),
            bumps,
        )?;
        let prep = Prepared::new(&cfg)?;
        let bc = ProfileBoundary(&prep.profile);
        let mut a = prep.initial.clone();
        let mut b = prep.initial.clone();
        let mut ns = cfg.solver;
        ns.model = Model::NavierStokes;
        run(&prep.gas, &prep.grid, &cfg.solver, &bc, None, &mut a, &mut NullObserver)?;
        run(&prep.gas, &prep.grid, &ns, &bc, None, &mut b, &mut NullObserver)?;
        let reduction_gap = max_abs_diff(&a, &b);

        let ok = min_order >= 1.9 && drift <= 1e-12 && reduction_gap <= 1e-10 && a.t == 1.0;
        Ok((
            ok,
            json!({
                "mms": study,
                "mms_min_order": min_order,
                "equilibrium_steps": 10_000,
                "equilibrium_max_drift": drift,
                "chi_one_vs_navier_stokes_max_diff": reduction_gap,
                "comparison_time": a.t,
            }),
        ))
    });
    let (ok, details) = out?;
    Ok(result(4, "solver verification", ok, secs, 300.0, details))
}

fn max_abs_diff(a: &FieldState, b: &FieldState) -> f64 {
    (0..4)
        .flat_map(|f| a.field(f).iter().zip(b.field(f)))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn stability_run(root: &Path, name: &str, n: usize, phi: fn(f64) -> Result<f64>) -> Result<SimulationOutcome> {
    let cfg = preset_config("stability", &[format!("grid.n_cells={n}"), format!("name=\"{name}\"")], "")?;
    let prep = Prepared::new(&cfg)?;
    let dir = RunDir::create(root, name)?;
    simulate_with_phi(&prep, Some(&dir), phi)
}

fn criterion_5(o: &SimulationOutcome, secs: f64) -> CriterionResult {
    let v = &o.verdict;
    let energy_ok = v.energy_monitor_ok && v.energy_bound_ok;
    let ok = o.error.is_none() && v.positivity_ok && v.chi_in_range && v.decay_ok && energy_ok;
    result(
        5,
        "stability experiment",
        ok,
        secs,
        900.0,
        json!({
            "n_cells": o.final_state.len(),
            "t_final": o.final_state.t,
            "error": o.error,
            "positivity_ok": v.positivity_ok,
            "chi_range": [v.running_bounds.chi_min, v.running_bounds.chi_max],
            "chi_in_range": v.chi_in_range,
            "decay_ratios_phi_psi_zeta_varphi_xi": v.decay_ratios,
            "decay_ok": v.decay_ok,
            "energy_constant": v.energy_constant,
            "energy_monitor_ok": v.energy_monitor_ok,
            "energy_bound_ok": v.energy_bound_ok,
        }),
    )
}

fn criterion_6(fine: &SimulationOutcome, coarse: &SimulationOutcome, secs: f64) -> CriterionResult {
    let empty = Vec::new();
    let f = fine.jiang.as_ref().unwrap_or(&empty);
    let c = coarse.jiang.as_ref().unwrap_or(&empty);
    let within = f.iter().filter(|p| p.rel_error <= 0.03).count();
    let decreasing = f.len() == c.len() && f.iter().zip(c).all(|(a, b)| a.rel_error < b.rel_error);
    let ok = fine.jiang_error.is_none() && f.len() >= 3 && within >= 3 && decreasing;
    result(
        6,
        "jiang representation",
        ok,
        secs,
        960.0,
        json!({
            "probes": f.iter().map(|p| p.x).collect::<Vec<_>>(),
            "rel_error": f.iter().map(|p| p.rel_error).collect::<Vec<_>>(),
            "rel_error_coarse": c.iter().map(|p| p.rel_error).collect::<Vec<_>>(),
            "quadrature_estimate": f.iter().map(|p| p.quadrature_estimate).collect::<Vec<_>>(),
            "probes_within_3pct": within,
            "decreasing_under_refinement": decreasing,
            "history_error": fine.jiang_error,
        }),
    )
}

fn criterion_7(o: &SimulationOutcome, secs: f64) -> CriterionResult {
    let v = &o.verdict;
    result(
        7,
        "entropy monotonicity",
        o.error.is_none() && v.entropy_ok,
        secs,
        900.0,
        json!({
            "min_entropy_rate": v.min_entropy_rate,
            "slack": v.entropy_slack,
        }),
    )
}

fn criterion_8(dir: &RunDir) -> Result<CriterionResult> {
    let (out, secs) = timed(|| -> Result<(bool, Value)> {
        let root = RunDir::create(&dir.path, "determinism")?;
        let bumps = "[[perturbation.bump]]\nfield = \"u\"\nshape = \"sech2\"\namplitude = 0.3\nwidth = 1.0\n\
                     [[perturbation.bump]]\nfield = \"chi\"\nshape = \"sech2\"\namplitude = -0.2\nwidth = 2.0\n\
                     [diagnostics]\nprobes = [-2.0, 0.0, 2.0]\nsnapshot_every = 2\n";
        let small = overrides(&["grid.n_cells=256", "grid.half_width=30.0", "solver.t_end=2.0", "solver.cadence=0.5"]);
        let text = format!("{}\n{bumps}", preset("reference").expect("reference preset"));
        for side in ["a", "b"] {
            let out = RunDir::create(&root.path, side)?;
            let cfg = ExperimentConfig::from_toml(&text, &small)?;
            let prep = Prepared::new(&cfg)?;
            write_riemann(&prep, &out)?;
            write_profile(&prep, &out)?;
            let run_dir = RunDir::create(&out.path, &cfg.name)?;
            simulate_with_phi(&prep, Some(&run_dir), phi_convex)?;
            let mut sweep_over = small.clone();
            sweep_over.push("solver.t_end=0.5".into());
            sweep(&text, &sweep_over, None, &[], 2, &out.path)?;
        }
        let a = csv_files(&root.path.join("a"))?;
        let b = csv_files(&root.path.join("b"))?;
        let mut identical = !a.is_empty() && a.len() == b.len();
        let mut differing = Vec::new();
        for ((pa, ba), (pb, bb)) in a.iter().zip(&b) {
            if pa != pb || ba != bb {
                identical = false;
                differing.push(pa.display().to_string());
            }
        }
        Ok((
            identical,
            json!({
                "csv_files_compared": a.len(),
                "differing": differing,
            }),
        ))
    });
    let (ok, details) = out?;
    Ok(result(8, "determinism", ok, secs, 120.0, details))
}

/// All CSV files below `root`, as (relative path, bytes), sorted by path.
pub fn csv_files(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                let rel = p.strip_prefix(root).expect("below root").to_path_buf();
                out.push((rel, fs::read(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}
