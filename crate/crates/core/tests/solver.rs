use nsac_core::gas::GasModel;
use nsac_core::profile::WaveProfile;
use nsac_core::riemann::EndStates;
use nsac_core::solver::{
    mms_convergence, rhs, run, stable_dt, Boundary, FieldState, Grid, Model, NullObserver, ProfileBoundary,
    Rates, SolverConfig, Stepper,
};
use nsac_core::{Result, SmoothingConfig};

struct Frozen([f64; 4]);

impl Boundary for Frozen {
    fn state(&self, _t: f64, _x: f64) -> Result<[f64; 4]> {
        Ok(self.0)
    }
}

fn cfg(t_end: f64, model: Model) -> SolverConfig {
    SolverConfig {
        cfl_hyperbolic: 0.4,
        cfl_parabolic: 0.15,
        t_end,
        cadence: t_end,
        model,
    }
}

fn wave() -> (GasModel, WaveProfile) {
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let ends = EndStates::isentropic(&gas, 1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
    let p = WaveProfile::new(&gas, &ends, SmoothingConfig { eps_w: 0.5, q_exp: 2.0 }).unwrap();
    (gas, p)
}

fn bumpy(grid: &Grid, profile: &WaveProfile, chi_amp: f64) -> FieldState {
    FieldState::from_fn(grid, 0.0, |x| {
        let p = profile.eval(0.0, x)?;
        let b = 1.0 / (0.7 * x).cosh().powi(2);
        Ok([p.v + 0.3 * b, p.u - 0.2 * b, p.theta + 0.1 * b, 1.0 + chi_amp * b])
    })
    .unwrap()
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let study = mms_convergence(&gas, Model::NavierStokesAllenCahn, &[64, 128, 256], 0.25, 0.4, 0.15).unwrap();
    for o in &study.orders {
        for &x in o {
            assert!(x >= 1.9, "orders {:?}", study.orders);
        }
    }
}

#[test]
fn interior_volume_changes_only_by_boundary_velocity() {
    let (gas, profile) = wave();
    let grid = Grid::symmetric(40.0, 256).unwrap();
    let bc = ProfileBoundary(&profile);
    let mut s = bumpy(&grid, &profile, -0.4);
    s.apply_boundary(&grid, &bc).unwrap();
    let c = cfg(1.0, Model::NavierStokesAllenCahn);
    let mut stepper = Stepper::new(&gas, &grid, Model::NavierStokesAllenCahn, &bc, None);
    for _ in 0..100 {
        let before = s.interior_volume(&grid);
        let dt = stable_dt(&gas, &grid, &c, &s);
        let info = stepper.step(&mut s, dt).unwrap();
        let after = s.interior_volume(&grid);
        assert!((after - before - info.dt * info.volume_flux).abs() <= 1e-10);
    }
}

#[test]
fn pure_phase_run_matches_navier_stokes_path() {
    let (gas, profile) = wave();
    let grid = Grid::symmetric(40.0, 512).unwrap();
    let bc = ProfileBoundary(&profile);
    let init = bumpy(&grid, &profile, 0.0);
    let mut a = init.clone();
    let mut b = init;
    run(&gas, &grid, &cfg(1.0, Model::NavierStokesAllenCahn), &bc, None, &mut a, &mut NullObserver).unwrap();
    run(&gas, &grid, &cfg(1.0, Model::NavierStokes), &bc, None, &mut b, &mut NullObserver).unwrap();
    assert_eq!(a.t, 1.0);
    let diff = a
        .v
        .iter()
        .zip(&b.v)
        .chain(a.u.iter().zip(&b.u))
        .chain(a.theta.iter().zip(&b.theta))
        .chain(a.chi.iter().zip(&b.chi))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-10, "max difference {diff}");
}

#[test]
fn equilibrium_survives_ten_thousand_steps() {
    let gas = GasModel::new(1.0, 1.0, 1.05, 1.0, 10.0).unwrap();
    let grid = Grid::symmetric(20.0, 128).unwrap();
    let c = [1.7, 0.3, 0.8, 1.0];
    let bc = Frozen(c);
    let mut s = FieldState::uniform(&grid, 0.0, c);
    let dt = stable_dt(&gas, &grid, &cfg(1.0, Model::default()), &s);
    let mut stepper = Stepper::new(&gas, &grid, Model::default(), &bc, None);
    for _ in 0..10_000 {
        stepper.step(&mut s, dt).unwrap();
    }
    let reference = FieldState::uniform(&grid, s.t, c);
    let dev = s
        .v
        .iter()
        .zip(&reference.v)
        .chain(s.u.iter().zip(&reference.u))
        .chain(s.theta.iter().zip(&reference.theta))
        .chain(s.chi.iter().zip(&reference.chi))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(dev <= 1e-12);
}

// d/dt of sum (C_v theta + u^2/2 + (1 - chi^2)^2/4) dx + sum_faces chi_x^2/(2 v_f) dx
fn energy_rate(gas: &GasModel, grid: &Grid, s: &FieldState, k: &Rates) -> f64 {
    let n = grid.n_cells;
    let mut rate = 0.0;
    for i in 1..n - 1 {
        let chi = s.chi[i];
        rate += gas.cv() * k.theta[i] + s.u[i] * k.u[i] + (chi * chi * chi - chi) * k.chi[i];
    }
    for j in 0..n - 1 {
        let vf = 0.5 * (s.v[j] + s.v[j + 1]);
        let vf_t = 0.5 * (k.v[j] + k.v[j + 1]);
        let cx = (s.chi[j + 1] - s.chi[j]) / grid.dx;
        let cx_t = (k.chi[j + 1] - k.chi[j]) / grid.dx;
        rate += cx * cx_t / vf - 0.5 * cx * cx * vf_t / (vf * vf);
    }
    rate * grid.dx
}

#[test]
fn capillary_energy_exchange_is_second_order_consistent() {
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let mut rates = Vec::new();
    for n in [400, 800, 1600] {
        let grid = Grid::symmetric(30.0, n).unwrap();
        let s = FieldState::from_fn(&grid, 0.0, |x| {
            let b = 1.0 / x.cosh().powi(2);
            let c = 1.0 / (x - 0.7).cosh().powi(2);
            Ok([1.0 + 0.2 * b, 0.3 * b * x.tanh() + 0.1 * c, 1.0 - 0.1 * b, 1.0 - 0.3 * c])
        })
        .unwrap();
        let mut k = Rates::zeros(grid.n_cells);
        rhs(&gas, &grid, &s, None, &mut k).unwrap();
        rates.push(energy_rate(&gas, &grid, &s, &k).abs());
    }
    for w in rates.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{rates:?}");
    }
}

#[test]
fn energy_changes_only_through_the_boundary_for_pure_phase() {
    // chi = 1 and a bump well inside the domain: the discrete energy rate must
    // vanish up to the boundary work, which is zero for a frozen far field
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let grid = Grid::symmetric(30.0, 600).unwrap();
    let s = FieldState::from_fn(&grid, 0.0, |x| {
        let b = 1.0 / x.cosh().powi(2);
        Ok([1.0 + 0.2 * b, 0.3 * b, 1.0 - 0.1 * b, 1.0])
    })
    .unwrap();
    let mut k = Rates::zeros(grid.n_cells);
    rhs(&gas, &grid, &s, None, &mut k).unwrap();
    let rate = energy_rate(&gas, &grid, &s, &k);
    assert!(rate.abs() <= 1e-8, "rate {rate}");
}

#[test]
fn entropy_is_produced_not_destroyed() {
    let (gas, profile) = wave();
    let grid = Grid::symmetric(40.0, 400).unwrap();
    let bc = ProfileBoundary(&profile);
    let mut s = bumpy(&grid, &profile, -0.4);
    s.apply_boundary(&grid, &bc).unwrap();
    let c = cfg(1.0, Model::default());
    let mut stepper = Stepper::new(&gas, &grid, Model::default(), &bc, None);
    let s_bar = profile.riemann.s_bar;
    let integral = |s: &FieldState| -> f64 {
        (1..grid.n_cells - 1)
            .map(|i| gas.entropy_from_vtheta(s.v[i], s.theta[i]).unwrap() - s_bar)
            .sum::<f64>()
            * grid.dx
    };
    let mut prev = integral(&s);
    let slack = 1e-8 * grid.n_cells as f64 * grid.dx;
    while s.t < 2.0 {
        let dt = stable_dt(&gas, &grid, &c, &s);
        stepper.step(&mut s, dt).unwrap();
        let now = integral(&s);
        assert!(now - prev >= -slack * dt, "entropy dropped by {}", prev - now);
        prev = now;
    }
}
