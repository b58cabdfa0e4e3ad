use nsac_core::gas::{Family, GasModel};
use nsac_core::profile::WaveProfile;
use nsac_core::riemann::{rarefaction_integral, EndStates};
use nsac_core::SmoothingConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference(eps_w: f64) -> WaveProfile {
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let ends = EndStates::isentropic(&gas, 1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
    WaveProfile::new(&gas, &ends, SmoothingConfig { eps_w, q_exp: 2.0 }).unwrap()
}

/// Random `(t, x)` inside the region where the waves live.
fn samples(p: &WaveProfile, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = p.riemann.max_speed();
    (0..n)
        .map(|_| {
            let t = 10f64.powf(rng.gen_range(-1.0..3.0));
            let reach = 1.2 * speed * (t + p.t0());
            (t, rng.gen_range(-reach..reach))
        })
        .collect()
}

#[test]
fn each_family_is_its_burgers_wave() {
    let p = reference(0.1);
    let (w1, w3) = (p.w1, p.w3);
    for (t, x) in samples(&p, 1000, 1) {
        let s = p.eval(t, x).unwrap();
        let l1 = p.gas.lambda(Family::One, s.one.v, p.riemann.s_bar).unwrap();
        let l3 = p.gas.lambda(Family::Three, s.three.v, p.riemann.s_bar).unwrap();
        assert!((l1 - s.one.w).abs() <= 1e-12 * l1.abs(), "{l1} vs {}", s.one.w);
        assert!((l3 - s.three.w).abs() <= 1e-12 * l3);
        assert!(w1.0 < s.one.w && s.one.w < w1.1 && s.one.w_x > 0.0);
        assert!(w3.0 < s.three.w && s.three.w < w3.1 && s.three.w_x > 0.0);
        // U_1 lies on the 1-curve through the left state
        let e = p.ends();
        let u1 = e.u_minus + rarefaction_integral(&p.gas, e.v_minus, s.one.v, p.riemann.s_bar).unwrap();
        assert!((s.one.u - u1).abs() <= 1e-12);
    }
}

#[test]
fn volume_rate_equals_positive_velocity_gradient() {
    let p = reference(0.1);
    for (t, x) in samples(&p, 1000, 2) {
        let s = p.eval(t, x).unwrap();
        assert!((s.v_t - s.u_x).abs() <= 1e-8);
        assert!(s.u_x > 0.0);
    }
}

#[test]
fn derivatives_converge_at_second_order() {
    let p = reference(0.1);
    for (t, x) in [(0.3, -2.0), (5.0, 1.0), (40.0, -20.0), (200.0, 60.0)] {
        let s = p.eval(t, x).unwrap();
        let scale = s.v_x.abs().max(s.u_x.abs()).max(s.theta_x.abs()).max(1e-12);
        let err = |h: f64| {
            let a = p.eval(t, x - h).unwrap();
            let b = p.eval(t, x + h).unwrap();
            let c = p.eval(t - h, x).unwrap();
            let d = p.eval(t + h, x).unwrap();
            [
                ((b.v - a.v) / (2.0 * h) - s.v_x).abs(),
                ((b.u - a.u) / (2.0 * h) - s.u_x).abs(),
                ((b.theta - a.theta) / (2.0 * h) - s.theta_x).abs(),
                ((d.v - c.v) / (2.0 * h) - s.v_t).abs(),
                ((d.theta - c.theta) / (2.0 * h) - s.theta_t).abs(),
            ]
        };
        let h = 0.05 * t.min(10.0);
        let (coarse, fine) = (err(h), err(h / 2.0));
        for k in 0..5 {
            // below this the difference quotient is rounding noise, not truncation
            if coarse[k] < 1e-9 * scale {
                continue;
            }
            let order = (coarse[k] / fine[k]).log2();
            assert!((order - 2.0).abs() < 0.2, "t={t} x={x} component {k}: order {order}");
        }
    }
}

#[test]
fn residuals_match_their_display_forms() {
    let p = reference(0.1);
    let gas = &p.gas;
    let cv = gas.cv();
    for (t, x) in samples(&p, 200, 3) {
        let s = p.eval(t, x).unwrap();
        let res = p.residuals_of(&s);
        let pressure = gas.r * s.theta / s.v;
        // r: the pressure work of the sum minus that of each family
        let r_display = pressure * s.u_x - s.one.pressure(gas) * s.one.u_x - s.three.pressure(gas) * s.three.u_x;
        let scale = pressure * s.u_x.abs() + 1e-300;
        assert!((res.r - r_display).abs() <= 1e-10 * scale, "r {} vs {r_display}", res.r);

        // q: energy and flux defects differentiated numerically
        let h = 1e-3 * (t + p.t0());
        let energy = |tt: f64, xx: f64| {
            let a = p.eval(tt, xx).unwrap();
            cv * (a.theta - a.one.theta - a.three.theta) + 0.5 * (a.u * a.u - a.one.u * a.one.u - a.three.u * a.three.u)
        };
        let flux = |xx: f64| {
            let a = p.eval(t, xx).unwrap();
            a.u * gas.r * a.theta / a.v - a.one.u * a.one.pressure(gas) - a.three.u * a.three.pressure(gas)
        };
        let q_display = (energy(t + h, x) - energy(t - h, x)) / (2.0 * h) + (flux(x + h) - flux(x - h)) / (2.0 * h);
        let q_scale = (s.u.abs() + 1.0) * scale;
        assert!((res.q - q_display).abs() <= 1e-5 * q_scale, "q {} vs {q_display}", res.q);
    }
}

#[test]
fn one_wave_data_has_no_pressure_defect() {
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let s_bar = 0.2;
    let theta = gas.theta_from_vs(2.0, s_bar).unwrap();
    // (v+, u+) on the 3-curve through the left state
    let du = rarefaction_integral(&gas, 1.0, 2.0, s_bar).unwrap();
    let ends = EndStates::isentropic(&gas, 2.0, 0.0, theta, 1.0, du).unwrap();
    let p = WaveProfile::new(&gas, &ends, SmoothingConfig::default()).unwrap();
    assert!(!p.riemann.family_active(Family::One));
    for (t, x) in samples(&p, 500, 4) {
        let r = p.residuals(t, x).unwrap();
        assert!(r.g.abs() <= 1e-10 && r.g_x.abs() <= 1e-10, "g = {}", r.g);
    }
}

#[test]
fn constant_data_gives_zero_residuals() {
    let gas = GasModel::new(1.0, 1.0, 1.4, 1.0, 1.0).unwrap();
    let ends = EndStates::isentropic(&gas, 1.3, 0.4, 0.9, 1.3, 0.4).unwrap();
    let p = WaveProfile::new(&gas, &ends, SmoothingConfig::default()).unwrap();
    for (t, x) in [(0.0, 0.0), (3.0, -50.0), (1e3, 7.0)] {
        let s = p.eval(t, x).unwrap();
        assert_eq!((s.v, s.u, s.theta), (1.3, 0.4, 0.9));
        assert_eq!((s.v_x, s.u_x, s.v_t), (0.0, 0.0, 0.0));
        let r = p.residuals(t, x).unwrap();
        assert_eq!((r.g, r.q, r.r), (0.0, 0.0, 0.0));
    }
}

#[test]
fn pressure_defect_gradient_decays_in_l1() {
    // fitted envelope: log-log slope of ||g_x(t)||_L1 at late times stays
    // below -2q/3 + 0.3
    let p = reference(0.1);
    let q = 2.0;
    let speed = p.riemann.max_speed();
    let times = [1e2, 1e3, 1e4];
    let norms: Vec<f64> = times
        .iter()
        .map(|&t| {
            let reach = 1.5 * speed * (t + p.t0());
            let n = 20_000;
            let h = 2.0 * reach / n as f64;
            (0..=n)
                .map(|k| {
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    w * p.residuals(t, -reach + h * k as f64).unwrap().g_x.abs() * h
                })
                .sum()
        })
        .collect();
    for (w, t) in norms.windows(2).zip(times.windows(2)) {
        let slope = (w[1] / w[0]).ln() / (t[1] / t[0]).ln();
        assert!(slope <= -2.0 * q / 3.0 + 0.3, "norms {norms:?}, slope {slope}");
    }
}

#[test]
fn far_field_is_reached_at_the_automatic_half_width() {
    let p = reference(0.1);
    let l = p.auto_half_width(10.0, 1e-6).unwrap();
    for t in [0.0, 10.0] {
        let s = p.eval(t, l).unwrap();
        assert!((s.v - p.ends().v_plus).abs() <= 1e-6);
        let s = p.eval(t, -l).unwrap();
        assert!((s.v - p.ends().v_minus).abs() <= 1e-6);
    }
}
