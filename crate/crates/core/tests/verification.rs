//! Acceptance run: the full verification level, judged here against pinned
//! tolerances, plus two back-to-back quick runs compared byte for byte.

use nsac_core::verify::{csv_files, verify, verify_dir, Level, VerifyOptions, VerifyReport};
use serde_json::Value;

fn num(d: &Value, key: &str) -> f64 {
    d[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {d}"))
}

fn nums(d: &Value, key: &str) -> Vec<f64> {
    d[key]
        .as_array()
        .unwrap_or_else(|| panic!("missing {key} in {d}"))
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn flag(d: &Value, key: &str) -> bool {
    d[key].as_bool().unwrap_or_else(|| panic!("missing {key} in {d}"))
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Re-judges one criterion from its reported numbers; returns (pass, summary).
fn judge(report: &VerifyReport, id: u8) -> (bool, String) {
    let c = report.criterion(id).unwrap_or_else(|| panic!("criterion {id} did not run"));
    let d = &c.details;
    let budget = c.seconds <= c.budget_seconds;
    let (ok, what) = match id {
        1 => {
            let rt = num(d, "theta_roundtrip_max_rel_error").max(num(d, "entropy_roundtrip_max_rel_error"));
            let lo = num(d, "p_tilde_v_fd_order_min");
            let hi = num(d, "p_tilde_v_fd_order_max");
            (
                rt <= 1e-12 && (lo - 2.0).abs() <= 0.1 && (hi - 2.0).abs() <= 0.1,
                format!("round trip {rt:.2e} (tol 1e-12), fd order in [{lo:.4}, {hi:.4}]"),
            )
        }
        2 => {
            let res = num(d, "v_m_residual");
            let fan = num(d, "fan_self_similarity_max_rel_error");
            let jump = num(d, "edge_jump_max");
            let exact = flag(d, "degenerate_exact");
            (
                res <= 1e-12 && fan <= 1e-12 && jump <= 1e-8 && exact,
                format!("v_m residual {res:.2e}, fan {fan:.2e}, edge jump {jump:.2e}, degenerate exact {exact}"),
            )
        }
        3 => {
            let w = num(d, "min_w_x");
            let ux = num(d, "min_u_x");
            let gap = num(d, "max_abs_v_t_minus_u_x");
            let mut growth = true;
            for key in ["t_sup_w_x_family_1", "t_sup_w_x_family_3"] {
                growth &= nums(d, key).windows(2).all(|p| p[1] <= 1.05 * p[0]);
            }
            let dist = nums(d, "riemann_distance");
            let dec = dist.windows(2).all(|p| p[1] < p[0]);
            (
                w > 0.0 && ux > 0.0 && gap <= 1e-8 && growth && dec,
                format!(
                    "min w_x {w:.2e}, min U_x {ux:.2e}, |V_t-U_x| {gap:.2e}, t sup w_x (family 1) {:?} non-increasing within 5%: {growth}, distance {dist:?}",
                    nums(d, "t_sup_w_x_family_1")
                ),
            )
        }
        4 => {
            let order = num(d, "mms_min_order");
            let drift = num(d, "equilibrium_max_drift");
            let gap = num(d, "chi_one_vs_navier_stokes_max_diff");
            (
                order >= 1.9 && drift <= 1e-12 && gap <= 1e-10 && num(d, "comparison_time") == 1.0,
                format!("mms order {order:.3}, equilibrium drift {drift:.2e}, reduction gap {gap:.2e}"),
            )
        }
        5 => {
            let ratios = nums(d, "decay_ratios_phi_psi_zeta_varphi_xi");
            let chi = nums(d, "chi_range");
            let k = num(d, "energy_constant");
            let ok = d["error"].is_null()
                && flag(d, "positivity_ok")
                && chi[0] >= -0.01
                && chi[1] <= 1.01
                && ratios.iter().all(|&r| r <= 0.2)
                && k <= 10.0
                && flag(d, "energy_bound_ok");
            (ok, format!("decay ratios {ratios:.3?}, chi in [{:.4}, {:.4}], energy constant {k:.3}", chi[0], chi[1]))
        }
        6 => {
            let fine = nums(d, "rel_error");
            let coarse = nums(d, "rel_error_coarse");
            let within = fine.iter().filter(|&&e| e <= 0.03).count();
            let dec = fine.len() == coarse.len() && fine.iter().zip(&coarse).all(|(f, c)| f < c);
            (
                d["history_error"].is_null() && within >= 3 && dec,
                format!("errors {}, one level coarser {}", sci(&fine), sci(&coarse)),
            )
        }
        7 => {
            let rate = num(d, "min_entropy_rate");
            let slack = num(d, "slack");
            (rate >= -slack, format!("min d/dt int(s - S) {rate:.3e}, slack {slack:.2e}"))
        }
        8 => (
            d["differing"].as_array().is_some_and(|a| a.is_empty()) && num(d, "csv_files_compared") > 0.0,
            format!("{} CSV files identical across two runs", num(d, "csv_files_compared")),
        ),
        _ => unreachable!(),
    };
    (ok && budget, format!("{what}; {:.1} s of {:.0} s", c.seconds, c.budget_seconds))
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let full = verify(&VerifyOptions::new(Level::Full), &tmp.path().join("full")).unwrap();

    // criterion 8 at the suite level: two quick runs into separate roots
    let roots = [tmp.path().join("quick-a"), tmp.path().join("quick-b")];
    for r in &roots {
        verify(&VerifyOptions::new(Level::Quick), r).unwrap();
    }
    let a = csv_files(&verify_dir(&roots[0], Level::Quick)).unwrap();
    let b = csv_files(&verify_dir(&roots[1], Level::Quick)).unwrap();
    let quick_identical = !a.is_empty() && a == b;

    let mut all = true;
    for id in 1..=8u8 {
        let (mut ok, mut what) = judge(&full, id);
        if id == 8 {
            ok &= quick_identical;
            what = format!("{what}; two quick runs: {} CSV files identical: {quick_identical}", a.len());
        }
        let name = full.criterion(id).unwrap().name;
        println!("criterion {id} ({name}): {}: {what}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    }
    assert!(all, "some acceptance criteria failed; see the lines above");
}
