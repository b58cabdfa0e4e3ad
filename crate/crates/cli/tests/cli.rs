use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nsac(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsac"))
        .args(args)
        .env("NSAC_OUTPUT_ROOT", root)
        .output()
        .expect("nsac runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// All CSV files below `dir` with their bytes, sorted by relative path.
fn csv_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn riemann_reference_prints_the_intermediate_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(tmp.path(), &["riemann", "--preset", "reference"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("v_m=2.24370137554073"), "{text}");
    assert!(text.contains("u_m=0.88291659770871"), "{text}");
    let dir = tmp.path().join("reference");
    let csv = fs::read_to_string(dir.join("riemann.csv")).unwrap();
    assert!(csv.starts_with("xi,V,U,Theta,S\n"));
    let resolved = fs::read_to_string(dir.join("config.resolved")).unwrap();
    for key in ["[derived]", "k_q", "t0", "dt0", "delta"] {
        assert!(resolved.contains(key), "config.resolved lacks {key}");
    }
}

#[test]
fn constant_data_has_empty_fans() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(tmp.path(), &["riemann", "--preset", "equilibrium"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("1-fan         empty") && text.contains("3-fan         empty"), "{text}");
    assert!(text.contains("delta=0"));
}

#[test]
fn shock_data_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(tmp.path(), &["riemann", "--preset", "shock"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("two-rarefaction"), "{}", stderr(&o));
}

#[test]
fn bad_input_is_rejected_before_any_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(tmp.path(), &["riemann", "--preset", "nope"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("available: reference"));
    let o = nsac(tmp.path(), &["simulate", "--preset", "reference", "--set", "ends.theta_plus=1.0"]);
    assert!(!o.status.success());
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none(), "nothing should be written");
}

#[test]
fn help_documents_the_csv_columns() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, cols) in [
        ("riemann", vec!["xi", "Theta"]),
        ("profile", vec!["V_x,U_x", "q,r"]),
        ("simulate", vec!["fields_NNNNN.csv", "cumulative_dissipation", "jiang_rel_error", "chi_flag"]),
        ("sweep", vec!["max_decay_ratio", "jiang_max_error"]),
    ] {
        let o = nsac(tmp.path(), &[cmd, "--help"]);
        let text = stdout(&o);
        for c in cols {
            assert!(text.contains(c), "{cmd} --help lacks {c}");
        }
    }
}

#[test]
fn simulate_writes_the_run_layout_and_profile_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(
        tmp.path(),
        &["simulate", "--preset", "equilibrium", "--set", "solver.t_end=1.0", "--set", "name=\"eq\""],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("eq");
    for f in ["config.resolved", "diagnostics.csv", "summary.json", "fields_00000.csv", "fields_00001.csv"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let diag = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 3);

    let first = {
        nsac(tmp.path(), &["profile", "--preset", "reference", "--times", "0,5"]);
        fs::read(tmp.path().join("reference/profile.csv")).unwrap()
    };
    nsac(tmp.path(), &["profile", "--preset", "reference", "--times", "0,5"]);
    assert_eq!(first, fs::read(tmp.path().join("reference/profile.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next(), Some("t,x,V,U,Theta,S,V_x,U_x,g,q,r"));
    assert_eq!(text.lines().count(), 1 + 2 * 401);
}

#[test]
fn sweep_over_a_key_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(
        tmp.path(),
        &["sweep", "--preset", "equilibrium", "--set", "solver.t_end=0.5", "--key", "gas.kappa", "--values", "1.0,2.0"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("equilibrium-sweep/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn tampered_phi_fails_the_energy_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nsac(tmp.path(), &["verify", "quick", "--only", "5", "--tamper-phi"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("criterion 5 (stability experiment): FAIL"));
    let verdict = fs::read_to_string(tmp.path().join("verify-quick/verdict.json")).unwrap();
    assert!(verdict.contains("\"energy_bound_ok\": false"));
}

#[test]
fn two_quick_verifications_write_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for root in [&a, &b] {
        // exit status reflects the criteria, not the outputs compared here
        let o = nsac(root, &["verify", "quick"]);
        assert!(o.status.code().is_some_and(|c| c <= 1), "{}", stderr(&o));
    }
    let ta = csv_tree(&a.join("verify-quick"));
    let tb = csv_tree(&b.join("verify-quick"));
    assert!(!ta.is_empty());
    assert_eq!(ta.len(), tb.len());
    for ((pa, ba), (pb, bb)) in ta.iter().zip(&tb) {
        assert_eq!(pa, pb);
        assert!(ba == bb, "{pa} differs between the two runs");
    }
}
