use std::path::Path;
use std::process::Command;

fn lab(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_rellich-lab")).args(args).arg("--out").arg(out).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn counterexample_verdict_for_a_04_p_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = lab(&["counterexample", "--a", "0.4", "--p", "2"], dir.path());
    assert_eq!(code, 0, "{err}");
    let v = read_json(&dir.path().join("counterexample.json"));
    assert_eq!(v["Rp_fails"], true);
    assert_eq!(v["Np_fails"], true);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("counterexample.csv")).unwrap();
    assert!(csv.starts_with("eps,norm,fitted_exponent\n"));
    let manifest = std::fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
    assert!(manifest.contains("[counterexample.csv]") && manifest.contains("fitted_exponent:"));
}

#[test]
fn counterexample_below_threshold_holds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = lab(&["counterexample", "--a", "0.8", "--p", "2"], dir.path());
    assert_eq!(code, 0);
    let v = read_json(&dir.path().join("counterexample.json"));
    assert_eq!(v["Rp_fails"], false);
    assert_eq!(v["Np_fails"], false);
}

#[test]
fn configuration_errors_exit_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["solve", "--graph", "spiral"], dir.path()).0, 2);
    assert_eq!(lab(&["greens", "--field", "kkpt"], dir.path()).0, 2);
    assert_eq!(lab(&["counterexample", "--a", "1.5"], dir.path()).0, 2);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"tolerances": {"weak": -1}}"#).unwrap();
    assert_eq!(lab(&["--config", cfg.to_str().unwrap(), "sunrise"], dir.path()).0, 2);
    assert_eq!(lab(&["--config", "/nonexistent/config.json", "sunrise"], dir.path()).0, 2);
}

#[test]
fn fixed_seed_gives_identical_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(lab(&["--seed", "5", "sunrise"], d.path()).0, 0);
    }
    for f in ["sunrise.json", "sunrise_steps.csv", "sunrise_levels.csv"] {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert_eq!(x, y, "{f}");
    }
    let s = read_json(&a.path().join("sunrise.json"));
    assert_eq!(s["schedule"]["m"], 24);
    assert_eq!(s["pass_flags"]["steps"], true);
}

#[test]
fn solve_dumps_the_mesh_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"mesh": {"x_min": -4, "x_max": 4, "height": 4, "max_step": 0.25, "levels": 1}}"#).unwrap();
    let (code, err) = lab(&["--config", cfg.to_str().unwrap(), "solve", "--data", "bump", "--field", "kkpt:1"], dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("solve_solution.csv")).unwrap();
    assert!(csv.starts_with("x,t,u,ux,ut\n"));
    let meta = read_json(&dir.path().join("solve.json"));
    assert_eq!(meta["field"], "kkpt:1");
    assert!(meta["relative_l2_error"].is_null());
}
