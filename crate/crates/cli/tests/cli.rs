use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn catsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catsim"))
        .args(args)
        .env_remove("CATSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn equal_frequencies_exit_with_degenerate_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("equal.toml");
    fs::write(&cfg, "[model]\nomega12 = 0.2\nomega13 = 0.2\nomega23 = 0.2\n").unwrap();
    let out = dir.path().join("out");
    let res = catsim(&["eigen", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("DegenerateSpectrum"));
    // The failed run still leaves a manifest.
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("DegenerateSpectrum"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(catsim(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(catsim(&[]).status.code(), Some(1));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nmass = 2.0\n").unwrap();
    let res = catsim(&["eigen", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
    let res = catsim(&["reduce", "--t", "3:1:0.5", "--out", &out_arg(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn caustic_time_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = catsim(&["reduce", "--t", "0", "--particle", "1", "--grid", "64", "--out", &out_arg(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("Caustic"));
}

#[test]
fn printed_defaults_are_a_loadable_config() {
    let res = catsim(&["--print-defaults"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    for needle in ["omega12 = 0.305", "omega13 = 0.1", "omega23 = 0.202", "d = [-5.0, 6.0, 7.5]", "theta_dec = 0.1"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("defaults.toml");
    fs::write(&cfg, &text).unwrap();
    let res = catsim(&["eigen", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&dir.path().join("o"))]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn identical_runs_write_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let res = catsim(&["classical", "--out", &out_arg(d)]);
        assert!(res.status.success());
        let res = catsim(&["reduce", "--t", "2.005", "--particle", "2", "--grid", "96", "--out", &out_arg(d)]);
        assert!(res.status.success());
    }
    for name in ["trajectories.csv", "crossings.csv", "profile_p2_t2.005.csv", "visibility.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let header = fs::read_to_string(a.join("trajectories.csv")).unwrap();
    assert!(header.starts_with("t,corner_label,x1,x2,x3\n"));
}

#[test]
fn particle_one_has_decohered_by_six() {
    let dir = tempfile::tempdir().unwrap();
    let res = catsim(&["reduce", "--t", "6.005", "--particle", "1", "--grid", "192", "--emit-svg", "--out", &out_arg(dir.path())]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let vis = fs::read_to_string(dir.path().join("visibility.csv")).unwrap();
    let row: Vec<&str> = vis.lines().nth(1).unwrap().split(',').collect();
    let v: f64 = row[2].parse().unwrap();
    assert!(v < 0.1, "visibility {v}");
    let profile = fs::read_to_string(dir.path().join("profile_p1_t6.005.csv")).unwrap();
    assert!(profile.starts_with("x,packet0_eff,packetd_eff,interference_eff,total\n"));
    assert_eq!(profile.lines().count(), 402);
    assert!(dir.path().join("profile_p1_t6.005.svg").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("coarse_delta"));
    assert!(manifest.contains("[quadrature]"));
}

#[test]
fn eigen_writes_basis() {
    let dir = tempfile::tempdir().unwrap();
    let res = catsim(&["eigen", "--out", &out_arg(dir.path())]);
    assert!(res.status.success());
    let csv = fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    let get = |name: &str| -> f64 {
        let line = csv.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((get("m3") - 3.0).abs() < 1e-12);
    for j in 1..=3 {
        assert!((get(&format!("P3{j}")) - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!(get("lambda2") < get("lambda1") && get("lambda1") < 0.0);
}
