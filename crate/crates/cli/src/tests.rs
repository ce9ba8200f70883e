//! Commands run in-process; results are checked through the files they write.

use std::fs;
use std::path::Path;

use super::*;

/// Exit code of `invctl args...`, as `main` would report it.
fn code(args: &[&str]) -> u8 {
    let cli = match Cli::try_parse_from(std::iter::once("invctl").chain(args.iter().copied())) {
        Ok(c) => c,
        Err(e) => return if e.use_stderr() { 2 } else { 0 },
    };
    match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => exit_code(&e),
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    for args in [
        vec!["solve", "--config", missing.to_str().unwrap()],
        vec![
            "compare",
            "--instance",
            "fig1_linear",
            "--num",
            "nope",
            "--den",
            "optimal",
        ],
        vec![
            "compare",
            "--instance",
            "fig1_linear",
            "--num",
            "pi_v",
            "--den",
            "optimal",
        ],
        vec![
            "compare",
            "--instance",
            "fig1_linear",
            "--num",
            "optimal",
            "--den",
            "optimal",
            "--state",
            "1",
        ],
        vec!["solve", "--instance", "no_such_instance"],
        vec!["solve"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&args), 2, "{args:?}");
    }
}

#[test]
fn solve_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    let o = out.to_str().unwrap();
    assert_eq!(
        code(&[
            "solve",
            "--instance",
            "fig1_nonlinear",
            "--per-location",
            "--out",
            o
        ]),
        0
    );
    assert!(read(&out, "structure.txt").contains("stage 1: coupled"));
    for f in [
        "value.csv",
        "policy.csv",
        "location1_policy.csv",
        "location2_value.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest = read(&out, "manifest.toml");
    assert!(manifest.contains("command = \"solve\""));
    assert!(manifest.contains("instance = \"fig1_nonlinear\""));
}

#[test]
fn self_comparison_under_crn_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let args = [
        "compare",
        "--instance",
        "sector_sim",
        "--num",
        "balancing",
        "--den",
        "balancing",
        "--runs",
        "5",
        "--crn",
        "--state",
        "0,0",
        "--state",
        "2,-1",
        "--gnuplot",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&args), 0);
    let csv = read(&out, "ratios.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x1,x2,mean_num,se_num,mean_den,se_den,ratio");
    assert_eq!(lines.len(), 3);
    assert!(lines[1..].iter().all(|l| l.ends_with(",1")), "{csv}");
    assert!(out.join("heatmap.gp").exists());
    let manifest = read(&out, "manifest.toml");
    assert!(
        manifest.contains("crn = true") && manifest.contains("runs = 5"),
        "{manifest}"
    );
}

#[test]
fn exact_comparison_of_optimum_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(
        code(&[
            "compare",
            "--instance",
            "fig1_linear",
            "--num",
            "optimal",
            "--den",
            "optimal",
            "--out",
            o
        ]),
        0
    );
    let summary = read(dir.path(), "summary.toml");
    assert!(summary.contains("mean_ratio = 1"), "{summary}");
}

#[test]
fn bounds_report_both_fits() {
    let dir = tempfile::tempdir().unwrap();
    let sector = dir.path().join("sector");
    assert_eq!(
        code(&[
            "bounds",
            "--instance",
            "sector_sim",
            "--out",
            sector.to_str().unwrap()
        ]),
        0
    );
    let s = read(&sector, "bounds.txt");
    assert!(
        s.contains("l = 2") && s.contains("h = 4") && s.contains("online bound 2h/l = 4"),
        "{s}"
    );
    let affine = dir.path().join("affine");
    assert_eq!(
        code(&[
            "bounds",
            "--instance",
            "affine_sim",
            "--out",
            affine.to_str().unwrap()
        ]),
        0
    );
    let s = read(&affine, "bounds.txt");
    assert!(
        s.contains("not sector-bounded") && s.contains("K_l = 4"),
        "{s}"
    );
}

#[test]
fn instances_round_trip_through_config() {
    assert_eq!(code(&["instance", "--list"]), 0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    assert_eq!(
        code(&["instance", "fig1_linear", "--out", path.to_str().unwrap()]),
        0
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        code(&[
            "solve",
            "--config",
            path.to_str().unwrap(),
            "--out",
            a.to_str().unwrap()
        ]),
        0
    );
    assert_eq!(
        code(&[
            "solve",
            "--instance",
            "fig1_linear",
            "--out",
            b.to_str().unwrap()
        ]),
        0
    );
    for f in ["structure.txt", "value.csv", "policy.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn verify_suites_exit_codes() {
    for suite in ["theorem1", "oracle", "balancing-monotone", "transform"] {
        assert_eq!(code(&["verify", suite]), 0, "{suite}");
    }
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(
        code(&[
            "verify",
            "transform",
            "--instance",
            "fig1_linear",
            "--slope",
            "2",
            "--out",
            o
        ]),
        0
    );
    let s = read(dir.path(), "verify.txt");
    assert!(s.contains("FAIL pi_square demand-only identity"), "{s}");
    assert!(s.contains("PASS pi_square with boundary term"), "{s}");
}
