use std::fs;
use std::process::Command;

use spinbat::harness::{
    emit_report, read_results, refit, run_single, run_single_detailed, run_sweep, ExperimentConfig, FitSource,
    LatticeSpec, RunResult,
};
use spinbat::Error;

fn quick(n: usize) -> ExperimentConfig {
    ExperimentConfig {
        lattice: LatticeSpec::Auto { n },
        tau: Some(20.0),
        nu: 200,
        ..Default::default()
    }
}

fn strip_timing(mut r: RunResult) -> RunResult {
    r.wall_time_s = 0.0;
    r
}

#[test]
fn runs_are_deterministic() {
    let cfg = ExperimentConfig { seed: 17, ..quick(4) };
    let (a, art_a) = run_single_detailed(&cfg).unwrap();
    let (b, art_b) = run_single_detailed(&cfg).unwrap();
    assert_eq!(
        serde_json::to_value(strip_timing(a)).unwrap(),
        serde_json::to_value(strip_timing(b)).unwrap()
    );
    assert_eq!(art_a.shots, art_b.shots);
    assert_eq!(art_a.trajectory, art_b.trajectory);
}

#[test]
fn different_seeds_change_only_shots() {
    let a = run_single(&ExperimentConfig { seed: 1, ..quick(3) }).unwrap();
    let b = run_single(&ExperimentConfig { seed: 2, ..quick(3) }).unwrap();
    assert_eq!(a.mu_exact, b.mu_exact);
    assert_eq!(a.sigma_exact, b.sigma_exact);
    assert_ne!((a.mu_bar, a.sigma_bar), (b.mu_bar, b.sigma_bar));
}

#[test]
fn empty_report_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = emit_report(dir.path(), &[], &[], &[]).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn single_result_writes_one_row_and_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_single(&quick(2)).unwrap();
    let files = emit_report(dir.path(), &[r], &[], &[]).unwrap();
    let text = fs::read_to_string(&files.results_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "preset,mode,N,n_C,tau,dt,gamma,j_crosstalk,h_used,J_used,mu_exact,sigma_exact,mu_bar,sigma_bar,nu,seed,energy_J,power_W"
    );
    assert!(files.fit_json.is_none());
    assert!(!dir.path().join("fit.json").exists());
    assert!(files.failures_json.is_none());
}

#[test]
fn sweep_isolates_failing_points() {
    let mut cfg = quick(2);
    cfg.gamma = 0.01;
    cfg.lattice = LatticeSpec::Ring { n: 2 };
    cfg.sweep.n = vec![2, 3, 4, 7];
    let outcome = run_sweep(&cfg, Some(1)).unwrap();
    assert_eq!(outcome.results.len(), 3);
    assert_eq!(outcome.failures.len(), 1);
    assert_eq!(outcome.failures[0].point.n, Some(7));
    assert_eq!(outcome.failures[0].class, "capacity");
    assert_eq!(outcome.fits.len(), 1);
    assert_eq!(outcome.fits[0].fit.n_points, 3);
    assert!(outcome.calibration.is_none());
}

#[test]
fn refit_round_trips_through_csv() {
    let mut cfg = quick(2);
    cfg.sweep.n = vec![2, 3, 4, 5];
    let outcome = run_sweep(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(dir.path(), &outcome.results, &outcome.fits, &outcome.failures).unwrap();
    let rows = read_results(&files.results_csv).unwrap();
    assert_eq!(rows.len(), 4);
    let again = refit(&rows, FitSource::Exact).unwrap();
    assert_eq!(again.len(), 1);
    let (a, b) = (&outcome.fits[0].fit, &again[0].fit);
    assert!((a.alpha - b.alpha).abs() < 1e-12 && (a.c - b.c).abs() < 1e-12 * a.c);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(files.fit_json.unwrap()).unwrap()).unwrap();
    for key in ["c", "alpha", "c_err", "alpha_err", "n_points", "method"] {
        assert!(json.get(key).is_some(), "fit.json lacks {key}");
    }
}

#[test]
fn sweep_with_every_axis_empty_is_rejected() {
    let err = run_sweep(&quick(2), None).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn unknown_config_fields_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"mode": "local", "bogus": 1}"#).is_err());
    let cfg = ExperimentConfig::from_json(r#"{"mode": "local", "lattice": {"kind": "ring", "n": 5}}"#).unwrap();
    assert_eq!(cfg.lattice, LatticeSpec::Ring { n: 5 });
}

#[test]
fn cli_validate_passes() {
    let out = Command::new(env!("CARGO_BIN_EXE_spinbat"))
        .arg("validate")
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn cli_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"tau": 15.0, "lattice": {"kind": "ring", "n": 3}, "nu": 50}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_spinbat"))
        .args(["run", "--seed", "5", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results.csv", "plot.csv", "runs.jsonl", "trajectory.csv", "shots.csv"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let shots = fs::read_to_string(out_dir.join("shots.csv")).unwrap();
    assert!(shots.starts_with("# seed=5 nu=50"));
    assert_eq!(shots.lines().count(), 52);
}

#[test]
fn cli_reports_bad_config_with_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"dt": -1.0}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spinbat"))
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error ["));
}
