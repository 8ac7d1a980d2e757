use std::path::Path;
use std::process::{Command, Output};

use plmmse::harness::ResultTable;

fn plmmse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plmmse"))
        .args(args)
        .env("PLMMSE_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(plmmse(&[]).status.code(), Some(1));
    assert_eq!(plmmse(&["nonsense"]).status.code(), Some(1));
    assert_eq!(plmmse(&["track", "--steps", "many"]).status.code(), Some(1));
    assert_eq!(plmmse(&["toy", "--config", "/nonexistent/plmmse.cfg"]).status.code(), Some(1));
    let bad = plmmse(&["deblur", "--n", "64", "--levels", "3", "--mc", "1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).starts_with("error:"));
    assert_eq!(plmmse(&["--version"]).status.code(), Some(0));
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_plmmse"))
        .args(["toy", "--mc", "100"])
        .env("PLMMSE_THREADS", "zero")
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn help_lists_every_parameter_with_units() {
    for (sub, flags) in [
        ("toy", &["--sigma-u2", "--sigma-v2", "--alpha-grid"][..]),
        ("sparse", &["--m", "--p", "--snr-grid", "--brute-force"]),
        ("deblur", &["--n", "--levels", "--wavelet", "--em-iterations"]),
        ("track", &["--sigma-u", "--sigma-v-grid", "--steps", "--u-noise"]),
        ("minimax", &["--slack", "--challengers", "--features"]),
    ] {
        let out = plmmse(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        for flag in flags.iter().chain(&["--seed", "--mc", "--config", "--out", "--store-runs"]) {
            assert!(text.contains(flag), "{sub} help lacks {flag}");
        }
        assert!(text.contains("default:"), "{sub} help lacks defaults");
    }
    assert!(stdout(&plmmse(&["selftest", "--help"])).contains("--level"));
}

fn se_matches_runs(table: &ResultTable, runs: &ResultTable, key: &str, col: &str) {
    let keys = table.column(key).unwrap();
    let means = table.column(col).unwrap();
    let ses = table.column(&format!("{col}_se")).unwrap();
    let run_keys = runs.column(key).unwrap();
    let values = runs.column(col).unwrap();
    for ((k, m), s) in keys.iter().zip(&means).zip(&ses) {
        let v: Vec<f64> = run_keys.iter().zip(&values).filter(|(rk, _)| *rk == k).map(|(_, v)| *v).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - m).abs() <= 1e-12 * m.abs().max(1.0), "{col} mean at {k}");
        assert!((var.sqrt() / n.sqrt() - s).abs() <= 1e-12 * s.abs().max(1.0), "{col} SE at {k}");
    }
}

#[test]
fn stored_runs_reproduce_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sparse.csv");
    let o = plmmse(&[
        "sparse",
        "--m",
        "8",
        "--mc",
        "40",
        "--snr-grid",
        "0:5:10",
        "--out",
        out.to_str().unwrap(),
        "--store-runs",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let table = ResultTable::read_csv(&out).unwrap();
    let runs = ResultTable::read_csv(&dir.path().join("sparse.runs.csv")).unwrap();
    assert_eq!(runs.rows().len(), 40 * 3);
    for col in ["z_only", "y_linear", "plmmse"] {
        se_matches_runs(&table, &runs, "snr_db", col);
    }
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.cfg");
    write(&cfg, "experiment = toy\n# unequal noise\nsigma-u2 = 2\nsigma-v2 = 0.5\nmc = 2000\nseed = 4\n");
    let from_file = stdout(&plmmse(&["toy", "--config", cfg.to_str().unwrap()]));
    assert!(from_file.contains("# sigma-u2 = 2") && from_file.contains("# seed = 4"));
    let overridden = stdout(&plmmse(&["toy", "--config", cfg.to_str().unwrap(), "--seed", "5", "--sigma-v2", "1"]));
    assert!(overridden.contains("# sigma-u2 = 2") && overridden.contains("# sigma-v2 = 1") && overridden.contains("# seed = 5"));
    let explicit = stdout(&plmmse(&["toy", "--sigma-u2", "2", "--sigma-v2", "1", "--mc", "2000", "--seed", "5"]));
    assert_eq!(overridden, explicit);

    write(&cfg, "experiment = sparse\n");
    assert_eq!(plmmse(&["toy", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    write(&cfg, "sigma-u2 = -1\n");
    assert_eq!(plmmse(&["toy", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn seeds_change_results() {
    let a = stdout(&plmmse(&["toy", "--mc", "500", "--seed", "1"]));
    let b = stdout(&plmmse(&["toy", "--mc", "500", "--seed", "2"]));
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_ne!(body(&a), body(&b));
}

#[test]
fn selftest_reports_every_suite() {
    let o = plmmse(&["selftest", "--level", "quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for suite in plmmse::selftest::SUITES {
        assert!(text.contains(&format!("suite={suite} status=PASS")), "{text}");
    }
}
