//! End-to-end tests of the `entlab` binary: exit codes, file formats and
//! byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_entlab")
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env("ENTLAB_THREADS", "2")
        .output()
        .expect("spawn entlab")
}

fn write_model(dir: &Path, eta1: f64, eta2: f64, loss: f64) -> PathBuf {
    let path = dir.join("model.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"eta1": {eta1}, "eta2": {eta2}, "loss": {loss}, "hwp0_deg": 22.5, "pbs": true}}"#
        ),
    )
    .unwrap();
    path
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn simulate_writes_deterministic_counts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    write_model(tmp.path(), 0.209, 0.201, 0.0);

    let args = [
        "simulate", "--model", "model.json", "--shots", "20000", "--reps", "3", "--seed", "9",
        "--out", "a",
    ];
    let out = run(&args, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for rep in 0..3 {
        assert!(tmp.path().join(format!("a/counts_rep{rep:03}.json")).exists());
    }

    // Same seed into another directory: identical counts bytes.
    let mut args_b = args;
    args_b[10] = "b";
    assert!(run(&args_b, tmp.path()).status.success());
    for rep in 0..3 {
        let name = format!("counts_rep{rep:03}.json");
        assert_eq!(
            read(&tmp.path().join("a").join(&name)),
            read(&tmp.path().join("b").join(&name)),
            "counts differ for {name}"
        );
    }

    // Different seed: different counts.
    let mut args_c = args;
    args_c[8] = "10";
    args_c[10] = "c";
    assert!(run(&args_c, tmp.path()).status.success());
    assert_ne!(
        read(&tmp.path().join("a/counts_rep000.json")),
        read(&tmp.path().join("c/counts_rep000.json"))
    );

    // Manifest lists every artifact and replaying into the same directory
    // reproduces it byte for byte.
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("a/manifest.json"))).unwrap();
    let artifacts: Vec<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(artifacts.len(), 3);
    let before = read(&tmp.path().join("a/manifest.json"));
    assert!(run(&args, tmp.path()).status.success());
    assert_eq!(before, read(&tmp.path().join("a/manifest.json")));
}

#[test]
fn simulate_rejects_zero_shots_and_bad_model() {
    let tmp = tempfile::tempdir().unwrap();
    write_model(tmp.path(), 0.2, 0.2, 0.0);
    let out = run(
        &["simulate", "--model", "model.json", "--shots", "0", "--out", "x"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    let out = run(
        &["simulate", "--model", "broken.json", "--out", "x"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "diagnostic lacks location: {stderr}");

    let out = run(
        &["simulate", "--model", "missing.json", "--out", "x"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn reconstruct_from_counts_and_exact() {
    let tmp = tempfile::tempdir().unwrap();
    write_model(tmp.path(), 0.2, 0.2, 0.0);
    assert!(run(
        &[
            "simulate", "--model", "model.json", "--shots", "100000", "--reps", "1", "--seed",
            "3", "--out", "sim",
        ],
        tmp.path(),
    )
    .status
    .success());

    let out = run(
        &[
            "reconstruct", "--counts", "sim/counts_rep000.json", "--max-iters", "3000", "--out",
            "rec",
        ],
        tmp.path(),
    );
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(3), "unexpected exit {code:?}");
    let rec: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("rec/reconstruction.json"))).unwrap();
    // Lossless balanced detector: qubit diagonals near eta = 0.2.
    let on4 = &rec["povm_on_4x4"];
    let n = on4["n"].as_u64().unwrap() as usize;
    assert_eq!(n, 4);
    let diag = |i: usize| on4["re_im"][i * n + i][0].as_f64().unwrap();
    assert!((diag(1) - 0.2).abs() < 0.02, "diag {}", diag(1));
    assert!((diag(2) - 0.2).abs() < 0.02, "diag {}", diag(2));

    // Exact probabilities: residual at solver floor, exit 0.
    assert!(run(
        &[
            "simulate", "--model", "model.json", "--exact", "--out", "exact",
        ],
        tmp.path(),
    )
    .status
    .success());
    let out = run(
        &[
            "reconstruct", "--exact", "exact/probabilities.json", "--out", "rec2",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("rec2/reconstruction.json"))).unwrap();
    assert!(rec["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(rec["converged"].as_bool(), Some(true));

    // Unknown probe ids are a validation failure.
    std::fs::write(
        tmp.path().join("badcounts.json"),
        r#"[{"probe_id": "nope", "shots": 10, "on_count": 1}]"#,
    )
    .unwrap();
    let out = run(
        &["reconstruct", "--counts", "badcounts.json", "--out", "rec3"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    // Malformed counts JSON reports its location.
    std::fs::write(tmp.path().join("mangled.json"), "[{\"probe_id\": }]").unwrap();
    let out = run(
        &["reconstruct", "--counts", "mangled.json", "--out", "rec4"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column"));
}

#[test]
fn measure_reports_zero_for_product_and_rejects_non_psd() {
    let tmp = tempfile::tempdir().unwrap();
    // Product POVM element diag(0.2, 0.2, 0.2, 0.2) = 0.2 I (x) I: measure 0.
    let product = serde_json::json!({
        "n": 4,
        "labels": [[0,0],[0,1],[1,0],[1,1]],
        "re_im": (0..16).map(|i| if i % 5 == 0 { [0.2, 0.0] } else { [0.0, 0.0] }).collect::<Vec<_>>(),
    });
    std::fs::write(tmp.path().join("prod.json"), product.to_string()).unwrap();
    let out = run(&["measure", "prod.json", "--out", "m1"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("m1/measure.json"))).unwrap();
    assert_eq!(report["m_ln"].as_f64(), Some(0.0));

    // Indefinite input: validation error, exit 2.
    let bad = serde_json::json!({
        "n": 4,
        "labels": [[0,0],[0,1],[1,0],[1,1]],
        "re_im": (0..16).map(|i| match i {
            0 => [0.5, 0.0],
            15 => [-0.5, 0.0],
            _ if i % 5 == 0 => [0.1, 0.0],
            _ => [0.0, 0.0],
        }).collect::<Vec<_>>(),
    });
    std::fs::write(tmp.path().join("bad.json"), bad.to_string()).unwrap();
    let out = run(&["measure", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measure_blocked_arm_reconstruction() {
    let tmp = tempfile::tempdir().unwrap();
    write_model(tmp.path(), 0.209, 0.201, 1.0);
    assert!(run(
        &[
            "simulate", "--model", "model.json", "--shots", "100000", "--reps", "1", "--seed",
            "12", "--out", "sim",
        ],
        tmp.path(),
    )
    .status
    .success());
    let out = run(
        &[
            "reconstruct", "--counts", "sim/counts_rep000.json", "--max-iters", "20000", "--out",
            "rec",
        ],
        tmp.path(),
    );
    assert!(matches!(out.status.code(), Some(0) | Some(3)));
    let out = run(&["measure", "rec/reconstruction.json", "--out", "m"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("m/measure.json"))).unwrap();
    let m_ln = report["m_ln"].as_f64().unwrap();
    // A single noisy run scatters widely around the blocked-arm value; the
    // tight statistics live in the acceptance suite.
    assert!((0.05..0.45).contains(&m_ln), "M_LN = {m_ln}");
}

#[test]
fn sweep_writes_csv_and_povms() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "sweep", "--eta1", "0.2", "--eta2", "0.2", "--grid", "0:1:5", "--emit-povms",
            "--out", "sw",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&tmp.path().join("sw/sweep.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "L,m_ln,stderr,source");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,0,,theory"));
    assert!(lines[5].starts_with("1,0.303811"));

    let povms: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("sw/sweep_povms.json"))).unwrap();
    assert_eq!(povms.as_array().unwrap().len(), 5);
    assert_eq!(povms[0]["povm_on"]["n"].as_u64(), Some(6));
    assert_eq!(povms[0]["povm_on_4x4"]["n"].as_u64(), Some(4));

    // Invalid grid is a validation error.
    let out = run(
        &["sweep", "--eta1", "0.2", "--eta2", "0.2", "--grid", "0:2:3", "--out", "sw2"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_simulated_mode_with_error_bars() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "sweep", "--eta1", "0.2", "--eta2", "0.2", "--grid", "1:1:1", "--mode", "simulated",
            "--shots", "20000", "--reps", "3", "--seed", "4", "--max-iters", "2000", "--out",
            "sw",
        ],
        tmp.path(),
    );
    assert!(matches!(out.status.code(), Some(0) | Some(3)));
    let csv = read(&tmp.path().join("sw/sweep.csv"));
    let line = csv.lines().nth(1).unwrap();
    assert!(line.ends_with("simulated"));
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields.len(), 4);
    assert!(!fields[2].is_empty(), "stderr column empty: {line}");
}

#[test]
fn swap_check_is_deterministic_and_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["swap-check", "--trials", "200", "--seed", "5", "--out", "r1"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let out = run(
        &["swap-check", "--trials", "200", "--seed", "5", "--out", "r2"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        read(&tmp.path().join("r1/swap_check.json")),
        read(&tmp.path().join("r2/swap_check.json"))
    );

    let out = run(&["swap-check", "--trials", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probes_flag_accepts_literals_and_files() {
    let tmp = tempfile::tempdir().unwrap();
    write_model(tmp.path(), 0.2, 0.2, 0.0);
    let out = run(
        &[
            "simulate", "--model", "model.json", "--probes", "minimal14", "--shots", "1000",
            "--out", "m14",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let counts: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("m14/counts_rep000.json"))).unwrap();
    assert_eq!(counts.as_array().unwrap().len(), 14);
    let out = run(
        &["simulate", "--model", "model.json", "--probes", "nosuch.json", "--out", "x"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(4));
}
