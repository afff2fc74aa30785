use std::path::Path;
use std::process::Command;

fn localest() -> Command {
    Command::new(env!("CARGO_BIN_EXE_localest"))
}

fn write_config(dir: &Path, study: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.ini");
    std::fs::write(
        &path,
        format!(
            "[study]\nname = {study}\nreplications = 3\nseed = 5\n{extra}\n\
             [grid]\nm = 40\nn = 400\nT = 0.2\n\
             [coefficients]\ntheta = two-level\n\
             [kernels]\nnames = k1, k2\ndeltas = 0.15, 0.3\nx0 = 0.6\n"
        ),
    )
    .unwrap();
    path
}

#[test]
fn experiment_writes_rmse_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig-rmse", "");
    let out = dir.path().join("out");
    let st = localest()
        .args(["experiment", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let rmse = std::fs::read_to_string(out.join("rmse.csv")).unwrap();
    assert!(rmse.starts_with("delta,estimator,kernel,x0,rmse,bias,sd,n_ok\n"));
    assert_eq!(rmse.lines().count(), 1 + 8);
    let manifest = std::fs::read_to_string(out.join("manifest.ini")).unwrap();
    assert!(manifest.contains("seed=5"));
}

#[test]
fn seed_flag_changes_output_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig-rmse", "");
    let run = |seed: &str, out: &str| {
        let st = localest()
            .args(["experiment", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(dir.path().join(out).join("rmse.csv")).unwrap()
    };
    let a = run("9", "a");
    let b = run("9", "b");
    let c = run("10", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_config_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig-rmse", "alpha = 3");
    let out = localest().args(["experiment", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[study] alpha"), "{err}");
}

#[test]
fn missing_config_is_an_error() {
    let out = localest().arg("experiment").output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn simulate_then_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig-rmse", "");
    let sim = dir.path().join("sim");
    assert!(localest().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&sim).status().unwrap().success());
    assert!(sim.join("paths.csv").exists());
    let est = dir.path().join("est");
    let st = localest()
        .args(["estimate", "--config"])
        .arg(&cfg)
        .arg("--input")
        .arg(&sim)
        .arg("--out")
        .arg(&est)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(est.join("estimates.csv")).unwrap();
    // 2 kernels × 2 deltas × 2 estimators
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn asymptotics_prints_constants_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "asymptotics-table", "");
    let out = localest()
        .args(["asymptotics", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kernel,mu_A,sigma_A,mu1_P,mu2_P,sigma_P,ordering_ratio"));
    let k1: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(k1[0], "k1");
    assert!(k1[6].parse::<f64>().unwrap() >= 1.0);
    let k2: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(k2[0], "k2");
    assert!(k2[5].is_empty());
}
