use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use twinfront::io::read_trajectory_binary;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_twinfront"));
    c.env_remove(twinfront_cli::OUT_DIR_ENV);
    c
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn run(dir: &Path, sub: &str, body: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, body);
    let out = dir.join("out");
    bin()
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn error_line(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn spectrum_with_defaults() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "spectrum",
        "epsilon = 0.05\nlambda = 1.0\n",
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mu = twinfront::io::read_spectrum_csv(&dir.path().join("out/spectrum.csv")).unwrap();
    assert_eq!(mu.len(), 5);
    assert!(mu[0].abs() < 5e-3, "{}", mu[0]);
    assert!((mu[1] + 1.5).abs() < 1e-2, "{}", mu[1]);
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["command"], "spectrum");
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["spectrum.csv", "spectrum.json"]);
}

#[test]
fn coupled_diffusion_with_defaults() {
    let dir = TempDir::new().unwrap();
    let body = "epsilon = 0.05\nlambda = 1.0\nexperiment = \"diffusion\"\n";
    let o = run(dir.path(), "diffusion", body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("out/diffusion.json"));
    let d = r["report"]["estimate"]["d_hat"].as_f64().unwrap();
    assert!((d / 0.375 - 1.0).abs() < 0.15, "{d}");
    assert_eq!(r["seed"], 0);
    assert_eq!(r["config"]["epsilon"], 0.05);
    let endpoints =
        std::fs::read_to_string(dir.path().join("out/diffusion_endpoints.csv")).unwrap();
    assert_eq!(endpoints.lines().count(), 201);
}

fn max_drift_from_first_frame(dir: &Path, dx: f64) -> f64 {
    let body = format!(
        "epsilon = 0.0\nlambda = 1.0\nhalf_length = 10.0\nt_end = 10.0\ndx = {dx}\n[options]\ntrajectory_format = \"binary\"\n"
    );
    let o = run(dir, "simulate", &body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_trajectory_binary(&dir.join("out/trajectory.bin")).unwrap();
    let first = &t.frames[0];
    t.frames
        .iter()
        .map(|f| {
            f.m1.sub(&first.m1)
                .sup_norm()
                .max(f.m2.sub(&first.m2).sup_norm())
        })
        .fold(0.0, f64::max)
}

#[test]
fn noise_free_simulation_stays_at_the_lattice_kink() {
    // the continuum profile relaxes to the lattice kink, an O(dx²) move
    let a = max_drift_from_first_frame(TempDir::new().unwrap().path(), 0.1);
    let b = max_drift_from_first_frame(TempDir::new().unwrap().path(), 0.05);
    assert!(a < 1e-2, "{a}");
    let ratio = a / b;
    assert!((ratio - 4.0).abs() < 0.5, "{a} {b} {ratio}");
}

#[test]
fn invalid_values_name_the_key() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "simulate",
        "epsilon = 0.05\nlambda = 1\ndx = 0.1\ndt = 1\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert_eq!(e["error"], "config");
    assert_eq!(e["key"], "dt");
}

#[test]
fn unknown_and_duplicate_keys_fail() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "simulate",
        "epsilon = 0.05\nlambda = 1\nsigma = 2\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["key"], "sigma");
    let o = run(
        dir.path(),
        "simulate",
        "epsilon = 0.05\nlambda = 1\nlambda = 2\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "config");
}

#[test]
fn missing_config_is_an_io_error() {
    let o = bin()
        .args(["spectrum", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_line(&o)["error"], "io");
}

#[test]
fn experiment_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "spectrum",
        "epsilon = 0.05\nlambda = 1\nexperiment = \"track\"\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["key"], "experiment");
}

fn payloads(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let m = json(&dir.join("manifest.json"));
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| {
            let n = n.as_str().unwrap().to_string();
            let bytes = std::fs::read(dir.join(&n)).unwrap();
            (n, bytes)
        })
        .collect()
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let body = "epsilon = 0.1\nlambda = 1\nseed = 7\n[options]\nn_replicas = 20\n";
    for sub in ["track", "diffusion", "verify-barrier"] {
        let o = run(dir.path(), sub, body, &[]);
        assert!(
            o.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let first = payloads(&dir.path().join("out"));
        let again = dir.path().join("again");
        let o = bin()
            .arg("rerun")
            .arg(dir.path().join("out/manifest.json"))
            .arg("--out")
            .arg(&again)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(payloads(&again), first, "{sub}");
    }
}

#[test]
fn worker_count_and_process_boundaries_do_not_matter() {
    let dir = TempDir::new().unwrap();
    let body = "epsilon = 0.2\nlambda = 1\nseed = 3\n[options]\nn_seeds = 6\n";
    let a = run(dir.path(), "verify-bounded", body, &["--workers", "1"]);
    assert!(a.status.success());
    let first = payloads(&dir.path().join("out"));
    let b = run(dir.path(), "verify-bounded", body, &["--workers", "3"]);
    assert!(b.status.success());
    assert_eq!(payloads(&dir.path().join("out")), first);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = TempDir::new().unwrap();
    let body = "epsilon = 0.2\nlambda = 1\nt_end = 1.0\n";
    run(dir.path(), "simulate", body, &["--seed", "1"]);
    let one = std::fs::read(dir.path().join("out/trajectory.csv")).unwrap();
    run(dir.path(), "simulate", body, &["--seed", "2"]);
    let two = std::fs::read(dir.path().join("out/trajectory.csv")).unwrap();
    assert_ne!(one, two);
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["seed"], 2);
}

#[test]
fn environment_sets_the_default_output_dir() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "epsilon = 0.2\nlambda = 1\n");
    let target = dir.path().join("from-env");
    let o = bin()
        .env(twinfront_cli::OUT_DIR_ENV, &target)
        .arg("d-epsilon")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&target.join("d_epsilon.json"));
    let d = r["report"]["d_epsilon"].as_f64().unwrap();
    assert!(d > 0.0 && d < 2.0);
}

#[test]
fn verification_subcommands_report() {
    let dir = TempDir::new().unwrap();
    let body = "epsilon = 0.1\nlambda = 1\nt_end = 2.0\n[options]\nn_seeds = 3\n";
    let o = run(dir.path(), "verify-comparison", body, &[]);
    assert!(o.status.success());
    let r = json(&dir.path().join("out/comparison.json"));
    assert_eq!(r["report"]["passed"], true);

    let o = run(dir.path(), "linear-decay", body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    assert!(csv.starts_with("t,proj_plus,proj_minus,orth_norm\n"));

    let body = "epsilon = 0.1\nlambda = 1\n[options]\nn_replicas = 16\nprojection_t_hi = 3.0\n";
    let o = run(dir.path(), "noise-projection", body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
