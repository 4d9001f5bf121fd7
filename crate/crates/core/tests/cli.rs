//! End-to-end checks of the command-line front end: artifact contents,
//! byte-determinism, thread-count invariance and process exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::Command as Process;

use tumor_stokes::cli::{run, Command, RunConfig};

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tumor-stokes-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn canonical_config(out: &std::path::Path, l_max: u32) -> RunConfig {
    let json = format!(
        r#"{{
          "model": {{"lambda": 1.0, "mu": 1.0, "sigma_c": 0.9391058564979936,
                     "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}},
          "l_max": {l_max},
          "gamma_values": [0.018, 0.073],
          "output_dir": "{}"
        }}"#,
        out.display()
    );
    RunConfig::from_json(&json).unwrap()
}

#[test]
fn stationary_artifact_layout() {
    let dir = temp_dir("stationary");
    let cfg = canonical_config(&dir, 8);
    let summary = run(Command::Stationary, &cfg).unwrap();
    assert!(summary.starts_with("R_s="), "{summary}");
    let text = fs::read_to_string(dir.join("stationary.csv")).unwrap();
    assert!(text.starts_with("r,sigma_s,v_s,p_s\n"));
    assert_eq!(text.lines().count(), 1 + 2049);
}

#[test]
fn spectrum_artifacts_per_gamma() {
    let dir = temp_dir("spectrum");
    let cfg = canonical_config(&dir, 16);
    run(Command::Spectrum, &cfg).unwrap();
    for k in 0..2 {
        let csv = fs::read_to_string(dir.join(format!("spectrum_{k}.csv"))).unwrap();
        assert!(csv.starts_with("l,gamma_l,alpha_l,gamma_tilde_l,multiplicity\n"));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join(format!("spectrum_{k}.json"))).unwrap())
                .unwrap();
        assert!(json["gamma_star"].as_f64().unwrap() > 0.0);
        assert!(json["stable"].is_boolean());
    }
}

#[test]
fn compare_darcy_rows_ordered() {
    let dir = temp_dir("darcy");
    let cfg = canonical_config(&dir, 16);
    let summary = run(Command::CompareDarcy, &cfg).unwrap();
    assert!(summary.contains("gamma_tilde_star="));
    let text = fs::read_to_string(dir.join("darcy.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert!(cols[1] < cols[0], "row violates the comparison: {line}");
    }
}

#[test]
fn evolve_writes_trajectory_and_snapshot() {
    let dir = temp_dir("evolve");
    let mut cfg = canonical_config(&dir, 8);
    cfg.gamma_values = vec![0.073];
    cfg.seed = 7;
    let summary = run(Command::Evolve, &cfg).unwrap();
    assert!(summary.starts_with("rate_l_ge_2="), "{summary}");
    let traj = fs::read_to_string(dir.join("evolve.csv")).unwrap();
    assert!(traj.starts_with("t,norm_total,norm_l_ge_2,rate_estimate\n"));
    assert_eq!(traj.lines().count(), 1 + 60);
    let snap = fs::read_to_string(dir.join("snapshot.csv")).unwrap();
    assert!(snap.starts_with("theta,phi,radius\n"));
    assert_eq!(snap.lines().count(), 1 + 32 * 64);
}

#[test]
fn eigenmode_artifacts_and_gate() {
    let dir = temp_dir("eigenmode");
    let mut cfg = canonical_config(&dir, 4);
    cfg.gamma_values = vec![0.073];
    let summary = run(Command::Eigenmode, &cfg).unwrap();
    assert!(summary.starts_with("eigenmodes=3"), "{summary}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("eigenmode_l2_g0.json")).unwrap())
            .unwrap();
    assert_eq!(json["l"], 2);
    assert!(json["residuals"]["multiplier_cross_check"].as_f64().unwrap() < 1e-8);
}

/// Identical configuration twice: byte-identical artifacts.
#[test]
fn byte_determinism() {
    let dir_a = temp_dir("det-a");
    let dir_b = temp_dir("det-b");
    run(Command::Spectrum, &canonical_config(&dir_a, 24)).unwrap();
    run(Command::Spectrum, &canonical_config(&dir_b, 24)).unwrap();
    let a = fs::read(dir_a.join("spectrum_0.csv")).unwrap();
    let b = fs::read(dir_b.join("spectrum_0.csv")).unwrap();
    assert_eq!(a, b);
}

/// Same configuration under different rayon pool sizes: identical numbers.
#[test]
fn thread_count_invariance() {
    let run_with_threads = |n: usize, tag: &str| -> Vec<u8> {
        let dir = temp_dir(tag);
        let cfg = canonical_config(&dir, 24);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| run(Command::Spectrum, &cfg).unwrap());
        fs::read(dir.join("spectrum_0.csv")).unwrap()
    };
    let single = run_with_threads(1, "threads-1");
    let many = run_with_threads(4, "threads-4");
    assert_eq!(single, many);
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_tumor-stokes")
}

#[test]
fn binary_threshold_success() {
    let dir = temp_dir("bin-ok");
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        format!(
            r#"{{"model": {{"lambda": 1.0, "mu": 1.0, "sigma_c": 0.9391058564979936,
                "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}},
                "l_max": 16, "output_dir": "{}"}}"#,
            dir.display()
        ),
    )
    .unwrap();
    let out = Process::new(binary())
        .args(["threshold", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gamma_star="), "{stdout}");
    assert!(stdout.contains("l_star=3"), "{stdout}");
    assert!(dir.join("threshold.json").exists());
}

#[test]
fn binary_invalid_assumption_exits_two() {
    let dir = temp_dir("bin-a3");
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        r#"{"model": {"lambda": 1.0, "mu": 1.0, "sigma_c": 1.5,
            "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}}"#,
    )
    .unwrap();
    let out = Process::new(binary())
        .args(["threshold", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("A3"), "stderr: {stderr}");
}

#[test]
fn binary_bad_bracket_exits_three() {
    let dir = temp_dir("bin-bracket");
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        format!(
            r#"{{"model": {{"lambda": 1.0, "mu": 1.0, "sigma_c": 0.9391058564979936,
                "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}},
                "stationary_bracket": [3.0, 4.0], "output_dir": "{}"}}"#,
            dir.display()
        ),
    )
    .unwrap();
    let out = Process::new(binary())
        .args(["stationary", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn binary_flag_overrides() {
    let dir = temp_dir("bin-override");
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        r#"{"model": {"lambda": 1.0, "mu": 1.0, "sigma_c": 0.9391058564979936,
            "sigma_bar": 1.0, "nu": 1.0, "gamma": 0.1}}"#,
    )
    .unwrap();
    let out_dir = dir.join("artifacts");
    let out = Process::new(binary())
        .args(["spectrum", "--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&out_dir)
        .args(["--l-max", "12", "--gamma", "0.05"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11); // header + l = 2..=12
}
