use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cstream(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cstream"))
        .args(args)
        .env("CSTREAM_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn simulate_writes_csv_and_resolved_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = cstream(&["run", &config("simulate_systolic.json")], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("simulate_systolic.csv")).unwrap();
    assert_eq!(column(&csv, "cycles"), ["14"]);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("simulate_systolic.json")).unwrap()).unwrap();
    let resolved = &sidecar["resolved_config"];
    assert_eq!(resolved["workload"]["block_width"], 1);
    assert_eq!(resolved["output"]["name"], "simulate_systolic");
    assert_eq!(sidecar["row_count"], 1);
}

#[test]
fn sidecar_config_reruns_to_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cstream(&["run", &config("compare_low_k.json")], dir.path()).status.success());
    let first = std::fs::read(dir.path().join("compare_low_k.csv")).unwrap();
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("compare_low_k.json")).unwrap()).unwrap();
    let again = tempfile::tempdir().unwrap();
    let cfg = write(again.path(), "echo.json", &sidecar["resolved_config"].to_string());
    assert!(cstream(&["run", cfg.to_str().unwrap()], again.path()).status.success());
    assert_eq!(std::fs::read(again.path().join("compare_low_k.csv")).unwrap(), first);
}

#[test]
fn compare_favours_streamer_at_low_k() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cstream(&["run", &config("compare_low_k.json")], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("compare_low_k.csv")).unwrap();
    assert_eq!(column(&csv, "architecture"), ["systolic", "streamer"]);
    let util: Vec<f64> = column(&csv, "utilization").iter().map(|v| v.parse().unwrap()).collect();
    assert!(util[1] > util[0], "{util:?}");
}

#[test]
fn sweeps_follow_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cstream(&["sweep", &config("darksilicon_sweep.json")], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("darksilicon_sweep.csv")).unwrap();
    assert_eq!(column(&csv, "effective_multiplier"), ["1.0", "2.0", "2.0", "2.0", "2.0", "2.0"]);

    assert!(cstream(&["sweep", &config("systolic_k_sweep.json")], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("systolic_k_sweep.csv")).unwrap();
    let util: Vec<f64> = column(&csv, "utilization").iter().map(|v| v.parse().unwrap()).collect();
    for (i, u) in util.iter().enumerate() {
        let k = (i + 1) as f64;
        assert!((u / (k / 16.0) - 1.0).abs() < 0.05, "k={k}: {u}");
    }

    assert!(cstream(&["sweep", &config("inner_product_sweep.json")], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("inner_product_sweep.csv")).unwrap();
    let arch = column(&csv, "architecture");
    let cycles: Vec<u64> = column(&csv, "cycles").iter().map(|v| v.parse().unwrap()).collect();
    for kind in ["mesh_chain", "mesh_grid", "ce_tree"] {
        let series: Vec<u64> = arch.iter().zip(&cycles).filter(|(a, _)| *a == kind).map(|(_, c)| *c).collect();
        assert_eq!(series.len(), 9);
        assert!(series.windows(2).all(|w| w[0] < w[1]), "{kind}: {series:?}");
    }
}

#[test]
fn missing_shape_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"schema_version":1,"experiment":"simulate","workload":{"seed":1},
            "architectures":[{"kind":"systolic","rows":4,"cols":4}]}"#,
    );
    let out = cstream(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shape"));
    assert!(out.stdout.is_empty());
}

#[test]
fn empty_grid_and_unreadable_file_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "empty.json",
        r#"{"schema_version":1,"experiment":"sweep","darksilicon":{"generation":0},
            "sweep":{"base":"darksilicon","grid":[]}}"#,
    );
    assert_eq!(cstream(&["sweep", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(cstream(&["run", "/nonexistent/cfg.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn precondition_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "toomany.json",
        r#"{"schema_version":1,"experiment":"simulate","workload":{"shape":{"m":2,"n":2,"k":2}},
            "architectures":[{"kind":"streamer","pes":5}]}"#,
    );
    let out = cstream(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn validate_passes_and_catches_faults() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let out = cstream(&["validate", "--seed", seed, "--corpus-size", "10"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
        assert!(String::from_utf8_lossy(&out.stdout).lines().all(|l| !l.starts_with("FAIL")));
    }
    let out = cstream(&["validate", "--corpus-size", "4", "--inject-fault", "systolic-cycles"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL systolic_formula"));
}

#[test]
fn version_prints() {
    let dir = tempfile::tempdir().unwrap();
    let out = cstream(&["version"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("cstream "));
}
