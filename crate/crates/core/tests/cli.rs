use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_nsdde");

const GBM: &str = r#"
[model]
id = "gbm"

[grid]
tau = 1
T = 1
m = [32, 64, 128, 256]

[monte_carlo]
n_paths = 1000
seed = 7

[experiments]
reference = "oracle"

[[gates.slope]]
experiment = "strong_error"
p = 2
min = 0.8
max = 1.2
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    write_named(dir, "config.toml", text)
}

fn write_named(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn list_models_prints_registry() {
    let out = Command::new(BIN).arg("list-models").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("paper-eq-1.1"));
    assert!(text.contains("jump-remark-1.2"));
    assert!(text.lines().filter(|l| !l.starts_with(' ')).count() >= 6);
}

#[test]
fn run_writes_artifacts_and_passes_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GBM);
    let out_dir = dir.path().join("out");
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut reader = csv::Reader::from_path(out_dir.join("strong_error.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["h", "p", "n_paths", "err", "stderr", "exploded_frac"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let hs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(hs, [0.03125, 0.015625, 0.0078125, 0.00390625]);

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    let slope = summary["strong_error"][0]["fit"]["slope"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&slope), "{slope}");
    assert!(summary["strong_error"][0]["fit"]["r2"].is_number());
    assert_eq!(summary["passed"], true);

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["wall_time"]["strong_error"].is_number());
    let csv_bytes = fs::read(out_dir.join("strong_error.csv")).unwrap();
    assert_eq!(
        manifest["outputs"]["strong_error.csv"],
        nsdde::harness::content_hash(&csv_bytes)
    );
    assert!(out_dir.join("summary.txt").exists());
}

#[test]
fn failing_gate_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &GBM.replace("min = 0.8", "min = 1.9\nmin_r2 = 0.5"),
    );
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_and_workers_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GBM);
    let run = |seed: &str, workers: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = Command::new(BIN)
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(&out_dir)
            .args(["--seed", seed])
            .env("NSDDE_WORKERS", workers)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        (
            manifest["outputs"].clone(),
            manifest["config"]["monte_carlo"].clone(),
        )
    };
    let (a, mc_a) = run("3", "1", "a");
    let (b, mc_b) = run("3", "8", "b");
    let (c, _) = run("4", "1", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(mc_a["seed"], 3);
    assert_eq!(mc_b["workers"], 8);
}

#[test]
fn zero_noise_additive_reports_exact_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let text = GBM
        .replace("\"gbm\"", "\"additive\"")
        .replace("reference = \"oracle\"", "")
        .split("[[gates.slope]]")
        .next()
        .unwrap()
        .to_string();
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .args(["--override", "model.params.sigma=0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    let entry = &summary["strong_error"][0];
    assert_eq!(entry["status"], "exact scheme");
    assert!(entry["fit"].is_null());
    assert!(entry["fit_error"]
        .as_str()
        .unwrap()
        .contains("degenerate input"));
    assert!(entry["max_err"].as_f64().unwrap() <= 1e-20);
}

#[test]
fn validate_reports_schema_and_nesting_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), GBM);
    let out = Command::new(BIN)
        .args(["validate", "--config"])
        .arg(&good)
        .output()
        .unwrap();
    assert!(out.status.success());

    let bad = write_named(
        dir.path(),
        "bad.toml",
        &GBM.replace("tau = 1", "tau = 1\nfooo = 2"),
    );
    let out = Command::new(BIN)
        .args(["validate", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fooo"));

    let out = Command::new(BIN)
        .args(["validate", "--config"])
        .arg(&good)
        .args(["--override", "grid.m=[8, 12]"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not nest"));
}

#[test]
fn explosion_budget_failure_removes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[model]
id = "remark-1.1"
params = { a = 4.0, xi = 3.0 }
[grid]
tau = 1
T = 6
m = [2, 4, 8, 16]
[monte_carlo]
n_paths = 100
seed = 1
"#;
    let cfg = write_config(dir.path(), text);
    let out_dir = dir.path().join("out");
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds budget"));
    let leftovers = fs::read_dir(&out_dir).map(|d| d.count()).unwrap_or(0);
    assert_eq!(leftovers, 0);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = Command::new(BIN)
                .args(["validate", "--config"])
                .arg(&path)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
