use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elastic_cgo::config::ExperimentConfig;
use elastic_cgo::field_io::{read_bundle, read_fields};
use elastic_cgo::phantom::Phantom;
use elastic_cgo::quadrature::QuadratureSpec;

fn small(phantom: Phantom) -> ExperimentConfig {
    ExperimentConfig {
        spatial_n: 8,
        freq_n: 8,
        quadrature: QuadratureSpec::gauss(16),
        verify_points: 200,
        phantom,
        ..ExperimentConfig::default()
    }
}

fn run(dir: &Path, cfg: &ExperimentConfig, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    cfg.save(&path).unwrap();
    Command::new(env!("CARGO_BIN_EXE_elastic-cgo"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_commands_pass_and_tampering_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Phantom::default_ti());
    let ok = run(dir.path(), &cfg, &["verify-cgo"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(dir.path().join("verify_cgo.json").exists());
    let ids = run(dir.path(), &cfg, &["verify-identities"]);
    assert_eq!(code(&ids), 0, "{}", String::from_utf8_lossy(&ids.stdout));

    let bad = run(
        dir.path(),
        &ExperimentConfig {
            tamper_affine: true,
            ..cfg
        },
        &["verify-cgo"],
    );
    assert_eq!(code(&bad), 1);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL")));
    assert!(text.lines().any(|l| l.starts_with("PASS")));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{"omegas": [], "spatial_n": 8}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_elastic-cgo"))
        .arg("--config")
        .arg(&path)
        .arg("verify-cgo")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    std::fs::write(&path, "{ not json").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_elastic-cgo"))
        .args(["--config", path.to_str().unwrap(), "forward"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_elastic-cgo"))
        .arg("no-such-command")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn zero_phantom_gives_zero_bundle_and_zero_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Phantom::zero());
    assert_eq!(code(&run(dir.path(), &cfg, &["forward"])), 0);
    let data = read_bundle(&dir.path().join("bundle.jsonl")).unwrap();
    assert!(!data.is_empty());
    assert!(data.iter().all(|d| d.ok && d.value.norm() == 0.0));
    run(dir.path(), &cfg, &["reconstruct"]);
    let f = read_fields(&dir.path().join("fields.json")).unwrap();
    assert!(f.data.iter().flatten().all(|v| *v == 0.0));
}

fn pipeline_outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let cfg = small(Phantom::default_ti());
    assert_eq!(code(&run(dir, &cfg, &["forward"])), 0);
    let rec = run(dir, &cfg, &["reconstruct"]);
    assert!(code(&rec) <= 1);
    let d = |n: &str| dir.join(n).to_str().unwrap().to_string();
    let rep = run(
        dir,
        &cfg,
        &[
            "report",
            "--truth",
            &d("truth.json"),
            "--fields",
            &d("fields.json"),
            "--diagnostics",
            &d("diagnostics.json"),
        ],
    );
    assert_eq!(code(&rep), 0);
    [
        "bundle.jsonl",
        "truth.bin",
        "fields.bin",
        "diagnostics.json",
        "report.csv",
    ]
    .iter()
    .map(|n| (PathBuf::from(n), std::fs::read(dir.join(n)).unwrap()))
    .collect()
}

#[test]
fn pipeline_is_deterministic_and_reports_every_component() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline_outputs(a.path());
    let second = pipeline_outputs(b.path());
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        assert!(x == y, "{} differs between runs", name.display());
    }
    let csv = String::from_utf8(first.last().unwrap().1.clone()).unwrap();
    assert!(csv.starts_with("component,anchor,rel_l2"));
    for c in ["c1111", "c1122", "c1133", "c1313", "c3333"] {
        let row = csv.lines().find(|l| l.starts_with(c)).unwrap();
        let rel: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(rel.is_finite() && rel < 1.0, "{row}");
    }
    assert!(csv.contains("stage,max_residual"));
}

#[test]
fn env_variable_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    small(Phantom::default_ti()).save(&path).unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_elastic-cgo"))
        .env("ELASTIC_CGO_OUT", &target)
        .args(["--config", path.to_str().unwrap(), "verify-identities"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(target.join("verify_identities.json").exists());
}
