use std::path::Path;
use std::process::Command;

fn elas(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_elas"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const TINY: &str = r#"{
  "dims": [2], "functions": ["sphere", "ellipsoid"], "instances": [1], "seeds": [1, 2],
  "generations": 3, "resamples": 2,
  "tss": [{"method": "knn"}], "models": [{"family": "lq"}, {"family": "lmm"}], "seed": 3
}"#;

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(elas(&["generate", "--config", "bad.json"], dir.path()).0, 2);
    std::fs::write(
        dir.path().join("empty.json"),
        r#"{"dims": [], "functions": ["sphere"], "instances": [1], "seeds": [1]}"#,
    )
    .unwrap();
    assert_eq!(elas(&["generate", "--config", "empty.json"], dir.path()).0, 2);
    assert_eq!(elas(&["generate", "--config", "missing.json"], dir.path()).0, 2);
}

#[test]
fn stage_without_inputs_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), TINY).unwrap();
    let (code, err) = elas(&["split", "--config", "c.json"], dir.path());
    assert_eq!(code, 1, "{err}");
}

#[test]
fn tiny_pipeline_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), TINY).unwrap();
    for stage in ["generate", "features", "evaluate", "split", "analyze"] {
        let (code, err) = elas(&[stage, "--config", "c.json", "--out", "o"], dir.path());
        assert_eq!(code, 0, "{stage}: {err}");
    }
    let o = dir.path().join("o");
    assert!(o.join("errors.csv").is_file());
    assert!(o.join("split/test.csv").is_file());
    assert!(o.join("analysis/feature_summary_knn.csv").is_file());
}
