mod common;

use std::process::Command;

fn symdist(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_symdist")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data(path: &str) -> String {
    common::fixture_dir().join(path).display().to_string()
}

#[test]
fn encode_decode_distance() {
    let schema = data("bundle/schema.json");
    assert_eq!(symdist(&["encode", "--schema", &schema, "--values", "100,002,3,4"]).1, "10000234\n");
    assert_eq!(symdist(&["decode", "--schema", &schema, "--code", "10000234"]).1, "100,002,3,4\n");
    let (code, out, _) = symdist(&["distance", "--bundle", &data("bundle"), "--a", "10000234", "--b", "10000234"]);
    assert_eq!((code, out.as_str()), (0, "0\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(symdist(&["nope"]).0, 64);
    let schema = data("bundle/schema.json");
    assert_eq!(symdist(&["encode", "--schema", &schema, "--values", "100,002,3,12"]).0, 2);
    assert_eq!(symdist(&["encode", "--schema", "/nonexistent.json", "--values", "1"]).0, 1);

    let dir = tempfile::tempdir().unwrap();
    let mut files = symdist::BundleFiles::fixture();
    files.relations[3].d_min = 10.0;
    files.write_dir(dir.path()).unwrap();
    let (code, out, _) = symdist(&["audit", "--bundle", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(out.contains("Ordering element 4 witness [3, 4]"), "{out}");
    let (code, _, _) = symdist(&["diagnose", "--bundle", dir.path().to_str().unwrap(), "--case", &data("case.json")]);
    assert_eq!(code, 3);
    let (code, _, _) = symdist(&["serve", "--bundle", dir.path().to_str().unwrap(), "--bind", "127.0.0.1:0"]);
    assert_eq!(code, 3);
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    std::fs::write(
        &cfg,
        r#"{"n_diseases": 8, "symptoms_per_disease": {"min": 2, "max": 4},
            "dropout_rate": 0.0, "substitution_rate": 0.0, "rng_seed": 7}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let (code, stdout, err) = symdist(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("top1 1.0000"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["top1"], 1.0);
    let (code, _, _) = symdist(&["audit", "--bundle", out.join("kb").to_str().unwrap()]);
    assert_eq!(code, 0);
}
