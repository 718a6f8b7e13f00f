use std::process::Command;

fn wayfind() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wayfind"))
}

#[test]
fn usage_error_exits_1() {
    let out = wayfind().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = wayfind().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn data_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ckpt");
    let out = wayfind().args(["detect", "--model"]).arg(&missing).arg("to mri").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = wayfind().args(["route", "Reception", "Nowhere"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn levmatch_and_route() {
    let out = wayfind().args(["levmatch", "How can I get from reception to MRI?"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["origin"], "Reception");
    assert_eq!(v["destination"], "MRI");

    let out = wayfind().args(["route", "reception", "mri"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("Start at Reception."));
    assert!(text.contains("MRI is on your right."));
}

#[test]
fn gen_train_detect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path();
    let config = out_dir.join("config.json");
    std::fs::write(&config, r#"{"embedding_dim": 16, "feature_maps": 16, "epochs": 40, "lr": 0.01, "batch_size": 16}"#).unwrap();

    let status = wayfind()
        .args(["--seed", "3", "--out"])
        .arg(out_dir)
        .args(["gen-corpus", "--limit-departments", "4"])
        .status()
        .unwrap();
    assert!(status.success());
    let corpus = std::fs::read_to_string(out_dir.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 46 * 4 * 3);

    let status = wayfind()
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out_dir)
        .args(["train", "--all", "--limit-departments", "4", "--corpus"])
        .arg(out_dir.join("corpus.jsonl"))
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["model.ckpt", "vocab.jsonl", "history.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }

    let out = wayfind()
        .args(["detect", "--model"])
        .arg(out_dir.join("model.ckpt"))
        .arg("How can I get from Reception to MRI?")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["origin"]["name"], "Reception");
    assert_eq!(v["destination"]["name"], "MRI");
}

#[test]
fn eval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("queries.txt");
    std::fs::write(&dump, "I want to go to Admitting from Fracture Clinic.\n").unwrap();
    let out = wayfind()
        .arg("--out")
        .arg(dir.path())
        .args(["eval", "--limit-departments", "5", "--no-cnn", "--buckets", "4096", "--dump"])
        .arg(&dump)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    for row in ["LD", "Linear - 1-gram", "Linear - 3-gram"] {
        assert!(table.contains(row), "{table}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.as_array().unwrap().len() >= 4);
    let dumped = std::fs::read_to_string(dir.path().join("predictions.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(dumped.lines().next().unwrap()).unwrap();
    assert_eq!(row["ld_destination"], "Admitting");
}
