//! Interface contract of the `kmtc` binary: exit codes, report shapes,
//! and cross-format agreement.

use std::path::PathBuf;
use std::process::Command;

fn kmtc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kmtc"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kmtc-iface-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn small_lemma_run_exits_zero() {
    let dir = tmp_dir("lemmas");
    let out = kmtc()
        .args(["verify-lemmas", "--m-max", "1", "--shift-m-max", "1", "--ratio-m-max", "2"])
        .args(["--grid", "10", "--ash-n-max", "4", "--out-dir"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("verify-lemmas.json").exists());
    assert!(dir.join("verify-lemmas.csv").exists());
    assert!(dir.join("verify-lemmas-manifest.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn inadmissible_theta_is_usage_error() {
    let dir = tmp_dir("theta");
    let out = kmtc()
        .args(["couple", "--theorem", "1.5", "--theta", "0.3", "--n", "2", "--out-dir"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_command_is_usage_error() {
    let out = kmtc().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = kmtc()
        .args(["couple", "--theorem", "9.9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_and_csv_agree_on_shared_fields() {
    let dir = tmp_dir("agree");
    let out = kmtc()
        .args(["couple", "--theorem", "1.5", "--n-max", "6", "--out-dir"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("couple-1.5.json")).unwrap())
            .unwrap();
    let csv = std::fs::read_to_string(dir.join("couple-1.5.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let n_col = header.iter().position(|h| *h == "n").unwrap();
    let f_col = header.iter().position(|h| *h == "functional").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let per_n = json["per_n"].as_array().unwrap();
    assert_eq!(rows.len(), per_n.len());
    for (row, item) in rows.iter().zip(per_n) {
        assert_eq!(row[n_col].parse::<u64>().unwrap(), item["n"].as_u64().unwrap());
        let from_csv: f64 = row[f_col].parse().unwrap();
        let from_json = item["functional"].as_f64().unwrap();
        assert_eq!(from_csv.to_bits(), from_json.to_bits(), "17-digit floats round-trip");
    }
    // The report converter flattens the same rows.
    let out = kmtc()
        .args(["report", "--input"])
        .arg(dir.join("couple-1.5.json"))
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let converted = std::fs::read_to_string(dir.join("couple-1.5-converted.csv")).unwrap();
    assert_eq!(converted.lines().count(), per_n.len() + 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn jobs_flag_does_not_change_results() {
    let dir1 = tmp_dir("jobs1");
    let dir2 = tmp_dir("jobs2");
    for (dir, jobs) in [(&dir1, "1"), (&dir2, "4")] {
        let out = kmtc()
            .args(["embed-ep", "--n", "128", "--reps", "50", "--seed", "3", "--jobs", jobs])
            .arg("--out-dir")
            .arg(dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(dir1.join("embed-ep.json")).unwrap(),
        std::fs::read(dir2.join("embed-ep.json")).unwrap()
    );
    std::fs::remove_dir_all(&dir1).ok();
    std::fs::remove_dir_all(&dir2).ok();
}
