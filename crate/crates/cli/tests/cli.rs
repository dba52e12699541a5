use std::path::Path;
use std::process::{Command, Output};

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspmoment"))
        .args(args)
        .env("CUSPMOMENT_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn odd_weight_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["eigensystems", "--k", "13"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("odd"));
}

#[test]
fn weight_fourteen_writes_an_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["eigensystems", "--k", "14", "--n", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dim"], 0);
    assert!(dir.path().join("eig-k14-N50.txt").exists());
}

#[test]
fn compare_without_store_names_the_missing_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["compare", "--k", "24", "--x", "30"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cuspmoment eigensystems --k 24"));
}

#[test]
fn bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["gl", "--shifts", "0.1+x"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["sweep", "--k", "24"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["moment", "--psi-typo"]).status.code(), Some(2));
}

#[test]
fn identity_check_passes_and_detects_a_sign_fault() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(dir.path(), &["identity-check", "--samples", "300", "--seed", "7"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["sweep"]["samples"], 300);
    let bad = run(dir.path(), &["identity-check", "--samples", "300", "--inject-sign-fault"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gl", "--l", "12", "--shifts", "0.1,0.05+0.02i"];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let one = run(dir.path(), &["identity-check", "--samples", "100", "--threads", "1"]);
    let two = run(dir.path(), &["identity-check", "--samples", "100"]);
    assert_eq!(one.stdout.len(), two.stdout.len());
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.contains("\"threads\"")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&one), strip(&two));
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["kloosterman", "--m", "3", "--n", "7", "--c", "11", "--k", "16"];
    let dumped = run(dir.path(), &[&flags[..], &["--dump-config"]].concat());
    assert_eq!(dumped.status.code(), Some(0));
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, stdout(&dumped)).unwrap();
    let direct = run(dir.path(), &flags);
    let replay = run(dir.path(), &["kloosterman", "--config", cfg.to_str().unwrap()]);
    assert_eq!(direct.stdout, replay.stdout);
    // flags override the file
    let over = run(dir.path(), &["kloosterman", "--config", cfg.to_str().unwrap(), "--c", "13"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&over)).unwrap();
    assert_eq!(v["c"], 13);
    assert_eq!(v["m"], 3);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "weight = 12\n").unwrap();
    let o = run(dir.path(), &["gl", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_csv_row_per_length() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["eigensystems", "--k", "24", "--n", "40"]).status.code(), Some(0));
    let out = dir.path().join("sweep.csv");
    let o = run(
        dir.path(),
        &["sweep", "--k", "24", "--x-grid", "12.5,30", "--format", "csv", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    let recs: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 2);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (rec, x) in recs.iter().zip([12.5, 30.0]) {
        assert_eq!(rec[col("x")].parse::<f64>().unwrap(), x);
        let direct: f64 = rec[col("lhs_direct_re")].parse().unwrap();
        let pet: f64 = rec[col("lhs_petersson_re")].parse().unwrap();
        assert!((direct - pet).abs() < 1e-9, "{direct} vs {pet}");
    }
}
