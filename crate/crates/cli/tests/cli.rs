use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sclimits(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sclimits"))
        .args(args)
        .env_remove("SCLIMITS_THREADS")
        .output()
        .expect("spawn sclimits")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_sweep(dir: &Path, receivers: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join("sweep.csv");
    let mut args = vec![
        "ber-sweep".to_string(),
        "--output".into(),
        out.to_str().unwrap().into(),
    ];
    for kv in [
        format!("receivers={receivers}"),
        "snr_grid_db=0:2:8".into(),
        "m=64".into(),
        "v=8".into(),
        "max_blocks=200".into(),
        "min_bit_errors=100".into(),
    ] {
        args.push("--set".into());
        args.push(kv);
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = sclimits(&argv);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn limits_table_lists_all_receivers() {
    let o = sclimits(&["limits"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "receiver,n_r,gap_db");
    assert_eq!(lines.len(), 9);
    assert!(lines.contains(&"conv-zf-le,1,NA"));
    assert!(lines.contains(&"conv-zf-dfe,1,2.5068"));
    assert!(lines.contains(&"wl-zf-dfe,2,0.5654"));
}

#[test]
fn limits_json_parses() {
    let o = sclimits(&["limits", "--nr", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let wl_le = rows.iter().find(|r| r["receiver"] == "wl-zf-le").unwrap();
    assert!((wl_le["gap_db"].as_f64().unwrap() - 1.2494).abs() < 1e-3);
}

#[test]
fn single_receiver_without_finite_limit_is_an_error() {
    let o = sclimits(&["limits", "--receiver", "conv-zf-le", "--nr", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no finite limit for N_r=1"));
}

#[test]
fn unknown_receiver_is_rejected() {
    let o = sclimits(&["limits", "--receiver", "zf-tomlinson"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn post_snr_reports_json() {
    let o = sclimits(&["post-snr", "--receiver", "zf-le", "--nr", "2", "--realizations", "300", "--m", "128", "--v", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let norm = v["normalized"].as_f64().unwrap();
    assert!(norm > 0.8 && norm < 1.2, "{norm}");
    assert_eq!(v["realizations"], 300);
}

#[test]
fn sweep_writes_csv_and_gnuplot_script() {
    let dir = tempfile::tempdir().unwrap();
    let gp = dir.path().join("plot.gp");
    let out = small_sweep(dir.path(), "mmse-dfe,mfb", &["--gnuplot-script", gp.to_str().unwrap()]);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("receiver,snr_db,bits,errors,ber,post_snr_db,analytic_db,blocks,capped\n"));
    assert_eq!(csv.lines().count(), 11);
    let script = fs::read_to_string(&gp).unwrap();
    assert!(script.contains("mmse-dfe/decision") && script.contains("'mfb'"));
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = fs::read(small_sweep(a.path(), "zf-dfe", &["--threads", "1"])).unwrap();
    let fb = fs::read(small_sweep(b.path(), "zf-dfe", &["--threads", "3"])).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn sweep_config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"receivers":["zf-le"],"snr_grid_db":[10],"m":64,"v":4,"max_blocks":20}"#).unwrap();
    let o = sclimits(&["ber-sweep", "--config", good.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"snr_grid":[10]}"#).unwrap();
    let o = sclimits(&["ber-sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("snr_grid_db"));

    let o = sclimits(&["ber-sweep", "--set", "bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("valid keys"));
}

#[test]
fn gap_uses_sampled_mfb_and_flags_missing_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_sweep(dir.path(), "mmse-dfe,mfb", &[]);
    let o = sclimits(&["gap", "--input", out.to_str().unwrap(), "--target-ber", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("receiver,target_ber,snr_at_target_db,mfb_snr_at_target_db,gap_db\n"));
    let gap: f64 = text.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(gap > 0.0 && gap < 6.0, "{gap}");

    let o = sclimits(&["gap", "--input", out.to_str().unwrap(), "--target-ber", "1e-9"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not bracketed"));
}

#[test]
fn gap_against_limiting_mfb() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_sweep(dir.path(), "mmse-dfe", &[]);
    let o = sclimits(&["gap", "--input", out.to_str().unwrap(), "--target-ber", "0.05", "--mfb", "limit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn selftest_passes_and_detects_faults() {
    let o = sclimits(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 10);

    for (fault, suite) in [("beta", "limit-gap-table"), ("dft", "dft-round-trip-parseval"), ("levinson", "levinson-vs-dense")] {
        let o = sclimits(&["selftest", "--inject-fault", fault]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains(suite), "{fault}: {}", stderr(&o));
    }
}
