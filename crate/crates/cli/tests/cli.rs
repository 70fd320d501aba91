use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bite_core::runner::LEDGER_COLUMNS;

fn bite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bite")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small two-plate config with its calibration dataset next to it.
fn small_setup(dir: &Path, policies: &str) -> PathBuf {
    let cal = dir.join("cal.json");
    let o = bite(&["calibrate", "--tool", "plastic_fork", "--seed", "3", "--out", p(&cal)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let config = dir.join("exp.toml");
    fs::write(
        &config,
        format!(
            "schema_version = 1\nmaster_seed = 5\nseeds_per_plate = 3\npolicies = [{policies}]\ncalibration = \"cal.json\"\n\
             [estimator]\nsweep_trials = 1\n\
             [[plate]]\nplate_id = \"a\"\nitems = [{{ label = \"strawberry\", count = 2 }}, {{ label = \"carrot\", count = 2 }}]\n\
             [[plate]]\nplate_id = \"b\"\nitems = [{{ label = \"tofu\", count = 2 }}, {{ label = \"steak\", count = 1 }}]\n"
        ),
    )
    .unwrap();
    config
}

#[test]
fn calibrate_writes_five_foods_by_six_skills_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = bite(&["calibrate", "--tool", "plastic_fork", "--seed", "7", "--out", p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let records = json["records"].as_array().unwrap();
    assert_eq!(records.len(), 5);
    for r in records {
        assert_eq!(r["tallies"].as_object().unwrap().len(), 6);
    }
    let summary = fs::read_to_string(a.with_extension("txt")).unwrap();
    assert!(summary.contains("Food Item: Nuts"));
}

#[test]
fn unknown_tool_exits_2() {
    let o = bite(&["calibrate", "--tool", "chopsticks"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("chopsticks"));
}

#[test]
fn run_rows_rerun_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_setup(dir.path(), "\"savor\", \"category-baseline\", \"random\"");
    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    let o = bite(&["run", "--config", p(&config), "--out", p(&out1), "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bite(&["run", "--config", p(&config), "--out", p(&out2), "--jobs", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv1 = fs::read(out1.join("attempts.csv")).unwrap();
    assert_eq!(csv1, fs::read(out2.join("attempts.csv")).unwrap());

    let text = String::from_utf8(csv1).unwrap();
    assert_eq!(text.lines().next().unwrap(), LEDGER_COLUMNS.join(","));
    let mut runs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    runs.dedup();
    // 2 plates x 3 policies x 3 seeds.
    assert_eq!(runs.len(), 2 * 3 * 3);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out1.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["master_seed"], 5);
    assert!(out1.join("summary_savor.json").is_file());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_setup(dir.path(), "\"random\"");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(bite(&["run", "--config", p(&config), "--out", p(&a), "--seed", "1"]).status.success());
    assert!(bite(&["run", "--config", p(&config), "--out", p(&b), "--seed", "2"]).status.success());
    assert_ne!(fs::read(a.join("attempts.csv")).unwrap(), fs::read(b.join("attempts.csv")).unwrap());
}

#[test]
fn config_digest_tracks_config_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_setup(dir.path(), "\"random\"");
    let digest = |out: &str| {
        let out = dir.path().join(out);
        assert!(bite(&["run", "--config", p(&config), "--out", p(&out)]).status.success());
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m["config_digest"].as_str().unwrap().to_string()
    };
    let first = digest("a");
    assert_eq!(first, digest("b"));
    let mut text = fs::read_to_string(&config).unwrap();
    text.push('\n');
    fs::write(&config, text).unwrap();
    assert_ne!(first, digest("c"));
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "schema_version = 1\nseeds_per_plate = \"three\"\n").unwrap();
    let o = bite(&["run", "--config", p(&config), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") || err.contains("seeds_per_plate"), "{err}");
}

#[test]
fn missing_calibration_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_setup(dir.path(), "\"savor\"");
    fs::remove_file(dir.path().join("cal.json")).unwrap();
    let o = bite(&["run", "--config", p(&config), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cal.json"));
    // Policies that need no calibration still run.
    let o = bite(&["run", "--config", p(&config), "--out", p(&dir.path().join("o")), "--policy", "random"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

/// Manifest plus a hand-written ledger: nine first-try items, one item
/// acquired at the third attempt and one failure, 15 attempts in all.
fn ten_of_fifteen_dir(dir: &Path) {
    let mut csv = LEDGER_COLUMNS.join(",") + "\n";
    let mut row = |item: u32, attempt: u32, success: bool| {
        csv.push_str(&format!("savor:plate-1:0,plate-1,{item},tofu,{attempt},scoop,{success},true,true,true,1.0,0.5,11\n"));
    };
    for item in 0..9 {
        row(item, 1, true);
    }
    row(9, 1, false);
    row(9, 2, false);
    row(9, 3, true);
    for attempt in 1..=3 {
        row(10, attempt, false);
    }
    fs::write(dir.join("attempts.csv"), csv).unwrap();
    let manifest = serde_json::json!({
        "schema_version": 1,
        "config_digest": "x",
        "config_path": "x.toml",
        "calibration_digest": null,
        "master_seed": 0,
        "tool": "plastic_fork",
        "policies": ["savor"],
        "seeds_per_plate": 1,
        "budget": 3,
        "overrides": {},
        "ledger": "attempts.csv",
        "summaries": {}
    });
    fs::write(dir.join("manifest.json"), manifest.to_string()).unwrap();
}

#[test]
fn report_shows_table_cell_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    ten_of_fifteen_dir(dir.path());
    let o = bite(&["report", "--in", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("10/15"), "{text}");
    assert!(text.contains("66.7"), "{text}");
}

#[test]
fn report_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_setup(dir.path(), "\"savor\", \"random\"");
    let out = dir.path().join("r");
    assert!(bite(&["run", "--config", p(&config), "--out", p(&out)]).status.success());
    let table = stdout(&bite(&["report", "--in", p(&out), "--format", "table-text"]));
    let csv = stdout(&bite(&["report", "--in", p(&out), "--format", "csv"]));
    assert_ne!(table, csv);
    let numbers = |s: &str| -> Vec<String> {
        s.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '/'))
            .filter(|t| t.chars().any(|c| c.is_ascii_digit()))
            .map(str::to_string)
            .collect()
    };
    let mut a = numbers(&table);
    let mut b = numbers(&csv);
    // The table text also names the resample count and threshold.
    a.retain(|t| t != "2000" && t != "0.05");
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert!(csv.contains("p-value savor vs random"));
}

#[test]
fn report_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bite(&["report", "--in", p(dir.path())]).status.code(), Some(2));
    ten_of_fifteen_dir(dir.path());
    fs::remove_file(dir.path().join("attempts.csv")).unwrap();
    assert_ne!(bite(&["report", "--in", p(dir.path())]).status.code(), Some(0));
}

#[test]
fn sweep_reuses_seed_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_setup(dir.path(), "\"savor\", \"random\"");
    let out = dir.path().join("sweep");
    let o = bite(&["sweep", "--config", p(&config), "--param", "theta_th", "--values=-1.5,-0.5", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    // Random ignores theta_th, so both of its rows match.
    let random: Vec<&str> = csv.lines().filter(|l| l.contains(",random,")).map(|l| l.splitn(3, ',').nth(2).unwrap()).collect();
    assert_eq!(random[0], random[1]);
    let o = bite(&["sweep", "--config", p(&config), "--param", "gamma", "--values", "1", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
