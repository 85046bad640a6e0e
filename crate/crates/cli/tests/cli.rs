use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cdp_core::{RunMetrics, SimConfig, Workload};
use tempfile::TempDir;

fn cdp_sim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdp-sim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_metrics(dir: &Path) -> RunMetrics {
    serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

fn light(tmp: &TempDir) -> String {
    let path = tmp.path().join("light.toml");
    fs::write(&path, "[workload]\nn_queries = 40\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_with_defaults_writes_metrics_and_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    let out = cdp_sim(
        tmp.path(),
        &["run", "--config", &cfg, "--peers", "20", "--out", "r"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let m = read_metrics(&tmp.path().join("r"));
    assert_eq!(m.queries_issued, 40);
    assert!((0.0..=1.0).contains(&m.recall));
    let echoed = fs::read_to_string(tmp.path().join("r/config.toml")).unwrap();
    assert!(SimConfig::from_toml_str(&echoed).is_ok());
}

#[test]
fn run_without_out_uses_a_timestamped_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    let out = cdp_sim(tmp.path(), &["run", "--config", &cfg, "--peers", "10"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let runs: Vec<_> = fs::read_dir(tmp.path().join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let dir = runs[0].as_ref().unwrap().path();
    assert!(dir.file_name().unwrap().to_string_lossy().starts_with("run-"));
    assert!(dir.join("metrics.json").exists());
}

#[test]
fn flags_override_the_file_and_are_echoed() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("cfg.toml");
    fs::write(
        &file,
        "[run]\nprotocol = \"flooding\"\nn_peers = 30\nseed = 1\n\n[workload]\nn_queries = 30\n",
    )
    .unwrap();
    let file = file.to_string_lossy();
    let out = cdp_sim(
        tmp.path(),
        &[
            "run",
            "-c",
            &file,
            "--protocol=cdp",
            "--peers=50",
            "--seed=7",
            "--speed",
            "7.73",
            "--out",
            "r",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let echoed =
        SimConfig::from_toml_str(&fs::read_to_string(tmp.path().join("r/config.toml")).unwrap()).unwrap();
    assert_eq!(echoed.run.protocol, cdp_core::Protocol::Cdp);
    assert_eq!(echoed.run.n_peers, 50);
    assert_eq!(echoed.run.seed, 7);
    assert_eq!(echoed.mobility.v_nominal, 7.73);
    assert_eq!(echoed.workload.n_queries, 30);
}

#[test]
fn echoed_config_reproduces_the_metrics() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    let first = cdp_sim(
        tmp.path(),
        &[
            "run",
            "-c",
            &cfg,
            "--peers",
            "25",
            "--set",
            "scoring.k=2",
            "--out",
            "a",
        ],
    );
    assert!(first.status.success(), "{}", stderr(&first));
    let again = cdp_sim(tmp.path(), &["run", "-c", "a/config.toml", "--out", "b"]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(
        fs::read_to_string(tmp.path().join("a/metrics.json")).unwrap(),
        fs::read_to_string(tmp.path().join("b/metrics.json")).unwrap()
    );
}

#[test]
fn trace_and_event_log_are_optional_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    let out = cdp_sim(
        tmp.path(),
        &["run", "-c", &cfg, "--peers", "15", "--out", "plain"],
    );
    assert!(out.status.success());
    assert!(!tmp.path().join("plain/trace.jsonl").exists());
    let out = cdp_sim(
        tmp.path(),
        &[
            "run",
            "-c",
            &cfg,
            "--peers",
            "15",
            "--trace",
            "--event-log",
            "--out",
            "full",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = fs::read_to_string(tmp.path().join("full/trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    for key in ["t", "type", "from", "to", "query_id"] {
        assert!(first.get(key).is_some(), "{first}");
    }
    assert!(!fs::read_to_string(tmp.path().join("full/events.log"))
        .unwrap()
        .is_empty());
}

#[test]
fn unknown_key_fails_with_its_name() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("bad.toml");
    fs::write(&file, "[scoring]\nkk = 4\n").unwrap();
    let out = cdp_sim(tmp.path(), &["run", "-c", &file.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("scoring.kk"), "{}", stderr(&out));
}

#[test]
fn invalid_values_fail_with_the_key_name() {
    let tmp = TempDir::new().unwrap();
    let out = cdp_sim(tmp.path(), &["run", "--set", "scoring.k=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("scoring.k"), "{}", stderr(&out));

    let file = tmp.path().join("typed.toml");
    fs::write(&file, "[run]\nn_peers = \"many\"\n").unwrap();
    let out = cdp_sim(tmp.path(), &["run", "-c", &file.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("n_peers"), "{}", stderr(&out));

    let out = cdp_sim(tmp.path(), &["run", "--protocol", "random"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cdp_sim(tmp.path(), &["sweep", "--axis", "size"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cdp_sim(tmp.path(), &["run", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    fs::write(tmp.path().join("occupied"), "").unwrap();
    let out = cdp_sim(
        tmp.path(),
        &["run", "-c", &cfg, "--peers", "5", "--out", "occupied/r"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn peers_sweep_writes_the_csv_grid() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    let out = cdp_sim(
        tmp.path(),
        &[
            "sweep",
            "-c",
            &cfg,
            "--axis=peers",
            "--protocols=cdp,gossiping_lb",
            "--seeds=1",
            "--out",
            "s",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("s/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("axis,axis_value,protocol,seed_count,metric,mean,std")
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    let cells: std::collections::BTreeSet<(String, String)> =
        rows.iter().map(|r| (r[1].clone(), r[2].clone())).collect();
    assert_eq!(cells.len(), 4 * 2);
    assert!(rows.iter().all(|r| r[6] == "0"));
    let runs: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("s/runs.json")).unwrap()).unwrap();
    assert_eq!(runs.as_array().unwrap().len(), 8);
    assert!(runs[0]["metrics"]["recall"].is_number());
}

#[test]
fn speed_sweep_covers_the_three_speeds() {
    let tmp = TempDir::new().unwrap();
    let cfg = light(&tmp);
    let out = cdp_sim(
        tmp.path(),
        &[
            "sweep",
            "-c",
            &cfg,
            "--axis=speed",
            "--protocols=cdp",
            "--seeds=2",
            "--jobs=1",
            "--out",
            "s",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("s/sweep.csv")).unwrap();
    let speeds: std::collections::BTreeSet<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(speeds, ["11.68", "4.26", "7.73"].into_iter().collect());
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(3) == Some("2")));
}

#[test]
fn default_workload_has_desk_scale_counts_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    for name in ["a.json", "b.json"] {
        let out = cdp_sim(tmp.path(), &["gen-workload", "--seed", "5", "--out", name]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = fs::read(tmp.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(tmp.path().join("b.json")).unwrap());
    let w: Workload = serde_json::from_slice(&a).unwrap();
    assert_eq!(w.documents.len(), 1700);
    assert_eq!(w.queries.len(), 200);
}

#[test]
fn large_workload_flags() {
    let tmp = TempDir::new().unwrap();
    let out = cdp_sim(
        tmp.path(),
        &[
            "gen-workload",
            "--docs=17000",
            "--queries=700",
            "--out",
            "big/w.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let w: Workload = serde_json::from_slice(&fs::read(tmp.path().join("big/w.json")).unwrap()).unwrap();
    assert_eq!(w.documents.len(), 17000);
    assert_eq!(w.queries.len(), 700);
}

#[test]
fn help_exits_cleanly() {
    let tmp = TempDir::new().unwrap();
    let out = cdp_sim(tmp.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let out = cdp_sim(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}
