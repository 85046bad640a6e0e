use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cdp_core::engine::render_log;
use cdp_core::scenario::workload_for;
use cdp_core::sim::render_trace;
use cdp_core::{simulate, sweep as run_sweep, ConfigError, HarnessError, Protocol, SimConfig, SweepAxis};
use serde::Serialize;

use crate::{ConfigArgs, GenArgs, RunArgs, SweepArgs};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => c.into(),
            HarnessError::Content(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn timestamped(kind: &str) -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S%.3f");
    PathBuf::from("runs").join(format!("{kind}-{stamp}"))
}

fn parse_protocol(name: &str) -> Result<Protocol, CliError> {
    Protocol::parse(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown protocol `{name}` (expected cdp, gossiping_lb or flooding)"
        ))
    })
}

/// Loads the file (or defaults), then applies `--set` pairs and finally the
/// dedicated flags in `extra`.
fn load_config(args: &ConfigArgs, extra: Vec<(&str, String)>) -> Result<SimConfig, CliError> {
    let base = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            SimConfig::from_toml_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => SimConfig::default(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("`--set {item}` is not SECTION.KEY=VALUE")))?;
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    if let Some(seed) = args.seed {
        pairs.push(("run.seed".into(), seed.to_string()));
    }
    if let Some(peers) = args.peers {
        pairs.push(("run.n_peers".into(), peers.to_string()));
    }
    pairs.extend(extra.into_iter().map(|(k, v)| (k.to_owned(), v)));
    Ok(base.with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let mut extra = Vec::new();
    if let Some(p) = &args.protocol {
        extra.push(("run.protocol", format!("\"{}\"", parse_protocol(p)?.name())));
    }
    if let Some(v) = args.speed {
        extra.push(("mobility.v_nominal", format!("{v:?}")));
    }
    if args.trace {
        extra.push(("run.trace", "true".into()));
    }
    if args.event_log {
        extra.push(("run.event_log", "true".into()));
    }
    let cfg = load_config(&args.config, extra)?;
    let workload = workload_for(&cfg)?;

    let dir = args.out.clone().unwrap_or_else(|| timestamped("run"));
    create_dir(&dir)?;
    write(&dir.join("config.toml"), &cfg.to_toml_string())?;

    let out = simulate(&cfg, &workload);
    write(&dir.join("metrics.json"), &out.metrics.to_json())?;
    if let Some(trace) = &out.trace {
        write(&dir.join("trace.jsonl"), &render_trace(trace))?;
    }
    if let Some(log) = &out.dispatch_log {
        write(&dir.join("events.log"), &render_log(log))?;
    }
    let m = &out.metrics;
    println!(
        "{} peers={} seed={}: recall {:.4}, success {:.4}, delay {}",
        cfg.run.protocol.name(),
        cfg.run.n_peers,
        cfg.run.seed,
        m.recall,
        m.success_rate,
        m.avg_discovery_delay
            .map_or_else(|| "n/a".to_owned(), |d| format!("{d:.4} s"))
    );
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct RunRecord<'a> {
    axis_value: f64,
    protocol: Protocol,
    seed: u64,
    metrics: &'a cdp_core::RunMetrics,
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let axis = SweepAxis::parse(&args.axis)
        .ok_or_else(|| CliError::Config(format!("unknown axis `{}` (expected peers or speed)", args.axis)))?;
    let protocols = args
        .protocols
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_protocol)
        .collect::<Result<Vec<_>, _>>()?;
    if protocols.is_empty() {
        return Err(CliError::Config("--protocols names no protocol".into()));
    }
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let cfg = load_config(&args.config, Vec::new())?;

    let dir = args.out.clone().unwrap_or_else(|| timestamped("sweep"));
    create_dir(&dir)?;
    write(&dir.join("config.toml"), &cfg.to_toml_string())?;

    let result = run_sweep(&cfg, axis, &protocols, args.seeds, args.jobs)?;
    write(&dir.join("sweep.csv"), &result.to_csv())?;
    let records: Vec<RunRecord> = result
        .cells
        .iter()
        .flat_map(|c| {
            c.seeds.iter().zip(&c.runs).map(|(&seed, metrics)| RunRecord {
                axis_value: c.axis_value,
                protocol: c.protocol,
                seed,
                metrics,
            })
        })
        .collect();
    let runs = serde_json::to_string_pretty(&records).expect("run records serialize");
    write(&dir.join("runs.json"), &runs)?;

    for cell in &result.cells {
        let recall = cell.summary("recall");
        let success = cell.summary("success_rate");
        let delay = cell.summary("avg_discovery_delay");
        println!(
            "{}={} {}: recall {:.4}±{:.4}, success {:.4}±{:.4}, delay {:.4}±{:.4} s",
            axis.name(),
            cell.axis_value,
            cell.protocol.name(),
            recall.mean,
            recall.std,
            success.mean,
            success.std,
            delay.mean,
            delay.std
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn gen_workload(args: &GenArgs) -> Result<(), CliError> {
    let mut extra = Vec::new();
    if let Some(n) = args.docs {
        extra.push(("workload.n_docs", n.to_string()));
    }
    if let Some(n) = args.queries {
        extra.push(("workload.n_queries", n.to_string()));
    }
    let cfg = load_config(&args.config, extra)?;
    let workload = workload_for(&cfg)?;

    let path = args
        .out
        .clone()
        .unwrap_or_else(|| timestamped("workload").join("workload.json"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write(&path, &workload.to_json())?;
    println!(
        "{} documents, {} queries, {} peers -> {}",
        workload.documents.len(),
        workload.queries.len(),
        workload.n_peers,
        path.display()
    );
    Ok(())
}
