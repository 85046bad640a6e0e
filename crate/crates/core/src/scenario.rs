//! Scenario construction, multi-seed sweeps and result tables.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::content::{generate_workload, Workload};
use crate::error::HarnessError;
use crate::metrics::RunMetrics;
use crate::scoring::Protocol;
use crate::sim::{simulate, RunOutput};

/// Peer counts of the overlay-size scenario.
pub const PEER_COUNTS: [usize; 4] = [25, 50, 75, 100];
/// Nominal speeds (m/s) of the mobility scenario.
pub const SPEEDS: [f64; 3] = [4.26, 7.73, 11.68];

pub const CSV_HEADER: &str = "axis,axis_value,protocol,seed_count,metric,mean,std";

pub fn workload_for(cfg: &SimConfig) -> Result<Workload, HarnessError> {
    Ok(generate_workload(&cfg.workload, cfg.run.n_peers, cfg.run.seed)?)
}

/// Builds the world for `cfg`, plays its workload and returns the outcome.
pub fn run_scenario(cfg: &SimConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let workload = workload_for(cfg)?;
    Ok(simulate(cfg, &workload))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Peers,
    Speed,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Peers => "peers",
            SweepAxis::Speed => "speed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "peers" => Some(SweepAxis::Peers),
            "speed" => Some(SweepAxis::Speed),
            _ => None,
        }
    }

    pub fn values(self) -> Vec<f64> {
        match self {
            SweepAxis::Peers => PEER_COUNTS.iter().map(|&n| n as f64).collect(),
            SweepAxis::Speed => SPEEDS.to_vec(),
        }
    }

    pub fn apply(self, cfg: &mut SimConfig, value: f64) {
        match self {
            SweepAxis::Peers => cfg.run.n_peers = value as usize,
            SweepAxis::Speed => cfg.mobility.v_nominal = value,
        }
    }
}

/// All seeds of one (axis value, protocol) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis_value: f64,
    pub protocol: Protocol,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn summarize(values: &[f64]) -> Summary {
    if values.is_empty() {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Summary { mean, std }
}

pub const METRICS: [&str; 5] = [
    "recall",
    "success_rate",
    "avg_discovery_delay",
    "hits_lost",
    "messages_sent",
];

fn metric_value(m: &RunMetrics, name: &str) -> Option<f64> {
    match name {
        "recall" => Some(m.recall),
        "success_rate" => Some(m.success_rate),
        "avg_discovery_delay" => m.avg_discovery_delay,
        "hits_lost" => Some(m.hits_lost as f64),
        "messages_sent" => Some(m.messages_sent as f64),
        _ => None,
    }
}

impl SweepCell {
    pub fn summary(&self, metric: &str) -> Summary {
        let values: Vec<f64> = self.runs.iter().filter_map(|m| metric_value(m, metric)).collect();
        summarize(&values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, axis_value: f64, protocol: Protocol) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.axis_value == axis_value && c.protocol == protocol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for cell in &self.cells {
            for metric in METRICS {
                let s = cell.summary(metric);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    self.axis.name(),
                    cell.axis_value,
                    cell.protocol.name(),
                    cell.runs.len(),
                    metric,
                    s.mean,
                    s.std
                );
            }
        }
        out
    }
}

/// Runs every (axis value, protocol, seed) combination. Seeds are
/// `base.run.seed .. base.run.seed + seeds`. `jobs = 0` uses all cores.
pub fn sweep(
    base: &SimConfig,
    axis: SweepAxis,
    protocols: &[Protocol],
    seeds: usize,
    jobs: usize,
) -> Result<SweepResult, HarnessError> {
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| base.run.seed + i).collect();
    let mut tasks = Vec::new();
    for value in axis.values() {
        for &protocol in protocols {
            for &seed in &seed_list {
                let mut cfg = base.clone();
                axis.apply(&mut cfg, value);
                cfg.run.protocol = protocol;
                cfg.run.seed = seed;
                cfg.run.trace = false;
                cfg.run.event_log = false;
                cfg.validate()?;
                tasks.push((value, protocol, cfg));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let results: Vec<Result<RunMetrics, HarnessError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(_, _, cfg)| run_scenario(cfg).map(|out| out.metrics))
            .collect()
    });

    let mut cells: Vec<SweepCell> = Vec::new();
    for ((value, protocol, cfg), result) in tasks.into_iter().zip(results) {
        let metrics = result?;
        match cells
            .iter_mut()
            .find(|c| c.axis_value == value && c.protocol == protocol)
        {
            Some(cell) => {
                cell.seeds.push(cfg.run.seed);
                cell.runs.push(metrics);
            }
            None => cells.push(SweepCell {
                axis_value: value,
                protocol,
                seeds: vec![cfg.run.seed],
                runs: vec![metrics],
            }),
        }
    }
    Ok(SweepResult { axis, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values() {
        assert_eq!(SweepAxis::Peers.values(), vec![25.0, 50.0, 75.0, 100.0]);
        assert_eq!(SweepAxis::Speed.values(), vec![4.26, 7.73, 11.68]);
        assert_eq!(SweepAxis::parse("SPEED"), Some(SweepAxis::Speed));
        assert_eq!(SweepAxis::parse("size"), None);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[7.0]).std, 0.0);
    }
}
