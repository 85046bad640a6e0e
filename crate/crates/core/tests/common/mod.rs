#![allow(dead_code)]

use std::collections::VecDeque;

use cdp_core::mobility::Vec2;
use cdp_core::scenario::workload_for;
use cdp_core::{initial_positions, simulate, DocId, Protocol, SimConfig, Workload};

/// Adjacency lists of the unit-disk graph over `positions`.
pub fn unit_disk_graph(positions: &[Vec2], range: f64) -> Vec<Vec<usize>> {
    (0..positions.len())
        .map(|i| {
            (0..positions.len())
                .filter(|&j| j != i && positions[i].distance(positions[j]) <= range)
                .collect()
        })
        .collect()
}

/// Peers within `max_hops` of `origin`, origin included.
pub fn within_hops(graph: &[Vec<usize>], origin: usize, max_hops: u32) -> Vec<usize> {
    let mut depth = vec![u32::MAX; graph.len()];
    depth[origin] = 0;
    let mut frontier = VecDeque::from([origin]);
    while let Some(u) = frontier.pop_front() {
        if depth[u] == max_hops {
            continue;
        }
        for &v in &graph[u] {
            if depth[v] == u32::MAX {
                depth[v] = depth[u] + 1;
                frontier.push_back(v);
            }
        }
    }
    (0..graph.len()).filter(|&v| depth[v] != u32::MAX).collect()
}

/// Relevant documents each query can reach within the TTL horizon.
pub fn oracle_retrievals(graph: &[Vec<usize>], workload: &Workload, ttl: u32) -> Vec<Vec<DocId>> {
    workload
        .queries
        .iter()
        .zip(&workload.relevance)
        .map(|(q, rel)| {
            let mut found: Vec<DocId> = within_hops(graph, q.origin.index(), ttl)
                .into_iter()
                .flat_map(|p| workload.placement[p].iter().copied())
                .filter(|d| rel.binary_search(d).is_ok())
                .collect();
            found.sort_unstable();
            found.dedup();
            found
        })
        .collect()
}

pub struct OracleCheck {
    pub n_peers: usize,
    pub max_degree: usize,
    pub resolved: usize,
    pub mismatches: usize,
    pub sim_recall: f64,
    pub oracle_recall: f64,
}

impl OracleCheck {
    pub fn exact(&self) -> bool {
        self.mismatches == 0 && self.sim_recall == self.oracle_recall
    }
}

/// Static world of 4..=12 peers in a small square, flooded with K equal to
/// the maximum degree, compared query by query against the BFS oracle.
pub fn oracle_topology(seed: u64, tweak: impl Fn(&mut SimConfig)) -> OracleCheck {
    let mut cfg = SimConfig::default();
    cfg.run.seed = seed;
    cfg.run.n_peers = 4 + (seed % 9) as usize;
    cfg.run.protocol = Protocol::Flooding;
    cfg.mobility.enabled = false;
    cfg.energy.drain_enabled = false;
    cfg.mobility.area_width = 260.0;
    cfg.mobility.area_height = 260.0;
    cfg.workload.n_queries = 60;
    tweak(&mut cfg);

    let positions = initial_positions(&cfg);
    let graph = unit_disk_graph(&positions, cfg.mobility.radio_range);
    let max_degree = graph.iter().map(Vec::len).max().unwrap_or(0);
    cfg.scoring.k = max_degree.max(1);

    let workload = workload_for(&cfg).unwrap();
    let out = simulate(&cfg, &workload);
    let expected = oracle_retrievals(&graph, &workload, cfg.scoring.ttl);

    let mut mismatches = 0;
    let (mut hit, mut relevant) = (0usize, 0usize);
    for ((o, want), rel) in out.outcomes.iter().zip(&expected).zip(&workload.relevance) {
        let got: Vec<DocId> = o
            .retrieved
            .iter()
            .copied()
            .filter(|d| rel.binary_search(d).is_ok())
            .collect();
        if got != *want || o.is_resolved() != !want.is_empty() {
            mismatches += 1;
        }
        hit += want.len();
        relevant += rel.len();
    }
    let oracle_recall = if relevant == 0 {
        0.0
    } else {
        hit as f64 / relevant as f64
    };
    OracleCheck {
        n_peers: cfg.run.n_peers,
        max_degree,
        resolved: out.outcomes.iter().filter(|o| o.is_resolved()).count(),
        mismatches,
        sim_recall: out.metrics.recall,
        oracle_recall,
    }
}
