//! Per-query outcomes and the run-level retrieval metrics.

use serde::{Deserialize, Serialize};

use crate::content::Workload;
use crate::error::HarnessError;
use crate::ids::{DocId, PeerId, QueryId};

/// What happened to one issued query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: QueryId,
    pub origin: PeerId,
    pub issue_time: f64,
    /// Arrival time of the first delivered hit (the issue time for a local hit).
    pub first_hit: Option<f64>,
    /// Documents delivered to the origin, ascending and deduplicated.
    pub retrieved: Vec<DocId>,
    /// Radio transmissions of query messages (one per forwarding decision).
    pub transmissions: u32,
    /// Longest query path observed, in peers including the origin.
    pub max_path_len: usize,
}

impl QueryOutcome {
    pub fn new(query_id: QueryId, origin: PeerId, issue_time: f64) -> Self {
        Self {
            query_id,
            origin,
            issue_time,
            first_hit: None,
            retrieved: Vec::new(),
            transmissions: 0,
            max_path_len: 1,
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.first_hit.is_some()
    }

    pub fn delay(&self) -> Option<f64> {
        self.first_hit.map(|t| t - self.issue_time)
    }

    /// Records delivered documents at time `t`.
    pub fn deliver(&mut self, t: f64, docs: &[DocId]) {
        if self.first_hit.is_none_or(|f| t < f) {
            self.first_hit = Some(t);
        }
        self.retrieved.extend_from_slice(docs);
        self.retrieved.sort_unstable();
        self.retrieved.dedup();
    }
}

/// Message and loss counters collected during a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub query_transmissions: u64,
    pub query_copies: u64,
    pub query_copies_lost: u64,
    pub hit_transmissions: u64,
    pub hits_lost: u64,
    pub queue_drops: u64,
    pub duplicates_dropped: u64,
    pub peers_depleted: u64,
    pub events_dispatched: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub recall: f64,
    pub success_rate: f64,
    /// Mean first-hit delay over resolved queries; `None` if nothing resolved.
    pub avg_discovery_delay: Option<f64>,
    pub queries_issued: u64,
    pub queries_resolved: u64,
    pub hits_lost: u64,
    pub messages_sent: u64,
}

impl RunMetrics {
    pub fn from_outcomes(outcomes: &[QueryOutcome], workload: &Workload, stats: &RunStats) -> Self {
        Self {
            recall: recall(outcomes, workload),
            success_rate: success_rate(outcomes),
            avg_discovery_delay: avg_discovery_delay(outcomes).ok(),
            queries_issued: outcomes.len() as u64,
            queries_resolved: outcomes.iter().filter(|o| o.is_resolved()).count() as u64,
            hits_lost: stats.hits_lost,
            messages_sent: stats.query_transmissions + stats.hit_transmissions,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Pooled recall: relevant retrieved documents over relevant documents,
/// summed across all queries.
pub fn recall(outcomes: &[QueryOutcome], workload: &Workload) -> f64 {
    let mut retrieved = 0usize;
    let mut relevant = 0usize;
    for o in outcomes {
        let rel = &workload.relevance[o.query_id.index()];
        relevant += rel.len();
        retrieved += o
            .retrieved
            .iter()
            .filter(|d| rel.binary_search(d).is_ok())
            .count();
    }
    if relevant == 0 {
        0.0
    } else {
        retrieved as f64 / relevant as f64
    }
}

pub fn success_rate(outcomes: &[QueryOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|o| o.is_resolved()).count() as f64 / outcomes.len() as f64
}

pub fn avg_discovery_delay(outcomes: &[QueryOutcome]) -> Result<f64, HarnessError> {
    let delays: Vec<f64> = outcomes.iter().filter_map(QueryOutcome::delay).collect();
    if delays.is_empty() {
        return Err(HarnessError::NoResolvedQueries);
    }
    Ok(delays.iter().sum::<f64>() / delays.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::{generate_workload, WorkloadParams};

    fn outcome(q: u32, issue: f64, hit: Option<f64>, docs: &[u32]) -> QueryOutcome {
        let mut o = QueryOutcome::new(QueryId(q), PeerId(0), issue);
        if let Some(t) = hit {
            o.deliver(t, &docs.iter().map(|&d| DocId(d)).collect::<Vec<_>>());
        }
        o
    }

    fn two_query_workload() -> Workload {
        let params = WorkloadParams {
            n_docs: 50,
            n_queries: 2,
            vocab_size: 100,
            ..WorkloadParams::default()
        };
        let mut w = generate_workload(&params, 4, 1).unwrap();
        w.relevance = vec![vec![DocId(1), DocId(2)], vec![DocId(3), DocId(4)]];
        w
    }

    #[test]
    fn recall_is_pooled() {
        let w = two_query_workload();
        let all = [
            outcome(0, 0.0, Some(1.0), &[1, 2]),
            outcome(1, 0.0, Some(1.0), &[3, 4]),
        ];
        assert_eq!(recall(&all, &w), 1.0);
        let none = [outcome(0, 0.0, None, &[]), outcome(1, 0.0, None, &[])];
        assert_eq!(recall(&none, &w), 0.0);
        let half = [outcome(0, 0.0, Some(1.0), &[1, 2]), outcome(1, 0.0, None, &[])];
        assert_eq!(recall(&half, &w), 0.5);
        // irrelevant deliveries do not count
        let junk = [outcome(0, 0.0, Some(1.0), &[9]), outcome(1, 0.0, None, &[])];
        assert_eq!(recall(&junk, &w), 0.0);
    }

    #[test]
    fn success_rate_ratio() {
        let all: Vec<_> = (0..4).map(|q| outcome(q, 0.0, Some(1.0), &[1])).collect();
        assert_eq!(success_rate(&all), 1.0);
        let none: Vec<_> = (0..4).map(|q| outcome(q, 0.0, None, &[])).collect();
        assert_eq!(success_rate(&none), 0.0);
        let seven: Vec<_> = (0..10)
            .map(|q| outcome(q, 0.0, (q < 7).then_some(1.0), &[1]))
            .collect();
        assert!((success_rate(&seven) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn delay_over_resolved_only() {
        let single = [outcome(0, 10.0, Some(10.8), &[1])];
        assert!((avg_discovery_delay(&single).unwrap() - 0.8).abs() < 1e-12);
        let pair = [
            outcome(0, 0.0, Some(0.5), &[1]),
            outcome(1, 2.0, Some(3.5), &[1]),
            outcome(2, 2.0, None, &[]),
        ];
        assert!((avg_discovery_delay(&pair).unwrap() - 1.0).abs() < 1e-12);
        let local = [outcome(0, 4.0, Some(4.0), &[1])];
        assert_eq!(avg_discovery_delay(&local).unwrap(), 0.0);
        assert!(matches!(
            avg_discovery_delay(&[outcome(0, 0.0, None, &[])]),
            Err(HarnessError::NoResolvedQueries)
        ));
    }

    #[test]
    fn first_hit_keeps_earliest_arrival() {
        let mut o = QueryOutcome::new(QueryId(0), PeerId(0), 1.0);
        o.deliver(2.0, &[DocId(5)]);
        o.deliver(1.5, &[DocId(3), DocId(5)]);
        assert_eq!(o.first_hit, Some(1.5));
        assert_eq!(o.retrieved, vec![DocId(3), DocId(5)]);
    }
}
