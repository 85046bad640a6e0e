//! Neighbor scoring: profile similarity, load, link stability, pertinence
//! and top-K selection. Everything here is pure.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::content::{cosine, TermVector};
use crate::error::ScoringError;
use crate::ids::PeerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    Cdp,
    GossipingLb,
    Flooding,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Cdp => "cdp",
            Protocol::GossipingLb => "gossiping_lb",
            Protocol::Flooding => "flooding",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cdp" => Some(Protocol::Cdp),
            "gossiping_lb" | "gossip_lb" | "gossiping" => Some(Protocol::GossipingLb),
            "flooding" | "flood" => Some(Protocol::Flooding),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    pub k: usize,
    pub ttl: u32,
    /// Weight of the load term.
    pub l: f64,
    /// Weight of the profile-similarity term.
    pub sim: f64,
    /// Expected maximum response wait, seconds; stability is clamped to it.
    pub max_t: f64,
    pub profile_capacity: usize,
    /// Score `L * Load` as written instead of rewarding idle peers with
    /// `L * (1 - Load)`.
    pub literal_eq5: bool,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            k: 3,
            ttl: 3,
            l: 0.5,
            sim: 0.5,
            max_t: 5.0,
            profile_capacity: 100,
            literal_eq5: false,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: &str| Err(ScoringError::BadParams(m.to_owned()));
        if self.k < 1 {
            return bad("k must be >= 1");
        }
        if self.ttl < 1 {
            return bad("ttl must be >= 1");
        }
        if !(self.l >= 0.0 && self.sim >= 0.0 && self.l + self.sim > 0.0) {
            return bad("l and sim must be >= 0 with a positive sum");
        }
        if !(self.max_t > 0.0) {
            return bad("max_t must be > 0");
        }
        if self.profile_capacity < 1 {
            return bad("profile_capacity must be >= 1");
        }
        Ok(())
    }
}

/// The most recent queries a neighbor provided answers for, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborProfile {
    recent: VecDeque<Arc<TermVector>>,
    capacity: usize,
}

impl NeighborProfile {
    pub fn new(capacity: usize) -> Self {
        Self {
            recent: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&mut self, q: Arc<TermVector>) {
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(q);
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TermVector> {
        self.recent.iter().map(|q| q.as_ref())
    }
}

/// Mean cosine between `q` and the profile's queries; 0 for an empty profile.
pub fn psim(profile: &NeighborProfile, q: &TermVector) -> f64 {
    if profile.is_empty() {
        return 0.0;
    }
    let total: f64 = profile.iter().map(|past| cosine(past, q).unwrap_or(0.0)).sum();
    total / profile.len() as f64
}

/// Congestion indicator in (0, 1]; 1 means the neighbor's queue is full.
pub fn load(cpu: f64, utilization: f64) -> Result<f64, ScoringError> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(ScoringError::BadUtilization(utilization));
    }
    Ok(1.0 / (cpu * (1.0 - utilization) + 1.0))
}

/// Predicted usable lifetime of a link.
pub fn stability(rtime: f64, affinity: f64) -> f64 {
    rtime.min(affinity)
}

pub fn pertinence(stability: f64, load_val: f64, psim_val: f64, params: &ScoringParams) -> f64 {
    let horizon = stability.clamp(0.0, params.max_t);
    let load_term = if params.literal_eq5 {
        load_val
    } else {
        1.0 - load_val
    };
    horizon * (params.l * load_term + params.sim * psim_val)
}

/// The `k` best-scoring peers, highest first, ties broken by ascending id.
pub fn select_top_k(candidates: &[(PeerId, f64)], k: usize) -> Vec<PeerId> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(p, _)| p).collect()
}
