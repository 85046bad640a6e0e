//! Wire messages, per-peer protocol state and next-hop selection for CDP,
//! Gossiping-LB and random-K flooding.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::content::TermVector;
use crate::energy::{rtime, Battery, EnergySample, RTIME_CAP};
use crate::ids::{DocId, PeerId, QueryId};
use crate::mobility::{AffinityWindow, Trajectory, Vec2};
use crate::scoring::{load, pertinence, psim, select_top_k, stability, NeighborProfile, ScoringParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    /// Period of neighbor beacons, seconds.
    pub beacon_interval: f64,
    /// A neighbor-table entry not refreshed within this many seconds is stale.
    pub neighbor_timeout: f64,
    /// Per-hop propagation latency, seconds.
    pub link_latency: f64,
    /// Messages per second served by a peer with `cpu = 1`.
    pub base_service_rate: f64,
    pub queue_capacity: usize,
    /// Per-peer CPU factors are drawn uniformly from this set.
    pub cpu_choices: Vec<f64>,
    /// Pending-query entries live for this multiple of `max_t`.
    pub pending_ttl_factor: f64,
    /// Weight floor keeping full-queue neighbors reachable under Gossiping-LB.
    pub gossip_epsilon: f64,
    /// Distance samples retained per neighbor for the slope estimator.
    pub affinity_window: usize,
    /// Peers overhear frames in range: query frames let them skip next hops
    /// known to hold the query, hit frames credit the sender's profile.
    pub overhearing: bool,
    /// Channel time of one frame, seconds. A sender defers until every
    /// transmission it can hear has finished; 0 disables contention.
    pub airtime: f64,
    /// Channel time of one beacon frame, seconds.
    pub beacon_airtime: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            beacon_interval: 1.0,
            neighbor_timeout: 2.0,
            link_latency: 0.005,
            base_service_rate: 2.0,
            queue_capacity: 50,
            cpu_choices: vec![1.0, 2.0, 4.0],
            pending_ttl_factor: 2.0,
            gossip_epsilon: 0.01,
            affinity_window: 4,
            overhearing: true,
            airtime: 0.05,
            beacon_airtime: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryMsg {
    pub query_id: QueryId,
    pub origin: PeerId,
    pub terms: Arc<TermVector>,
    pub ttl_remaining: u32,
    /// Traversed peers, origin first, receiver last.
    pub path: Vec<PeerId>,
    pub issue_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryHitMsg {
    pub query_id: QueryId,
    pub responder: PeerId,
    pub matched_docs: Vec<DocId>,
    /// Responder first, origin last.
    pub reverse_path: Vec<PeerId>,
    /// Index in `reverse_path` of the peer currently holding the hit.
    pub hop_cursor: usize,
}

impl QueryHitMsg {
    pub fn holder(&self) -> PeerId {
        self.reverse_path[self.hop_cursor]
    }

    pub fn next_hop(&self) -> Option<PeerId> {
        self.reverse_path.get(self.hop_cursor + 1).copied()
    }

    pub fn previous_hop(&self) -> Option<PeerId> {
        self.hop_cursor.checked_sub(1).map(|i| self.reverse_path[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Query(QueryMsg),
    Hit(QueryHitMsg),
}

/// What a peer knows about a neighbor from its last beacons.
#[derive(Debug, Clone)]
pub struct NeighborInfo {
    pub last_heard: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub cpu: f64,
    pub utilization: f64,
    pub energy_prev: Option<EnergySample>,
    pub energy_last: EnergySample,
    pub distances: AffinityWindow,
}

impl NeighborInfo {
    /// Remaining battery time predicted from the two latest energy samples.
    pub fn rtime(&self, min_energy: f64) -> f64 {
        match self.energy_prev {
            Some(prev) => rtime(prev, self.energy_last, min_energy).unwrap_or(RTIME_CAP),
            None if self.energy_last.energy <= min_energy => 0.0,
            None => RTIME_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PendingQuery {
    pub terms: Arc<TermVector>,
    pub expires: f64,
}

/// Mutable state of one mobile peer.
#[derive(Debug)]
pub struct PeerState {
    pub id: PeerId,
    pub trajectory: Trajectory,
    pub battery: Battery,
    pub cpu: f64,
    pub queue: VecDeque<Message>,
    pub queue_capacity: usize,
    pub busy: bool,
    pub shared_docs: Vec<DocId>,
    pub profiles: BTreeMap<PeerId, NeighborProfile>,
    pub neighbors: BTreeMap<PeerId, NeighborInfo>,
    /// Highest remaining TTL processed per query.
    pub seen_queries: HashMap<QueryId, u32>,
    pub pending: HashMap<QueryId, PendingQuery>,
    /// Neighbors known to hold a query, with the TTL they received it with.
    pub heard_from: HashMap<QueryId, Vec<(PeerId, u32)>>,
}

impl PeerState {
    pub fn utilization(&self) -> f64 {
        (self.queue.len() as f64 / self.queue_capacity as f64).min(1.0)
    }

    pub fn is_connected(&self) -> bool {
        self.battery.is_connected()
    }

    /// Neighbors heard from within `timeout` seconds that are not on `path`.
    pub fn eligible_neighbors(&self, t: f64, timeout: f64, path: &[PeerId]) -> Vec<PeerId> {
        self.neighbors
            .iter()
            .filter(|(id, info)| t - info.last_heard <= timeout && !path.contains(id))
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn remember_profile(&mut self, neighbor: PeerId, q: Arc<TermVector>, capacity: usize) {
        self.profiles
            .entry(neighbor)
            .or_insert_with(|| NeighborProfile::new(capacity))
            .push(q);
    }
}

/// Inputs CDP needs about one eligible neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdpCandidate {
    pub peer: PeerId,
    pub rtime: f64,
    pub affinity: f64,
    pub cpu: f64,
    pub utilization: f64,
    pub psim: f64,
}

impl CdpCandidate {
    pub fn score(&self, params: &ScoringParams) -> f64 {
        let s = stability(self.rtime, self.affinity);
        let l = load(self.cpu, self.utilization.clamp(0.0, 1.0)).expect("utilization clamped");
        pertinence(s, l, self.psim, params)
    }
}

/// Profile similarity of `neighbor` as seen by `peer`.
pub fn profile_similarity(peer: &PeerState, neighbor: PeerId, q: &TermVector) -> f64 {
    peer.profiles.get(&neighbor).map_or(0.0, |p| psim(p, q))
}

/// CDP: the `k` most pertinent candidates.
pub fn cdp_select(candidates: &[CdpCandidate], params: &ScoringParams) -> Vec<PeerId> {
    let scored: Vec<(PeerId, f64)> = candidates.iter().map(|c| (c.peer, c.score(params))).collect();
    select_top_k(&scored, params.k)
}

/// Gossiping-LB: up to `k` distinct candidates sampled without replacement
/// with weight `(1 - u) + epsilon`; query content is ignored.
pub fn gossiping_lb_select(
    candidates: &[(PeerId, f64)],
    k: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Vec<PeerId> {
    let mut pool: Vec<(PeerId, f64)> = candidates
        .iter()
        .map(|&(p, u)| (p, (1.0 - u.clamp(0.0, 1.0)) + epsilon))
        .collect();
    let mut picked = Vec::with_capacity(k.min(pool.len()));
    while picked.len() < k && !pool.is_empty() {
        let i = if pool.len() == 1 {
            0
        } else {
            WeightedIndex::new(pool.iter().map(|&(_, w)| w))
                .expect("weights are positive")
                .sample(rng)
        };
        picked.push(pool.swap_remove(i).0);
    }
    picked
}

/// Flooding: a uniformly random `k`-subset (everything if at most `k`).
pub fn flooding_select(candidates: &[PeerId], k: usize, rng: &mut impl Rng) -> Vec<PeerId> {
    if candidates.len() <= k {
        return candidates.to_vec();
    }
    let mut picks = index::sample(rng, candidates.len(), k).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| candidates[i]).collect()
}
