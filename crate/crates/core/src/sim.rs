//! The simulated MANET: peers, beacons, queues and the protocol event
//! handlers, driven by the deterministic [`Scheduler`].
//!
//! Peers learn about each other only through periodic beacons, which carry
//! position, velocity, CPU factor, queue utilization and battery level.
//! Forwarding decisions use that (possibly stale) neighbor table, while
//! actual delivery checks the true distance at transmission time.
//!
//! Every frame occupies a shared channel: a sender waits until its
//! neighborhood is quiet, and all peers in range stay busy until the frame
//! ends. Bystanders overhear query and hit frames, which lets them skip
//! neighbors that already hold a query and credit answering peers in their
//! profiles.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::SimConfig;
use crate::content::{matches, TermVector, Workload};
use crate::energy::{Battery, Drain, EnergySample};
use crate::engine::{derive_stream, DispatchRecord, Event, EventKind, EventPayload, Scheduler};
use crate::ids::{DocId, PeerId, QueryId};
use crate::metrics::{QueryOutcome, RunMetrics, RunStats};
use crate::mobility::{
    affinity_estimate, affinity_oracle, AffinityMode, AffinityWindow, Leg, Trajectory, Vec2, AFFINITY_CAP,
};
use crate::protocol::{
    cdp_select, flooding_select, gossiping_lb_select, profile_similarity, CdpCandidate, Message,
    NeighborInfo, PeerState, PendingQuery, QueryHitMsg, QueryMsg,
};
use crate::scoring::Protocol;

#[derive(Debug, Clone)]
pub enum SimEvent {
    MobilityTick(PeerId),
    EnergyTick,
    Beacon(PeerId),
    MessageArrival { to: PeerId, msg: Message },
    QueueService(PeerId),
    QueryIssue(QueryId),
    RunEnd,
}

impl EventPayload for SimEvent {
    fn kind(&self) -> EventKind {
        match self {
            SimEvent::MobilityTick(_) => EventKind::MobilityTick,
            SimEvent::EnergyTick => EventKind::EnergyTick,
            SimEvent::Beacon(_) => EventKind::Beacon,
            SimEvent::MessageArrival { .. } => EventKind::MessageArrival,
            SimEvent::QueueService(_) => EventKind::QueueService,
            SimEvent::QueryIssue(_) => EventKind::QueryIssue,
            SimEvent::RunEnd => EventKind::RunEnd,
        }
    }
}

/// One line of the optional message trace. Kinds are `query`,
/// `query_lost`, `hit`, `hit_lost`, `resolved` and `profile` (peer `from`
/// credited neighbor `to` with the query).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub from: PeerId,
    pub to: PeerId,
    pub query_id: QueryId,
}

pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub outcomes: Vec<QueryOutcome>,
    pub stats: RunStats,
    pub dispatch_log: Option<Vec<DispatchRecord>>,
    pub trace: Option<Vec<TraceRecord>>,
}

struct World<'a> {
    cfg: &'a SimConfig,
    workload: &'a Workload,
    peers: Vec<PeerState>,
    query_terms: Vec<Arc<TermVector>>,
    protocol_rng: ChaCha8Rng,
    outcomes: Vec<QueryOutcome>,
    stats: RunStats,
    trace: Option<Vec<TraceRecord>>,
    /// Per peer, the time its neighborhood's channel becomes free.
    channel_free: Vec<f64>,
}

type Sched = Scheduler<SimEvent>;

/// Plays `workload` on a freshly built world described by `cfg`.
///
/// # Panics
/// If `workload` was generated for a different peer count than `cfg.run.n_peers`.
pub fn simulate(cfg: &SimConfig, workload: &Workload) -> RunOutput {
    simulate_with(cfg, workload, trajectories(cfg))
}

/// Like [`simulate`], but peer `i` sits still at `positions[i]` for the
/// whole run.
///
/// # Panics
/// If `positions` does not hold one entry per peer.
pub fn simulate_at(cfg: &SimConfig, workload: &Workload, positions: &[Vec2]) -> RunOutput {
    assert_eq!(positions.len(), cfg.run.n_peers, "one position per peer");
    let fixed = trajectories(cfg)
        .into_iter()
        .zip(positions)
        .map(|(tr, &at)| Trajectory::from_leg(Leg::stationary(at, 0.0), tr.into_rng()))
        .collect();
    simulate_with(cfg, workload, fixed)
}

fn simulate_with(cfg: &SimConfig, workload: &Workload, trajectories: Vec<Trajectory>) -> RunOutput {
    assert_eq!(
        workload.n_peers, cfg.run.n_peers,
        "workload was generated for a different number of peers"
    );
    let seed = cfg.run.seed;
    let mut sched: Sched = if cfg.run.event_log {
        Scheduler::new().with_log()
    } else {
        Scheduler::new()
    };

    let mut world = World::new(cfg, workload, trajectories);

    let mut beacon_rng = derive_stream(seed, "beacon");
    for p in 0..world.peers.len() {
        let phase = beacon_rng.gen::<f64>() * cfg.network.beacon_interval;
        sched
            .schedule(phase, SimEvent::Beacon(PeerId::from(p)))
            .expect("t >= 0");
        let leg_end = world.peers[p].trajectory.leg().pause_until;
        if leg_end.is_finite() && leg_end <= cfg.run.duration {
            sched
                .schedule(leg_end, SimEvent::MobilityTick(PeerId::from(p)))
                .expect("t >= 0");
        }
    }
    if cfg.energy.drain_enabled {
        sched
            .schedule(cfg.energy.tick, SimEvent::EnergyTick)
            .expect("t >= 0");
    }
    for q in &workload.queries {
        sched
            .schedule(q.issue_time, SimEvent::QueryIssue(q.query_id))
            .expect("issue times are non-negative");
    }
    sched
        .schedule(cfg.run.duration, SimEvent::RunEnd)
        .expect("t >= 0");

    let dispatched = sched.run_until(cfg.run.duration, |s, ev| world.dispatch(s, ev));
    world.stats.events_dispatched = dispatched as u64;

    let metrics = RunMetrics::from_outcomes(&world.outcomes, workload, &world.stats);
    RunOutput {
        metrics,
        outcomes: world.outcomes,
        stats: world.stats,
        dispatch_log: sched.log().map(<[DispatchRecord]>::to_vec),
        trace: world.trace,
    }
}

fn trajectories(cfg: &SimConfig) -> Vec<Trajectory> {
    (0..cfg.run.n_peers)
        .map(|i| {
            Trajectory::random(
                &cfg.mobility,
                0.0,
                derive_stream(cfg.run.seed, &format!("mobility/{i}")),
            )
        })
        .collect()
}

/// Peer positions at time 0 for the world `simulate` builds from `cfg`.
pub fn initial_positions(cfg: &SimConfig) -> Vec<Vec2> {
    trajectories(cfg).iter().map(|tr| tr.position_at(0.0)).collect()
}

impl<'a> World<'a> {
    fn new(cfg: &'a SimConfig, workload: &'a Workload, trajectories: Vec<Trajectory>) -> Self {
        let seed = cfg.run.seed;
        let mut energy_rng = derive_stream(seed, "energy");
        let mut cpu_rng = derive_stream(seed, "cpu");
        let peers = trajectories
            .into_iter()
            .enumerate()
            .map(|(i, trajectory)| {
                let e = &cfg.energy;
                let initial = if e.initial_max > e.initial_min {
                    energy_rng.gen_range(e.initial_min..=e.initial_max)
                } else {
                    e.initial_min
                };
                let choices = &cfg.network.cpu_choices;
                let cpu = choices[cpu_rng.gen_range(0..choices.len())];
                PeerState {
                    id: PeerId::from(i),
                    trajectory,
                    battery: Battery::new(initial),
                    cpu,
                    queue: Default::default(),
                    queue_capacity: cfg.network.queue_capacity,
                    busy: false,
                    shared_docs: workload.placement[i].clone(),
                    profiles: Default::default(),
                    neighbors: Default::default(),
                    seen_queries: Default::default(),
                    pending: Default::default(),
                    heard_from: Default::default(),
                }
            })
            .collect();
        Self {
            cfg,
            workload,
            peers,
            query_terms: workload
                .queries
                .iter()
                .map(|q| Arc::new(q.terms.clone()))
                .collect(),
            protocol_rng: derive_stream(seed, "protocol"),
            outcomes: workload
                .queries
                .iter()
                .map(|q| QueryOutcome::new(q.query_id, q.origin, q.issue_time))
                .collect(),
            stats: RunStats::default(),
            trace: cfg.run.trace.then(Vec::new),
            channel_free: vec![0.0; cfg.run.n_peers],
        }
    }

    fn dispatch(&mut self, s: &mut Sched, ev: Event<SimEvent>) {
        let t = ev.time;
        match ev.payload {
            SimEvent::MobilityTick(p) => self.on_mobility_tick(s, p, t),
            SimEvent::EnergyTick => self.on_energy_tick(s, t),
            SimEvent::Beacon(p) => self.on_beacon(s, p, t),
            SimEvent::MessageArrival { to, msg } => self.on_arrival(s, to, msg, t),
            SimEvent::QueueService(p) => self.on_service(s, p, t),
            SimEvent::QueryIssue(q) => self.on_issue(s, q, t),
            SimEvent::RunEnd => {}
        }
    }

    fn record(&mut self, t: f64, kind: &'static str, from: PeerId, to: PeerId, query_id: QueryId) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord {
                t,
                kind,
                from,
                to,
                query_id,
            });
        }
    }

    /// True position and velocity of `p` at `t`.
    fn kinematics(&mut self, p: PeerId, t: f64) -> (Vec2, Vec2) {
        let traj = &mut self.peers[p.index()].trajectory;
        traj.advance_to(t, &self.cfg.mobility);
        (traj.position_at(t), traj.velocity_at(t))
    }

    fn link_up(&mut self, a: PeerId, b: PeerId, t: f64) -> bool {
        if !self.peers[a.index()].is_connected() || !self.peers[b.index()].is_connected() {
            return false;
        }
        let pa = self.kinematics(a, t).0;
        let pb = self.kinematics(b, t).0;
        pa.distance(pb) <= self.cfg.mobility.radio_range
    }

    /// Connected peers other than `p` within radio range of it at `t`.
    fn in_range(&mut self, p: PeerId, t: f64) -> Vec<PeerId> {
        let pos = self.kinematics(p, t).0;
        let range = self.cfg.mobility.radio_range;
        (0..self.peers.len())
            .map(PeerId::from)
            .filter(|&r| {
                r != p
                    && self.peers[r.index()].is_connected()
                    && self.kinematics(r, t).0.distance(pos) <= range
            })
            .collect()
    }

    /// Reserves the channel around `p` for one frame starting no earlier
    /// than `t` and returns the time the frame is on the air.
    fn occupy_channel(&mut self, p: PeerId, listeners: &[PeerId], t: f64, airtime: f64) -> f64 {
        if airtime <= 0.0 {
            return t;
        }
        let end = self.channel_free[p.index()].max(t) + airtime;
        self.channel_free[p.index()] = end;
        for r in listeners {
            let free = &mut self.channel_free[r.index()];
            *free = free.max(end);
        }
        end
    }

    fn drain(&mut self, p: PeerId, action: Drain) {
        let peer = &mut self.peers[p.index()];
        if !peer.is_connected() {
            return;
        }
        peer.battery.consume(action, &self.cfg.energy);
        if !peer.is_connected() {
            self.on_depleted(p);
        }
    }

    fn on_depleted(&mut self, p: PeerId) {
        self.stats.peers_depleted += 1;
        let dropped: Vec<Message> = self.peers[p.index()].queue.drain(..).collect();
        for msg in dropped {
            if let Message::Hit(_) = msg {
                self.stats.hits_lost += 1;
            }
        }
        for peer in &mut self.peers {
            peer.neighbors.remove(&p);
        }
    }

    fn on_mobility_tick(&mut self, s: &mut Sched, p: PeerId, t: f64) {
        let traj = &mut self.peers[p.index()].trajectory;
        traj.advance_to(t, &self.cfg.mobility);
        let next = traj.leg().pause_until;
        if next.is_finite() && next <= self.cfg.run.duration {
            s.schedule(next, SimEvent::MobilityTick(p))
                .expect("leg ends in the future");
        }
    }

    fn on_energy_tick(&mut self, s: &mut Sched, t: f64) {
        let dt = self.cfg.energy.tick;
        for i in 0..self.peers.len() {
            self.drain(PeerId::from(i), Drain::Idle(dt));
        }
        if t + dt <= self.cfg.run.duration {
            s.schedule(t + dt, SimEvent::EnergyTick).expect("future tick");
        }
    }

    fn on_beacon(&mut self, s: &mut Sched, p: PeerId, t: f64) {
        if !self.peers[p.index()].is_connected() {
            return;
        }
        let (pos, vel) = self.kinematics(p, t);
        let sender = &self.peers[p.index()];
        let (cpu, utilization) = (sender.cpu, sender.utilization());
        let energy = EnergySample {
            t,
            energy: sender.battery.energy(),
        };
        let timeout = self.cfg.network.neighbor_timeout;
        let window = self.cfg.network.affinity_window;

        let listeners = self.in_range(p, t);
        self.occupy_channel(p, &listeners, t, self.cfg.network.beacon_airtime);
        for &j in &listeners {
            let d = self.kinematics(j, t).0.distance(pos);
            let info = self.peers[j.index()]
                .neighbors
                .entry(p)
                .or_insert_with(|| NeighborInfo {
                    last_heard: t,
                    position: pos,
                    velocity: vel,
                    cpu,
                    utilization,
                    energy_prev: None,
                    energy_last: energy,
                    distances: AffinityWindow::new(window),
                });
            if t - info.last_heard > timeout {
                // the link was down; old samples describe a previous contact
                info.distances.clear();
                info.energy_prev = None;
            } else if info.energy_last.t < t {
                info.energy_prev = Some(info.energy_last);
            }
            info.last_heard = t;
            info.position = pos;
            info.velocity = vel;
            info.cpu = cpu;
            info.utilization = utilization;
            info.energy_last = energy;
            info.distances.push(t, d);
        }
        s.schedule(t + self.cfg.network.beacon_interval, SimEvent::Beacon(p))
            .expect("future beacon");
    }

    fn on_arrival(&mut self, s: &mut Sched, to: PeerId, msg: Message, t: f64) {
        let is_hit = matches!(msg, Message::Hit(_));
        if !self.peers[to.index()].is_connected() {
            if is_hit {
                self.stats.hits_lost += 1;
            }
            return;
        }
        self.drain(to, Drain::Rx);
        let peer = &mut self.peers[to.index()];
        if !peer.is_connected() {
            // on_depleted already counted queued hits; count this one too
            if is_hit {
                self.stats.hits_lost += 1;
            }
            return;
        }
        if peer.queue.len() >= peer.queue_capacity {
            self.stats.queue_drops += 1;
            if is_hit {
                self.stats.hits_lost += 1;
            }
            return;
        }
        peer.queue.push_back(msg);
        if !peer.busy {
            peer.busy = true;
            let service = self.service_time(to);
            s.schedule(t + service, SimEvent::QueueService(to))
                .expect("future service");
        }
    }

    fn service_time(&self, p: PeerId) -> f64 {
        1.0 / (self.peers[p.index()].cpu * self.cfg.network.base_service_rate)
    }

    fn on_service(&mut self, s: &mut Sched, p: PeerId, t: f64) {
        let Some(msg) = self.peers[p.index()].queue.pop_front() else {
            self.peers[p.index()].busy = false;
            return;
        };
        match msg {
            Message::Query(q) => self.handle_query(s, p, q, t),
            Message::Hit(h) => self.handle_hit(s, p, h, t),
        }
        let peer = &mut self.peers[p.index()];
        if peer.queue.is_empty() {
            peer.busy = false;
        } else {
            let service = self.service_time(p);
            s.schedule(t + service, SimEvent::QueueService(p))
                .expect("future service");
        }
    }

    fn local_matches(&self, p: PeerId, terms: &TermVector) -> Vec<DocId> {
        let threshold = self.cfg.workload.match_threshold;
        self.peers[p.index()]
            .shared_docs
            .iter()
            .copied()
            .filter(|&d| matches(self.workload.document(d), terms, threshold))
            .collect()
    }

    fn remember_pending(&mut self, p: PeerId, q: QueryId, t: f64) {
        let expires = t + self.cfg.network.pending_ttl_factor * self.cfg.scoring.max_t;
        let terms = self.query_terms[q.index()].clone();
        self.peers[p.index()]
            .pending
            .insert(q, PendingQuery { terms, expires });
    }

    fn on_issue(&mut self, s: &mut Sched, q: QueryId, t: f64) {
        let query = self.workload.query(q);
        let origin = query.origin;
        if !self.peers[origin.index()].is_connected() {
            return;
        }
        let ttl = self.cfg.scoring.ttl;
        self.peers[origin.index()].seen_queries.insert(q, ttl);
        self.remember_pending(origin, q, t);

        let terms = self.query_terms[q.index()].clone();
        let local = self.local_matches(origin, &terms);
        if !local.is_empty() {
            self.outcomes[q.index()].deliver(t, &local);
            self.record(t, "resolved", origin, origin, q);
        }
        let msg = QueryMsg {
            query_id: q,
            origin,
            terms,
            ttl_remaining: ttl,
            path: vec![origin],
            issue_time: query.issue_time,
        };
        self.forward(s, origin, &msg, t);
    }

    fn handle_query(&mut self, s: &mut Sched, p: PeerId, msg: QueryMsg, t: f64) {
        let q = msg.query_id;
        let peer = &mut self.peers[p.index()];
        if let [.., sender, _] = msg.path[..] {
            peer.heard_from
                .entry(q)
                .or_default()
                .push((sender, msg.ttl_remaining + 1));
        }
        match peer.seen_queries.get(&q).copied() {
            Some(best) if msg.ttl_remaining <= best => {
                self.stats.duplicates_dropped += 1;
                return;
            }
            Some(_) => {
                // a shorter route arrived late: extend the search horizon only
                peer.seen_queries.insert(q, msg.ttl_remaining);
            }
            None => {
                peer.seen_queries.insert(q, msg.ttl_remaining);
                self.remember_pending(p, q, t);
                let docs = self.local_matches(p, &msg.terms);
                if !docs.is_empty() {
                    let hit = QueryHitMsg {
                        query_id: q,
                        responder: p,
                        matched_docs: docs,
                        reverse_path: msg.path.iter().rev().copied().collect(),
                        hop_cursor: 0,
                    };
                    self.send_hit(s, hit, t);
                }
            }
        }
        self.forward(s, p, &msg, t);
    }

    fn handle_hit(&mut self, s: &mut Sched, p: PeerId, hit: QueryHitMsg, t: f64) {
        debug_assert_eq!(hit.holder(), p);
        let q = hit.query_id;
        if let Some(from) = hit.previous_hop() {
            let capacity = self.cfg.scoring.profile_capacity;
            let peer = &mut self.peers[p.index()];
            if let Some(pending) = peer.pending.get(&q) {
                if pending.expires >= t {
                    let terms = pending.terms.clone();
                    peer.remember_profile(from, terms, capacity);
                    self.record(t, "profile", p, from, q);
                }
            }
        }
        if hit.next_hop().is_none() {
            self.outcomes[q.index()].deliver(t, &hit.matched_docs);
            self.record(t, "resolved", hit.responder, p, q);
        } else {
            self.send_hit(s, hit, t);
        }
    }

    fn send_hit(&mut self, s: &mut Sched, mut hit: QueryHitMsg, t: f64) {
        let from = hit.holder();
        let Some(next) = hit.next_hop() else {
            return;
        };
        self.drain(from, Drain::Tx);
        self.stats.hit_transmissions += 1;
        let q = hit.query_id;
        let listeners = self.in_range(from, t);
        let sent = self.occupy_channel(from, &listeners, t, self.cfg.network.airtime);
        let bystanders: Vec<PeerId> = if self.cfg.network.overhearing {
            let carried = &hit.reverse_path[..hit.hop_cursor];
            listeners
                .into_iter()
                .filter(|&r| r != next && !carried.contains(&r))
                .collect()
        } else {
            Vec::new()
        };
        if self.link_up(from, next, t) {
            hit.hop_cursor += 1;
            self.record(t, "hit", from, next, q);
            let at = sent + self.cfg.network.link_latency;
            s.schedule(
                at,
                SimEvent::MessageArrival {
                    to: next,
                    msg: Message::Hit(hit),
                },
            )
            .expect("future arrival");
        } else {
            self.stats.hits_lost += 1;
            self.record(t, "hit_lost", from, next, q);
        }
        // bystanders that saw the query learn that `from` answers it
        let capacity = self.cfg.scoring.profile_capacity;
        for r in bystanders {
            let peer = &mut self.peers[r.index()];
            if let Some(pending) = peer.pending.get(&q).filter(|pq| pq.expires >= t) {
                let terms = pending.terms.clone();
                peer.remember_profile(from, terms, capacity);
                self.record(t, "profile", r, from, q);
            }
        }
    }

    fn forward(&mut self, s: &mut Sched, p: PeerId, msg: &QueryMsg, t: f64) {
        if msg.ttl_remaining == 0 || !self.peers[p.index()].is_connected() {
            return;
        }
        let mut eligible =
            self.peers[p.index()].eligible_neighbors(t, self.cfg.network.neighbor_timeout, &msg.path);
        if self.cfg.network.overhearing {
            if let Some(known) = self.peers[p.index()].heard_from.get(&msg.query_id) {
                let next_ttl = msg.ttl_remaining - 1;
                eligible.retain(|j| !known.iter().any(|&(k, ttl)| k == *j && ttl >= next_ttl));
            }
        }
        if eligible.is_empty() {
            return;
        }
        let k = self.cfg.scoring.k;
        let targets = match self.cfg.run.protocol {
            Protocol::Cdp => {
                let candidates = self.cdp_candidates(p, &eligible, &msg.terms, t);
                cdp_select(&candidates, &self.cfg.scoring)
            }
            Protocol::GossipingLb => {
                let table = &self.peers[p.index()].neighbors;
                let loads: Vec<(PeerId, f64)> = eligible.iter().map(|j| (*j, table[j].utilization)).collect();
                gossiping_lb_select(&loads, k, self.cfg.network.gossip_epsilon, &mut self.protocol_rng)
            }
            Protocol::Flooding => flooding_select(&eligible, k, &mut self.protocol_rng),
        };
        self.send_query(s, p, msg, &targets, t);
    }

    fn cdp_candidates(
        &mut self,
        p: PeerId,
        eligible: &[PeerId],
        q: &TermVector,
        t: f64,
    ) -> Vec<CdpCandidate> {
        let range = self.cfg.mobility.radio_range;
        let min_energy = self.cfg.energy.min_energy;
        let (my_pos, my_vel) = self.kinematics(p, t);
        eligible
            .iter()
            .map(|&j| {
                let affinity = match self.cfg.mobility.affinity_mode {
                    AffinityMode::Oracle => {
                        if self.peers[j.index()].is_connected() {
                            let (pos, vel) = self.kinematics(j, t);
                            affinity_oracle(pos - my_pos, vel - my_vel, range).unwrap_or(0.0)
                        } else {
                            0.0
                        }
                    }
                    AffinityMode::Estimate => {
                        let info = &self.peers[p.index()].neighbors[&j];
                        affinity_estimate(&info.distances, t, range).unwrap_or(AFFINITY_CAP)
                    }
                };
                let me = &self.peers[p.index()];
                let info = &me.neighbors[&j];
                CdpCandidate {
                    peer: j,
                    rtime: info.rtime(min_energy),
                    affinity,
                    cpu: info.cpu,
                    utilization: info.utilization,
                    psim: profile_similarity(me, j, q),
                }
            })
            .collect()
    }

    fn send_query(&mut self, s: &mut Sched, p: PeerId, msg: &QueryMsg, targets: &[PeerId], t: f64) {
        if targets.is_empty() {
            return;
        }
        // one radio transmission addressed to every selected next hop
        self.drain(p, Drain::Tx);
        self.stats.query_transmissions += 1;
        let q = msg.query_id;
        self.outcomes[q.index()].transmissions += 1;
        let listeners = self.in_range(p, t);
        let sent = self.occupy_channel(p, &listeners, t, self.cfg.network.airtime);
        if self.cfg.network.overhearing {
            let next_ttl = msg.ttl_remaining - 1;
            for r in &listeners {
                let known = self.peers[r.index()].heard_from.entry(q).or_default();
                known.push((p, msg.ttl_remaining));
                known.extend(targets.iter().map(|&to| (to, next_ttl)));
            }
        }
        for &to in targets {
            let mut path = msg.path.clone();
            path.push(to);
            let outcome = &mut self.outcomes[q.index()];
            outcome.max_path_len = outcome.max_path_len.max(path.len());
            self.stats.query_copies += 1;
            if self.link_up(p, to, t) {
                self.record(t, "query", p, to, q);
                let copy = QueryMsg {
                    path,
                    ttl_remaining: msg.ttl_remaining - 1,
                    ..msg.clone()
                };
                let at = sent + self.cfg.network.link_latency;
                s.schedule(
                    at,
                    SimEvent::MessageArrival {
                        to,
                        msg: Message::Query(copy),
                    },
                )
                .expect("future arrival");
            } else {
                self.stats.query_copies_lost += 1;
                self.record(t, "query_lost", p, to, q);
            }
        }
    }
}
