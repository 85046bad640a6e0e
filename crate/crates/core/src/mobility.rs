//! Random-waypoint kinematics, radio-range connectivity and link-lifetime
//! (affinity) prediction.
//!
//! Trajectories are piecewise linear: a peer travels from its current point
//! to a uniformly drawn waypoint at a per-leg speed, pauses, then draws the
//! next leg. Positions are evaluated analytically so any instant inside the
//! current leg can be queried without stepping.

use std::collections::VecDeque;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::MobilityError;
use crate::ids::PeerId;

/// Upper bound returned by the affinity predictors when a link never breaks.
pub const AFFINITY_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffinityMode {
    /// Exact crossing time from the true kinematic state of both peers.
    #[default]
    Oracle,
    /// Linear extrapolation of beacon-observed distances.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityParams {
    pub enabled: bool,
    pub area_width: f64,
    pub area_height: f64,
    pub radio_range: f64,
    /// Scenario speed; leg speeds are drawn around it.
    pub v_nominal: f64,
    /// Leg speed is uniform in `[(1 - spread) v, (1 + spread) v]`.
    pub speed_spread: f64,
    pub pause_min: f64,
    pub pause_max: f64,
    pub affinity_mode: AffinityMode,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            enabled: true,
            area_width: 500.0,
            area_height: 500.0,
            radio_range: 100.0,
            v_nominal: 4.26,
            speed_spread: 0.5,
            pause_min: 0.0,
            pause_max: 2.0,
            affinity_mode: AffinityMode::Oracle,
        }
    }
}

impl MobilityParams {
    pub fn speed_bounds(&self) -> (f64, f64) {
        let lo = (1.0 - self.speed_spread) * self.v_nominal;
        let hi = (1.0 + self.speed_spread) * self.v_nominal;
        (lo.max(0.0), hi.max(0.0))
    }

    pub fn random_point(&self, rng: &mut impl Rng) -> Vec2 {
        Vec2::new(
            rng.gen::<f64>() * self.area_width,
            rng.gen::<f64>() * self.area_height,
        )
    }

    fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.area_width), p.y.clamp(0.0, self.area_height))
    }
}

/// One random-waypoint leg: travel `origin -> waypoint`, then pause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub origin: Vec2,
    pub depart: f64,
    pub waypoint: Vec2,
    pub speed: f64,
    pub arrive: f64,
    pub pause_until: f64,
}

impl Leg {
    pub fn new(origin: Vec2, depart: f64, waypoint: Vec2, speed: f64, pause: f64) -> Self {
        let dist = origin.distance(waypoint);
        let arrive = if dist == 0.0 {
            depart
        } else if speed > 0.0 {
            depart + dist / speed
        } else {
            f64::INFINITY
        };
        Self {
            origin,
            depart,
            waypoint,
            speed,
            arrive,
            pause_until: arrive + pause,
        }
    }

    /// A leg that never ends; the peer sits at `at` forever.
    pub fn stationary(at: Vec2, since: f64) -> Self {
        Self {
            origin: at,
            depart: since,
            waypoint: at,
            speed: 0.0,
            arrive: since,
            pause_until: f64::INFINITY,
        }
    }

    pub fn is_moving(&self, t: f64) -> bool {
        self.speed > 0.0 && t >= self.depart && t < self.arrive
    }

    pub fn position_at(&self, t: f64) -> Vec2 {
        if t >= self.arrive {
            return self.waypoint;
        }
        if self.speed <= 0.0 || t <= self.depart {
            return self.origin;
        }
        let dir = self.waypoint - self.origin;
        let frac = (self.speed * (t - self.depart)) / dir.norm();
        self.origin + dir * frac
    }

    pub fn velocity_at(&self, t: f64) -> Vec2 {
        if !self.is_moving(t) {
            return Vec2::ZERO;
        }
        let dir = self.waypoint - self.origin;
        dir * (self.speed / dir.norm())
    }
}

/// Random-waypoint trajectory of one peer, driven by its own random stream.
#[derive(Debug, Clone)]
pub struct Trajectory {
    leg: Leg,
    rng: ChaCha8Rng,
}

impl Trajectory {
    /// Starts a peer at a uniform position with its first leg departing at `t0`.
    pub fn random(params: &MobilityParams, t0: f64, mut rng: ChaCha8Rng) -> Self {
        let start = params.random_point(&mut rng);
        let leg = if params.enabled && params.v_nominal > 0.0 {
            draw_leg(params, start, t0, &mut rng)
        } else {
            Leg::stationary(start, t0)
        };
        Self { leg, rng }
    }

    pub fn from_leg(leg: Leg, rng: ChaCha8Rng) -> Self {
        Self { leg, rng }
    }

    pub fn into_rng(self) -> ChaCha8Rng {
        self.rng
    }

    pub fn leg(&self) -> &Leg {
        &self.leg
    }

    /// Draws follow-up legs until `t` falls before the end of the current one.
    pub fn advance_to(&mut self, t: f64, params: &MobilityParams) {
        while t >= self.leg.pause_until {
            let start = self.leg.waypoint;
            let depart = self.leg.pause_until;
            self.leg = draw_leg(params, start, depart, &mut self.rng);
        }
    }

    pub fn position_at(&self, t: f64) -> Vec2 {
        self.leg.position_at(t)
    }

    pub fn velocity_at(&self, t: f64) -> Vec2 {
        self.leg.velocity_at(t)
    }
}

fn draw_leg(params: &MobilityParams, start: Vec2, depart: f64, rng: &mut ChaCha8Rng) -> Leg {
    let waypoint = params.clamp(params.random_point(rng));
    let (lo, hi) = params.speed_bounds();
    let speed = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let pause = if params.pause_max > params.pause_min {
        rng.gen_range(params.pause_min..=params.pause_max)
    } else {
        params.pause_min
    };
    Leg::new(start, depart, waypoint, speed, pause)
}

/// Peers `j != i` that are connected and within `range` of peer `i`.
/// Distance exactly equal to `range` counts as connected.
pub fn neighbors_of(i: PeerId, positions: &[Vec2], connected: &[bool], range: f64) -> Vec<PeerId> {
    let me = positions[i.index()];
    if !connected[i.index()] {
        return Vec::new();
    }
    positions
        .iter()
        .enumerate()
        .filter(|&(j, p)| j != i.index() && connected[j] && me.distance(*p) <= range)
        .map(|(j, _)| PeerId::from(j))
        .collect()
}

/// Time until two peers holding their current velocities drift out of range.
///
/// `rel_pos` and `rel_vel` are the neighbor's position and velocity relative
/// to the forwarding peer. Solves `|rel_pos + rel_vel * tau| = range` for the
/// positive root.
pub fn affinity_oracle(rel_pos: Vec2, rel_vel: Vec2, range: f64) -> Result<f64, MobilityError> {
    let distance = rel_pos.norm();
    if distance > range {
        return Err(MobilityError::NotNeighbors { distance, range });
    }
    let a = rel_vel.dot(rel_vel);
    if a == 0.0 {
        return Ok(AFFINITY_CAP);
    }
    let b = 2.0 * rel_pos.dot(rel_vel);
    let c = rel_pos.dot(rel_pos) - range * range;
    // c <= 0, so the discriminant is non-negative and the larger root is >= 0.
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let tau = (-b + disc.sqrt()) / (2.0 * a);
    Ok(tau.clamp(0.0, AFFINITY_CAP))
}

/// Recent `(time, distance)` observations of one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityWindow {
    samples: VecDeque<(f64, f64)>,
    capacity: usize,
}

impl AffinityWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            samples: VecDeque::with_capacity(capacity.max(2)),
            capacity: capacity.max(2),
        }
    }

    /// Records a sample; samples not strictly later than the newest are ignored.
    pub fn push(&mut self, t: f64, distance: f64) -> bool {
        if self.samples.back().is_some_and(|&(last, _)| t <= last) {
            return false;
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((t, distance));
        true
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn latest(&self) -> Option<(f64, f64)> {
        self.samples.back().copied()
    }
}

/// Distance-slope link lifetime estimate from the two newest samples,
/// measured from `t` (time already elapsed since the newest sample is
/// subtracted).
pub fn affinity_estimate(window: &AffinityWindow, t: f64, range: f64) -> Result<f64, MobilityError> {
    let n = window.samples.len();
    if n < 2 {
        return Err(MobilityError::InsufficientSamples(n));
    }
    let (t0, d0) = window.samples[n - 2];
    let (t1, d1) = window.samples[n - 1];
    let slope = (d1 - d0) / (t1 - t0);
    if slope <= 0.0 {
        return Ok(AFFINITY_CAP);
    }
    let remaining = (range - d1) / slope - (t - t1).max(0.0);
    Ok(remaining.clamp(0.0, AFFINITY_CAP))
}
