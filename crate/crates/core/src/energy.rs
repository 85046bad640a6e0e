//! Battery drain and remaining-battery-time prediction.

use serde::{Deserialize, Serialize};

use crate::error::MobilityError;

/// Upper bound on the remaining battery time (zero observed drain).
pub const RTIME_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub drain_enabled: bool,
    pub initial_min: f64,
    pub initial_max: f64,
    pub tx_cost: f64,
    pub rx_cost: f64,
    /// Units per second while idle.
    pub idle_rate: f64,
    /// Level at which the predicted remaining time reaches zero.
    pub min_energy: f64,
    /// Level at or below which a peer powers off.
    pub shutdown: f64,
    /// Period of the idle-drain tick, seconds.
    pub tick: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            drain_enabled: true,
            initial_min: 80.0,
            initial_max: 100.0,
            tx_cost: 0.05,
            rx_cost: 0.025,
            idle_rate: 0.001,
            min_energy: 20.0,
            shutdown: 5.0,
            tick: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drain {
    Tx,
    Rx,
    Idle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    energy: f64,
    connected: bool,
}

impl Battery {
    pub fn new(energy: f64) -> Self {
        Self {
            energy: energy.max(0.0),
            connected: true,
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Applies one drain action and returns the new level. Crossing the
    /// shutdown threshold disconnects the peer for the rest of the run.
    pub fn consume(&mut self, action: Drain, params: &EnergyParams) -> f64 {
        if !self.connected || !params.drain_enabled {
            return self.energy;
        }
        let cost = match action {
            Drain::Tx => params.tx_cost,
            Drain::Rx => params.rx_cost,
            Drain::Idle(dt) => params.idle_rate * dt.max(0.0),
        };
        self.energy = (self.energy - cost).max(0.0);
        if self.energy <= params.shutdown {
            self.connected = false;
        }
        self.energy
    }
}

/// Predicted time for a battery to fall from `latest` to `min_energy`,
/// extrapolating the drain observed between `earlier` and `latest`.
pub fn rtime(earlier: EnergySample, latest: EnergySample, min_energy: f64) -> Result<f64, MobilityError> {
    if earlier.t >= latest.t {
        return Err(MobilityError::BadSampleOrder {
            t_k: earlier.t,
            t_p: latest.t,
        });
    }
    if latest.energy <= min_energy {
        return Ok(0.0);
    }
    let drained = earlier.energy - latest.energy;
    if drained <= 0.0 {
        return Ok(RTIME_CAP);
    }
    let value = (latest.energy - min_energy) * ((latest.t - earlier.t) / drained);
    Ok(value.clamp(0.0, RTIME_CAP))
}
