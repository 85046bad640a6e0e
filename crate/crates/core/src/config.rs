//! Run configuration: one TOML document with a section per subsystem.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown keys are rejected by name, and dotted `section.key=value`
//! overrides can be applied on top of a loaded file.

use serde::{Deserialize, Serialize};

use crate::content::WorkloadParams;
use crate::energy::EnergyParams;
use crate::error::{ConfigError, ContentError, ScoringError};
use crate::mobility::MobilityParams;
use crate::protocol::NetworkParams;
use crate::scoring::{Protocol, ScoringParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub seed: u64,
    pub n_peers: usize,
    pub protocol: Protocol,
    /// Virtual run length, seconds.
    pub duration: f64,
    /// Record a per-message trace.
    pub trace: bool,
    /// Record the engine dispatch log.
    pub event_log: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            seed: 1,
            n_peers: 50,
            protocol: Protocol::Cdp,
            duration: 600.0,
            trace: false,
            event_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub run: RunParams,
    pub mobility: MobilityParams,
    pub energy: EnergyParams,
    pub workload: WorkloadParams,
    pub scoring: ScoringParams,
    pub network: NetworkParams,
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

/// Section validators start their messages with the offending field name.
fn field_error(section: &str, message: String) -> ConfigError {
    let field = message.split_whitespace().next().unwrap_or_default();
    invalid(&format!("{section}.{field}"), message)
}

/// First key path present in `given` but absent from `reference`.
fn find_unknown_key(given: &toml::Table, reference: &toml::Table, prefix: &str) -> Option<String> {
    for (k, v) in given {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match (v, reference.get(k)) {
            (_, None) => return Some(path),
            (toml::Value::Table(g), Some(toml::Value::Table(r))) => {
                if let Some(p) = find_unknown_key(g, r, &path) {
                    return Some(p);
                }
            }
            _ => {}
        }
    }
    None
}

fn reference_table() -> toml::Table {
    toml::Table::try_from(SimConfig::default()).expect("default config serializes")
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = toml::from_str(text)?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        if let Some(key) = find_unknown_key(&table, &reference_table(), "") {
            return Err(ConfigError::UnknownKey(key));
        }
        let cfg: SimConfig = table.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `section.key=value` overrides. Values are parsed as TOML
    /// literals, falling back to a bare string.
    pub fn with_overrides<'a, I>(&self, overrides: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut table = toml::Table::try_from(self).expect("config serializes");
        for (key, raw) in overrides {
            let (section, field) = key
                .split_once('.')
                .ok_or_else(|| invalid(key, "expected `section.key`"))?;
            let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
                Ok(mut t) => t.remove("v").expect("parsed key"),
                Err(_) => toml::Value::String(raw.to_owned()),
            };
            let sect = table
                .get_mut(section)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| ConfigError::UnknownKey(key.to_owned()))?;
            if !sect.contains_key(field) {
                return Err(ConfigError::UnknownKey(key.to_owned()));
            }
            sect.insert(field.to_owned(), value);
        }
        Self::from_table(table)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let run = &self.run;
        if run.n_peers < 2 {
            return Err(invalid("run.n_peers", "must be at least 2"));
        }
        if !(run.duration > 0.0) {
            return Err(invalid("run.duration", "must be positive"));
        }
        if run.duration <= self.workload.issue_window_end + self.scoring.max_t {
            return Err(invalid(
                "run.duration",
                "must exceed workload.issue_window_end + scoring.max_t",
            ));
        }
        self.scoring.validate().map_err(|e| match e {
            ScoringError::BadParams(m) => field_error("scoring", m),
            other => invalid("scoring", other.to_string()),
        })?;
        self.workload.validate(run.n_peers).map_err(|e| match e {
            ContentError::BadConfig(m) => field_error("workload", m),
            other => invalid("workload", other.to_string()),
        })?;

        let m = &self.mobility;
        if !(m.area_width > 0.0 && m.area_height > 0.0) {
            return Err(invalid("mobility.area_width", "area must be positive"));
        }
        if !(m.radio_range > 0.0) {
            return Err(invalid("mobility.radio_range", "must be positive"));
        }
        if m.v_nominal < 0.0 || !(0.0..=1.0).contains(&m.speed_spread) {
            return Err(invalid(
                "mobility.v_nominal",
                "speed must be >= 0 with spread in [0, 1]",
            ));
        }
        if m.pause_min < 0.0 || m.pause_max < m.pause_min {
            return Err(invalid("mobility.pause_max", "need 0 <= pause_min <= pause_max"));
        }

        let e = &self.energy;
        if !(e.initial_min > 0.0 && e.initial_max >= e.initial_min) {
            return Err(invalid(
                "energy.initial_max",
                "need 0 < initial_min <= initial_max",
            ));
        }
        if e.tx_cost < 0.0 || e.rx_cost < 0.0 || e.idle_rate < 0.0 {
            return Err(invalid("energy.tx_cost", "costs must be non-negative"));
        }
        if !(e.tick > 0.0) {
            return Err(invalid("energy.tick", "must be positive"));
        }
        if e.shutdown >= e.min_energy {
            return Err(invalid("energy.min_energy", "must exceed energy.shutdown"));
        }

        let n = &self.network;
        if !(n.beacon_interval > 0.0) {
            return Err(invalid("network.beacon_interval", "must be positive"));
        }
        if n.neighbor_timeout < n.beacon_interval {
            return Err(invalid("network.neighbor_timeout", "must be >= beacon_interval"));
        }
        if n.link_latency < 0.0 {
            return Err(invalid("network.link_latency", "must be non-negative"));
        }
        if !(n.base_service_rate > 0.0) {
            return Err(invalid("network.base_service_rate", "must be positive"));
        }
        if n.queue_capacity == 0 {
            return Err(invalid("network.queue_capacity", "must be positive"));
        }
        if n.cpu_choices.is_empty() || n.cpu_choices.iter().any(|&c| !(c > 0.0)) {
            return Err(invalid("network.cpu_choices", "need at least one positive value"));
        }
        if !(n.gossip_epsilon > 0.0) {
            return Err(invalid("network.gossip_epsilon", "must be positive"));
        }
        if !(n.airtime >= 0.0 && n.beacon_airtime >= 0.0) {
            return Err(invalid("network.airtime", "airtimes must be non-negative"));
        }
        if n.affinity_window < 2 {
            return Err(invalid("network.affinity_window", "must be at least 2"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(SimConfig::from_toml_str("").unwrap(), SimConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = SimConfig::default()
            .with_overrides([("run.n_peers", "75"), ("mobility.v_nominal", "7.73")])
            .unwrap();
        let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.run.n_peers, 75);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = SimConfig::from_toml_str("[run]\nn_peer = 4\n").unwrap_err();
        assert!(
            matches!(&err, ConfigError::UnknownKey(k) if k == "run.n_peer"),
            "{err}"
        );
        let err = SimConfig::from_toml_str("[routing]\nk = 4\n").unwrap_err();
        assert!(
            matches!(&err, ConfigError::UnknownKey(k) if k == "routing"),
            "{err}"
        );
        let err = SimConfig::default()
            .with_overrides([("scoring.kk", "2")])
            .unwrap_err();
        assert!(matches!(&err, ConfigError::UnknownKey(k) if k == "scoring.kk"));
    }

    #[test]
    fn overrides_parse_enums_and_strings() {
        let cfg = SimConfig::default()
            .with_overrides([
                ("run.protocol", "gossiping_lb"),
                ("mobility.affinity_mode", "estimate"),
            ])
            .unwrap();
        assert_eq!(cfg.run.protocol, Protocol::GossipingLb);
        assert_eq!(
            cfg.mobility.affinity_mode,
            crate::mobility::AffinityMode::Estimate
        );
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(SimConfig::from_toml_str("[run]\nn_peers = 1\n").is_err());
        assert!(SimConfig::from_toml_str("[run]\nduration = 100.0\n").is_err());
        let err = SimConfig::from_toml_str("[scoring]\nk = 0\n").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Invalid { key, .. } if key == "scoring.k"),
            "{err}"
        );
        let err = SimConfig::from_toml_str("[workload]\nnoise_prob = 2.0\n").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Invalid { key, .. } if key == "workload.noise_prob"),
            "{err}"
        );
        assert!(SimConfig::from_toml_str("[run]\nn_peers = \"many\"\n").is_err());
        assert!(SimConfig::from_toml_str("[energy]\nmin_energy = 4.0\n").is_err());
        assert!(SimConfig::from_toml_str("[network]\nairtime = -0.1\n").is_err());
    }
}
