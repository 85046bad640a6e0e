//! Deterministic discrete-event simulation of content discovery in mobile
//! peer-to-peer networks.
//!
//! Peers move under random waypoint mobility, drain their batteries, and
//! route keyword queries to a bounded set of neighbors per hop. Three
//! forwarding strategies are provided:
//!
//! - **CDP** scores every neighbor by predicted link lifetime, load and the
//!   similarity of the query to what that neighbor answered before, then
//!   forwards to the top K.
//! - **Gossiping-LB** samples K neighbors with probability favoring short
//!   queues.
//! - **Flooding** picks K neighbors uniformly at random.
//!
//! Query hits travel back along the reverse query path and are lost if a
//! link on it has broken. [`scenario`] turns runs into recall, success rate
//! and discovery delay, and sweeps them over peer counts or speeds.

// `!(x > 0.0)` in validation also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod content;
pub mod energy;
pub mod engine;
pub mod error;
pub mod ids;
pub mod metrics;
pub mod mobility;
pub mod protocol;
pub mod scenario;
pub mod scoring;
pub mod sim;

pub use config::{RunParams, SimConfig};
pub use content::{cosine, generate_workload, Document, TermVector, Workload, WorkloadParams};
pub use error::{ConfigError, ContentError, EngineError, HarnessError, MobilityError, ScoringError};
pub use ids::{DocId, PeerId, QueryId};
pub use metrics::{QueryOutcome, RunMetrics, RunStats};
pub use scenario::{run_scenario, sweep, SweepAxis, SweepResult};
pub use scoring::{Protocol, ScoringParams};
pub use sim::{initial_positions, simulate, simulate_at, RunOutput, TraceRecord};
