//! Cluster-based cooperative spectrum sensing simulator.
//!
//! A deterministic, seedable discrete-time simulator for a cluster of
//! sensing nodes that cooperatively estimate the occupancy of a set of
//! narrowband channels. The building blocks:
//!
//! - [`channel`]: ground-truth On-Off occupancy per channel;
//! - [`sensing`]: correlated binary votes of the local detectors;
//! - [`fusion`]: OR/AND/counting/likelihood-ratio fusion rules plus an
//!   adaptive counting rule driven by misdetection feedback;
//! - [`estimation`]: exponential and linear moving-average estimators of
//!   each channel's mean un-occupancy, with a reset term for unsensed
//!   channels;
//! - [`orchestration`]: bid-proportional assignment of sensing nodes to
//!   channels, centralized (cluster head), decentralized (per-node), a
//!   blind round-robin baseline, and a centralized-to-decentralized
//!   failover;
//! - [`metrics`]: per-channel RMSE of the estimates and the multi-channel
//!   effective RMSE over the most vacant channels;
//! - [`sim`]: the session loop (sense, broadcast, fuse, estimate, choose)
//!   with common-random-number scheme comparisons;
//! - [`report`]: CSV reports and SVG figures.
//!
//! See the `examples/` directory for one runnable walk-through per
//! capability, and the `coopsense` binary for batch scenario runs.

pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod figure;
pub mod fusion;
pub mod metrics;
pub mod orchestration;
pub mod report;
pub mod sensing;
pub mod sim;

pub use channel::{ChannelParams, ChannelState, SpectrumEnv, SpectrumState};
pub use config::{
    EstimatorConfig, EstimatorKind, FusionConfig, RunConfig, SchemeConfig, SchemeKind,
};
pub use error::{Error, Result};
pub use estimation::ChannelEstimate;
pub use fusion::{AdaptiveState, FusionPolicy};
pub use metrics::EstimateLog;
pub use sensing::{CorrelationSpec, DecisionVector, DetectorProfile};
pub use sim::{
    compare_schemes, run_replication, run_replications, run_scenario, run_scenario_recorded,
    ComparisonCell, SessionRecord,
};
