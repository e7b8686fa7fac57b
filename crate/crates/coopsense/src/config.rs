//! Run configuration: defaults, validation, and the flat key-value file
//! format.
//!
//! A configuration file is plain text with one `key = value` pair per line;
//! `#` starts a comment. Keys use dotted sections. Unknown keys are errors.
//!
//! ```text
//! channels = 20                    # number of monitored channels (M)
//! nodes = 10                       # sensing nodes in the cluster (C)
//! sessions = 10000                 # sensing sessions to simulate (N)
//! seed = 1                         # master seed (u64)
//! replications = 1                 # independent replications
//! pfa_bound = 0.05                 # global false-alarm bound
//! detector.p_d = 0.9               # local detector probability of detection
//! detector.p_fa = 0.05             # local detector probability of false alarm
//! correlation.rho_vacant = 0.5     # pairwise vote correlation, vacant channel
//! correlation.rho_occupied = 0.5   # pairwise vote correlation, occupied channel
//! channel.3.mean_on = 2.5          # per-channel sojourn overrides (sessions)
//! channel.3.mean_off = 7.5
//! fusion.kind = adaptive           # or | and | count | lrt | adaptive
//! fusion.k = 3                     # threshold for kind = count
//! fusion.lambda = 1.0              # threshold for kind = lrt
//! fusion.gamma = 0.5               # randomization at exact equality (lrt)
//! fusion.adaptive.window = 100     # adaptive observation window (events)
//! fusion.adaptive.initial_k = 5    # optional; defaults to majority
//! fusion.adaptive.md_threshold = 5 # optional; defaults to pfa_bound * window
//! fusion.adaptive.oc_threshold = 5 # optional; defaults to pfa_bound * window
//! estimator.kind = exponential     # exponential | linear
//! estimator.alpha = 0.01           # forgetting factor (exponential)
//! estimator.s_reset = 0.5          # reset value for unsensed channels
//! estimator.window = 40            # observation window (linear)
//! scheme = centralized             # centralized | decentralized | round-robin | hybrid-failover
//! scheme.failover_session = 5000   # head failure session (hybrid-failover)
//! metrics.top_n = 5                # channels in the effective RMSE
//! ```
//!
//! Unset keys keep their defaults; unset channels default to mean
//! un-occupancies evenly spaced over [0.1, 0.9].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::channel::{evenly_spaced_channels, ChannelParams};
use crate::error::{Error, Result};
use crate::fusion::{AdaptiveConfig, FusionPolicy};
use crate::sensing::{CorrelationSpec, DetectorProfile};

/// Which channel-state estimator each node view runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Exponential,
    Linear,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Exponential => write!(f, "exponential"),
            EstimatorKind::Linear => write!(f, "linear"),
        }
    }
}

/// Estimator settings shared by every channel view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub alpha: f64,
    pub s_reset: f64,
    pub window: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::Exponential,
            alpha: 0.01,
            s_reset: 0.5,
            window: 40,
        }
    }
}

impl EstimatorConfig {
    pub fn build(&self) -> Result<crate::estimation::ChannelEstimate> {
        match self.kind {
            EstimatorKind::Exponential => {
                crate::estimation::ChannelEstimate::exponential(self.alpha, self.s_reset)
            }
            EstimatorKind::Linear => {
                crate::estimation::ChannelEstimate::linear(self.window, self.s_reset)
            }
        }
    }
}

/// Fusion rule settings, including the adaptive rule's knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub policy: FusionPolicy,
    /// Observation window of the adaptive rule, in feedback events.
    pub adaptive_window: usize,
    /// Optional fixed starting threshold; majority when unset.
    pub adaptive_initial_k: Option<u32>,
    /// Overrides for the adaptive thresholds; `pfa_bound * window` when unset.
    pub md_threshold: Option<f64>,
    pub oc_threshold: Option<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            policy: FusionPolicy::Adaptive,
            adaptive_window: 100,
            adaptive_initial_k: None,
            md_threshold: None,
            oc_threshold: None,
        }
    }
}

impl FusionConfig {
    pub fn adaptive_config(&self, pfa_bound: f64) -> AdaptiveConfig {
        let default = pfa_bound * self.adaptive_window as f64;
        AdaptiveConfig {
            window: self.adaptive_window,
            md_threshold: self.md_threshold.unwrap_or(default),
            oc_threshold: self.oc_threshold.unwrap_or(default),
            initial_k: self.adaptive_initial_k,
        }
    }
}

/// How the next session's sensing assignment is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Cluster head allocates nodes proportionally to the bids.
    Centralized,
    /// Each node samples its channel from the normalized bids.
    Decentralized,
    /// Blind cycling over the channels.
    RoundRobin,
    /// Centralized until the head fails, decentralized afterwards.
    HybridFailover,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Centralized => "centralized",
            SchemeKind::Decentralized => "decentralized",
            SchemeKind::RoundRobin => "round-robin",
            SchemeKind::HybridFailover => "hybrid-failover",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(SchemeKind::Centralized),
            "decentralized" => Ok(SchemeKind::Decentralized),
            "round-robin" => Ok(SchemeKind::RoundRobin),
            "hybrid-failover" => Ok(SchemeKind::HybridFailover),
            other => Err(Error::config(format!(
                "unknown scheme `{other}` (expected centralized, decentralized, round-robin or hybrid-failover)"
            ))),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Orchestration scheme plus the failover point for the hybrid scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// First session run decentralized after a cluster-head failure.
    pub failover_session: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            kind: SchemeKind::Centralized,
            failover_session: 5000,
        }
    }
}

/// Complete description of one simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of monitored channels (M).
    pub channels: usize,
    /// Number of sensing nodes in the cluster (C).
    pub nodes: usize,
    /// Sensing sessions per replication (N).
    pub sessions: u64,
    /// Master seed; replication streams derive from it.
    pub seed: u64,
    pub replications: usize,
    /// Upper bound on the global false-alarm probability.
    pub pfa_bound: f64,
    pub detector_p_d: f64,
    pub detector_p_fa: f64,
    pub rho_vacant: f64,
    pub rho_occupied: f64,
    /// Per-channel sojourn-mean overrides; unset channels use the evenly
    /// spaced default plan.
    pub channel_mean_on: BTreeMap<usize, f64>,
    pub channel_mean_off: BTreeMap<usize, f64>,
    pub fusion: FusionConfig,
    pub estimator: EstimatorConfig,
    pub scheme: SchemeConfig,
    /// Channels counted by the effective RMSE.
    pub top_n: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            channels: 20,
            nodes: 10,
            sessions: 10_000,
            seed: 1,
            replications: 1,
            pfa_bound: 0.05,
            detector_p_d: 0.9,
            detector_p_fa: 0.05,
            rho_vacant: 0.5,
            rho_occupied: 0.5,
            channel_mean_on: BTreeMap::new(),
            channel_mean_off: BTreeMap::new(),
            fusion: FusionConfig::default(),
            estimator: EstimatorConfig::default(),
            scheme: SchemeConfig::default(),
            top_n: 5,
        }
    }
}

impl RunConfig {
    pub fn detector(&self) -> Result<DetectorProfile> {
        DetectorProfile::new(self.detector_p_d, self.detector_p_fa)
    }

    pub fn correlation(&self) -> Result<CorrelationSpec> {
        CorrelationSpec::new(self.rho_vacant, self.rho_occupied)
    }

    /// The resolved per-channel occupancy parameters.
    pub fn channel_params(&self) -> Result<Vec<ChannelParams>> {
        let mut params = evenly_spaced_channels(self.channels)?;
        for (&idx, &mean_on) in &self.channel_mean_on {
            if idx >= self.channels {
                return Err(Error::config(format!(
                    "channel.{idx}.mean_on is out of range for {} channels",
                    self.channels
                )));
            }
            params[idx] = ChannelParams::new(mean_on, params[idx].mean_off())?;
        }
        for (&idx, &mean_off) in &self.channel_mean_off {
            if idx >= self.channels {
                return Err(Error::config(format!(
                    "channel.{idx}.mean_off is out of range for {} channels",
                    self.channels
                )));
            }
            params[idx] = ChannelParams::new(params[idx].mean_on(), mean_off)?;
        }
        Ok(params)
    }

    /// Rejects invalid configurations before any simulation runs.
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::config("no sensing nodes: nodes must be at least 1"));
        }
        if self.channels == 0 {
            return Err(Error::config("channels must be at least 1"));
        }
        if self.sessions == 0 {
            return Err(Error::config("sessions must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if !(self.pfa_bound > 0.0 && self.pfa_bound < 1.0) {
            return Err(Error::config(format!(
                "pfa_bound must lie in (0,1), got {}",
                self.pfa_bound
            )));
        }
        if self.top_n == 0 || self.top_n > self.channels {
            return Err(Error::config(format!(
                "metrics.top_n must lie in 1..={}, got {}",
                self.channels, self.top_n
            )));
        }
        self.detector()?;
        self.correlation()?;
        self.channel_params()?;
        self.estimator.build()?;
        match self.fusion.policy {
            FusionPolicy::CountK(k) if k == 0 => {
                return Err(Error::config("fusion.k must be at least 1"));
            }
            FusionPolicy::OptimalLrt { lambda, gamma } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::config(format!(
                        "fusion.lambda must be positive, got {lambda}"
                    )));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::config(format!(
                        "fusion.gamma must lie in [0,1], got {gamma}"
                    )));
                }
            }
            FusionPolicy::Adaptive => {
                if self.fusion.adaptive_window == 0 {
                    return Err(Error::config("fusion.adaptive.window must be at least 1"));
                }
                // Sensor counts per channel are uncontrolled without a
                // cluster head, so the adaptive rule cannot run there.
                if matches!(
                    self.scheme.kind,
                    SchemeKind::Decentralized | SchemeKind::HybridFailover
                ) {
                    return Err(Error::config(format!(
                        "adaptive fusion requires centralized sensor counts and cannot run under the {} scheme",
                        self.scheme.kind
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Parses the key-value configuration text on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            config
                .apply(key.trim(), value.trim())
                .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(config)
    }

    /// Loads a configuration file; missing keys keep their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_kv_str(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "channels" => self.channels = parse(key, value)?,
            "nodes" => self.nodes = parse(key, value)?,
            "sessions" => self.sessions = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "replications" => self.replications = parse(key, value)?,
            "pfa_bound" => self.pfa_bound = parse(key, value)?,
            "detector.p_d" => self.detector_p_d = parse(key, value)?,
            "detector.p_fa" => self.detector_p_fa = parse(key, value)?,
            "correlation.rho_vacant" => self.rho_vacant = parse(key, value)?,
            "correlation.rho_occupied" => self.rho_occupied = parse(key, value)?,
            "fusion.kind" => {
                self.fusion.policy = match value {
                    "or" => FusionPolicy::Or,
                    "and" => FusionPolicy::And,
                    "count" => FusionPolicy::CountK(match self.fusion.policy {
                        FusionPolicy::CountK(k) => k,
                        _ => 1,
                    }),
                    "lrt" => FusionPolicy::OptimalLrt {
                        lambda: 1.0,
                        gamma: 0.5,
                    },
                    "adaptive" => FusionPolicy::Adaptive,
                    other => {
                        return Err(Error::config(format!(
                            "unknown fusion.kind `{other}` (expected or, and, count, lrt or adaptive)"
                        )))
                    }
                }
            }
            "fusion.k" => {
                let k: u32 = parse(key, value)?;
                self.fusion.policy = FusionPolicy::CountK(k);
            }
            "fusion.lambda" => {
                let lambda: f64 = parse(key, value)?;
                let gamma = match self.fusion.policy {
                    FusionPolicy::OptimalLrt { gamma, .. } => gamma,
                    _ => 0.5,
                };
                self.fusion.policy = FusionPolicy::OptimalLrt { lambda, gamma };
            }
            "fusion.gamma" => {
                let gamma: f64 = parse(key, value)?;
                let lambda = match self.fusion.policy {
                    FusionPolicy::OptimalLrt { lambda, .. } => lambda,
                    _ => 1.0,
                };
                self.fusion.policy = FusionPolicy::OptimalLrt { lambda, gamma };
            }
            "fusion.adaptive.window" => self.fusion.adaptive_window = parse(key, value)?,
            "fusion.adaptive.initial_k" => {
                self.fusion.adaptive_initial_k = Some(parse(key, value)?)
            }
            "fusion.adaptive.md_threshold" => self.fusion.md_threshold = Some(parse(key, value)?),
            "fusion.adaptive.oc_threshold" => self.fusion.oc_threshold = Some(parse(key, value)?),
            "estimator.kind" => {
                self.estimator.kind = match value {
                    "exponential" | "ema" => EstimatorKind::Exponential,
                    "linear" | "lma" => EstimatorKind::Linear,
                    other => {
                        return Err(Error::config(format!(
                            "unknown estimator.kind `{other}` (expected exponential or linear)"
                        )))
                    }
                }
            }
            "estimator.alpha" => self.estimator.alpha = parse(key, value)?,
            "estimator.s_reset" => self.estimator.s_reset = parse(key, value)?,
            "estimator.window" => self.estimator.window = parse(key, value)?,
            "scheme" => self.scheme.kind = SchemeKind::parse(value)?,
            "scheme.failover_session" => self.scheme.failover_session = parse(key, value)?,
            "metrics.top_n" => self.top_n = parse(key, value)?,
            _ => {
                if let Some(rest) = key.strip_prefix("channel.") {
                    let (idx, field) = rest.split_once('.').ok_or_else(|| {
                        Error::config(format!("unknown key `{key}`"))
                    })?;
                    let idx: usize = idx
                        .parse()
                        .map_err(|_| Error::config(format!("bad channel index in `{key}`")))?;
                    match field {
                        "mean_on" => {
                            self.channel_mean_on.insert(idx, parse(key, value)?);
                        }
                        "mean_off" => {
                            self.channel_mean_off.insert(idx, parse(key, value)?);
                        }
                        _ => return Err(Error::config(format!("unknown key `{key}`"))),
                    }
                } else {
                    return Err(Error::config(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("cannot parse `{value}` for key `{key}`")))
}
