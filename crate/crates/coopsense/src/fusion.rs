//! Fusion of local votes into one global channel verdict.
//!
//! The fusion center receives the vote vector for a channel and reduces it
//! to one verdict. Because the votes are exchangeable, every rule here is a
//! function of `m`, the number of vacant votes (equivalently of the number
//! of occupied votes `n - m`):
//!
//! - counting rules decide occupied when at least `k` sensors voted
//!   occupied, with OR (`k = 1`) and AND (`k = n`) as the extremes;
//! - the likelihood-ratio rule compares [`lrt_lambda`] to a threshold with
//!   randomization at exact equality;
//! - the adaptive counting rule tunes `k` online from feedback, without
//!   knowing the correlation between sensors.

use std::collections::VecDeque;

use rand::{Rng, RngExt};

use crate::channel::ChannelState;
use crate::sensing::{joint_pmf, CorrelationSpec, DetectorProfile};

/// Which rule the fusion center applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionPolicy {
    /// Occupied if any sensor votes occupied (1-out-of-n).
    Or,
    /// Occupied only if every sensor votes occupied (n-out-of-n).
    And,
    /// Occupied if at least `k` sensors vote occupied; `k` is clamped into
    /// `[1, n]` for the sensor count at hand.
    CountK(u32),
    /// Likelihood-ratio test against `lambda`, deciding occupied with
    /// probability `gamma` at exact equality.
    OptimalLrt { lambda: f64, gamma: f64 },
    /// Counting rule whose threshold is tuned online by [`AdaptiveState`].
    Adaptive,
}

impl FusionPolicy {
    /// Occupied votes required by a counting-style policy for `n` sensors.
    ///
    /// Panics for [`FusionPolicy::OptimalLrt`] and [`FusionPolicy::Adaptive`],
    /// which do not reduce to a fixed count.
    pub fn required_ones(&self, n: usize) -> u32 {
        let n = n as u32;
        match self {
            FusionPolicy::Or => 1,
            FusionPolicy::And => n.max(1),
            FusionPolicy::CountK(k) => (*k).clamp(1, n.max(1)),
            _ => panic!("policy {self:?} has no fixed counting threshold"),
        }
    }
}

/// Likelihood ratio of a vote vector with `zeros` vacant votes out of `n`.
///
/// Returns `+inf` when the vacant-hypothesis probability of the vector is
/// zero, which only happens for mixed vectors at `rho_vacant = 1`.
pub fn lrt_lambda(
    zeros: usize,
    n: usize,
    det: &DetectorProfile,
    corr: &CorrelationSpec,
) -> f64 {
    assert!(zeros <= n && n >= 1);
    let ones = n - zeros;
    let num = joint_pmf(n, ones, ChannelState::Occupied, det, corr);
    let den = joint_pmf(n, ones, ChannelState::Vacant, det, corr);
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Counting rule: occupied iff at least `k` of the `n` sensors voted
/// occupied, i.e. iff `zeros <= n - k`.
pub fn decide_counting(zeros: usize, n: usize, k: u32) -> ChannelState {
    assert!(zeros <= n && n >= 1);
    let k = k.clamp(1, n as u32);
    if (n - zeros) as u32 >= k {
        ChannelState::Occupied
    } else {
        ChannelState::Vacant
    }
}

/// Applies a counting-style policy (OR, AND or fixed k) to a vote count.
pub fn decide_policy(zeros: usize, n: usize, policy: &FusionPolicy) -> ChannelState {
    decide_counting(zeros, n, policy.required_ones(n))
}

/// Likelihood-ratio rule with randomization at exact threshold equality.
pub fn decide_optimal<R: Rng + ?Sized>(
    zeros: usize,
    n: usize,
    det: &DetectorProfile,
    corr: &CorrelationSpec,
    lambda: f64,
    gamma: f64,
    rng: &mut R,
) -> ChannelState {
    assert!(lambda > 0.0, "threshold must be positive");
    assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0,1]");
    let ratio = lrt_lambda(zeros, n, det, corr);
    if ratio > lambda {
        ChannelState::Occupied
    } else if ratio == lambda {
        if rng.random_bool(gamma) {
            ChannelState::Occupied
        } else {
            ChannelState::Vacant
        }
    } else {
        ChannelState::Vacant
    }
}

/// Tuning knobs of the adaptive counting rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    /// Observation window length, in feedback events.
    pub window: usize,
    /// Misdetections tolerated inside the window before `k` is decreased.
    pub md_threshold: f64,
    /// Occupied verdicts tolerated inside the window before `k` is increased.
    pub oc_threshold: f64,
    /// Starting threshold; defaults to majority (`ceil(n/2)`) when `None`.
    pub initial_k: Option<u32>,
}

impl AdaptiveConfig {
    /// Thresholds derived from the global false-alarm bound: both equal
    /// `bound * window`.
    pub fn from_pfa_bound(window: usize, pfa_bound: f64) -> Self {
        let threshold = pfa_bound * window as f64;
        Self {
            window,
            md_threshold: threshold,
            oc_threshold: threshold,
            initial_k: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct WindowEntry {
    misdetection: bool,
    occupied_verdict: bool,
}

/// Online state of the adaptive counting rule for one channel.
///
/// Feedback after each fused session drives two counters over a sliding
/// window of the most recent events: a misdetection (the cluster declared
/// the channel vacant while it was occupied) pushes `k` down once the
/// misdetection counter exceeds its threshold; occupied verdicts push `k`
/// up once their counter exceeds its threshold. Counters reset after each
/// adjustment and forget events that leave the window. `k` stays clamped
/// to `[1, n]`.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    k: u32,
    window: VecDeque<WindowEntry>,
    window_len: usize,
    md_count: u32,
    oc_count: u32,
    md_threshold: f64,
    oc_threshold: f64,
}

impl AdaptiveState {
    /// State for a channel currently sensed by `n` sensors.
    pub fn new(n: usize, config: &AdaptiveConfig) -> Self {
        assert!(n >= 1, "adaptive rule needs at least one sensor");
        assert!(config.window >= 1, "window must hold at least one event");
        let default_k = (n as u32).div_ceil(2);
        Self {
            k: config.initial_k.unwrap_or(default_k).clamp(1, n as u32),
            window: VecDeque::with_capacity(config.window + 1),
            window_len: config.window,
            md_count: 0,
            oc_count: 0,
            md_threshold: config.md_threshold,
            oc_threshold: config.oc_threshold,
        }
    }

    /// Current decision threshold.
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Misdetection events currently counted inside the window.
    pub fn misdetection_count(&self) -> u32 {
        self.md_count
    }

    /// Occupied-verdict events currently counted inside the window.
    pub fn occupied_count(&self) -> u32 {
        self.oc_count
    }

    /// Applies the counting rule with the current `k`; does not mutate state.
    pub fn decide(&self, zeros: usize, n: usize) -> ChannelState {
        decide_counting(zeros, n, self.k)
    }

    /// Feeds back one session's outcome: the fused `decision` and the true
    /// channel state revealed when the cluster tried to use it.
    pub fn feedback(&mut self, decision: ChannelState, truth: ChannelState, n: usize) {
        let n = n.max(1) as u32;
        self.k = self.k.clamp(1, n);
        let entry = WindowEntry {
            occupied_verdict: decision.is_occupied(),
            misdetection: decision.is_vacant() && truth.is_occupied(),
        };
        self.window.push_back(entry);
        self.md_count += entry.misdetection as u32;
        self.oc_count += entry.occupied_verdict as u32;

        if f64::from(self.md_count) > self.md_threshold {
            self.k = (self.k - 1).max(1);
            self.md_count = 0;
            for e in self.window.iter_mut() {
                e.misdetection = false;
            }
        }
        if f64::from(self.oc_count) > self.oc_threshold {
            self.k = (self.k + 1).min(n);
            self.oc_count = 0;
            for e in self.window.iter_mut() {
                e.occupied_verdict = false;
            }
        }

        while self.window.len() > self.window_len {
            let old = self.window.pop_front().expect("non-empty window");
            self.md_count -= old.misdetection as u32;
            self.oc_count -= old.occupied_verdict as u32;
        }
    }
}
