//! Correlated local sensor decisions and their exchangeable joint law.
//!
//! Sensors assigned to the same channel produce binary votes that are
//! exchangeable Bernoulli variables: marginal probability `p_d` of voting
//! occupied under an occupied channel (`p_fa` under a vacant one) and a
//! pairwise correlation index per hypothesis. The generative model is a
//! Beta-mixed Bernoulli (Polya) scheme with shape parameters
//! `a = p(1-rho)/rho`, `b = (1-p)(1-rho)/rho`: a common success rate `q` is
//! drawn from Beta(a, b) and each sensor votes independently given `q`.
//! This yields exactly the configured marginals and pairwise correlation,
//! and its closed-form joint pmf is what the fusion rules consume, so
//! generation and fusion share one probability model.

use rand::{Rng, RngExt};
use rand_distr::{Beta, Distribution};

use crate::channel::ChannelState;
use crate::error::{Error, Result};

/// Operating point of the (homogeneous) local detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorProfile {
    p_d: f64,
    p_fa: f64,
}

impl DetectorProfile {
    /// Requires `0 < p_fa < p_d < 1`: detectors must operate properly for
    /// counting rules to stand in for the likelihood-ratio test.
    pub fn new(p_d: f64, p_fa: f64) -> Result<Self> {
        let in_open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_open_unit(p_d) || !in_open_unit(p_fa) {
            return Err(Error::config(format!(
                "detector probabilities must lie in (0,1), got p_d={p_d} p_fa={p_fa}"
            )));
        }
        if p_d <= p_fa {
            return Err(Error::config(format!(
                "detector must satisfy p_d > p_fa, got p_d={p_d} p_fa={p_fa}"
            )));
        }
        Ok(Self { p_d, p_fa })
    }

    pub fn p_d(&self) -> f64 {
        self.p_d
    }

    pub fn p_fa(&self) -> f64 {
        self.p_fa
    }

    /// Marginal probability that one sensor votes occupied given the truth.
    pub fn vote_probability(&self, truth: ChannelState) -> f64 {
        match truth {
            ChannelState::Occupied => self.p_d,
            ChannelState::Vacant => self.p_fa,
        }
    }
}

/// Pairwise correlation indices between sensor votes, one per hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSpec {
    rho_vacant: f64,
    rho_occupied: f64,
}

impl CorrelationSpec {
    pub fn new(rho_vacant: f64, rho_occupied: f64) -> Result<Self> {
        for (name, rho) in [("rho_vacant", rho_vacant), ("rho_occupied", rho_occupied)] {
            if !(0.0..=1.0).contains(&rho) || rho.is_nan() {
                return Err(Error::config(format!(
                    "{name} must lie in [0,1], got {rho}"
                )));
            }
        }
        Ok(Self {
            rho_vacant,
            rho_occupied,
        })
    }

    /// Same correlation index under both hypotheses.
    pub fn uniform(rho: f64) -> Result<Self> {
        Self::new(rho, rho)
    }

    pub fn rho(&self, truth: ChannelState) -> f64 {
        match truth {
            ChannelState::Occupied => self.rho_occupied,
            ChannelState::Vacant => self.rho_vacant,
        }
    }

    pub fn rho_vacant(&self) -> f64 {
        self.rho_vacant
    }

    pub fn rho_occupied(&self) -> f64 {
        self.rho_occupied
    }
}

/// The local binary votes cast for one channel in one sensing session.
///
/// A vote of `true` means the sensor decided the channel is occupied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionVector {
    channel: usize,
    votes: Vec<bool>,
}

impl DecisionVector {
    pub fn new(channel: usize, votes: Vec<bool>) -> Self {
        Self { channel, votes }
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    /// Number of sensors that voted on this channel.
    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    /// Sensors voting occupied.
    pub fn ones(&self) -> usize {
        self.votes.iter().filter(|v| **v).count()
    }

    /// Sensors voting vacant (the count `m` the counting rules compare).
    pub fn zeros(&self) -> usize {
        self.len() - self.ones()
    }

    pub fn votes(&self) -> &[bool] {
        &self.votes
    }
}

/// Draws the correlated votes of `n` sensors observing the same channel.
///
/// Votes are exchangeable with marginal `det.vote_probability(truth)` and
/// pairwise correlation `corr.rho(truth)`; their joint law is [`joint_pmf`].
pub fn draw_local_decisions<R: Rng + ?Sized>(
    channel: usize,
    n: usize,
    truth: ChannelState,
    det: &DetectorProfile,
    corr: &CorrelationSpec,
    rng: &mut R,
) -> DecisionVector {
    assert!(n >= 1, "at least one sensor must vote");
    let p = det.vote_probability(truth);
    let rho = corr.rho(truth);
    let votes = if rho == 0.0 {
        (0..n).map(|_| rng.random_bool(p)).collect()
    } else if rho == 1.0 {
        vec![rng.random_bool(p); n]
    } else {
        let scale = (1.0 - rho) / rho;
        let beta = Beta::new(p * scale, (1.0 - p) * scale).expect("valid Beta shape");
        let q = f64::from(beta.sample(rng)).clamp(0.0, 1.0);
        (0..n).map(|_| rng.random_bool(q)).collect()
    };
    DecisionVector::new(channel, votes)
}

/// Probability of one specific vote vector with `ones` occupied votes out
/// of `n`, under the given hypothesis.
///
/// For `rho = 1` the law degenerates to a two-point mixture: all-ones with
/// probability `p`, all-zeros with probability `1 - p`, anything else 0.
pub fn joint_pmf(
    n: usize,
    ones: usize,
    truth: ChannelState,
    det: &DetectorProfile,
    corr: &CorrelationSpec,
) -> f64 {
    assert!(n >= 1 && ones <= n, "need 0 <= ones <= n, n >= 1");
    let p = det.vote_probability(truth);
    let rho = corr.rho(truth);
    let zeros = n - ones;
    if rho == 0.0 {
        p.powi(ones as i32) * (1.0 - p).powi(zeros as i32)
    } else if rho == 1.0 {
        if ones == n {
            p
        } else if ones == 0 {
            1.0 - p
        } else {
            0.0
        }
    } else {
        let scale = (1.0 - rho) / rho;
        let a = p * scale;
        let b = (1.0 - p) * scale;
        let mut prob = 1.0;
        for j in 0..ones {
            prob *= (a + j as f64) / (a + b + j as f64);
        }
        for j in 0..zeros {
            prob *= (b + j as f64) / (a + b + (ones + j) as f64);
        }
        prob
    }
}

/// Averaged empirical pairwise correlation over all sensor pairs.
///
/// Returns `None` when any sensor's marginal has zero variance, which
/// leaves the statistic undefined. All vectors must have the same width.
pub fn estimate_pairwise_correlation(samples: &[DecisionVector]) -> Option<f64> {
    let n = samples.first()?.len();
    if n < 2 {
        return None;
    }
    assert!(
        samples.iter().all(|s| s.len() == n),
        "all decision vectors must have the same sensor count"
    );
    let count = samples.len() as f64;
    let mut singles = vec![0u64; n];
    let mut pairs = vec![0u64; n * n];
    for sample in samples {
        let votes = sample.votes();
        for i in 0..n {
            if votes[i] {
                singles[i] += 1;
                for j in (i + 1)..n {
                    if votes[j] {
                        pairs[i * n + j] += 1;
                    }
                }
            }
        }
    }
    let means: Vec<f64> = singles.iter().map(|&s| s as f64 / count).collect();
    let vars: Vec<f64> = means.iter().map(|m| m * (1.0 - m)).collect();
    if vars.iter().any(|&v| v == 0.0) {
        return None;
    }
    let mut total = 0.0;
    let mut pair_count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let joint = pairs[i * n + j] as f64 / count;
            total += (joint - means[i] * means[j]) / (vars[i] * vars[j]).sqrt();
            pair_count += 1;
        }
    }
    Some(total / pair_count as f64)
}
