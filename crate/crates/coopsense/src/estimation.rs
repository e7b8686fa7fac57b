//! Running estimates of each channel's mean un-occupancy.
//!
//! After fusion, the estimate for a sensed channel absorbs the fused
//! verdict: a vacant verdict contributes an instantaneous observation of 1,
//! an occupied verdict 0, so the estimate tracks the probability of finding
//! the channel vacant. Channels that were not sensed absorb the reset value
//! instead, which keeps every bid fresh at the cost of a controlled error
//! pull toward the reset point.

use std::collections::VecDeque;

use crate::channel::ChannelState;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Engine {
    /// Exponential moving average with forgetting factor alpha.
    Exponential { alpha: f64 },
    /// Mean over a sliding window of the most recent observations. Before
    /// the window fills, the mean runs over the values seen so far.
    Linear {
        window: VecDeque<f64>,
        capacity: usize,
    },
}

/// Running un-occupancy estimate of one channel.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    value: f64,
    s_reset: f64,
    engine: Engine,
    last_sensed_session: Option<u64>,
}

impl ChannelEstimate {
    /// Exponential moving average, starting from the reset value.
    pub fn exponential(alpha: f64, s_reset: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::config(format!(
                "forgetting factor must lie in (0,1), got {alpha}"
            )));
        }
        Ok(Self {
            value: validated_reset(s_reset)?,
            s_reset,
            engine: Engine::Exponential { alpha },
            last_sensed_session: None,
        })
    }

    /// Linear moving average over the last `window` observations, starting
    /// from the reset value.
    pub fn linear(window: usize, s_reset: f64) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("observation window must be at least 1"));
        }
        Ok(Self {
            value: validated_reset(s_reset)?,
            s_reset,
            engine: Engine::Linear {
                window: VecDeque::with_capacity(window),
                capacity: window,
            },
            last_sensed_session: None,
        })
    }

    /// Current estimate, always in [0, 1].
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn s_reset(&self) -> f64 {
        self.s_reset
    }

    /// Session of the most recent sensed observation, if any.
    pub fn last_sensed_session(&self) -> Option<u64> {
        self.last_sensed_session
    }

    /// Absorbs one session: the fused verdict when the channel was sensed,
    /// or the reset value when it was not.
    pub fn update(&mut self, sensed: Option<ChannelState>, session: u64) {
        let observation = match sensed {
            Some(verdict) => {
                self.last_sensed_session = Some(session);
                if verdict.is_vacant() {
                    1.0
                } else {
                    0.0
                }
            }
            None => self.s_reset,
        };
        self.absorb(observation);
    }

    fn absorb(&mut self, observation: f64) {
        match &mut self.engine {
            Engine::Exponential { alpha } => {
                self.value = (1.0 - *alpha) * self.value + *alpha * observation;
            }
            Engine::Linear { window, capacity } => {
                window.push_back(observation);
                if window.len() > *capacity {
                    window.pop_front();
                }
                self.value = window.iter().sum::<f64>() / window.len() as f64;
            }
        }
    }
}

fn validated_reset(s_reset: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s_reset) || s_reset.is_nan() {
        return Err(Error::config(format!(
            "reset value must lie in [0,1], got {s_reset}"
        )));
    }
    Ok(s_reset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        assert!(ChannelEstimate::exponential(0.0, 0.5).is_err());
        assert!(ChannelEstimate::exponential(1.0, 0.5).is_err());
        assert!(ChannelEstimate::exponential(0.01, 1.5).is_err());
        assert!(ChannelEstimate::linear(0, 0.5).is_err());
        assert!(ChannelEstimate::linear(40, -0.1).is_err());
    }

    #[test]
    fn exponential_fixed_point_at_reset() {
        let mut est = ChannelEstimate::exponential(0.25, 0.5).unwrap();
        est.update(None, 0);
        assert_eq!(est.value(), 0.5);
    }

    #[test]
    fn exponential_updates_match_hand_arithmetic() {
        let mut est = ChannelEstimate::exponential(0.01, 0.5).unwrap();
        est.value = 0.8;
        est.update(None, 0);
        assert!((est.value() - 0.797).abs() < 1e-12, "{}", est.value());

        let mut est = ChannelEstimate::exponential(0.01, 0.5).unwrap();
        est.value = 0.8;
        est.update(Some(ChannelState::Vacant), 0);
        assert!((est.value() - 0.802).abs() < 1e-12, "{}", est.value());
        assert_eq!(est.last_sensed_session(), Some(0));
    }

    #[test]
    fn linear_constant_window() {
        let mut est = ChannelEstimate::linear(4, 0.5).unwrap();
        for s in 0..4 {
            est.update(Some(ChannelState::Vacant), s);
        }
        est.update(Some(ChannelState::Vacant), 4);
        assert_eq!(est.value(), 1.0);
    }

    #[test]
    fn linear_eviction_and_mean() {
        let mut est = ChannelEstimate::linear(4, 0.5).unwrap();
        // Build the window [1, 0, 1, 0].
        for (s, verdict) in [
            ChannelState::Vacant,
            ChannelState::Occupied,
            ChannelState::Vacant,
            ChannelState::Occupied,
        ]
        .into_iter()
        .enumerate()
        {
            est.update(Some(verdict), s as u64);
        }
        assert_eq!(est.value(), 0.5);
        // Unsensed session pushes the reset value: window [0, 1, 0, 0.5].
        est.update(None, 4);
        assert!((est.value() - 0.375).abs() < 1e-12, "{}", est.value());
    }

    #[test]
    fn linear_partial_window_averages_what_exists() {
        let mut est = ChannelEstimate::linear(40, 0.5).unwrap();
        est.update(Some(ChannelState::Vacant), 0);
        assert_eq!(est.value(), 1.0);
        est.update(Some(ChannelState::Occupied), 1);
        assert_eq!(est.value(), 0.5);
    }

    #[test]
    fn never_sensed_channel_converges_to_reset() {
        let mut ema = ChannelEstimate::exponential(0.01, 0.3).unwrap();
        let mut lma = ChannelEstimate::linear(40, 0.3).unwrap();
        for s in 0..100 {
            ema.update(None, s);
            lma.update(None, s);
        }
        assert!((ema.value() - 0.3).abs() < 1e-12, "{}", ema.value());
        assert!((lma.value() - 0.3).abs() < 1e-12, "{}", lma.value());
        assert_eq!(ema.last_sensed_session(), None);
    }

    #[test]
    fn estimates_stay_in_unit_interval() {
        let mut ema = ChannelEstimate::exponential(0.9, 0.5).unwrap();
        let mut lma = ChannelEstimate::linear(3, 0.5).unwrap();
        let pattern = [
            Some(ChannelState::Vacant),
            Some(ChannelState::Occupied),
            None,
            Some(ChannelState::Vacant),
            None,
            None,
            Some(ChannelState::Occupied),
        ];
        for (s, sensed) in pattern.iter().cycle().take(1000).enumerate() {
            ema.update(*sensed, s as u64);
            lma.update(*sensed, s as u64);
            assert!((0.0..=1.0).contains(&ema.value()));
            assert!((0.0..=1.0).contains(&lma.value()));
        }
    }
}
