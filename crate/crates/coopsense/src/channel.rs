//! Ground-truth channel occupancy: a discrete-time On-Off process per channel.
//!
//! Each monitored channel alternates between occupied (On) and vacant (Off)
//! sojourns whose lengths are geometrically distributed in whole sensing
//! sessions, the memoryless discrete-time analogue of exponential holding
//! times. The environment advances one step per sensing session and the
//! state is frozen within a session.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// Truth or verdict about one channel in one sensing session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelState {
    /// The channel carries no incumbent signal and is free to use.
    Vacant,
    /// An incumbent occupies the channel.
    Occupied,
}

impl ChannelState {
    pub fn is_occupied(self) -> bool {
        self == ChannelState::Occupied
    }

    pub fn is_vacant(self) -> bool {
        self == ChannelState::Vacant
    }
}

/// Mean sojourn lengths, in sessions, of one channel's On-Off process.
///
/// Means below one session saturate at one session because the process
/// moves in whole-session steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    mean_on: f64,
    mean_off: f64,
}

impl ChannelParams {
    pub fn new(mean_on: f64, mean_off: f64) -> Result<Self> {
        if !(mean_on.is_finite() && mean_on > 0.0) || !(mean_off.is_finite() && mean_off > 0.0) {
            return Err(Error::config(format!(
                "channel sojourn means must be positive and finite, got on={mean_on} off={mean_off}"
            )));
        }
        Ok(Self { mean_on, mean_off })
    }

    /// Builds parameters with stationary un-occupancy `s` and a total mean
    /// cycle length of `cycle = mean_on + mean_off` sessions.
    pub fn from_unoccupancy(s: f64, cycle: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::config(format!(
                "mean un-occupancy must lie in (0,1), got {s}"
            )));
        }
        Self::new((1.0 - s) * cycle, s * cycle)
    }

    pub fn mean_on(&self) -> f64 {
        self.mean_on
    }

    pub fn mean_off(&self) -> f64 {
        self.mean_off
    }

    /// Long-run fraction of sessions the channel spends vacant:
    /// `mean_off / (mean_on + mean_off)`.
    pub fn unoccupancy(&self) -> f64 {
        self.mean_off / (self.mean_on + self.mean_off)
    }

    fn leave_probability(&self, state: ChannelState) -> f64 {
        let mean = match state {
            ChannelState::Occupied => self.mean_on,
            ChannelState::Vacant => self.mean_off,
        };
        (1.0 / mean).min(1.0)
    }
}

/// Occupancy of every monitored channel in one sensing session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumState {
    occupied: Vec<bool>,
    session: u64,
}

impl SpectrumState {
    pub fn num_channels(&self) -> usize {
        self.occupied.len()
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    pub fn state(&self, channel: usize) -> ChannelState {
        if self.occupied[channel] {
            ChannelState::Occupied
        } else {
            ChannelState::Vacant
        }
    }

    /// Occupancy flags in channel order; `true` means occupied.
    pub fn occupied_flags(&self) -> &[bool] {
        &self.occupied
    }
}

/// The On-Off environment over all monitored channels.
///
/// Channels evolve independently; one environment step corresponds to one
/// sensing session.
#[derive(Debug, Clone)]
pub struct SpectrumEnv {
    params: Vec<ChannelParams>,
    state: SpectrumState,
}

impl SpectrumEnv {
    /// Starts every channel from its stationary occupancy distribution.
    pub fn new<R: Rng + ?Sized>(params: Vec<ChannelParams>, rng: &mut R) -> Self {
        let occupied = params
            .iter()
            .map(|p| rng.random_bool(1.0 - p.unoccupancy()))
            .collect();
        Self {
            params,
            state: SpectrumState {
                occupied,
                session: 0,
            },
        }
    }

    pub fn num_channels(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ChannelParams] {
        &self.params
    }

    pub fn state(&self) -> &SpectrumState {
        &self.state
    }

    /// Advances every channel by one session: each continues its current
    /// sojourn or transitions with the geometric hazard of its mean.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (flag, p) in self.state.occupied.iter_mut().zip(&self.params) {
            let state = if *flag {
                ChannelState::Occupied
            } else {
                ChannelState::Vacant
            };
            if rng.random_bool(p.leave_probability(state)) {
                *flag = !*flag;
            }
        }
        self.state.session += 1;
    }
}

/// Default channel plan: mean un-occupancies evenly spaced over [0.1, 0.9]
/// so the channels span the quality range an orchestrator must discriminate.
///
/// A single channel sits at the midpoint 0.5. The mean cycle length is 10
/// sessions, so every sojourn mean stays at or above one session.
pub fn evenly_spaced_channels(count: usize) -> Result<Vec<ChannelParams>> {
    const CYCLE: f64 = 10.0;
    if count == 0 {
        return Err(Error::config("channel count must be at least 1"));
    }
    if count == 1 {
        return Ok(vec![ChannelParams::from_unoccupancy(0.5, CYCLE)?]);
    }
    (0..count)
        .map(|i| {
            let s = 0.1 + 0.8 * i as f64 / (count - 1) as f64;
            ChannelParams::from_unoccupancy(s, CYCLE)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn unoccupancy_ratio() {
        assert_eq!(ChannelParams::new(1.0, 1.0).unwrap().unoccupancy(), 0.5);
        assert_eq!(ChannelParams::new(9.0, 1.0).unwrap().unoccupancy(), 0.1);
        assert_eq!(ChannelParams::new(3.0, 7.0).unwrap().unoccupancy(), 0.7);
    }

    #[test]
    fn rejects_non_positive_means() {
        assert!(ChannelParams::new(0.0, 1.0).is_err());
        assert!(ChannelParams::new(1.0, -2.0).is_err());
        assert!(ChannelParams::new(f64::INFINITY, 1.0).is_err());
        assert!(ChannelParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn from_unoccupancy_round_trips() {
        let p = ChannelParams::from_unoccupancy(0.7, 10.0).unwrap();
        assert!((p.unoccupancy() - 0.7).abs() < 1e-12);
        assert!((p.mean_on() - 3.0).abs() < 1e-12);
        assert!((p.mean_off() - 7.0).abs() < 1e-12);
        assert!(ChannelParams::from_unoccupancy(0.0, 10.0).is_err());
        assert!(ChannelParams::from_unoccupancy(1.0, 10.0).is_err());
    }

    #[test]
    fn symmetric_means_give_half_occupancy() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut env = SpectrumEnv::new(vec![ChannelParams::new(4.0, 4.0).unwrap()], &mut rng);
        let sessions = 200_000;
        let mut occupied = 0u64;
        for _ in 0..sessions {
            occupied += env.state().state(0).is_occupied() as u64;
            env.step(&mut rng);
        }
        let frac = occupied as f64 / sessions as f64;
        assert!((frac - 0.5).abs() < 0.01, "occupied fraction {frac}");
    }

    #[test]
    fn near_infinite_off_time_keeps_channel_vacant() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let params = vec![ChannelParams::new(1.0, 1e6).unwrap()];
        let mut env = SpectrumEnv::new(params, &mut rng);
        let sessions = 100_000;
        let mut vacant = 0u64;
        for _ in 0..sessions {
            vacant += env.state().state(0).is_vacant() as u64;
            env.step(&mut rng);
        }
        assert!(vacant as f64 / sessions as f64 >= 0.999);
    }

    #[test]
    fn stationary_fraction_matches_unoccupancy() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let params = vec![ChannelParams::new(9.0, 1.0).unwrap()];
        let truth = params[0].unoccupancy();
        let mut env = SpectrumEnv::new(params, &mut rng);
        let sessions = 1_000_000;
        let mut vacant = 0u64;
        for _ in 0..sessions {
            vacant += env.state().state(0).is_vacant() as u64;
            env.step(&mut rng);
        }
        let frac = vacant as f64 / sessions as f64;
        assert!((frac - truth).abs() < 0.01, "vacant fraction {frac} vs {truth}");
    }

    #[test]
    fn channels_evolve_independently() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let params = vec![
            ChannelParams::new(3.0, 7.0).unwrap(),
            ChannelParams::new(7.0, 3.0).unwrap(),
        ];
        let mut env = SpectrumEnv::new(params, &mut rng);
        let sessions = 1_000_000usize;
        let (mut s0, mut s1, mut s01) = (0u64, 0u64, 0u64);
        for _ in 0..sessions {
            let a = env.state().state(0).is_occupied();
            let b = env.state().state(1).is_occupied();
            s0 += a as u64;
            s1 += b as u64;
            s01 += (a && b) as u64;
            env.step(&mut rng);
        }
        let n = sessions as f64;
        let (m0, m1, m01) = (s0 as f64 / n, s1 as f64 / n, s01 as f64 / n);
        let corr = (m01 - m0 * m1) / (m0 * (1.0 - m0) * m1 * (1.0 - m1)).sqrt();
        assert!(corr.abs() < 0.02, "cross-channel correlation {corr}");
    }

    #[test]
    fn identical_seed_identical_trajectory() {
        let run = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut env = SpectrumEnv::new(evenly_spaced_channels(5).unwrap(), &mut rng);
            let mut trace = Vec::new();
            for _ in 0..500 {
                trace.push(env.state().occupied_flags().to_vec());
                env.step(&mut rng);
            }
            trace
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn evenly_spaced_plan_spans_the_range() {
        let plan = evenly_spaced_channels(20).unwrap();
        assert_eq!(plan.len(), 20);
        assert!((plan[0].unoccupancy() - 0.1).abs() < 1e-12);
        assert!((plan[19].unoccupancy() - 0.9).abs() < 1e-12);
        let single = evenly_spaced_channels(1).unwrap();
        assert!((single[0].unoccupancy() - 0.5).abs() < 1e-12);
        assert!(evenly_spaced_channels(0).is_err());
    }
}
