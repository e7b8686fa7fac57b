//! The sensing-session loop and scenario runners.
//!
//! One session runs sense, broadcast, fuse, estimate, choose: the assigned
//! nodes sense their channels, the votes are fused per channel, every node
//! view absorbs the fused verdicts (the control channel is perfect and
//! lossless), and the orchestration scheme picks the next assignment.
//!
//! Randomness is split into three named streams per replication (channel
//! transitions, sensor votes, orchestration draws), all derived from the
//! master seed. Schemes compared under the same master seed and replication
//! therefore see identical channel trajectories: common random numbers.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::channel::{ChannelState, SpectrumEnv};
use crate::config::{RunConfig, SchemeKind};
use crate::error::Result;
use crate::estimation::ChannelEstimate;
use crate::fusion::{decide_optimal, decide_policy, AdaptiveState, FusionPolicy};
use crate::metrics::EstimateLog;
use crate::orchestration::{
    counts_to_assignment, decentralized_select, kelly_allocate, round_robin_assign,
};
use crate::sensing::draw_local_decisions;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in s.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Derives an independent named random stream from the master seed.
///
/// Streams with different labels or replication indices are statistically
/// independent; identical inputs always yield the identical stream.
pub fn derive_stream(master_seed: u64, label: &str, replication: u64) -> ChaCha12Rng {
    let mut state = master_seed;
    splitmix64(&mut state);
    state ^= fnv1a64(label);
    splitmix64(&mut state);
    state ^= replication;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}

/// Everything observable about one completed sensing session.
#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub session: u64,
    /// Ground-truth occupancy per channel.
    pub truth: Vec<bool>,
    /// Channel sensed by each node this session.
    pub assignment: Vec<usize>,
    /// Sensors that sensed each channel.
    pub sensor_counts: Vec<usize>,
    /// Occupied votes per channel (zero where nothing was sensed).
    pub occupied_votes: Vec<usize>,
    /// Fused verdict per channel; `None` where the channel was not sensed.
    pub fused: Vec<Option<ChannelState>>,
    /// Estimates after this session's update, per channel.
    pub estimates: Vec<f64>,
    /// Adaptive thresholds per channel, when the adaptive rule is active.
    /// Zero marks channels whose fusion state has not been created yet.
    pub adaptive_k: Option<Vec<u32>>,
}

/// Runs one scenario at replication index 0.
pub fn run_scenario(config: &RunConfig) -> Result<EstimateLog> {
    run_replication(config, 0, None)
}

/// Runs one scenario, handing every session's record to `on_session`.
pub fn run_scenario_recorded<F: FnMut(&SessionRecord)>(
    config: &RunConfig,
    mut on_session: F,
) -> Result<EstimateLog> {
    run_replication(config, 0, Some(&mut on_session))
}

/// Runs one replication of the scenario.
///
/// The replication index selects the random streams; the output is a pure
/// function of `(config, replication)`.
pub fn run_replication(
    config: &RunConfig,
    replication: u64,
    mut recorder: Option<&mut dyn FnMut(&SessionRecord)>,
) -> Result<EstimateLog> {
    config.validate()?;
    let detector = config.detector()?;
    let correlation = config.correlation()?;
    let params = config.channel_params()?;
    let truth: Vec<f64> = params.iter().map(|p| p.unoccupancy()).collect();
    let channels = config.channels;
    let nodes = config.nodes;
    let adaptive_cfg = config.fusion.adaptive_config(config.pfa_bound);

    let mut env_rng = derive_stream(config.seed, "environment", replication);
    let mut sense_rng = derive_stream(config.seed, "sensing", replication);
    let mut orch_rng = derive_stream(config.seed, "orchestration", replication);

    let mut env = SpectrumEnv::new(params, &mut env_rng);
    let mut estimates: Vec<ChannelEstimate> = (0..channels)
        .map(|_| config.estimator.build())
        .collect::<Result<_>>()?;
    let mut adaptive: Vec<Option<AdaptiveState>> = vec![None; channels];
    let mut log = EstimateLog::with_capacity(truth, config.sessions as usize);

    let mut assignment = initial_assignment(config, nodes, channels, &mut orch_rng);
    let mut sensor_counts = vec![0usize; channels];
    let mut occupied_votes = vec![0usize; channels];
    let mut fused: Vec<Option<ChannelState>> = vec![None; channels];
    let mut estimate_row = vec![0.0f64; channels];

    for session in 0..config.sessions {
        sensor_counts.fill(0);
        for &channel in &assignment {
            sensor_counts[channel] += 1;
        }

        // Sense and fuse each channel that received sensors.
        occupied_votes.fill(0);
        fused.fill(None);
        for m in 0..channels {
            let n = sensor_counts[m];
            if n == 0 {
                continue;
            }
            let truth_m = env.state().state(m);
            let votes =
                draw_local_decisions(m, n, truth_m, &detector, &correlation, &mut sense_rng);
            occupied_votes[m] = votes.ones();
            let verdict = match config.fusion.policy {
                FusionPolicy::Or | FusionPolicy::And | FusionPolicy::CountK(_) => {
                    decide_policy(votes.zeros(), n, &config.fusion.policy)
                }
                FusionPolicy::OptimalLrt { lambda, gamma } => decide_optimal(
                    votes.zeros(),
                    n,
                    &detector,
                    &correlation,
                    lambda,
                    gamma,
                    &mut sense_rng,
                ),
                FusionPolicy::Adaptive => {
                    let state = adaptive[m]
                        .get_or_insert_with(|| AdaptiveState::new(n, &adaptive_cfg));
                    let verdict = state.decide(votes.zeros(), n);
                    // The cluster then tries the channel, revealing its state.
                    state.feedback(verdict, truth_m, n);
                    verdict
                }
            };
            fused[m] = Some(verdict);
        }

        // Every node view absorbs the fused verdicts over the perfect CCH.
        for (m, est) in estimates.iter_mut().enumerate() {
            est.update(fused[m], session);
            estimate_row[m] = est.value();
        }
        log.push_session(&estimate_row);

        if let Some(on_session) = recorder.as_deref_mut() {
            let adaptive_k = matches!(config.fusion.policy, FusionPolicy::Adaptive).then(|| {
                adaptive
                    .iter()
                    .map(|s| s.as_ref().map_or(0, AdaptiveState::k))
                    .collect()
            });
            on_session(&SessionRecord {
                session,
                truth: env.state().occupied_flags().to_vec(),
                assignment: assignment.clone(),
                sensor_counts: sensor_counts.clone(),
                occupied_votes: occupied_votes.clone(),
                fused: fused.clone(),
                estimates: estimate_row.clone(),
                adaptive_k,
            });
        }

        // Choose the spectrum to sense next session.
        let next_session = session + 1;
        if next_session < config.sessions {
            assignment = next_assignment(
                config,
                next_session,
                nodes,
                channels,
                &estimate_row,
                &mut orch_rng,
            )?;
        }
        env.step(&mut env_rng);
    }

    Ok(log)
}

fn initial_assignment<R: Rng + ?Sized>(
    config: &RunConfig,
    nodes: usize,
    channels: usize,
    orch_rng: &mut R,
) -> Vec<usize> {
    match config.scheme.kind {
        // Blind cycling is deterministic from the very first session.
        SchemeKind::RoundRobin => (0..nodes)
            .map(|node| round_robin_assign(0, node, channels))
            .collect(),
        // Estimates carry no information yet: sense a random channel.
        _ => (0..nodes)
            .map(|_| orch_rng.random_range(0..channels))
            .collect(),
    }
}

fn next_assignment<R: Rng + ?Sized>(
    config: &RunConfig,
    session: u64,
    nodes: usize,
    channels: usize,
    bids: &[f64],
    orch_rng: &mut R,
) -> Result<Vec<usize>> {
    let kind = match config.scheme.kind {
        SchemeKind::HybridFailover => {
            if session < config.scheme.failover_session {
                SchemeKind::Centralized
            } else {
                SchemeKind::Decentralized
            }
        }
        kind => kind,
    };
    Ok(match kind {
        SchemeKind::Centralized => counts_to_assignment(&kelly_allocate(bids, nodes)?),
        SchemeKind::Decentralized => (0..nodes)
            .map(|_| decentralized_select(bids, orch_rng))
            .collect(),
        SchemeKind::RoundRobin => (0..nodes)
            .map(|node| round_robin_assign(session, node, channels))
            .collect(),
        SchemeKind::HybridFailover => unreachable!("resolved above"),
    })
}

/// Runs every replication of the scenario, in parallel, and returns the
/// logs ordered by replication index.
pub fn run_replications(config: &RunConfig) -> Result<Vec<EstimateLog>> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(config, rep, None))
        .collect()
}

/// One cell of a scheme-comparison table.
#[derive(Debug, Clone)]
pub struct ComparisonCell {
    pub scheme: SchemeKind,
    pub nodes: usize,
    /// Label of the fusion rule the cell ran under.
    pub fusion: String,
    /// Effective RMSE over the top channels, one value per replication.
    pub per_replication: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

pub fn fusion_label(policy: &FusionPolicy) -> String {
    match policy {
        FusionPolicy::Or => "or".into(),
        FusionPolicy::And => "and".into(),
        FusionPolicy::CountK(k) => format!("count-{k}"),
        FusionPolicy::OptimalLrt { lambda, .. } => format!("lrt-{lambda}"),
        FusionPolicy::Adaptive => "adaptive".into(),
    }
}

/// Mean and standard error of a replication sample.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs each scheme at each node count on identical per-replication seeds
/// (common random numbers) and tabulates the effective RMSE.
pub fn compare_schemes(
    base: &RunConfig,
    schemes: &[SchemeKind],
    node_counts: &[usize],
) -> Result<Vec<ComparisonCell>> {
    if schemes.is_empty() || node_counts.is_empty() {
        return Err(crate::error::Error::config(
            "comparison needs at least one scheme and one node count",
        ));
    }
    let mut jobs = Vec::new();
    for &scheme in schemes {
        for &nodes in node_counts {
            let mut config = base.clone();
            config.scheme.kind = scheme;
            config.nodes = nodes;
            config.validate()?;
            jobs.push((scheme, nodes, config));
        }
    }
    let replications = base.replications as u64;
    let cells: Result<Vec<ComparisonCell>> = jobs
        .into_par_iter()
        .map(|(scheme, nodes, config)| {
            let per_replication: Result<Vec<f64>> = (0..replications)
                .into_par_iter()
                .map(|rep| {
                    let log = run_replication(&config, rep, None)?;
                    Ok(log.rmse_me(config.top_n))
                })
                .collect();
            let per_replication = per_replication?;
            let (mean, stderr) = mean_stderr(&per_replication);
            Ok(ComparisonCell {
                scheme,
                nodes,
                fusion: fusion_label(&config.fusion.policy),
                per_replication,
                mean,
                stderr,
            })
        })
        .collect();
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EstimatorKind;

    fn small_config() -> RunConfig {
        let mut c = RunConfig::default();
        c.channels = 6;
        c.nodes = 4;
        c.sessions = 300;
        c.seed = 7;
        c.fusion.policy = FusionPolicy::Or;
        c
    }

    #[test]
    fn derived_streams_are_stable_and_distinct() {
        let mut a = derive_stream(1, "environment", 0);
        let mut b = derive_stream(1, "environment", 0);
        let mut c = derive_stream(1, "sensing", 0);
        let mut d = derive_stream(1, "environment", 1);
        let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, (0..4).map(|_| c.random()).collect::<Vec<u64>>());
        assert_ne!(ys, (0..4).map(|_| d.random()).collect::<Vec<u64>>());
    }

    #[test]
    fn every_session_uses_every_node_exactly_once() {
        for scheme in [
            SchemeKind::Centralized,
            SchemeKind::Decentralized,
            SchemeKind::RoundRobin,
        ] {
            let mut config = small_config();
            config.scheme.kind = scheme;
            let mut sessions = 0u64;
            run_scenario_recorded(&config, |record| {
                sessions += 1;
                assert_eq!(record.assignment.len(), config.nodes);
                assert_eq!(
                    record.sensor_counts.iter().sum::<usize>(),
                    config.nodes,
                    "every node senses exactly one channel"
                );
                let votes: usize = record.occupied_votes.iter().sum();
                let sensed: usize = record
                    .sensor_counts
                    .iter()
                    .zip(&record.fused)
                    .filter_map(|(n, f)| f.map(|_| *n))
                    .sum();
                assert_eq!(sensed, config.nodes);
                assert!(votes <= config.nodes);
            })
            .unwrap();
            assert_eq!(sessions, config.sessions);
        }
    }

    #[test]
    fn identical_seeds_identical_logs() {
        let config = small_config();
        let a = run_scenario(&config).unwrap();
        let b = run_scenario(&config).unwrap();
        for s in 0..a.sessions() {
            for m in 0..config.channels {
                assert_eq!(a.estimate(s, m), b.estimate(s, m));
            }
        }
        let mut other = config.clone();
        other.seed = 8;
        let c = run_scenario(&other).unwrap();
        let differs = (0..config.channels).any(|m| a.estimate(50, m) != c.estimate(50, m));
        assert!(differs, "different seeds should diverge");
    }

    #[test]
    fn replications_diverge_from_each_other() {
        let config = small_config();
        let logs = {
            let mut c = config.clone();
            c.replications = 3;
            run_replications(&c).unwrap()
        };
        assert_eq!(logs.len(), 3);
        let differs = (0..config.channels)
            .any(|m| logs[0].estimate(50, m) != logs[1].estimate(50, m));
        assert!(differs);
    }

    #[test]
    fn zero_nodes_is_a_validation_error() {
        let mut config = small_config();
        config.nodes = 0;
        let err = run_scenario(&config).unwrap_err();
        assert!(err.to_string().contains("no sensing nodes"), "{err}");
    }

    #[test]
    fn linear_estimator_runs_too() {
        let mut config = small_config();
        config.estimator.kind = EstimatorKind::Linear;
        let log = run_scenario(&config).unwrap();
        assert_eq!(log.sessions(), config.sessions as usize);
    }

    #[test]
    fn adaptive_policy_tracks_k_per_channel() {
        let mut config = small_config();
        config.fusion.policy = FusionPolicy::Adaptive;
        config.scheme.kind = SchemeKind::Centralized;
        let mut saw_k = false;
        run_scenario_recorded(&config, |record| {
            let ks = record.adaptive_k.as_ref().expect("adaptive run records k");
            saw_k |= ks.iter().any(|&k| k > 0);
        })
        .unwrap();
        assert!(saw_k);
    }

    #[test]
    fn hybrid_switches_at_failover_without_missing_sessions() {
        let mut config = small_config();
        config.scheme.kind = SchemeKind::HybridFailover;
        config.scheme.failover_session = 100;
        config.sessions = 200;
        let mut count = 0u64;
        run_scenario_recorded(&config, |record| {
            count += 1;
            assert_eq!(record.sensor_counts.iter().sum::<usize>(), config.nodes);
        })
        .unwrap();
        assert_eq!(count, 200);
    }

    #[test]
    fn round_robin_ignores_estimates() {
        let mut config = small_config();
        config.scheme.kind = SchemeKind::RoundRobin;
        let mut assignments = Vec::new();
        run_scenario_recorded(&config, |record| {
            if record.session < 3 {
                assignments.push(record.assignment.clone());
            }
        })
        .unwrap();
        assert_eq!(assignments[0], vec![0, 1, 2, 3]);
        assert_eq!(assignments[1], vec![1, 2, 3, 4]);
        assert_eq!(assignments[2], vec![2, 3, 4, 5]);
    }

    #[test]
    fn comparison_cells_are_ordered_and_sized() {
        let mut config = small_config();
        config.replications = 3;
        config.sessions = 120;
        let cells = compare_schemes(
            &config,
            &[SchemeKind::Centralized, SchemeKind::RoundRobin],
            &[2, 4],
        )
        .unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].scheme, SchemeKind::Centralized);
        assert_eq!(cells[0].nodes, 2);
        assert_eq!(cells[3].scheme, SchemeKind::RoundRobin);
        assert_eq!(cells[3].nodes, 4);
        for cell in &cells {
            assert_eq!(cell.per_replication.len(), 3);
            assert!(cell.mean.is_finite() && cell.stderr >= 0.0);
        }
    }

    #[test]
    fn single_scheme_single_count_degenerates_to_one_row() {
        let mut config = small_config();
        config.sessions = 60;
        let cells = compare_schemes(&config, &[SchemeKind::RoundRobin], &[3]).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].fusion, "or");
    }

    #[test]
    fn common_random_numbers_share_the_environment() {
        // Same replication, different schemes: identical channel truth
        // trajectory session by session.
        let mut a_truth = Vec::new();
        let mut config = small_config();
        config.scheme.kind = SchemeKind::Centralized;
        run_scenario_recorded(&config, |r| a_truth.push(r.truth.clone())).unwrap();
        let mut b_truth = Vec::new();
        config.scheme.kind = SchemeKind::RoundRobin;
        run_scenario_recorded(&config, |r| b_truth.push(r.truth.clone())).unwrap();
        assert_eq!(a_truth, b_truth);
    }
}
