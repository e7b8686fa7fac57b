//! Experiment harnesses behind the report figures and the acceptance runs:
//! single-channel fusion-rule comparisons, estimator comparisons, and
//! orchestration-scheme sweeps.

use rayon::prelude::*;

use crate::channel::{ChannelParams, SpectrumEnv};
use crate::config::{RunConfig, SchemeKind};
use crate::error::Result;
use crate::estimation::ChannelEstimate;
use crate::figure::{LineChart, Series};
use crate::fusion::{decide_counting, AdaptiveConfig, AdaptiveState, FusionPolicy};
use crate::sensing::{draw_local_decisions, CorrelationSpec, DetectorProfile};
use crate::sim::{compare_schemes, derive_stream, mean_stderr, ComparisonCell};

/// Single-channel scenario comparing fusion rules on the same vote draws.
#[derive(Debug, Clone)]
pub struct FusionExperiment {
    pub sensors: usize,
    /// Pairwise vote correlation, identical under both hypotheses.
    pub rho: f64,
    pub sessions: u64,
    pub replications: usize,
    pub seed: u64,
    /// The sensed channel; defaults to a mostly vacant one, the regime the
    /// false-alarm-bounded feedback is designed for.
    pub channel: ChannelParams,
    pub detector: DetectorProfile,
    pub pfa_bound: f64,
    pub adaptive_window: usize,
    /// Sessions discarded before errors count, so the adaptive rule is
    /// measured at steady state.
    pub warmup: u64,
}

impl FusionExperiment {
    pub fn new(sensors: usize, rho: f64) -> Result<Self> {
        Ok(Self {
            sensors,
            rho,
            sessions: 10_000,
            replications: 30,
            seed: 1,
            channel: ChannelParams::from_unoccupancy(0.9, 10.0)?,
            detector: DetectorProfile::new(0.9, 0.05)?,
            pfa_bound: 0.05,
            adaptive_window: 100,
            warmup: 2_000,
        })
    }
}

/// Decision RMSE per rule: the square root of the disagreement rate between
/// the fused verdict and the true channel state over the counted sessions.
#[derive(Debug, Clone)]
pub struct FusionExperimentResult {
    /// `fixed_k[k-1][rep]`: RMSE of the fixed counting rule with threshold k.
    pub fixed_k: Vec<Vec<f64>>,
    /// Adaptive-rule RMSE per replication.
    pub adaptive: Vec<f64>,
}

impl FusionExperimentResult {
    pub fn mean_fixed(&self, k: u32) -> f64 {
        mean_stderr(&self.fixed_k[(k - 1) as usize]).0
    }

    pub fn mean_or(&self) -> f64 {
        self.mean_fixed(1)
    }

    pub fn mean_and(&self) -> f64 {
        self.mean_fixed(self.fixed_k.len() as u32)
    }

    pub fn mean_adaptive(&self) -> f64 {
        mean_stderr(&self.adaptive).0
    }

    /// The fixed threshold with the lowest mean RMSE.
    pub fn best_fixed(&self) -> (u32, f64) {
        (1..=self.fixed_k.len() as u32)
            .map(|k| (k, self.mean_fixed(k)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite rmse"))
            .expect("at least one threshold")
    }
}

/// Runs the single-channel experiment, evaluating every fixed counting
/// threshold and the adaptive rule on identical vote draws.
pub fn run_fusion_experiment(cfg: &FusionExperiment) -> Result<FusionExperimentResult> {
    assert!(cfg.sensors >= 1 && cfg.replications >= 1);
    assert!(cfg.warmup < cfg.sessions);
    let corr = CorrelationSpec::uniform(cfg.rho)?;
    let n = cfg.sensors;
    let per_rep: Vec<(Vec<f64>, f64)> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut env_rng = derive_stream(cfg.seed, "fusion-experiment-env", rep);
            let mut sense_rng = derive_stream(cfg.seed, "fusion-experiment-sense", rep);
            let mut env = SpectrumEnv::new(vec![cfg.channel], &mut env_rng);
            let adaptive_cfg = AdaptiveConfig::from_pfa_bound(cfg.adaptive_window, cfg.pfa_bound);
            let mut adaptive = AdaptiveState::new(n, &adaptive_cfg);
            let mut fixed_errors = vec![0u64; n];
            let mut adaptive_errors = 0u64;
            let mut counted = 0u64;
            for session in 0..cfg.sessions {
                let truth = env.state().state(0);
                let votes =
                    draw_local_decisions(0, n, truth, &cfg.detector, &corr, &mut sense_rng);
                let zeros = votes.zeros();
                let verdict = adaptive.decide(zeros, n);
                adaptive.feedback(verdict, truth, n);
                if session >= cfg.warmup {
                    counted += 1;
                    for k in 1..=n {
                        fixed_errors[k - 1] +=
                            (decide_counting(zeros, n, k as u32) != truth) as u64;
                    }
                    adaptive_errors += (verdict != truth) as u64;
                }
                env.step(&mut env_rng);
            }
            let denom = counted as f64;
            let fixed = fixed_errors
                .iter()
                .map(|&e| (e as f64 / denom).sqrt())
                .collect();
            (fixed, (adaptive_errors as f64 / denom).sqrt())
        })
        .collect();

    let mut fixed_k = vec![Vec::with_capacity(cfg.replications); n];
    let mut adaptive = Vec::with_capacity(cfg.replications);
    for (fixed, ad) in per_rep {
        for (k, v) in fixed.into_iter().enumerate() {
            fixed_k[k].push(v);
        }
        adaptive.push(ad);
    }
    Ok(FusionExperimentResult { fixed_k, adaptive })
}

/// Multi-channel estimator comparison under full and interrupted sensing.
#[derive(Debug, Clone)]
pub struct EstimatorExperiment {
    /// True mean un-occupancy per channel.
    pub truths: Vec<f64>,
    /// Mean On-Off cycle length in sessions.
    pub cycle: f64,
    pub sessions: u64,
    pub seed: u64,
    pub alpha: f64,
    pub s_reset: f64,
    pub window: usize,
    /// `None` senses perfectly (the verdict equals the truth); otherwise one
    /// sensor with this profile votes per channel per sensed session.
    pub detector: Option<DetectorProfile>,
}

impl Default for EstimatorExperiment {
    fn default() -> Self {
        Self {
            truths: vec![0.2, 0.4, 0.6, 0.8],
            cycle: 10.0,
            sessions: 10_000,
            seed: 1,
            alpha: 0.01,
            s_reset: 0.5,
            window: 40,
            detector: Some(DetectorProfile::new(0.9, 0.05).expect("valid detector")),
        }
    }
}

/// Per-channel estimate RMSE for both estimators under both sensing duties.
#[derive(Debug, Clone)]
pub struct EstimatorExperimentResult {
    pub truths: Vec<f64>,
    pub ema_full: Vec<f64>,
    pub lma_full: Vec<f64>,
    /// Sensed every second session; reset value injected in between.
    pub ema_interrupted: Vec<f64>,
    pub lma_interrupted: Vec<f64>,
}

pub fn run_estimator_experiment(cfg: &EstimatorExperiment) -> Result<EstimatorExperimentResult> {
    let corr = CorrelationSpec::uniform(0.0)?;
    let channels = cfg.truths.len();
    let mut ema_full = Vec::with_capacity(channels);
    let mut lma_full = Vec::with_capacity(channels);
    let mut ema_interrupted = Vec::with_capacity(channels);
    let mut lma_interrupted = Vec::with_capacity(channels);

    for (idx, &s) in cfg.truths.iter().enumerate() {
        let params = ChannelParams::from_unoccupancy(s, cfg.cycle)?;
        let mut env_rng = derive_stream(cfg.seed, "estimator-experiment-env", idx as u64);
        let mut sense_rng = derive_stream(cfg.seed, "estimator-experiment-sense", idx as u64);
        let mut env = SpectrumEnv::new(vec![params], &mut env_rng);

        let mut banks = [
            ChannelEstimate::exponential(cfg.alpha, cfg.s_reset)?,
            ChannelEstimate::linear(cfg.window, cfg.s_reset)?,
            ChannelEstimate::exponential(cfg.alpha, cfg.s_reset)?,
            ChannelEstimate::linear(cfg.window, cfg.s_reset)?,
        ];
        let mut sq = [0.0f64; 4];
        for session in 0..cfg.sessions {
            let truth = env.state().state(0);
            let verdict = match &cfg.detector {
                None => truth,
                Some(det) => {
                    let votes = draw_local_decisions(0, 1, truth, det, &corr, &mut sense_rng);
                    decide_counting(votes.zeros(), 1, 1)
                }
            };
            let interrupted = (session % 2 == 0).then_some(verdict);
            for (i, est) in banks.iter_mut().enumerate() {
                let sensed = if i < 2 { Some(verdict) } else { interrupted };
                est.update(sensed, session);
                let r = est.value() - s;
                sq[i] += r * r;
            }
            env.step(&mut env_rng);
        }
        let denom = cfg.sessions as f64;
        ema_full.push((sq[0] / denom).sqrt());
        lma_full.push((sq[1] / denom).sqrt());
        ema_interrupted.push((sq[2] / denom).sqrt());
        lma_interrupted.push((sq[3] / denom).sqrt());
    }

    Ok(EstimatorExperimentResult {
        truths: cfg.truths.clone(),
        ema_full,
        lma_full,
        ema_interrupted,
        lma_interrupted,
    })
}

/// Runs one scheme over a rule list and node-count sweep, one cell per
/// (rule, node count), with common random numbers across cells.
pub fn scheme_rule_cells(
    base: &RunConfig,
    scheme: SchemeKind,
    rules: &[FusionPolicy],
    node_counts: &[usize],
) -> Result<Vec<ComparisonCell>> {
    let mut cells = Vec::new();
    for rule in rules {
        let mut config = base.clone();
        config.fusion.policy = *rule;
        cells.extend(compare_schemes(&config, &[scheme], node_counts)?);
    }
    Ok(cells)
}

/// Decision RMSE versus counting threshold, one series per correlation.
pub fn chart_rmse_vs_k(
    sensors: usize,
    rhos: &[f64],
    sessions: u64,
    replications: usize,
    seed: u64,
) -> Result<LineChart> {
    let mut chart = LineChart::new(
        format!("Fusion RMSE vs decision threshold ({sensors} detectors)"),
        "decision threshold k (occupied votes required)",
        "decision RMSE",
    );
    for &rho in rhos {
        let mut cfg = FusionExperiment::new(sensors, rho)?;
        cfg.sessions = sessions;
        cfg.warmup = sessions / 5;
        cfg.replications = replications;
        cfg.seed = seed;
        let result = run_fusion_experiment(&cfg)?;
        let points = (1..=sensors as u32)
            .map(|k| (k as f64, result.mean_fixed(k)))
            .collect();
        chart.push(Series::new(format!("rho = {rho}"), points));
    }
    Ok(chart)
}

/// Decision RMSE versus correlation for OR, AND, the adaptive rule and the
/// best fixed threshold.
pub fn chart_rmse_vs_rule(
    sensors: usize,
    rhos: &[f64],
    sessions: u64,
    replications: usize,
    seed: u64,
) -> Result<LineChart> {
    let mut chart = LineChart::new(
        format!("Fusion RMSE by rule ({sensors} detectors)"),
        "correlation index",
        "decision RMSE",
    );
    let mut or_points = Vec::new();
    let mut and_points = Vec::new();
    let mut adaptive_points = Vec::new();
    let mut best_points = Vec::new();
    for &rho in rhos {
        let mut cfg = FusionExperiment::new(sensors, rho)?;
        cfg.sessions = sessions;
        cfg.warmup = sessions / 5;
        cfg.replications = replications;
        cfg.seed = seed;
        let result = run_fusion_experiment(&cfg)?;
        or_points.push((rho, result.mean_or()));
        and_points.push((rho, result.mean_and()));
        adaptive_points.push((rho, result.mean_adaptive()));
        best_points.push((rho, result.best_fixed().1));
    }
    chart.push(Series::new("OR (k = 1)", or_points));
    chart.push(Series::new(format!("AND (k = {sensors})"), and_points));
    chart.push(Series::new("adaptive", adaptive_points));
    chart.push(Series::new("best fixed k", best_points));
    Ok(chart)
}

/// Estimator RMSE per channel under full and interrupted sensing.
pub fn chart_estimators(cfg: &EstimatorExperiment) -> Result<LineChart> {
    let result = run_estimator_experiment(cfg)?;
    let mut chart = LineChart::new(
        "Estimator RMSE per channel",
        "channel mean un-occupancy",
        "estimate RMSE",
    );
    let with_truth = |values: &[f64]| {
        result
            .truths
            .iter()
            .zip(values)
            .map(|(&s, &v)| (s, v))
            .collect::<Vec<_>>()
    };
    chart.push(Series::new("exponential, every session", with_truth(&result.ema_full)));
    chart.push(Series::new("linear, every session", with_truth(&result.lma_full)));
    chart.push(Series::new(
        "exponential, every 2nd session",
        with_truth(&result.ema_interrupted),
    ));
    chart.push(Series::new(
        "linear, every 2nd session",
        with_truth(&result.lma_interrupted),
    ));
    Ok(chart)
}

/// Effective RMSE versus cluster size for one scheme across fusion rules.
pub fn chart_scheme_sweep(
    title: &str,
    base: &RunConfig,
    entries: &[(SchemeKind, FusionPolicy, &str)],
    node_counts: &[usize],
) -> Result<LineChart> {
    let mut chart = LineChart::new(
        title,
        "sensing nodes",
        format!("RMSE_ME({})", base.top_n),
    );
    for (scheme, rule, label) in entries {
        let mut config = base.clone();
        config.fusion.policy = *rule;
        let cells = compare_schemes(&config, &[*scheme], node_counts)?;
        let points = cells.iter().map(|c| (c.nodes as f64, c.mean)).collect();
        chart.push(Series::new(*label, points));
    }
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fusion_experiment_shapes_and_determinism() {
        let mut cfg = FusionExperiment::new(5, 0.5).unwrap();
        cfg.sessions = 800;
        cfg.warmup = 200;
        cfg.replications = 3;
        let a = run_fusion_experiment(&cfg).unwrap();
        let b = run_fusion_experiment(&cfg).unwrap();
        assert_eq!(a.fixed_k.len(), 5);
        assert_eq!(a.adaptive.len(), 3);
        for k in 0..5 {
            assert_eq!(a.fixed_k[k], b.fixed_k[k]);
        }
        assert_eq!(a.adaptive, b.adaptive);
        let (best_k, best) = a.best_fixed();
        assert!((1..=5).contains(&best_k));
        assert!(best <= a.mean_or() && best <= a.mean_and());
    }

    #[test]
    fn estimator_experiment_reports_every_channel() {
        let mut cfg = EstimatorExperiment::default();
        cfg.sessions = 2_000;
        let result = run_estimator_experiment(&cfg).unwrap();
        assert_eq!(result.ema_full.len(), 4);
        assert!(result
            .ema_full
            .iter()
            .chain(&result.lma_full)
            .chain(&result.ema_interrupted)
            .chain(&result.lma_interrupted)
            .all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn perfect_sensing_tracks_truth_closely() {
        let mut cfg = EstimatorExperiment {
            detector: None,
            ..EstimatorExperiment::default()
        };
        cfg.sessions = 10_000;
        let result = run_estimator_experiment(&cfg).unwrap();
        // With perfect verdicts the estimate converges near the truth.
        for rmse in &result.ema_full {
            assert!(*rmse < 0.1, "rmse {rmse}");
        }
    }

    #[test]
    fn charts_render() {
        let chart = chart_rmse_vs_k(3, &[0.5], 500, 2, 9).unwrap();
        assert!(chart.to_svg().contains("polyline"));
        let chart = chart_rmse_vs_rule(3, &[0.1, 0.9], 500, 2, 9).unwrap();
        assert_eq!(chart.series.len(), 4);
    }
}
