//! Accuracy metrics over a completed run's estimate log.
//!
//! The per-channel RMSE aggregates the residuals between the running
//! estimate and the channel's true mean un-occupancy across sessions. The
//! multi-channel effective RMSE averages the per-channel RMSE over the
//! channels with the greatest true un-occupancy, the ones that matter for
//! data transmission.

use std::ops::Range;

/// Rectangular log of the per-channel estimates, one row per session, plus
/// the ground-truth mean un-occupancy per channel.
#[derive(Debug, Clone)]
pub struct EstimateLog {
    truth: Vec<f64>,
    values: Vec<f64>,
    sessions: usize,
}

impl EstimateLog {
    pub fn new(truth: Vec<f64>) -> Self {
        Self {
            truth,
            values: Vec::new(),
            sessions: 0,
        }
    }

    pub fn with_capacity(truth: Vec<f64>, sessions: usize) -> Self {
        let channels = truth.len();
        Self {
            truth,
            values: Vec::with_capacity(channels * sessions),
            sessions: 0,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.truth.len()
    }

    pub fn sessions(&self) -> usize {
        self.sessions
    }

    /// True mean un-occupancy per channel.
    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    /// Appends one session's estimates, in channel order.
    pub fn push_session(&mut self, estimates: &[f64]) {
        assert_eq!(
            estimates.len(),
            self.truth.len(),
            "estimate row must cover every channel"
        );
        self.values.extend_from_slice(estimates);
        self.sessions += 1;
    }

    pub fn estimate(&self, session: usize, channel: usize) -> f64 {
        self.values[session * self.truth.len() + channel]
    }

    /// Root mean square error of one channel's estimates over all sessions.
    pub fn rmse(&self, channel: usize) -> f64 {
        self.rmse_window(channel, 0..self.sessions)
    }

    /// RMSE restricted to a session window.
    pub fn rmse_window(&self, channel: usize, sessions: Range<usize>) -> f64 {
        assert!(sessions.end <= self.sessions && !sessions.is_empty());
        let truth = self.truth[channel];
        let width = self.truth.len();
        let count = sessions.len();
        let sum: f64 = sessions
            .map(|s| {
                let r = self.values[s * width + channel] - truth;
                r * r
            })
            .sum();
        (sum / count as f64).sqrt()
    }

    /// The `n` channels with the greatest true un-occupancy, ties broken by
    /// the lowest channel index.
    pub fn top_channels(&self, n: usize) -> Vec<usize> {
        assert!(n >= 1 && n <= self.truth.len());
        let mut order: Vec<usize> = (0..self.truth.len()).collect();
        order.sort_by(|&a, &b| {
            self.truth[b]
                .partial_cmp(&self.truth[a])
                .expect("finite truth")
                .then(a.cmp(&b))
        });
        order.truncate(n);
        order
    }

    /// Multi-channel effective RMSE: mean per-channel RMSE over the `n`
    /// most vacant channels.
    pub fn rmse_me(&self, n: usize) -> f64 {
        self.rmse_me_window(n, 0..self.sessions)
    }

    /// Multi-channel effective RMSE restricted to a session window.
    pub fn rmse_me_window(&self, n: usize, sessions: Range<usize>) -> f64 {
        let top = self.top_channels(n);
        top.iter()
            .map(|&m| self.rmse_window(m, sessions.clone()))
            .sum::<f64>()
            / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_with(truth: Vec<f64>, rows: &[Vec<f64>]) -> EstimateLog {
        let mut log = EstimateLog::new(truth);
        for row in rows {
            log.push_session(row);
        }
        log
    }

    #[test]
    fn zero_residuals_give_zero_rmse() {
        let log = log_with(vec![0.4], &[vec![0.4], vec![0.4], vec![0.4]]);
        assert_eq!(log.rmse(0), 0.0);
    }

    #[test]
    fn constant_residual_is_its_own_rmse() {
        let log = log_with(vec![0.4], &[vec![0.5], vec![0.5], vec![0.5], vec![0.5]]);
        assert!((log.rmse(0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mixed_residuals() {
        // Residuals 0.1 and -0.3 give sqrt(0.05).
        let log = log_with(vec![0.5], &[vec![0.6], vec![0.2]]);
        assert!((log.rmse(0) - 0.05f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn top_channels_rank_by_truth_with_index_ties() {
        let log = log_with(vec![0.3, 0.9, 0.9, 0.1], &[vec![0.0; 4]]);
        assert_eq!(log.top_channels(3), vec![1, 2, 0]);
        assert_eq!(log.top_channels(1), vec![1]);
    }

    #[test]
    fn rmse_me_averages_the_top_set() {
        // Channel truths rank 2 > 1 > 0; estimates create per-channel RMSEs
        // 0.3, 0.2, 0.1 respectively.
        let log = log_with(vec![0.2, 0.5, 0.8], &[vec![0.5, 0.7, 0.9]]);
        assert!((log.rmse_me(2) - 0.15).abs() < 1e-12);
        assert!((log.rmse_me(3) - 0.2).abs() < 1e-12);
        assert!((log.rmse_me(1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rmse_me_lies_between_member_extremes() {
        let log = log_with(vec![0.2, 0.5, 0.8], &[vec![0.25, 0.65, 0.81]]);
        let top = log.top_channels(2);
        let rmses: Vec<f64> = top.iter().map(|&m| log.rmse(m)).collect();
        let me = log.rmse_me(2);
        let lo = rmses.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rmses.iter().cloned().fold(0.0, f64::max);
        assert!(me >= lo && me <= hi);
    }

    #[test]
    fn windowed_rmse_uses_only_the_window() {
        let log = log_with(vec![0.5], &[vec![0.9], vec![0.5], vec![0.5]]);
        assert_eq!(log.rmse_window(0, 1..3), 0.0);
        assert!((log.rmse_window(0, 0..1) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn bounded_residuals_bound_rmse() {
        let log = log_with(vec![1.0], &[vec![0.0], vec![1.0], vec![0.3]]);
        assert!(log.rmse(0) <= 1.0);
    }
}
