//! Assignment of sensing nodes to channels, one assignment per session.
//!
//! Channels bid their estimated un-occupancy for a share of the cluster's
//! sensing nodes. The centralized scheme lets the cluster head divide the
//! nodes proportionally to the bids ([`kelly_allocate`]); the decentralized
//! scheme approximates the same division by letting each node sample its
//! channel from the normalized bids; a blind round-robin baseline ignores
//! the bids entirely.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// Proportional shares `bid_m / sum(bids) * capacity`, zero for zero bids.
///
/// Errors when every bid is zero, since no proportion is defined.
pub fn fractional_shares(bids: &[f64], capacity: usize) -> Result<Vec<f64>> {
    assert!(capacity >= 1, "capacity must be at least 1");
    if bids.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::config(
            "bids must be non-negative and finite".to_string(),
        ));
    }
    let total: f64 = bids.iter().sum();
    if total <= 0.0 {
        return Err(Error::NoEstimableChannels);
    }
    Ok(bids
        .iter()
        .map(|&w| if w > 0.0 { w / total * capacity as f64 } else { 0.0 })
        .collect())
}

/// Divides `capacity` sensing nodes among channels proportionally to their
/// bids, by the largest-remainder method.
///
/// All fractional shares are floored, then the remaining units go to the
/// largest fractional remainders, ties broken by the lowest channel index.
/// The counts always sum to `capacity` and zero-bid channels receive zero.
pub fn kelly_allocate(bids: &[f64], capacity: usize) -> Result<Vec<usize>> {
    let shares = fractional_shares(bids, capacity)?;
    let mut counts: Vec<usize> = shares.iter().map(|&f| f.floor() as usize).collect();
    let allocated: usize = counts.iter().sum();
    let leftover = capacity.saturating_sub(allocated);
    if leftover > 0 {
        let mut order: Vec<usize> = (0..bids.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.partial_cmp(&ra).expect("finite shares").then(a.cmp(&b))
        });
        for &m in order.iter().take(leftover) {
            counts[m] += 1;
        }
    }
    debug_assert_eq!(counts.iter().sum::<usize>(), capacity);
    Ok(counts)
}

/// Expands per-channel node counts into a per-node channel assignment,
/// filling nodes into channels in node-index order.
pub fn counts_to_assignment(counts: &[usize]) -> Vec<usize> {
    let mut assignment = Vec::with_capacity(counts.iter().sum());
    for (channel, &count) in counts.iter().enumerate() {
        assignment.extend(std::iter::repeat_n(channel, count));
    }
    assignment
}

/// Samples one node's next channel from the normalized bids: the minimal
/// index whose cumulative normalized bid exceeds a uniform draw.
///
/// Falls back to a uniform random channel when every bid is zero, mirroring
/// the first-session initialization.
pub fn decentralized_select<R: Rng + ?Sized>(bids: &[f64], rng: &mut R) -> usize {
    assert!(!bids.is_empty());
    let total: f64 = bids.iter().filter(|w| **w > 0.0).sum();
    if total <= 0.0 || !total.is_finite() {
        return rng.random_range(0..bids.len());
    }
    let r: f64 = rng.random();
    let mut cdf = 0.0;
    for (m, &w) in bids.iter().enumerate() {
        if w > 0.0 {
            cdf += w / total;
            if r < cdf {
                return m;
            }
        }
    }
    // Only reachable through accumulated rounding; take the last positive bid.
    bids.iter().rposition(|&w| w > 0.0).unwrap_or(bids.len() - 1)
}

/// Blind round-robin: node `i` senses channel `(i + session) mod channels`.
pub fn round_robin_assign(session: u64, node: usize, channels: usize) -> usize {
    assert!(channels >= 1);
    ((node as u64 + session) % channels as u64) as usize
}
