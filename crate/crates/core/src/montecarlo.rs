//! Monte Carlo simulation of the two-hop pipeline.
//!
//! A snapshot is one realization of every channel use and every tie coin
//! over all slots; the demand data stays fixed. Each random decision draws
//! from its own keyed stream, so a snapshot is a pure function of
//! `(inputs, snapshot index, master seed)`.

use crate::channel::{derive_stream, transmit, StreamKey, StreamRole};
use crate::error::{invalid, Result};
use crate::network::FusionNetwork;
use crate::par::Execution;
use crate::profiles::StateMatrix;
use crate::rules::{resolve, RuleOutcome};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotResult {
    pub theta: Vec<bool>,
    pub errors: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateReport {
    pub p_er_mean: f64,
    pub p_er_std_err: f64,
    pub snapshots: u64,
    pub master_seed: u64,
}

/// Fraction of slots where the decision disagrees with the truth.
pub fn average_error(theta: &[bool], truth: &[bool]) -> Result<f64> {
    if theta.len() != truth.len() || theta.is_empty() {
        return Err(invalid(format!(
            "decision and truth lengths must match and be nonzero ({} vs {})",
            theta.len(),
            truth.len()
        )));
    }
    let mismatches = theta.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(mismatches as f64 / theta.len() as f64)
}

struct SlotSim<'a> {
    net: &'a FusionNetwork,
    master_seed: u64,
    snapshot: u64,
    slot: u64,
}

impl SlotSim<'_> {
    fn key(&self, role: StreamRole, link: usize) -> StreamKey {
        StreamKey {
            master_seed: self.master_seed,
            snapshot: self.snapshot,
            slot: self.slot,
            role,
            link: link as u64,
        }
    }

    fn send(&self, bit: bool, p: f64, role: StreamRole, link: usize) -> bool {
        // p = 0 and p = 1 never consume randomness, so skip stream setup
        if p == 0.0 {
            bit
        } else if p == 1.0 {
            !bit
        } else {
            transmit(bit, p, &mut derive_stream(&self.key(role, link)))
        }
    }

    fn settle(&self, outcome: RuleOutcome, role: StreamRole, link: usize) -> bool {
        match outcome {
            RuleOutcome::Tie => resolve(outcome, &mut derive_stream(&self.key(role, link))),
            o => o == RuleOutcome::One,
        }
    }

    fn decide(&self, bits: &[bool]) -> bool {
        let topo = &self.net.topology;
        let ch = &self.net.channels;
        let mut op_ones = 0;
        for i in 0..topo.aggregators() {
            let range = topo.meter_range(i);
            let inputs = range.len();
            let ones = range
                .filter(|&m| self.send(bits[m], ch.p1, StreamRole::Hop1, m))
                .count();
            let outcome = self.net.rule_agg.evaluate_count(ones, inputs);
            let decision = self.settle(outcome, StreamRole::AggregatorTie, i);
            if self.send(decision, ch.p2, StreamRole::Hop2, i) {
                op_ones += 1;
            }
        }
        let outcome = self.net.rule_op.evaluate_count(op_ones, topo.aggregators());
        self.settle(outcome, StreamRole::OperatorTie, 0)
    }
}

fn check(net: &FusionNetwork, states: &StateMatrix) -> Result<()> {
    states.check_topology(&net.topology)
}

fn snapshot_decisions<'a>(
    net: &'a FusionNetwork,
    states: &'a StateMatrix,
    snapshot: u64,
    master_seed: u64,
) -> impl Iterator<Item = bool> + 'a {
    (0..states.slots()).map(move |n| {
        SlotSim {
            net,
            master_seed,
            snapshot,
            slot: n as u64,
        }
        .decide(states.slot_bits(n))
    })
}

pub fn simulate_snapshot(
    net: &FusionNetwork,
    states: &StateMatrix,
    snapshot: u64,
    master_seed: u64,
) -> Result<SnapshotResult> {
    check(net, states)?;
    let theta: Vec<bool> = snapshot_decisions(net, states, snapshot, master_seed).collect();
    let errors = theta.iter().zip(states.truth()).filter(|(a, b)| a != b).count();
    Ok(SnapshotResult { theta, errors })
}

pub fn estimate(
    net: &FusionNetwork,
    states: &StateMatrix,
    snapshots: u64,
    master_seed: u64,
) -> Result<EstimateReport> {
    estimate_with(net, states, snapshots, master_seed, Execution::default())
}

/// Mean and standard error of the per-snapshot error rate. The reduction
/// runs over integer error counts, so the result does not depend on
/// `exec` or on the thread count.
pub fn estimate_with(
    net: &FusionNetwork,
    states: &StateMatrix,
    snapshots: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<EstimateReport> {
    check(net, states)?;
    if snapshots == 0 {
        return Err(invalid("need at least one snapshot"));
    }
    let truth = states.truth();
    let counts = exec.map(snapshots as usize, |s| {
        snapshot_decisions(net, states, s as u64, master_seed)
            .zip(truth)
            .filter(|(a, b)| a != *b)
            .count() as u64
    });
    let sum: u128 = counts.iter().map(|&c| c as u128).sum();
    let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let s = snapshots as u128;
    let slots = states.slots() as f64;

    let p_er_mean = sum as f64 / (s as f64 * slots);
    let p_er_std_err = if s > 1 {
        // S·Σc² − (Σc)² is exact in integers
        let centered = s * sum_sq - sum * sum;
        let var = centered as f64 / (s as f64 * (s - 1) as f64) / (slots * slots);
        (var / s as f64).sqrt()
    } else {
        0.0
    };
    Ok(EstimateReport {
        p_er_mean,
        p_er_std_err,
        snapshots,
        master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSpec;
    use crate::exact::exact_error;
    use crate::rules::DecisionRule::{self, *};
    use crate::topology::NetworkTopology;

    fn net(sizes: Vec<usize>, p1: f64, p2: f64, a: DecisionRule, o: DecisionRule) -> FusionNetwork {
        FusionNetwork::new(
            NetworkTopology::new(sizes).unwrap(),
            ChannelSpec::new(p1, p2).unwrap(),
            a,
            o,
        )
        .unwrap()
    }

    #[test]
    fn average_error_examples() {
        let s = [false, true, true, false, true, false];
        let theta = [false, true, false, false, true, true];
        assert_eq!(average_error(&s, &s).unwrap(), 0.0);
        assert_eq!(average_error(&theta, &s).unwrap(), 2.0 / 6.0);
        let flipped: Vec<bool> = s.iter().map(|b| !b).collect();
        assert_eq!(average_error(&flipped, &s).unwrap(), 1.0);
        assert!(average_error(&theta[..3], &s).is_err());
        assert!(average_error(&[], &[]).is_err());
    }

    #[test]
    fn noiseless_propagation() {
        let bits = vec![
            vec![false, false, true, false, false, false],
            vec![true; 6],
        ];
        let states = StateMatrix::from_bits(bits, vec![true, true]).unwrap();
        let or = net(vec![3, 3], 0.0, 0.0, Or, Or);
        let r = simulate_snapshot(&or, &states, 0, 1).unwrap();
        assert_eq!(r.theta, vec![true, true]);
        let and = net(vec![3, 3], 0.0, 0.0, And, And);
        let r = simulate_snapshot(&and, &states, 0, 1).unwrap();
        assert_eq!(r.theta, vec![false, true]);
        assert_eq!(r.errors, 1);
    }

    #[test]
    fn snapshots_are_deterministic() {
        let bits: Vec<Vec<bool>> = (0..20)
            .map(|n| (0..8).map(|m| (n * 7 + m * 3) % 5 < 2).collect())
            .collect();
        let truth = (0..20).map(|n| n % 3 == 0).collect();
        let states = StateMatrix::from_bits(bits, truth).unwrap();
        let n = net(vec![4, 4], 0.2, 0.1, Majority, Majority);
        let a = simulate_snapshot(&n, &states, 5, 99).unwrap();
        assert_eq!(a, simulate_snapshot(&n, &states, 5, 99).unwrap());
        let others: Vec<_> = (0..10)
            .map(|s| simulate_snapshot(&n, &states, s, 99).unwrap().theta)
            .collect();
        assert!(others.iter().any(|t| *t != a.theta));
    }

    #[test]
    fn estimate_agrees_with_snapshot_errors() {
        let states = StateMatrix::from_bits(
            vec![vec![true, false, true, true], vec![false, false, true, false]],
            vec![true, false],
        )
        .unwrap();
        let n = net(vec![2, 2], 0.3, 0.2, Majority, Or);
        let r = estimate(&n, &states, 50, 4).unwrap();
        let total: usize = (0..50)
            .map(|s| simulate_snapshot(&n, &states, s, 4).unwrap().errors)
            .sum();
        assert_eq!(r.p_er_mean, total as f64 / 100.0);
    }

    #[test]
    fn zero_noise_has_zero_variance() {
        let states = StateMatrix::from_bits(
            vec![vec![true, true, false], vec![false, false, false], vec![true; 3]],
            vec![true, true, false],
        )
        .unwrap();
        let n = net(vec![3], 0.0, 0.0, Majority, Majority);
        let r = estimate(&n, &states, 200, 1).unwrap();
        assert_eq!(r.p_er_std_err, 0.0);
        assert_eq!(r.p_er_mean, exact_error(&n, &states).unwrap().p_er);
    }

    #[test]
    fn rejects_zero_snapshots() {
        let states = StateMatrix::from_bits(vec![vec![true]], vec![true]).unwrap();
        let n = net(vec![1], 0.1, 0.1, And, And);
        assert!(estimate(&n, &states, 0, 1).is_err());
    }

    #[test]
    fn sequential_equals_parallel() {
        let bits: Vec<Vec<bool>> = (0..12)
            .map(|n| (0..6).map(|m| (n + m) % 3 == 0).collect())
            .collect();
        let states = StateMatrix::from_bits(bits, (0..12).map(|n| n % 2 == 0).collect()).unwrap();
        let n = net(vec![2, 2, 2], 0.2, 0.1, Majority, Majority);
        let a = estimate_with(&n, &states, 500, 3, Execution::Sequential).unwrap();
        let b = estimate_with(&n, &states, 500, 3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
