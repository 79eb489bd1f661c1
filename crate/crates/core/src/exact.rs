//! Exact decision-error probabilities.
//!
//! Given the meter bits of a slot, the received bits at an aggregator are
//! independent Bernoulli variables, so the aggregator decision is a
//! Bernoulli whose parameter comes from the rule's exact form. Aggregator
//! decisions travel over independent links, so the operator's inputs are
//! again independent Bernoullis. This conditional independence is what the
//! two-step composition below relies on.

use crate::channel::{forwarded_one_prob, received_one_prob};
use crate::error::{Error, Result};
use crate::network::FusionNetwork;
use crate::par::Execution;
use crate::profiles::StateMatrix;
use crate::rules::RuleOutcome;

/// Largest `meters + aggregators` that [`brute_force_slot`] will enumerate.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct SlotDistribution {
    /// Probability that the operator decides 1.
    pub p_theta_one: f64,
    /// Probability that aggregator `i` decides 1, before the second hop.
    pub aggregator_one_probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactErrorReport {
    /// `P(θ[n] != s[n])` per slot.
    pub slot_errors: Vec<f64>,
    pub p_er: f64,
}

fn check_slot(net: &FusionNetwork, states: &StateMatrix, slot: usize) -> Result<()> {
    states.check_topology(&net.topology)?;
    if slot >= states.slots() {
        return Err(Error::Index(format!(
            "slot {slot} (state matrix has {})",
            states.slots()
        )));
    }
    Ok(())
}

pub fn slot_distribution(
    net: &FusionNetwork,
    states: &StateMatrix,
    slot: usize,
) -> Result<SlotDistribution> {
    check_slot(net, states, slot)?;
    Ok(slot_distribution_unchecked(net, states.slot_bits(slot)))
}

fn slot_distribution_unchecked(net: &FusionNetwork, bits: &[bool]) -> SlotDistribution {
    let topo = &net.topology;
    let ch = &net.channels;
    let mut received = Vec::with_capacity(topo.sizes().iter().copied().max().unwrap_or(0));
    let aggregator_one_probs: Vec<f64> = (0..topo.aggregators())
        .map(|i| {
            received.clear();
            received.extend(bits[topo.meter_range(i)].iter().map(|&b| received_one_prob(b, ch.p1)));
            net.rule_agg.output_one_prob_unchecked(&received)
        })
        .collect();
    let at_operator: Vec<f64> = aggregator_one_probs
        .iter()
        .map(|&q| forwarded_one_prob(q, ch.p2))
        .collect();
    SlotDistribution {
        p_theta_one: net.rule_op.output_one_prob_unchecked(&at_operator),
        aggregator_one_probs,
    }
}

fn outcome_weight(outcome: RuleOutcome) -> f64 {
    match outcome {
        RuleOutcome::Zero => 0.0,
        RuleOutcome::One => 1.0,
        RuleOutcome::Tie => 0.5,
    }
}

fn flip_weight(flips: u32, links: usize, p: f64) -> f64 {
    let k = flips.count_ones() as i32;
    p.powi(k) * (1.0 - p).powi(links as i32 - k)
}

/// `P(θ[n] = 1)` by summing over every first-hop flip pattern, every
/// aggregator tie resolution and every second-hop flip pattern.
pub fn brute_force_slot(net: &FusionNetwork, states: &StateMatrix, slot: usize) -> Result<f64> {
    check_slot(net, states, slot)?;
    let topo = &net.topology;
    let meters = topo.total_meters();
    let k = topo.aggregators();
    if meters + k > ENUMERATION_LIMIT {
        return Err(Error::Capacity(format!(
            "{meters} meters + {k} aggregators exceeds the enumeration limit of {ENUMERATION_LIMIT}"
        )));
    }
    let sent = states.slot_bits(slot);
    let (p1, p2) = (net.channels.p1, net.channels.p2);

    let mut received = vec![false; meters];
    let mut decision_one = vec![0.0; k];
    let mut at_operator = vec![false; k];
    let mut total = 0.0;
    for hop1 in 0u32..(1 << meters) {
        let w1 = flip_weight(hop1, meters, p1);
        if w1 == 0.0 {
            continue;
        }
        for (m, r) in received.iter_mut().enumerate() {
            *r = sent[m] ^ (hop1 >> m & 1 == 1);
        }
        for (i, d) in decision_one.iter_mut().enumerate() {
            let outcome = net.rule_agg.evaluate(&received[topo.meter_range(i)])?;
            *d = outcome_weight(outcome);
        }
        for decisions in 0u32..(1 << k) {
            let wd: f64 = (0..k)
                .map(|i| {
                    if decisions >> i & 1 == 1 {
                        decision_one[i]
                    } else {
                        1.0 - decision_one[i]
                    }
                })
                .product();
            if wd == 0.0 {
                continue;
            }
            for hop2 in 0u32..(1 << k) {
                let w2 = flip_weight(hop2, k, p2);
                if w2 == 0.0 {
                    continue;
                }
                for (i, a) in at_operator.iter_mut().enumerate() {
                    *a = (decisions ^ hop2) >> i & 1 == 1;
                }
                let out = outcome_weight(net.rule_op.evaluate(&at_operator)?);
                total += w1 * wd * w2 * out;
            }
        }
    }
    Ok(total)
}

pub fn exact_error(net: &FusionNetwork, states: &StateMatrix) -> Result<ExactErrorReport> {
    exact_error_with(net, states, Execution::default())
}

pub fn exact_error_with(
    net: &FusionNetwork,
    states: &StateMatrix,
    exec: Execution,
) -> Result<ExactErrorReport> {
    states.check_topology(&net.topology)?;
    let truth = states.truth();
    let slot_errors = exec.map(states.slots(), |n| {
        let p_one = slot_distribution_unchecked(net, states.slot_bits(n)).p_theta_one;
        if truth[n] {
            1.0 - p_one
        } else {
            p_one
        }
    });
    let p_er = slot_errors.iter().sum::<f64>() / slot_errors.len() as f64;
    Ok(ExactErrorReport { slot_errors, p_er })
}
