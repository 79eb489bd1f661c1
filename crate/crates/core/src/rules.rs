//! Hard-decision fusion rules.
//!
//! Every rule is available in two forms: a sampled form that maps received
//! bits to an outcome ([`DecisionRule::evaluate`] followed by [`resolve`]),
//! and an exact form that maps independent per-input one-probabilities to
//! the probability that the resolved output is 1
//! ([`DecisionRule::output_one_prob`]).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{check_prob, invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecisionRule {
    And,
    Or,
    /// Strict majority of ones; an exact half is a tie settled by a fair coin.
    Majority,
    /// One iff at least `k` inputs are one.
    KOutOfN(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleOutcome {
    Zero,
    One,
    Tie,
}

impl DecisionRule {
    /// Check that the rule can be applied to `inputs` bits.
    pub fn validate_arity(&self, inputs: usize) -> Result<()> {
        if inputs == 0 {
            return Err(invalid("decision rule applied to an empty input"));
        }
        if let DecisionRule::KOutOfN(k) = *self {
            if k == 0 || k > inputs {
                return Err(invalid(format!(
                    "k-out-of-n needs 1 <= k <= {inputs}, got k = {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<RuleOutcome> {
        self.validate_arity(bits.len())?;
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(self.evaluate_count(ones, bits.len()))
    }

    /// Outcome from the number of ones among `inputs` bits. Every rule here
    /// depends on its inputs only through that count. Arity is not checked.
    pub fn evaluate_count(&self, ones: usize, inputs: usize) -> RuleOutcome {
        debug_assert!(ones <= inputs);
        let one = |b: bool| if b { RuleOutcome::One } else { RuleOutcome::Zero };
        match *self {
            DecisionRule::And => one(ones == inputs),
            DecisionRule::Or => one(ones > 0),
            DecisionRule::Majority => match (2 * ones).cmp(&inputs) {
                std::cmp::Ordering::Greater => RuleOutcome::One,
                std::cmp::Ordering::Less => RuleOutcome::Zero,
                std::cmp::Ordering::Equal => RuleOutcome::Tie,
            },
            DecisionRule::KOutOfN(k) => one(ones >= k),
        }
    }

    /// Probability that the resolved output is 1 when input `m` is an
    /// independent Bernoulli(`one_probs[m]`).
    pub fn output_one_prob(&self, one_probs: &[f64]) -> Result<f64> {
        self.validate_arity(one_probs.len())?;
        for (m, &q) in one_probs.iter().enumerate() {
            check_prob(&format!("input probability #{m}"), q)?;
        }
        Ok(self.output_one_prob_unchecked(one_probs))
    }

    /// All rules read the same Poisson-binomial count distribution and sum
    /// its upper tail from `c = m` downwards. Because every partial sum only
    /// adds nonnegative terms, `AND <= MAJORITY <= OR` and the k-out-of-n
    /// degenerate cases hold exactly in floating point, not just in theory.
    pub(crate) fn output_one_prob_unchecked(&self, one_probs: &[f64]) -> f64 {
        let m = one_probs.len();
        let counts = poisson_binomial(one_probs);
        let tail_down_to = |k: usize| counts[k..].iter().rev().sum::<f64>();
        match *self {
            DecisionRule::And => counts[m],
            DecisionRule::Or => tail_down_to(1),
            DecisionRule::KOutOfN(k) => tail_down_to(k),
            DecisionRule::Majority => {
                let above = m / 2 + 1;
                let strict: f64 = counts[above..].iter().rev().sum();
                if m % 2 == 0 {
                    strict + 0.5 * counts[m / 2]
                } else {
                    strict
                }
            }
        }
    }
}

/// Turn an outcome into a bit; ties draw a fair coin from `rng`.
pub fn resolve<R: Rng + ?Sized>(outcome: RuleOutcome, rng: &mut R) -> bool {
    match outcome {
        RuleOutcome::Zero => false,
        RuleOutcome::One => true,
        RuleOutcome::Tie => rng.random::<bool>(),
    }
}

/// Distribution of the number of successes among independent Bernoulli
/// trials. Entry `c` is `P(C = c)`; the vector has `probs.len() + 1` entries.
pub fn poisson_binomial(probs: &[f64]) -> Vec<f64> {
    let mut dist = Vec::with_capacity(probs.len() + 1);
    dist.push(1.0);
    for &q in probs {
        dist.push(0.0);
        for c in (1..dist.len()).rev() {
            dist[c] = dist[c] * (1.0 - q) + dist[c - 1] * q;
        }
        dist[0] *= 1.0 - q;
    }
    dist
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionRule::And => f.write_str("and"),
            DecisionRule::Or => f.write_str("or"),
            DecisionRule::Majority => f.write_str("majority"),
            DecisionRule::KOutOfN(k) => write!(f, "k-out-of-n:{k}"),
        }
    }
}

impl FromStr for DecisionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "and" => Ok(DecisionRule::And),
            "or" => Ok(DecisionRule::Or),
            "majority" => Ok(DecisionRule::Majority),
            other => {
                let k = other
                    .strip_prefix("k-out-of-n:")
                    .ok_or_else(|| invalid(format!("unknown decision rule {s:?}")))?;
                let k: usize = k
                    .parse()
                    .map_err(|_| invalid(format!("bad k in decision rule {s:?}")))?;
                if k == 0 {
                    return Err(invalid("k-out-of-n needs k >= 1"));
                }
                Ok(DecisionRule::KOutOfN(k))
            }
        }
    }
}
