//! Binary symmetric channels and keyed random substreams.
//!
//! Every random decision in a simulation (a channel use or a tie coin) draws
//! from its own stream, derived purely from a [`StreamKey`]. Results are
//! therefore independent of how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{check_prob, Result};

/// Random stream handed to channel and tie-resolution draws.
pub type Stream = Xoshiro256PlusPlus;

/// Default master seed when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_0001;

/// Flip probabilities of the meter→aggregator (`p1`) and
/// aggregator→operator (`p2`) hops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub p1: f64,
    pub p2: f64,
}

impl ChannelSpec {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        check_prob("p1", p1)?;
        check_prob("p2", p2)?;
        if p1 > 0.5 || p2 > 0.5 {
            log::warn!("channel flip probability above 0.5 (p1 = {p1}, p2 = {p2})");
        }
        Ok(Self { p1, p2 })
    }

    pub fn noiseless() -> Self {
        Self { p1: 0.0, p2: 0.0 }
    }
}

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamRole {
    /// Meter→aggregator channel use; link is the flat meter index.
    Hop1,
    /// Aggregator→operator channel use; link is the aggregator index.
    Hop2,
    /// Tie coin at an aggregator; link is the aggregator index.
    AggregatorTie,
    /// Tie coin at the operator; link is 0.
    OperatorTie,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Hop1 => 1,
            StreamRole::Hop2 => 2,
            StreamRole::AggregatorTie => 3,
            StreamRole::OperatorTie => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub snapshot: u64,
    pub slot: u64,
    pub role: StreamRole,
    pub link: u64,
}

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a sequence of words into one well-mixed 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |h, &p| mix64(h ^ mix64(p)))
}

pub fn derive_stream(key: &StreamKey) -> Stream {
    Stream::seed_from_u64(derive_seed(&[
        key.master_seed,
        key.snapshot,
        key.slot,
        key.role.tag(),
        key.link,
    ]))
}

/// One channel use: returns `!bit` with probability `p`.
pub fn transmit<R: Rng + ?Sized>(bit: bool, p: f64, rng: &mut R) -> bool {
    bit ^ rng.random_bool(p)
}

/// Probability that the receiver sees a 1 when `bit` was sent.
pub fn received_one_prob(bit: bool, p: f64) -> f64 {
    if bit {
        1.0 - p
    } else {
        p
    }
}

/// Probability of a received 1 when the sent bit is itself 1 with
/// probability `q`.
pub fn forwarded_one_prob(q: f64, p: f64) -> f64 {
    q * (1.0 - p) + (1.0 - q) * p
}
