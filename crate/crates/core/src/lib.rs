//! Simulator and exact analyzer for a two-stage 1-bit smart-meter decision
//! network.
//!
//! Meters report whether their windowed average demand exceeds an
//! individual threshold. Bits cross a binary symmetric channel to their
//! aggregator, which fuses them with a hard-decision rule and forwards one
//! bit over a second channel to the operator, which fuses again. The
//! operator's decision is compared against whether total demand exceeded
//! the system threshold, and the time-averaged disagreement is reported
//! either by Monte Carlo ([`montecarlo`]) or exactly ([`exact`]).

pub mod channel;
pub mod cli;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod network;
pub mod par;
pub mod profiles;
pub mod rules;
pub mod sweep;
pub mod topology;

pub use channel::{ChannelSpec, StreamKey, StreamRole, DEFAULT_SEED};
pub use error::{Error, Result};
pub use exact::{brute_force_slot, exact_error, slot_distribution, ExactErrorReport, SlotDistribution};
pub use montecarlo::{average_error, estimate, simulate_snapshot, EstimateReport, SnapshotResult};
pub use network::FusionNetwork;
pub use par::Execution;
pub use profiles::{
    encode_states, parse_profiles, synthesize, window_average, AveragedDemand, DemandDistribution,
    LoadProfileSet, StateMatrix, SynthSpec,
};
pub use rules::{DecisionRule, RuleOutcome};
pub use sweep::{emit, run_sweep, ErrorReport, Method, OutputFormat, SweepGrid, SweepResultTable};
pub use topology::{NetworkTopology, SamplingGrid};
