use crate::channel::ChannelSpec;
use crate::error::{invalid, Result};
use crate::rules::DecisionRule;
use crate::topology::NetworkTopology;

/// Everything about the two-stage network except the data: shape, channels
/// and the fusion rule used at each stage.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionNetwork {
    pub topology: NetworkTopology,
    pub channels: ChannelSpec,
    pub rule_agg: DecisionRule,
    pub rule_op: DecisionRule,
}

impl FusionNetwork {
    pub fn new(
        topology: NetworkTopology,
        channels: ChannelSpec,
        rule_agg: DecisionRule,
        rule_op: DecisionRule,
    ) -> Result<Self> {
        for (i, &n) in topology.sizes().iter().enumerate() {
            rule_agg
                .validate_arity(n)
                .map_err(|e| invalid(format!("aggregator {i} rule: {e}")))?;
        }
        rule_op
            .validate_arity(topology.aggregators())
            .map_err(|e| invalid(format!("operator rule: {e}")))?;
        Ok(Self {
            topology,
            channels,
            rule_agg,
            rule_op,
        })
    }

    /// Same rule at both stages.
    pub fn symmetric(
        topology: NetworkTopology,
        channels: ChannelSpec,
        rule: DecisionRule,
    ) -> Result<Self> {
        Self::new(topology, channels, rule, rule)
    }
}
