//! Network shape and the measurement grid.
//!
//! Meters are laid out row-major by aggregator: all meters of aggregator 0
//! come first, then aggregator 1, and so on. The flat index is also the CSV
//! column order (`m0`, `m1`, ...).

use crate::error::{invalid, Error, Result};

/// K aggregators, aggregator `i` owning `aggregator_sizes[i]` meters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkTopology {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl NetworkTopology {
    pub fn new(aggregator_sizes: Vec<usize>) -> Result<Self> {
        if aggregator_sizes.is_empty() {
            return Err(invalid("topology needs at least one aggregator"));
        }
        if let Some(i) = aggregator_sizes.iter().position(|&n| n == 0) {
            return Err(invalid(format!("aggregator {i} has no meters")));
        }
        let mut offsets = Vec::with_capacity(aggregator_sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &n in &aggregator_sizes {
            acc += n;
            offsets.push(acc);
        }
        Ok(Self {
            sizes: aggregator_sizes,
            offsets,
        })
    }

    /// `k` aggregators with `n` meters each.
    pub fn uniform(k: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; k])
    }

    pub fn aggregators(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn meters_of(&self, aggregator: usize) -> usize {
        self.sizes[aggregator]
    }

    pub fn total_meters(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Flat index range of the meters owned by `aggregator`.
    pub fn meter_range(&self, aggregator: usize) -> std::ops::Range<usize> {
        self.offsets[aggregator]..self.offsets[aggregator + 1]
    }

    pub fn meter_index(&self, aggregator: usize, meter: usize) -> Result<usize> {
        let n = self.sizes.get(aggregator).ok_or_else(|| {
            Error::Index(format!(
                "aggregator {aggregator} (topology has {})",
                self.aggregators()
            ))
        })?;
        if meter >= *n {
            return Err(Error::Index(format!(
                "meter {meter} of aggregator {aggregator} (which has {n})"
            )));
        }
        Ok(self.offsets[aggregator] + meter)
    }

    /// Inverse of [`meter_index`](Self::meter_index).
    pub fn meter_position(&self, flat: usize) -> Result<(usize, usize)> {
        if flat >= self.total_meters() {
            return Err(Error::Index(format!(
                "flat meter index {flat} (topology has {})",
                self.total_meters()
            )));
        }
        // offsets is strictly increasing, so the owner is the last offset <= flat
        let agg = self.offsets.partition_point(|&o| o <= flat) - 1;
        Ok((agg, flat - self.offsets[agg]))
    }
}

/// Measurement instants `t_n = start + n * period` for `n` in `0..slots`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingGrid {
    pub start: i64,
    pub period: i64,
    pub slots: usize,
}

impl SamplingGrid {
    pub fn new(start: i64, period: i64, slots: usize) -> Result<Self> {
        if period <= 0 {
            return Err(invalid(format!("sampling period must be > 0, got {period}")));
        }
        if slots == 0 {
            return Err(invalid("sampling grid needs at least one slot"));
        }
        Ok(Self {
            start,
            period,
            slots,
        })
    }

    pub fn time_of(&self, slot: usize) -> i64 {
        self.start + slot as i64 * self.period
    }

    /// End of the last slot (exclusive).
    pub fn end(&self) -> i64 {
        self.time_of(self.slots)
    }
}
