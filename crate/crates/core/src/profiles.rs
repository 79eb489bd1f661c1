//! Household load profiles: ingestion, synthesis, windowed averaging and
//! the 1-bit state encoding.
//!
//! All powers are in watts. Timestamps are integer seconds.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::SeedableRng;
use rand_distr::{Distribution as _, LogNormal, Weibull};

use crate::channel::{derive_seed, Stream};
use crate::error::{invalid, Error, Result};
use crate::topology::{NetworkTopology, SamplingGrid};

/// Raw per-meter power series sharing one uniformly spaced time axis.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadProfileSet {
    timestamps: Vec<i64>,
    /// `series[m][k]` is the power of meter `m` at `timestamps[k]`.
    series: Vec<Vec<f64>>,
    sample_interval: i64,
}

impl LoadProfileSet {
    pub fn new(timestamps: Vec<i64>, series: Vec<Vec<f64>>) -> Result<Self> {
        if timestamps.len() < 2 {
            return Err(invalid("a load profile needs at least two samples"));
        }
        if series.is_empty() {
            return Err(invalid("a load profile needs at least one meter"));
        }
        let interval = timestamps[1] - timestamps[0];
        if interval <= 0 {
            return Err(invalid("timestamps must be strictly increasing"));
        }
        if let Some(k) = timestamps.windows(2).position(|w| w[1] - w[0] != interval) {
            return Err(invalid(format!(
                "non-uniform timestamps at sample {}",
                k + 1
            )));
        }
        for (m, s) in series.iter().enumerate() {
            if s.len() != timestamps.len() {
                return Err(invalid(format!(
                    "meter {m} has {} samples, expected {}",
                    s.len(),
                    timestamps.len()
                )));
            }
            if let Some(k) = s.iter().position(|p| !p.is_finite() || *p < 0.0) {
                return Err(invalid(format!(
                    "meter {m} has invalid power {} at sample {k}",
                    s[k]
                )));
            }
        }
        Ok(Self {
            timestamps,
            series,
            sample_interval: interval,
        })
    }

    pub fn meters(&self) -> usize {
        self.series.len()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn series(&self, meter: usize) -> &[f64] {
        &self.series[meter]
    }

    pub fn sample_interval(&self) -> i64 {
        self.sample_interval
    }

    /// Multiply every power by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let series = self
            .series
            .iter()
            .map(|s| s.iter().map(|p| p * c).collect())
            .collect();
        Self::new(self.timestamps.clone(), series)
    }

    /// The largest grid of `period`-second slots starting at the first
    /// sample that the data fully covers.
    pub fn default_grid(&self, period: i64) -> Result<SamplingGrid> {
        let span = self.len() as i64 * self.sample_interval;
        let slots = if period > 0 { span / period } else { 0 };
        if slots == 0 {
            return Err(Error::Window(format!(
                "data spans {span} s, shorter than one {period} s slot"
            )));
        }
        SamplingGrid::new(self.timestamps[0], period, slots as usize)
    }

    /// Serialize in the input CSV layout (`timestamp,m0,...`).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * self.meters() * 12);
        out.push_str("timestamp");
        for m in 0..self.meters() {
            write!(out, ",m{m}").unwrap();
        }
        out.push('\n');
        for (k, t) in self.timestamps.iter().enumerate() {
            write!(out, "{t}").unwrap();
            for s in &self.series {
                write!(out, ",{}", s[k]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Parse the profile CSV for `topology`. Lines starting with `#` are
/// skipped. Row numbers in errors are file line numbers.
pub fn parse_profiles(text: &str, topology: &NetworkTopology) -> Result<LoadProfileSet> {
    let meters = topology.total_meters();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            msg: e.to_string(),
        })?
        .clone();
    if header.len() != meters + 1 {
        return Err(Error::Parse {
            row: 1,
            msg: format!(
                "header has {} columns, topology needs {} (timestamp + {meters} meters)",
                header.len(),
                meters + 1
            ),
        });
    }
    if header.get(0) != Some("timestamp") {
        return Err(Error::Parse {
            row: 1,
            msg: "first column must be named `timestamp`".into(),
        });
    }

    let mut timestamps = Vec::new();
    let mut series = vec![Vec::new(); meters];
    let mut interval = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let fail = |msg: String| Error::Parse { row, msg };
        if record.len() != meters + 1 {
            return Err(fail(format!(
                "expected {} fields, found {}",
                meters + 1,
                record.len()
            )));
        }
        let t: i64 = record[0]
            .parse()
            .map_err(|_| fail(format!("timestamp {:?} is not an integer", &record[0])))?;
        if let Some(&prev) = timestamps.last() {
            let step = t - prev;
            match interval {
                None if step > 0 => interval = Some(step),
                Some(i) if i == step => {}
                _ => return Err(fail(format!("non-uniform timestamp {t} after {prev}"))),
            }
        }
        timestamps.push(t);
        for (m, field) in record.iter().skip(1).enumerate() {
            let p: f64 = field
                .parse()
                .map_err(|_| fail(format!("power {field:?} for m{m} is not a number")))?;
            if !p.is_finite() || p < 0.0 {
                return Err(fail(format!("power {field} for m{m} must be finite and >= 0")));
            }
            series[m].push(p);
        }
    }
    if timestamps.len() < 2 {
        return Err(Error::Parse {
            row: 2,
            msg: "need at least two data rows".into(),
        });
    }
    LoadProfileSet::new(timestamps, series)
}

/// Per-slot mean demand, `values[m][n]` for flat meter `m` and slot `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedDemand {
    values: Vec<Vec<f64>>,
    grid: SamplingGrid,
}

impl AveragedDemand {
    /// Build directly from per-meter slot averages.
    pub fn from_values(values: Vec<Vec<f64>>, grid: SamplingGrid) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("averaged demand needs at least one meter"));
        }
        for (m, row) in values.iter().enumerate() {
            if row.len() != grid.slots {
                return Err(invalid(format!(
                    "meter {m} has {} slots, grid has {}",
                    row.len(),
                    grid.slots
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(invalid(format!("meter {m} has a negative or non-finite average")));
            }
        }
        Ok(Self { values, grid })
    }

    pub fn meters(&self) -> usize {
        self.values.len()
    }

    pub fn slots(&self) -> usize {
        self.grid.slots
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn get(&self, meter: usize, slot: usize) -> f64 {
        self.values[meter][slot]
    }

    pub fn meter(&self, meter: usize) -> &[f64] {
        &self.values[meter]
    }

    /// Total demand over all meters, per slot.
    pub fn totals(&self) -> Vec<f64> {
        (0..self.slots())
            .map(|n| self.values.iter().map(|v| v[n]).sum())
            .collect()
    }

    /// Debug export: `slot,t_n,m0,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,t_n");
        for m in 0..self.meters() {
            write!(out, ",m{m}").unwrap();
        }
        out.push('\n');
        for n in 0..self.slots() {
            write!(out, "{n},{}", self.grid.time_of(n)).unwrap();
            for v in &self.values {
                write!(out, ",{}", v[n]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Average every meter over the slots `[t_n, t_n + period)` of `grid`.
pub fn window_average(profiles: &LoadProfileSet, grid: &SamplingGrid) -> Result<AveragedDemand> {
    let dt = profiles.sample_interval();
    if grid.period % dt != 0 {
        return Err(Error::Window(format!(
            "slot period {} s is not a multiple of the {dt} s sample interval",
            grid.period
        )));
    }
    let first = profiles.timestamps()[0];
    let offset = grid.start - first;
    if offset < 0 || offset % dt != 0 {
        return Err(Error::Window(format!(
            "grid start {} is not on the sample lattice starting at {first}",
            grid.start
        )));
    }
    let per_slot = (grid.period / dt) as usize;
    let begin = (offset / dt) as usize;
    let needed = begin + per_slot * grid.slots;
    if needed > profiles.len() {
        return Err(Error::Window(format!(
            "data ends at {} but the grid needs samples up to {}",
            profiles.timestamps()[profiles.len() - 1],
            grid.end() - dt
        )));
    }
    let values = (0..profiles.meters())
        .map(|m| {
            profiles.series(m)[begin..needed]
                .chunks_exact(per_slot)
                .map(|w| w.iter().sum::<f64>() / per_slot as f64)
                .collect()
        })
        .collect();
    Ok(AveragedDemand {
        values,
        grid: *grid,
    })
}

/// Meter bits and ground truth for every slot.
///
/// Bits are stored slot-major so that one slot's meters are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMatrix {
    meters: usize,
    theta: Vec<bool>,
    truth: Vec<bool>,
    pub gamma: f64,
    pub p_th: f64,
}

impl StateMatrix {
    /// Build from `slot_bits[n][m]` and ground truth `truth[n]`. Thresholds
    /// are recorded as NaN since they are unknown.
    pub fn from_bits(slot_bits: Vec<Vec<bool>>, truth: Vec<bool>) -> Result<Self> {
        if slot_bits.is_empty() || slot_bits.len() != truth.len() {
            return Err(invalid(format!(
                "{} slots of meter bits but {} truth bits",
                slot_bits.len(),
                truth.len()
            )));
        }
        let meters = slot_bits[0].len();
        if meters == 0 || slot_bits.iter().any(|b| b.len() != meters) {
            return Err(invalid("every slot needs the same nonzero number of meter bits"));
        }
        Ok(Self {
            meters,
            theta: slot_bits.concat(),
            truth,
            gamma: f64::NAN,
            p_th: f64::NAN,
        })
    }

    pub fn meters(&self) -> usize {
        self.meters
    }

    pub fn slots(&self) -> usize {
        self.truth.len()
    }

    /// Meter bits of slot `n`, indexed by flat meter index.
    pub fn slot_bits(&self, n: usize) -> &[bool] {
        &self.theta[n * self.meters..(n + 1) * self.meters]
    }

    pub fn meter_bit(&self, meter: usize, n: usize) -> bool {
        self.theta[n * self.meters + meter]
    }

    pub fn truth(&self) -> &[bool] {
        &self.truth
    }

    /// Flip every meter bit and every truth bit.
    pub fn complemented(&self) -> Self {
        Self {
            meters: self.meters,
            theta: self.theta.iter().map(|b| !b).collect(),
            truth: self.truth.iter().map(|b| !b).collect(),
            gamma: self.gamma,
            p_th: self.p_th,
        }
    }

    pub(crate) fn check_topology(&self, topology: &NetworkTopology) -> Result<()> {
        if self.meters != topology.total_meters() {
            return Err(invalid(format!(
                "state matrix has {} meters, topology has {}",
                self.meters,
                topology.total_meters()
            )));
        }
        Ok(())
    }

    /// `slot,t_n,s,m0,...` with 0/1 entries.
    pub fn to_csv(&self, grid: &SamplingGrid) -> String {
        let mut out = String::from("slot,t_n,s");
        for m in 0..self.meters {
            write!(out, ",m{m}").unwrap();
        }
        out.push('\n');
        for n in 0..self.slots() {
            write!(out, "{n},{},{}", grid.time_of(n), u8::from(self.truth[n])).unwrap();
            for &b in self.slot_bits(n) {
                write!(out, ",{}", u8::from(b)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `θ = 1` iff a meter's average exceeds `gamma`; `s = 1` iff the total
/// exceeds `p_th`. Both comparisons are strict.
pub fn encode_states(demand: &AveragedDemand, gamma: f64, p_th: f64) -> Result<StateMatrix> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if !(p_th >= 0.0 && p_th.is_finite()) {
        return Err(invalid(format!("P_th must be finite and >= 0, got {p_th}")));
    }
    let meters = demand.meters();
    let mut theta = Vec::with_capacity(meters * demand.slots());
    for n in 0..demand.slots() {
        theta.extend((0..meters).map(|m| demand.get(m, n) > gamma));
    }
    let truth = demand.totals().into_iter().map(|t| t > p_th).collect();
    Ok(StateMatrix {
        meters,
        theta,
        truth,
        gamma,
        p_th,
    })
}

/// Per-sample demand distribution for synthetic profiles, in watts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DemandDistribution {
    Weibull { shape: f64, scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl DemandDistribution {
    /// Illustrative default; not fitted to any measured data set.
    pub const ILLUSTRATIVE: DemandDistribution = DemandDistribution::Weibull {
        shape: 1.5,
        scale: 550.0,
    };

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            DemandDistribution::Weibull { shape, scale } if ok(shape) && ok(scale) => Ok(()),
            DemandDistribution::LogNormal { mu, sigma } if mu.is_finite() && ok(sigma) => Ok(()),
            d => Err(invalid(format!("invalid distribution parameters: {d}"))),
        }
    }
}

impl fmt::Display for DemandDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandDistribution::Weibull { shape, scale } => write!(f, "weibull:{shape}:{scale}"),
            DemandDistribution::LogNormal { mu, sigma } => write!(f, "lognormal:{mu}:{sigma}"),
        }
    }
}

impl FromStr for DemandDistribution {
    type Err = Error;

    /// `weibull:<shape>:<scale>` or `lognormal:<mu>:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || invalid(format!("bad distribution {s:?}; expected weibull:SHAPE:SCALE or lognormal:MU:SIGMA"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[1].parse().map_err(|_| bad())?;
        let b: f64 = parts[2].parse().map_err(|_| bad())?;
        let d = match parts[0].to_ascii_lowercase().as_str() {
            "weibull" => DemandDistribution::Weibull { shape: a, scale: b },
            "lognormal" | "log-normal" => DemandDistribution::LogNormal { mu: a, sigma: b },
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthSpec {
    pub distribution: DemandDistribution,
    pub meters: usize,
    pub seed: u64,
}

const SYNTH_STREAM_TAG: u64 = 0x5359_4E54;

/// Draw one independent sample per meter per grid slot. Grid slots are the
/// raw sample instants; meter `m` uses its own substream of `spec.seed`.
pub fn synthesize(spec: &SynthSpec, grid: &SamplingGrid) -> Result<LoadProfileSet> {
    spec.distribution.validate()?;
    if spec.meters == 0 {
        return Err(invalid("synthesis needs at least one meter"));
    }
    if grid.slots < 2 {
        return Err(invalid("synthesis needs at least two samples"));
    }
    let timestamps = (0..grid.slots).map(|k| grid.time_of(k)).collect();
    let series = (0..spec.meters)
        .map(|m| {
            let mut rng = Stream::seed_from_u64(derive_seed(&[
                spec.seed,
                SYNTH_STREAM_TAG,
                m as u64,
            ]));
            match spec.distribution {
                DemandDistribution::Weibull { shape, scale } => {
                    let d = Weibull::new(scale, shape).expect("validated");
                    d.sample_iter(&mut rng).take(grid.slots).collect()
                }
                DemandDistribution::LogNormal { mu, sigma } => {
                    let d = LogNormal::new(mu, sigma).expect("validated");
                    d.sample_iter(&mut rng).take(grid.slots).collect()
                }
            }
        })
        .collect();
    LoadProfileSet::new(timestamps, series)
}
