//! Parameter sweeps over thresholds, channel noise and rules.
//!
//! Each grid point draws its randomness from a seed derived from the master
//! seed and the point's own values, never its position. Evaluating a subset
//! of a grid therefore reproduces the original rows exactly.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, ChannelSpec};
use crate::error::{check_prob, invalid, Error, Result};
use crate::exact::exact_error_with;
use crate::montecarlo::estimate_with;
use crate::network::FusionNetwork;
use crate::par::Execution;
use crate::profiles::{encode_states, AveragedDemand};
use crate::rules::DecisionRule;
use crate::topology::NetworkTopology;

pub const CSV_HEADER: &str =
    "rule_agg,rule_op,gamma_W,p_th_W,p1,p2,method,snapshots,seed,p_er_mean,p_er_std_err";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo { snapshots: u64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo { .. } => "montecarlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub rule_agg: DecisionRule,
    pub rule_op: DecisionRule,
    pub gamma_w: f64,
    pub p_th_w: f64,
    pub p1: f64,
    pub p2: f64,
}

impl GridPoint {
    /// Master seed for this point's substreams. Rules are not part of the
    /// key, so every rule at the same thresholds and channels sees the same
    /// channel realizations.
    pub fn stream_seed(&self, master_seed: u64) -> u64 {
        derive_seed(&[
            master_seed,
            self.gamma_w.to_bits(),
            self.p_th_w.to_bits(),
            self.p1.to_bits(),
            self.p2.to_bits(),
        ])
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}/{}, gamma={} W, P_th={} W, p1={}, p2={})",
            self.rule_agg, self.rule_op, self.gamma_w, self.p_th_w, self.p1, self.p2
        )
    }
}

/// One result row: the grid point plus its error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub point: GridPoint,
    pub method: Method,
    /// Master seed; absent for exact results.
    pub seed: Option<u64>,
    pub p_er_mean: f64,
    pub p_er_std_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelAxis {
    /// Every combination of `p1` and `p2`.
    Cartesian { p1: Vec<f64>, p2: Vec<f64> },
    /// `p1 = p2 = p` for each listed `p`.
    Linked(Vec<f64>),
}

impl ChannelAxis {
    fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            ChannelAxis::Cartesian { p1, p2 } => p1
                .iter()
                .flat_map(|&a| p2.iter().map(move |&b| (a, b)))
                .collect(),
            ChannelAxis::Linked(p) => p.iter().map(|&x| (x, x)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub gammas_w: Vec<f64>,
    pub p_ths_w: Vec<f64>,
    pub channels: ChannelAxis,
    pub rules: Vec<(DecisionRule, DecisionRule)>,
    pub method: Method,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(format!("sweep axis `{name}` is empty")));
    }
    for (i, a) in values.iter().enumerate() {
        if values[..i].contains(a) {
            return Err(invalid(format!("sweep axis `{name}` repeats {a}")));
        }
    }
    Ok(())
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        check_axis("gamma", &self.gammas_w)?;
        check_axis("p_th", &self.p_ths_w)?;
        match &self.channels {
            ChannelAxis::Cartesian { p1, p2 } => {
                check_axis("p1", p1)?;
                check_axis("p2", p2)?;
            }
            ChannelAxis::Linked(p) => check_axis("p", p)?,
        }
        for (p1, p2) in self.channels.pairs() {
            check_prob("p1", p1)?;
            check_prob("p2", p2)?;
        }
        if self.rules.is_empty() {
            return Err(invalid("sweep has no rules"));
        }
        for (i, r) in self.rules.iter().enumerate() {
            if self.rules[..i].contains(r) {
                return Err(invalid(format!("sweep repeats rule pair {}/{}", r.0, r.1)));
            }
        }
        if let Method::MonteCarlo { snapshots: 0 } = self.method {
            return Err(invalid("need at least one snapshot"));
        }
        Ok(())
    }

    /// Grid points in emission order: rule pair, then gamma, then P_th,
    /// then channel pair.
    pub fn points(&self) -> Vec<GridPoint> {
        let channels = self.channels.pairs();
        let mut out = Vec::new();
        for &(rule_agg, rule_op) in &self.rules {
            for &gamma_w in &self.gammas_w {
                for &p_th_w in &self.p_ths_w {
                    for &(p1, p2) in &channels {
                        out.push(GridPoint {
                            rule_agg,
                            rule_op,
                            gamma_w,
                            p_th_w,
                            p1,
                            p2,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Encode, build the network, and evaluate a single grid point.
pub fn evaluate_point(
    demand: &AveragedDemand,
    topology: &NetworkTopology,
    point: &GridPoint,
    method: Method,
    master_seed: u64,
    exec: Execution,
) -> Result<ErrorReport> {
    let states = encode_states(demand, point.gamma_w, point.p_th_w)?;
    let net = FusionNetwork::new(
        topology.clone(),
        ChannelSpec::new(point.p1, point.p2)?,
        point.rule_agg,
        point.rule_op,
    )?;
    match method {
        Method::Exact => {
            let r = exact_error_with(&net, &states, exec)?;
            Ok(ErrorReport {
                point: *point,
                method,
                seed: None,
                p_er_mean: r.p_er,
                p_er_std_err: 0.0,
            })
        }
        Method::MonteCarlo { snapshots } => {
            let r = estimate_with(
                &net,
                &states,
                snapshots,
                point.stream_seed(master_seed),
                exec,
            )?;
            Ok(ErrorReport {
                point: *point,
                method,
                seed: Some(master_seed),
                p_er_mean: r.p_er_mean,
                p_er_std_err: r.p_er_std_err,
            })
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResultTable {
    pub rows: Vec<ErrorReport>,
}

pub fn run_sweep(
    demand: &AveragedDemand,
    topology: &NetworkTopology,
    grid: &SweepGrid,
    master_seed: u64,
) -> Result<SweepResultTable> {
    run_sweep_with(demand, topology, grid, master_seed, Execution::default())
}

pub fn run_sweep_with(
    demand: &AveragedDemand,
    topology: &NetworkTopology,
    grid: &SweepGrid,
    master_seed: u64,
    exec: Execution,
) -> Result<SweepResultTable> {
    grid.validate()?;
    let points = grid.points();
    log::info!("sweeping {} grid points ({})", points.len(), grid.method.name());
    let rows = exec.map(points.len(), |k| {
        let p = &points[k];
        evaluate_point(demand, topology, p, grid.method, master_seed, exec)
            .map_err(|e| invalid(format!("at grid point {p}: {e}")))
    });
    Ok(SweepResultTable {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            _ => Err(invalid(format!("unknown output format {s:?} (csv, json-lines)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "json-lines",
        })
    }
}

/// Decimal text with 12 significant digits, e.g. `0.333333333333`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    // the scientific form settles the exponent after rounding
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    rule_agg: String,
    rule_op: String,
    #[serde(rename = "gamma_W")]
    gamma_w: f64,
    #[serde(rename = "p_th_W")]
    p_th_w: f64,
    p1: f64,
    p2: f64,
    method: String,
    snapshots: Option<u64>,
    seed: Option<u64>,
    p_er_mean: f64,
    p_er_std_err: f64,
}

fn rounded(x: f64) -> f64 {
    format_sig12(x).parse().unwrap()
}

fn snapshots_of(m: Method) -> Option<u64> {
    match m {
        Method::Exact => None,
        Method::MonteCarlo { snapshots } => Some(snapshots),
    }
}

pub fn emit(table: &SweepResultTable, format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &table.rows {
                let p = &r.point;
                let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    p.rule_agg,
                    p.rule_op,
                    p.gamma_w,
                    p.p_th_w,
                    p.p1,
                    p.p2,
                    r.method.name(),
                    opt(snapshots_of(r.method)),
                    opt(r.seed),
                    format_sig12(r.p_er_mean),
                    format_sig12(r.p_er_std_err),
                )
                .unwrap();
            }
        }
        OutputFormat::JsonLines => {
            for r in &table.rows {
                let p = &r.point;
                let row = JsonRow {
                    rule_agg: p.rule_agg.to_string(),
                    rule_op: p.rule_op.to_string(),
                    gamma_w: p.gamma_w,
                    p_th_w: p.p_th_w,
                    p1: p.p1,
                    p2: p.p2,
                    method: r.method.name().into(),
                    snapshots: snapshots_of(r.method),
                    seed: r.seed,
                    p_er_mean: rounded(r.p_er_mean),
                    p_er_std_err: rounded(r.p_er_std_err),
                };
                out.push_str(&serde_json::to_string(&row).unwrap());
                out.push('\n');
            }
        }
    }
    out
}

/// Read back a CSV produced by [`emit`]. `#` lines are ignored.
pub fn parse_table(text: &str) -> Result<SweepResultTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        row: 1,
        msg: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse {
            row: 1,
            msg: format!("unexpected header; expected `{CSV_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let fail = |field: &str| Error::Parse {
            row,
            msg: format!("bad value for `{field}`"),
        };
        let num = |i: usize, name: &str| record[i].parse::<f64>().map_err(|_| fail(name));
        let opt = |i: usize, name: &str| -> Result<Option<u64>> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                record[i].parse().map(Some).map_err(|_| fail(name))
            }
        };
        let point = GridPoint {
            rule_agg: record[0].parse().map_err(|_| fail("rule_agg"))?,
            rule_op: record[1].parse().map_err(|_| fail("rule_op"))?,
            gamma_w: num(2, "gamma_W")?,
            p_th_w: num(3, "p_th_W")?,
            p1: num(4, "p1")?,
            p2: num(5, "p2")?,
        };
        let method = match (&record[6], opt(7, "snapshots")?) {
            ("exact", None) => Method::Exact,
            ("montecarlo", Some(snapshots)) => Method::MonteCarlo { snapshots },
            _ => return Err(fail("method")),
        };
        rows.push(ErrorReport {
            point,
            method,
            seed: opt(8, "seed")?,
            p_er_mean: num(9, "p_er_mean")?,
            p_er_std_err: num(10, "p_er_std_err")?,
        });
    }
    Ok(SweepResultTable { rows })
}
