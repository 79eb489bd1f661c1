//! Command-line frontend.
//!
//! Flags and an optional TOML config file (`--config`) share one key space;
//! flags win. Every subcommand that evaluates something prints its fully
//! resolved configuration as `# key = value` lines, which can be fed back
//! as a config file to reproduce the run.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::DEFAULT_SEED;
use crate::error::Error;
use crate::par::Execution;
use crate::profiles::{
    encode_states, parse_profiles, synthesize, window_average, AveragedDemand,
    DemandDistribution, LoadProfileSet, SynthSpec,
};
use crate::rules::DecisionRule;
use crate::sweep::{
    emit, format_sig12, run_sweep_with, ChannelAxis, Method, OutputFormat, SweepGrid,
};
use crate::topology::{NetworkTopology, SamplingGrid};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(source) => CliError::Io {
                context: "I/O error".into(),
                source,
            },
            other => CliError::Validation(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "meterfuse", version, about = "Decision-error analysis for two-stage 1-bit smart-meter networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Window and encode profiles; print the state summary.
    Encode {
        #[command(flatten)]
        opts: Opts,
        /// Write the encoded state matrix as CSV.
        #[arg(long)]
        states_out: Option<PathBuf>,
        /// Write the windowed averages as CSV.
        #[arg(long)]
        demand_out: Option<PathBuf>,
    },
    /// Evaluate a single configuration.
    Run {
        #[command(flatten)]
        opts: Opts,
    },
    /// Evaluate a grid of configurations.
    Sweep {
        #[command(flatten)]
        opts: Opts,
    },
    /// Write synthetic profiles as input CSV.
    Synth {
        /// Number of meters.
        #[arg(long, default_value_t = 12)]
        meters: usize,
        /// Total duration in seconds.
        #[arg(long, default_value_t = 86_400)]
        duration: i64,
        /// Sample interval in seconds.
        #[arg(long, default_value_t = 60)]
        interval: i64,
        /// `weibull:SHAPE:SCALE` or `lognormal:MU:SIGMA`, powers in watts.
        #[arg(long, default_value_t = DemandDistribution::ILLUSTRATIVE.to_string())]
        dist: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Options shared by `encode`, `run` and `sweep`. Value-list options accept
/// `x`, `a,b,c` or `start:stop:step`.
#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// TOML config file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile CSV (`timestamp,m0,...`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthesize profiles instead of reading `--input`.
    #[arg(long)]
    synth: Option<String>,
    #[arg(long)]
    synth_seed: Option<u64>,
    /// Synthetic duration in seconds.
    #[arg(long)]
    duration: Option<i64>,
    /// Synthetic sample interval in seconds.
    #[arg(long)]
    interval: Option<i64>,
    /// Meters per aggregator, e.g. `4,4,4`.
    #[arg(long)]
    topology: Option<String>,
    /// Slot length in seconds.
    #[arg(long)]
    tau: Option<i64>,
    /// Individual threshold(s) in kW.
    #[arg(long)]
    gamma: Option<String>,
    /// System threshold(s) in kW.
    #[arg(long)]
    pth: Option<String>,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    /// Sets p1 = p2 = p.
    #[arg(long)]
    p: Option<String>,
    /// Aggregator rule(s): and, or, majority, k-out-of-n:K.
    #[arg(long)]
    rule: Option<String>,
    /// Operator rule(s); defaults to the aggregator rule.
    #[arg(long)]
    rule_op: Option<String>,
    /// exact or montecarlo.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    snapshots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json-lines.
    #[arg(long)]
    format: Option<String>,
}

fn toml_to_spec(key: &str, v: &toml::Value) -> CliResult<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Array(items) => Ok(items
            .iter()
            .map(|x| toml_to_spec(key, x))
            .collect::<CliResult<Vec<_>>>()?
            .join(",")),
        _ => Err(usage(format!("config key `{key}` has an unsupported value"))),
    }
}

fn toml_to_int<T: TryFrom<i64>>(key: &str, v: &toml::Value) -> CliResult<T> {
    v.as_integer()
        .and_then(|i| T::try_from(i).ok())
        .ok_or_else(|| usage(format!("config key `{key}` must be a non-negative integer")))
}

impl Opts {
    /// Fill unset options from the config file.
    fn merge_config(mut self) -> CliResult<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let flag_channels = self.p.is_some() || self.p1.is_some() || self.p2.is_some();
        for (key, v) in &table {
            let spec = || toml_to_spec(key, v);
            let path_of = || -> CliResult<PathBuf> {
                let p = PathBuf::from(spec()?);
                // relative paths in a config file resolve against its directory
                Ok(match path.parent() {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                })
            };
            match key.replace('-', "_").as_str() {
                "input" => {
                    if self.input.is_none() && self.synth.is_none() {
                        self.input = Some(path_of()?);
                    }
                }
                "synth" => {
                    if self.input.is_none() && self.synth.is_none() {
                        self.synth = Some(spec()?);
                    }
                }
                "synth_seed" => {
                    self.synth_seed = self.synth_seed.or(Some(toml_to_int(key, v)?))
                }
                "duration" => self.duration = self.duration.or(Some(toml_to_int(key, v)?)),
                "interval" => self.interval = self.interval.or(Some(toml_to_int(key, v)?)),
                "topology" | "aggregators" => {
                    self.topology = self.topology.take().or(Some(spec()?))
                }
                "tau" => self.tau = self.tau.or(Some(toml_to_int(key, v)?)),
                "gamma" => self.gamma = self.gamma.take().or(Some(spec()?)),
                "pth" | "p_th" => self.pth = self.pth.take().or(Some(spec()?)),
                "p" if !flag_channels => self.p = Some(spec()?),
                "p1" if !flag_channels => self.p1 = Some(spec()?),
                "p2" if !flag_channels => self.p2 = Some(spec()?),
                "p" | "p1" | "p2" => {}
                "rule" => self.rule = self.rule.take().or(Some(spec()?)),
                "rule_op" => self.rule_op = self.rule_op.take().or(Some(spec()?)),
                "method" => self.method = self.method.take().or(Some(spec()?)),
                "snapshots" => self.snapshots = self.snapshots.or(Some(toml_to_int(key, v)?)),
                "seed" => self.seed = self.seed.or(Some(toml_to_int(key, v)?)),
                "threads" => self.threads = self.threads.or(Some(toml_to_int(key, v)?)),
                "out" => {
                    if self.out.is_none() {
                        self.out = Some(path_of()?);
                    }
                }
                "format" => self.format = self.format.take().or(Some(spec()?)),
                other => return Err(usage(format!("unknown config key `{other}`"))),
            }
        }
        Ok(self)
    }
}

/// Parse `x`, `a,b,c` or `start:stop:step` (items may be mixed). A range
/// includes `start` and every `start + k*step` up to `stop`, with a small
/// tolerance so that a reachable `stop` is included despite rounding.
pub fn parse_values(spec: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad number {s:?} in {spec:?}"))
        };
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [a, b, c] => {
                let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                if step <= 0.0 || stop < start {
                    return Err(format!(
                        "range {item:?} needs step > 0 and stop >= start"
                    ));
                }
                let steps = ((stop - start) / step + 1e-9).floor();
                if steps > 1e6 {
                    return Err(format!("range {item:?} has too many points"));
                }
                for k in 0..=(steps as u64) {
                    let v = start + k as f64 * step;
                    // strip accumulated binary noise such as 0.30000000000000004
                    out.push(format_sig12(v).parse().unwrap());
                }
            }
            _ => return Err(format!("bad value list {spec:?}; use x, a,b,c or start:stop:step")),
        }
    }
    Ok(out)
}

fn kw_to_w(kw: f64) -> f64 {
    (kw * 1e9).round() / 1e6
}

fn parse_rules(spec: &str) -> CliResult<Vec<DecisionRule>> {
    spec.split(',')
        .map(|s| s.parse::<DecisionRule>().map_err(|e| usage(e.to_string())))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
enum Source {
    Input(PathBuf),
    Synth {
        dist: DemandDistribution,
        seed: u64,
        duration: i64,
        interval: i64,
    },
}

/// Fully resolved configuration of an `encode`, `run` or `sweep`.
#[derive(Clone, Debug)]
struct RunConfig {
    source: Source,
    topology: NetworkTopology,
    tau: i64,
    gamma_kw: Vec<f64>,
    pth_kw: Vec<f64>,
    channels: ChannelAxis,
    rules: Vec<DecisionRule>,
    rules_op: Option<Vec<DecisionRule>>,
    method: Method,
    seed: u64,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: OutputFormat,
}

fn list(spec: &Option<String>, default: &str, name: &str) -> CliResult<Vec<f64>> {
    parse_values(spec.as_deref().unwrap_or(default)).map_err(|e| usage(format!("--{name}: {e}")))
}

impl RunConfig {
    fn resolve(opts: Opts, default_rules: &str) -> CliResult<Self> {
        let opts = opts.merge_config()?;
        let source = match (&opts.input, &opts.synth) {
            (Some(_), Some(_)) => return Err(usage("give either --input or --synth, not both")),
            (Some(p), None) => Source::Input(p.clone()),
            (None, synth) => {
                let dist = match synth {
                    Some(s) => s.parse().map_err(|e: Error| usage(e.to_string()))?,
                    None => return Err(usage("no data: give --input FILE or --synth DIST")),
                };
                Source::Synth {
                    dist,
                    seed: opts.synth_seed.unwrap_or(1),
                    duration: opts.duration.unwrap_or(86_400),
                    interval: opts.interval.unwrap_or(60),
                }
            }
        };
        let sizes = opts
            .topology
            .as_deref()
            .unwrap_or("4,4,4")
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| usage("--topology must be a comma-separated list of meter counts"))?;
        let topology = NetworkTopology::new(sizes)?;

        let channels = if opts.p.is_some() {
            if opts.p1.is_some() || opts.p2.is_some() {
                return Err(usage("--p cannot be combined with --p1/--p2"));
            }
            ChannelAxis::Linked(list(&opts.p, "", "p")?)
        } else {
            ChannelAxis::Cartesian {
                p1: list(&opts.p1, "0.2", "p1")?,
                p2: list(&opts.p2, "0.1", "p2")?,
            }
        };
        let method = match opts.method.as_deref().unwrap_or("montecarlo") {
            "exact" => Method::Exact,
            "montecarlo" | "monte-carlo" | "mc" => Method::MonteCarlo {
                snapshots: opts.snapshots.unwrap_or(1000),
            },
            other => return Err(usage(format!("unknown method {other:?} (exact, montecarlo)"))),
        };
        let format = opts
            .format
            .as_deref()
            .unwrap_or("csv")
            .parse()
            .map_err(|e: Error| usage(e.to_string()))?;
        Ok(Self {
            source,
            topology,
            tau: opts.tau.unwrap_or(900),
            gamma_kw: list(&opts.gamma, "0.6", "gamma")?,
            pth_kw: list(&opts.pth, "7.5", "pth")?,
            channels,
            rules: parse_rules(opts.rule.as_deref().unwrap_or(default_rules))?,
            rules_op: opts.rule_op.as_deref().map(parse_rules).transpose()?,
            method,
            seed: opts.seed.unwrap_or(DEFAULT_SEED),
            threads: opts.threads,
            out: opts.out,
            format,
        })
    }

    fn grid(&self) -> SweepGrid {
        let rules = match &self.rules_op {
            None => self.rules.iter().map(|&r| (r, r)).collect(),
            Some(ops) => self
                .rules
                .iter()
                .flat_map(|&a| ops.iter().map(move |&o| (a, o)))
                .collect(),
        };
        SweepGrid {
            gammas_w: self.gamma_kw.iter().map(|&g| kw_to_w(g)).collect(),
            p_ths_w: self.pth_kw.iter().map(|&g| kw_to_w(g)).collect(),
            channels: self.channels.clone(),
            rules,
            method: self.method,
        }
    }

    /// `# key = value` lines; stripped of `# ` they form a config file.
    /// Thread count and output path are left out since they never affect
    /// the numbers.
    fn echo(&self, with_grid: bool) -> String {
        let floats = |v: &[f64]| {
            let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", items.join(", "))
        };
        let rules = |v: &[DecisionRule]| {
            let items: Vec<String> = v.iter().map(|r| format!("\"{r}\"")).collect();
            format!("[{}]", items.join(", "))
        };
        let mut out = String::new();
        match &self.source {
            Source::Input(p) => writeln!(out, "# input = {:?}", p.display().to_string()),
            Source::Synth {
                dist,
                seed,
                duration,
                interval,
            } => writeln!(
                out,
                "# synth = \"{dist}\"\n# synth_seed = {seed}\n# duration = {duration}\n# interval = {interval}"
            ),
        }
        .unwrap();
        let sizes: Vec<String> = self.topology.sizes().iter().map(|n| n.to_string()).collect();
        writeln!(out, "# aggregators = [{}]", sizes.join(", ")).unwrap();
        writeln!(out, "# tau = {}", self.tau).unwrap();
        writeln!(out, "# gamma = {}", floats(&self.gamma_kw)).unwrap();
        writeln!(out, "# pth = {}", floats(&self.pth_kw)).unwrap();
        if !with_grid {
            return out;
        }
        match &self.channels {
            ChannelAxis::Linked(p) => writeln!(out, "# p = {}", floats(p)),
            ChannelAxis::Cartesian { p1, p2 } => {
                writeln!(out, "# p1 = {}\n# p2 = {}", floats(p1), floats(p2))
            }
        }
        .unwrap();
        writeln!(out, "# rule = {}", rules(&self.rules)).unwrap();
        if let Some(ops) = &self.rules_op {
            writeln!(out, "# rule_op = {}", rules(ops)).unwrap();
        }
        writeln!(out, "# method = \"{}\"", self.method.name()).unwrap();
        if let Method::MonteCarlo { snapshots } = self.method {
            writeln!(out, "# snapshots = {snapshots}").unwrap();
        }
        writeln!(out, "# seed = {}", self.seed).unwrap();
        writeln!(out, "# format = \"{}\"", self.format).unwrap();
        out
    }

    fn load_profiles(&self) -> CliResult<LoadProfileSet> {
        match &self.source {
            Source::Input(path) => {
                let text = read(path)?;
                parse_profiles(&text, &self.topology)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
            }
            Source::Synth {
                dist,
                seed,
                duration,
                interval,
            } => {
                if *interval <= 0 || *duration < *interval {
                    return Err(usage("synthetic data needs interval > 0 and duration >= interval"));
                }
                let grid = SamplingGrid::new(0, *interval, (duration / interval) as usize)?;
                let spec = SynthSpec {
                    distribution: *dist,
                    meters: self.topology.total_meters(),
                    seed: *seed,
                };
                Ok(synthesize(&spec, &grid)?)
            }
        }
    }

    fn load_demand(&self) -> CliResult<AveragedDemand> {
        let profiles = self.load_profiles()?;
        let grid = profiles.default_grid(self.tau)?;
        Ok(window_average(&profiles, &grid)?)
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading {}", path.display()),
        source,
    })
}

fn write_to(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

fn deliver(
    out: &Option<PathBuf>,
    text: &str,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    match out {
        Some(path) => write_to(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            context: "writing stdout".into(),
            source,
        }),
    }
}

fn evaluate(
    cfg: &RunConfig,
    single: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let grid = cfg.grid();
    if single && grid.points().len() != 1 {
        return Err(usage(
            "`run` evaluates one configuration; give single values or use `sweep`",
        ));
    }
    let demand = cfg.load_demand()?;
    let table = with_threads(cfg.threads, || {
        run_sweep_with(&demand, &cfg.topology, &grid, cfg.seed, Execution::default())
    })??;
    let echo = cfg.echo(true);
    let body = emit(&table, cfg.format);
    let text = match cfg.format {
        OutputFormat::Csv => format!("{echo}{body}"),
        OutputFormat::JsonLines => {
            let _ = stderr.write_all(echo.as_bytes());
            body
        }
    };
    deliver(&cfg.out, &text, stdout)
}

fn encode(
    cfg: &RunConfig,
    states_out: Option<PathBuf>,
    demand_out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    if cfg.gamma_kw.len() != 1 || cfg.pth_kw.len() != 1 {
        return Err(usage("`encode` takes a single --gamma and --pth"));
    }
    let demand = cfg.load_demand()?;
    let states = encode_states(&demand, kw_to_w(cfg.gamma_kw[0]), kw_to_w(cfg.pth_kw[0]))?;
    let mut text = cfg.echo(false);
    let slots = states.slots();
    let s_bits: Vec<&str> = states.truth().iter().map(|&b| if b { "1" } else { "0" }).collect();
    writeln!(text, "n_max = {slots}").unwrap();
    writeln!(
        text,
        "s_ones = {}",
        states.truth().iter().filter(|&&b| b).count()
    )
    .unwrap();
    writeln!(text, "s = [{}]", s_bits.join(", ")).unwrap();
    let fractions: Vec<String> = (0..states.meters())
        .map(|m| {
            let ones = (0..slots).filter(|&n| states.meter_bit(m, n)).count();
            format_sig12(ones as f64 / slots as f64)
        })
        .collect();
    writeln!(text, "theta_one_fraction = [{}]", fractions.join(", ")).unwrap();
    if let Some(p) = states_out {
        write_to(&p, &states.to_csv(demand.grid()))?;
    }
    if let Some(p) = demand_out {
        write_to(&p, &demand.to_csv())?;
    }
    deliver(&cfg.out, &text, stdout)
}

fn synth(
    meters: usize,
    duration: i64,
    interval: i64,
    dist: &str,
    seed: u64,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let distribution: DemandDistribution = dist.parse().map_err(|e: Error| usage(e.to_string()))?;
    if interval <= 0 || duration < 2 * interval {
        return Err(usage("synth needs interval > 0 and at least two samples"));
    }
    let grid = SamplingGrid::new(0, interval, (duration / interval) as usize)?;
    let profiles = synthesize(
        &SynthSpec {
            distribution,
            meters,
            seed,
        },
        &grid,
    )?;
    let _ = writeln!(
        stderr,
        "# meters = {meters}\n# duration = {duration}\n# interval = {interval}\n# dist = \"{distribution}\"\n# seed = {seed}"
    );
    deliver(&out, &profiles.to_csv(), stdout)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Encode {
            opts,
            states_out,
            demand_out,
        } => encode(
            &RunConfig::resolve(opts, "majority")?,
            states_out,
            demand_out,
            stdout,
        ),
        Command::Run { opts } => evaluate(&RunConfig::resolve(opts, "majority")?, true, stdout, stderr),
        Command::Sweep { opts } => evaluate(
            &RunConfig::resolve(opts, "and,or,majority")?,
            false,
            stdout,
            stderr,
        ),
        Command::Synth {
            meters,
            duration,
            interval,
            dist,
            seed,
            out,
        } => synth(meters, duration, interval, &dist, seed, out, stdout, stderr),
    }
}

/// Run the CLI on `args` (including the program name) and return the exit
/// code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists_and_ranges() {
        assert_eq!(parse_values("0.6").unwrap(), vec![0.6]);
        assert_eq!(parse_values("5,7.5,12.5").unwrap(), vec![5.0, 7.5, 12.5]);
        let p = parse_values("0:0.5:0.05").unwrap();
        assert_eq!(p.len(), 11);
        assert_eq!(p[3], 0.15);
        assert_eq!(p[10], 0.5);
        let g = parse_values("0.1:1.0:0.1").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[9], 1.0);
        // stop not reachable: last point stays below it
        assert_eq!(parse_values("0:1:0.4").unwrap(), vec![0.0, 0.4, 0.8]);
        assert!(parse_values("0:1").is_err());
        assert!(parse_values("1:0:0.1").is_err());
        assert!(parse_values("0:1:0").is_err());
        assert!(parse_values("abc").is_err());
    }

    #[test]
    fn kilowatts_convert_cleanly() {
        assert_eq!(kw_to_w(0.3), 300.0);
        assert_eq!(kw_to_w(7.5), 7500.0);
        assert_eq!(kw_to_w(0.6), 600.0);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(
            &cfg,
            "synth = \"weibull:1.5:550\"\naggregators = [2, 2]\ngamma = 0.4\np = 0.3\nrule = \"or\"\nseed = 11\n",
        )
        .unwrap();
        let opts = Opts {
            config: Some(cfg),
            gamma: Some("0.5".into()),
            p1: Some("0.05".into()),
            ..Default::default()
        };
        let rc = RunConfig::resolve(opts, "majority").unwrap();
        assert_eq!(rc.gamma_kw, vec![0.5]);
        assert_eq!(rc.topology.sizes(), &[2, 2]);
        assert_eq!(rc.rules, vec![DecisionRule::Or]);
        assert_eq!(rc.seed, 11);
        assert_eq!(
            rc.channels,
            ChannelAxis::Cartesian {
                p1: vec![0.05],
                p2: vec![0.1]
            }
        );
    }

    #[test]
    fn unknown_config_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, "gamme = 0.4\n").unwrap();
        let opts = Opts {
            config: Some(cfg),
            ..Default::default()
        };
        let err = RunConfig::resolve(opts, "majority").unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }
}
