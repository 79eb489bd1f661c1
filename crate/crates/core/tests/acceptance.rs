//! Acceptance criteria. Runs as a plain binary (no libtest harness) and
//! prints one PASS/FAIL line per criterion; exits nonzero if any fails.

use std::time::{Duration, Instant};

use meterfuse::cli::main_with;
use meterfuse::exact::{brute_force_slot, exact_error, slot_distribution};
use meterfuse::montecarlo::{average_error, estimate, simulate_snapshot};
use meterfuse::profiles::{encode_states, parse_profiles, window_average, AveragedDemand};
use meterfuse::rules::{resolve, DecisionRule, RuleOutcome};
use meterfuse::sweep::{run_sweep, ChannelAxis, Method, SweepGrid};
use meterfuse::{ChannelSpec, FusionNetwork, NetworkTopology, SamplingGrid, StateMatrix};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use DecisionRule::{And, Majority, Or};

const BUNDLED_DAY: &str = include_str!("../data/synthetic_day.csv");

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bundled_demand() -> (AveragedDemand, NetworkTopology) {
    let topo = NetworkTopology::uniform(3, 4).unwrap();
    let profiles = parse_profiles(BUNDLED_DAY, &topo).unwrap();
    let grid = profiles.default_grid(900).unwrap();
    (window_average(&profiles, &grid).unwrap(), topo)
}

fn net(topo: &NetworkTopology, p1: f64, p2: f64, agg: DecisionRule, op: DecisionRule) -> FusionNetwork {
    FusionNetwork::new(topo.clone(), ChannelSpec::new(p1, p2).unwrap(), agg, op).unwrap()
}

/// 1. Six aggregate demands against P_th = 7500 W, then the error rate of
/// the given decisions.
fn table_one() -> Outcome {
    let totals = vec![3956.0, 7843.0, 11373.0, 7005.0, 7897.0, 6353.0];
    let demand =
        AveragedDemand::from_values(vec![totals], SamplingGrid::new(0, 900, 6).unwrap()).unwrap();
    let states = encode_states(&demand, 0.0, 7500.0).unwrap();
    let expected_s = [false, true, true, false, true, false];
    ensure(states.truth() == expected_s, || {
        format!("s = {:?}", states.truth())
    })?;
    let theta = [false, true, false, false, true, true];
    let p_er = average_error(&theta, states.truth()).unwrap();
    ensure(p_er == 1.0 / 3.0, || format!("P_er = {p_er}"))?;
    Ok(format!("s = [0,1,1,0,1,0], P_er = {p_er}"))
}

fn random_rule(rng: &mut impl Rng, inputs: usize) -> DecisionRule {
    match rng.random_range(0..4) {
        0 => And,
        1 => Or,
        2 => Majority,
        _ => DecisionRule::KOutOfN(rng.random_range(1..=inputs)),
    }
}

/// 2. Poisson-binomial composition against full enumeration.
fn exact_vs_enumeration() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(1..=3);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=4)).collect();
        let topo = NetworkTopology::new(sizes.clone()).unwrap();
        let min_n = *sizes.iter().min().unwrap();
        let n = net(
            &topo,
            rng.random_range(0.0..=0.5),
            rng.random_range(0.0..=0.5),
            random_rule(&mut rng, min_n),
            random_rule(&mut rng, k),
        );
        let bits = (0..topo.total_meters()).map(|_| rng.random()).collect();
        let states = StateMatrix::from_bits(vec![bits], vec![rng.random()]).unwrap();
        let a = slot_distribution(&n, &states, 0).unwrap().p_theta_one;
        let b = brute_force_slot(&n, &states, 0).unwrap();
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-12, || format!("max |diff| = {worst:e}"))?;
    Ok(format!("200 instances, max |diff| = {worst:.2e}"))
}

/// 3. Monte Carlo at 10^5 snapshots within 4 standard errors of exact.
fn monte_carlo_consistency() -> Outcome {
    let (demand, topo) = bundled_demand();
    let states = encode_states(&demand, 600.0, 7500.0).unwrap();
    let mut summary = Vec::new();
    for rule in [And, Or, Majority] {
        let n = net(&topo, 0.2, 0.1, rule, rule);
        let exact = exact_error(&n, &states).unwrap().p_er;
        let mc = estimate(&n, &states, 100_000, 31).unwrap();
        let z = (mc.p_er_mean - exact).abs() / mc.p_er_std_err;
        ensure(z <= 4.0, || {
            format!(
                "{rule}: mc {} ± {} vs exact {exact} (z = {z:.2})",
                mc.p_er_mean, mc.p_er_std_err
            )
        })?;
        summary.push(format!("{rule} z={z:.2}"));
    }
    Ok(summary.join(", "))
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

/// 4. Qualitative trends on the bundled day with the exact evaluator.
fn qualitative_trends() -> Outcome {
    let (demand, topo) = bundled_demand();
    let gammas: Vec<f64> = (1..=10).map(|k| k as f64 * 100.0).collect();
    let p_er = |p_th: f64| -> Vec<Vec<f64>> {
        let grid = SweepGrid {
            gammas_w: gammas.clone(),
            p_ths_w: vec![p_th],
            channels: ChannelAxis::Cartesian {
                p1: vec![0.2],
                p2: vec![0.1],
            },
            rules: vec![(And, And), (Or, Or), (Majority, Majority)],
            method: Method::Exact,
        };
        let table = run_sweep(&demand, &topo, &grid, 0).unwrap();
        table
            .rows
            .chunks(gammas.len())
            .map(|c| c.iter().map(|r| r.p_er_mean).collect())
            .collect()
    };
    let s_ones = |p_th: f64| {
        encode_states(&demand, 600.0, p_th)
            .unwrap()
            .truth()
            .iter()
            .filter(|&&b| b)
            .count()
    };
    let (low, high) = (5000.0, 12500.0);
    let slots = demand.slots();
    ensure(s_ones(low) * 4 >= slots * 3 && s_ones(high) * 4 <= slots, || {
        format!("dataset: s=1 in {} / {} slots (low / high P_th)", s_ones(low), s_ones(high))
    })?;

    let at_low = p_er(low);
    let at_high = p_er(high);
    for (g, gamma) in gammas.iter().enumerate() {
        let (and, or, maj) = (at_low[0][g], at_low[1][g], at_low[2][g]);
        ensure(or < and && or < maj, || {
            format!("(a) low P_th, gamma={gamma}: AND {and} OR {or} MAJ {maj}")
        })?;
        let (and, or, maj) = (at_high[0][g], at_high[1][g], at_high[2][g]);
        ensure(and < or && and < maj, || {
            format!("(b) high P_th, gamma={gamma}: AND {and} OR {or} MAJ {maj}")
        })?;
    }
    let mut spreads = Vec::new();
    for p_th in [low, 7500.0, high] {
        let curves = p_er(p_th);
        let (and, or, maj) = (spread(&curves[0]), spread(&curves[1]), spread(&curves[2]));
        ensure(maj > and && maj > or, || {
            format!("(c) P_th={p_th}: spreads AND {and} OR {or} MAJ {maj}")
        })?;
        spreads.push(format!("{}kW {and:.3}/{or:.3}/{maj:.3}", p_th / 1000.0));
    }
    Ok(format!(
        "OR best at 5 kW, AND best at 12.5 kW; spreads AND/OR/MAJ: {}",
        spreads.join(", ")
    ))
}

/// 5. Noiseless channels: zero Monte Carlo variance, mean equal to the
/// exact quantization-only error.
fn noiseless_endpoint() -> Outcome {
    let (demand, topo) = bundled_demand();
    let first_nine = AveragedDemand::from_values(
        (0..9).map(|m| demand.meter(m).to_vec()).collect(),
        *demand.grid(),
    )
    .unwrap();
    let odd_topo = NetworkTopology::uniform(3, 3).unwrap();
    let cases = [
        (&demand, &topo, And),
        (&demand, &topo, Or),
        (&first_nine, &odd_topo, Majority),
    ];
    let mut summary = Vec::new();
    for (d, t, rule) in cases {
        let states = encode_states(d, 600.0, 7500.0 * d.meters() as f64 / 12.0).unwrap();
        let n = net(t, 0.0, 0.0, rule, rule);
        let exact = exact_error(&n, &states).unwrap().p_er;
        let mc = estimate(&n, &states, 1000, 5).unwrap();
        ensure(mc.p_er_std_err == 0.0 && mc.p_er_mean == exact, || {
            format!("{rule}: mc {} ± {} vs exact {exact}", mc.p_er_mean, mc.p_er_std_err)
        })?;
        summary.push(format!("{rule} {exact:.4}"));
    }
    Ok(format!("quantization-only P_er: {}", summary.join(", ")))
}

/// 6. k-out-of-n degenerate cases and the AND <= MAJORITY <= OR ordering.
fn rule_equivalences() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
    for trial in 0..100 {
        let m = rng.random_range(1..=12);
        let bits: Vec<bool> = (0..m).map(|_| rng.random()).collect();
        let k1 = DecisionRule::KOutOfN(1);
        let km = DecisionRule::KOutOfN(m);
        ensure(k1.evaluate(&bits).unwrap() == Or.evaluate(&bits).unwrap(), || {
            format!("sampled k=1 vs OR, trial {trial}")
        })?;
        ensure(km.evaluate(&bits).unwrap() == And.evaluate(&bits).unwrap(), || {
            format!("sampled k=m vs AND, trial {trial}")
        })?;
        let q: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        ensure(k1.output_one_prob(&q).unwrap() == Or.output_one_prob(&q).unwrap(), || {
            format!("exact k=1 vs OR, trial {trial}")
        })?;
        ensure(km.output_one_prob(&q).unwrap() == And.output_one_prob(&q).unwrap(), || {
            format!("exact k=m vs AND, trial {trial}")
        })?;
    }
    // full pipeline: same seed, same channel draws
    let topo = NetworkTopology::uniform(3, 4).unwrap();
    let bits = (0..10)
        .map(|_| (0..12).map(|_| rng.random()).collect())
        .collect();
    let states = StateMatrix::from_bits(bits, (0..10).map(|_| rng.random()).collect()).unwrap();
    let via_k = net(&topo, 0.2, 0.1, DecisionRule::KOutOfN(1), DecisionRule::KOutOfN(3));
    let direct = net(&topo, 0.2, 0.1, Or, And);
    for s in 0..20 {
        ensure(
            simulate_snapshot(&via_k, &states, s, 8).unwrap()
                == simulate_snapshot(&direct, &states, s, 8).unwrap(),
            || format!("pipeline k-out-of-n vs OR/AND differs at snapshot {s}"),
        )?;
    }
    for trial in 0..1000 {
        let m = rng.random_range(1..=16);
        let q: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let a = And.output_one_prob(&q).unwrap();
        let j = Majority.output_one_prob(&q).unwrap();
        let o = Or.output_one_prob(&q).unwrap();
        ensure(a <= j && j <= o, || format!("ordering trial {trial}: {a} {j} {o}"))?;
    }
    // tie coin sanity: resolve is the only source of tie randomness
    let mut coin = Xoshiro256PlusPlus::seed_from_u64(1);
    let ones = (0..1000).filter(|_| resolve(RuleOutcome::Tie, &mut coin)).count();
    ensure((400..=600).contains(&ones), || format!("tie coin gave {ones}/1000"))?;
    Ok("100 sampled + 100 exact equivalences, 1000 orderings".into())
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with(args.iter().copied(), &mut out, &mut err);
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err)));
    }
    Ok(String::from_utf8(out).unwrap())
}

/// 7. Sweep CSV is byte-identical across runs and thread counts.
fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("day.csv");
    std::fs::write(&input, BUNDLED_DAY).map_err(|e| e.to_string())?;
    let input = input.to_str().unwrap();
    let args = |threads: &'static str| {
        vec![
            "meterfuse", "sweep", "--input", input, "--gamma", "0.1:1.0:0.1", "--pth", "7.5",
            "--p1", "0.2", "--p2", "0.1", "--rule", "and,or,majority", "--method", "montecarlo",
            "--snapshots", "300", "--seed", "7", "--threads", threads,
        ]
    };
    let a = run_cli(&args("1"))?;
    let b = run_cli(&args("1"))?;
    let c = run_cli(&args("4"))?;
    ensure(a == b, || "two single-thread runs differ".into())?;
    ensure(a == c, || "1-thread and 4-thread runs differ".into())?;
    let rows = a.lines().filter(|l| !l.starts_with('#')).count() - 1;
    ensure(rows == 30, || format!("{rows} rows, expected 30"))?;
    Ok(format!("{rows} rows, {} bytes identical", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 7] = [
        ("1 table-one reproduction", table_one, Duration::from_millis(1)),
        ("2 exact vs enumeration", exact_vs_enumeration, Duration::from_secs(10)),
        ("3 monte carlo consistency", monte_carlo_consistency, Duration::from_secs(60)),
        ("4 qualitative trends", qualitative_trends, Duration::from_secs(30)),
        ("5 noiseless endpoint", noiseless_endpoint, Duration::from_secs(5)),
        ("6 rule equivalences", rule_equivalences, Duration::from_secs(5)),
        ("7 sweep determinism", sweep_determinism, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(msg) => println!("PASS  {name:<28} {elapsed:>10.2?}  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name:<28} {elapsed:>10.2?}  {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
