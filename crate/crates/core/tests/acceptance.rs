//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if
//! any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use adhoc_sinr::coloring::{
    legal_colors, run_coloring, schedule_length, verify_ball_mass, verify_proximity, Coloring, ConstantProfile,
};
use adhoc_sinr::geometry::{
    generate_topology, line_spacing_for_hops, MetricPoint, MetricSpace, NetworkTopology, StationId, TopologyFamily,
};
use adhoc_sinr::harness::{
    check_reception_facts, fact_notransmit_suite, fact_sum_suite, fit_scaling, median, replay_trace, EventKind,
    ReceptionFact, RoundEngine, ScalingGroup, ScalingModel, Trace,
};
use adhoc_sinr::protocols::{
    run_consensus, run_leader_election, run_nos_broadcast, run_s_broadcast, RunOptions, RunSummary, WakeSchedule,
};
use adhoc_sinr::sinr::{resolve_round, SinrParams};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 0.5;

struct Verdict {
    pass: bool,
    detail: String,
}

/// Replays every kept trace; criterion 10 reads the totals.
#[derive(Default)]
struct Replays {
    traces: u64,
    rounds: u64,
    receptions: u64,
    mismatches: Vec<String>,
}

impl Replays {
    fn check(&mut self, label: &str, trace: &Trace, topology: &NetworkTopology, params: &SinrParams) {
        let r = replay_trace(trace.events(), topology, params).expect("replay runs");
        self.traces += 1;
        self.rounds += r.rounds_checked;
        self.receptions += r.receptions_checked;
        if let Some(round) = r.first_mismatch {
            self.mismatches.push(format!("{label} round {round}"));
        }
    }
}

fn params() -> SinrParams {
    SinrParams::default()
}

fn square(n: usize, seed: u64) -> NetworkTopology {
    let side = (n as f64 / 12.0).sqrt();
    generate_topology(TopologyFamily::UniformSquare { side }, n, EPS, seed).unwrap()
}

fn unit_line(n: usize, hops: usize) -> NetworkTopology {
    generate_topology(
        TopologyFamily::LineUniform {
            spacing: line_spacing_for_hops(EPS, hops),
        },
        n,
        EPS,
        0,
    )
    .unwrap()
}

fn tuned(t: &NetworkTopology) -> ConstantProfile {
    ConstantProfile::tuned(&params(), t.space().growth_dimension(), t.len() as u64).unwrap()
}

fn options(budget: u64) -> RunOptions {
    RunOptions::with_budget(budget)
}

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

// 1. Round resolution against a direct evaluation of the reception rule.
fn brute_force(t: &NetworkTopology, params: &SinrParams, tx: &[StationId]) -> BTreeMap<StationId, StationId> {
    let power = |a: StationId, b: StationId| params.power * t.distance(a, b).powf(-params.alpha);
    let mut out = BTreeMap::new();
    for u in (0..t.len()).filter(|u| !tx.contains(u)) {
        for &v in tx {
            let interference: f64 = tx.iter().filter(|&&w| w != v).map(|&w| power(w, u)).sum();
            if power(v, u) / (params.noise + interference) >= params.beta {
                out.insert(u, v);
            }
        }
    }
    out
}

fn random_instance(rng: &mut ChaCha8Rng) -> (NetworkTopology, SinrParams) {
    loop {
        let n = rng.random_range(1..=12usize);
        let line = rng.random::<bool>();
        let (space, gamma) = if line {
            (MetricSpace::Line, 1.0)
        } else {
            (MetricSpace::Euclidean2, 2.0)
        };
        let side = rng.random_range(0.5..3.0);
        let points: Vec<MetricPoint> = (0..n)
            .map(|_| {
                if line {
                    MetricPoint::line(rng.random::<f64>() * side)
                } else {
                    MetricPoint::plane(rng.random::<f64>() * side, rng.random::<f64>() * side)
                }
            })
            .collect();
        let alpha = gamma + 0.5 + rng.random::<f64>() * 3.0;
        let beta = 1.0 + rng.random::<f64>() * 2.0;
        let noise = 0.1 + rng.random::<f64>();
        let params = SinrParams::normalized(alpha, beta, noise, EPS);
        if let Ok(t) = NetworkTopology::new(space, EPS, points) {
            if t.require_distinct_positions().is_ok() {
                return (t, params);
            }
        }
    }
}

fn criterion1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sets = 0u64;
    let mut mismatches = 0u64;
    for _ in 0..200 {
        let (t, params) = random_instance(&mut rng);
        let n = t.len();
        for mask in 0u32..1 << n {
            let tx: Vec<StationId> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let messages: BTreeMap<StationId, ()> = tx.iter().map(|&v| (v, ())).collect();
            let got: BTreeMap<StationId, StationId> = resolve_round(0, &tx, &messages, &params, &t)
                .unwrap()
                .received
                .into_iter()
                .map(|(u, (v, ()))| (u, v))
                .collect();
            sets += 1;
            if got != brute_force(&t, &params, &tx) {
                mismatches += 1;
            }
        }
    }
    Verdict {
        pass: mismatches == 0,
        detail: format!("200 topologies, {sets} transmit sets, {mismatches} mismatches"),
    }
}

// 2. Exact probability oracles.
fn criterion2() -> Verdict {
    let sum = fact_sum_suite(100_000, 2).unwrap();
    let none = fact_notransmit_suite(100_000, 2).unwrap();
    Verdict {
        pass: sum.passed() && none.passed() && sum.checked == 100_000 && none.checked == 100_000,
        detail: format!("{sum}; {none}"),
    }
}

// 3. Reception facts on hypothesis-satisfying instances.
fn criterion3() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for fact in ReceptionFact::ALL {
        let r = check_reception_facts(fact, 10_000, 3).unwrap();
        pass &= r.passed() && r.checked == 10_000;
        parts.push(format!(
            "{}: {} checked, {} counterexamples",
            r.fact, r.checked, r.counterexamples
        ));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

// 4. Coloring structure on small networks.
fn ladder(p_start: f64, p_max: f64) -> (u32, Vec<f64>) {
    let mut levels = 0;
    let mut colors = Vec::new();
    let mut p = p_start;
    while p < p_max {
        colors.push(p);
        p *= 2.0;
        levels += 1;
    }
    colors.push(2.0 * p_max);
    (levels, colors)
}

fn structural_run(
    t: &NetworkTopology,
    profile: &ConstantProfile,
    seed: u64,
    replays: &mut Replays,
) -> Result<(), String> {
    let n = t.len();
    let schedule = schedule_length(profile, n as u64);
    let (levels, colors) = ladder(profile.p_start, profile.p_max);
    if schedule.levels != levels {
        return Err(format!("n={n}: {} levels, ladder has {levels}", schedule.levels));
    }
    if legal_colors(profile, &schedule) != colors {
        return Err(format!("n={n}: legal color set differs from the ladder"));
    }
    if schedule.total != u64::from(levels) * schedule.level_len {
        return Err(format!(
            "n={n}: schedule total {} is not levels x level length",
            schedule.total
        ));
    }
    let all: Vec<StationId> = (0..n).collect();
    let mut hashes = Vec::new();
    let mut first: Option<(Coloring, Trace)> = None;
    for _ in 0..5 {
        let mut engine = RoundEngine::new(t, &params(), seed, true).unwrap();
        let coloring = run_coloring(&mut engine, &all, profile).map_err(|e| e.to_string())?;
        if engine.round() != schedule.total {
            return Err(format!(
                "n={n}: ran {} rounds, schedule says {}",
                engine.round(),
                schedule.total
            ));
        }
        let trace = engine.into_trace();
        hashes.push(trace.hash());
        first.get_or_insert((coloring, trace));
    }
    if hashes.iter().any(|&h| h != hashes[0]) {
        return Err(format!("n={n} seed={seed}: trace hashes differ across reruns"));
    }
    let (coloring, trace) = first.unwrap();
    if coloring.len() != n || coloring.values().any(|c| !colors.contains(c)) {
        return Err(format!("n={n}: a station holds no color or an illegal one"));
    }
    let mut quits = vec![0u32; n];
    for e in trace.events() {
        if e.round >= schedule.total.max(1) {
            return Err(format!("n={n}: event at round {} past the schedule", e.round));
        }
        if e.kind == EventKind::QuitColor {
            quits[e.station] += 1;
            if coloring[&e.station] != e.detail1 {
                return Err(format!("n={n}: quit-color event disagrees with the final color"));
            }
        }
    }
    if quits.iter().any(|&q| q > 1) {
        return Err(format!("n={n}: a station quit twice"));
    }
    replays.check("coloring", &trace, t, &params());
    Ok(())
}

fn criterion4(replays: &mut Replays) -> Verdict {
    let mut runs = 0;
    let mut failure = None;
    for n in 1..=8usize {
        let families = [
            TopologyFamily::LineUniform {
                spacing: line_spacing_for_hops(EPS, 1),
            },
            TopologyFamily::UniformSquare { side: 0.6 },
            TopologyFamily::Grid { spacing: 0.3 },
        ];
        for family in families {
            let t = generate_topology(family, n, EPS, n as u64).unwrap();
            let profile = ConstantProfile::theory(&params(), t.space().growth_dimension(), n as u64).unwrap();
            for seed in 0..3 {
                runs += 1;
                if let Err(e) = structural_run(&t, &profile, seed, replays) {
                    failure.get_or_insert(format!("theory {e}"));
                }
            }
        }
    }
    // the same checks where the doubling ladder is not empty
    let t = square(200, 11);
    let profile = tuned(&t);
    let levels = schedule_length(&profile, 200).levels;
    for seed in 0..2 {
        runs += 1;
        if let Err(e) = structural_run(&t, &profile, seed, replays) {
            failure.get_or_insert(format!("tuned {e}"));
        }
    }
    Verdict {
        pass: failure.is_none() && levels >= 1,
        detail: match failure {
            None => format!("{runs} runs (theory n<=8, tuned n=200 with {levels} levels), 5 reruns each"),
            Some(e) => e,
        },
    }
}

// 5. Coloring verifiers on the tuned profile.
fn criterion5(replays: &mut Replays) -> Verdict {
    let mut worst = 1.0f64;
    let mut cells = Vec::new();
    for family in ["square", "line"] {
        for n in [50usize, 100, 200, 400] {
            let mut both = 0;
            for seed in 0..20u64 {
                let t = if family == "square" {
                    square(n, seed)
                } else {
                    unit_line(n, 3)
                };
                let profile = tuned(&t);
                let mut engine = RoundEngine::new(&t, &params(), seed, true).unwrap();
                let all: Vec<StationId> = (0..n).collect();
                let q = run_coloring(&mut engine, &all, &profile).unwrap();
                let l1 = verify_ball_mass(&q, &t, profile.ball_mass_cap).pass;
                let l2 = verify_proximity(&q, &t, profile.epsilon, profile.proximity_threshold()).pass;
                both += usize::from(l1 && l2);
                replays.check("coloring", &engine.into_trace(), &t, &params());
            }
            worst = worst.min(rate(both, 20));
            cells.push(format!("{family}{n}:{both}/20"));
        }
    }
    Verdict {
        pass: worst >= 0.95,
        detail: format!("min pass rate {worst:.2}; {}", cells.join(" ")),
    }
}

// 6. Broadcast completion within four times the calibrated budgets.
type Runner = fn(
    &NetworkTopology,
    &SinrParams,
    &ConstantProfile,
    StationId,
    u64,
    &RunOptions,
) -> adhoc_sinr::Result<(RunSummary, Trace)>;

fn criterion6(replays: &mut Replays) -> Verdict {
    let topologies = [
        ("square100", square(100, 1)),
        ("square200", square(200, 1)),
        ("line97", unit_line(97, 3)),
    ];
    let mut worst = 1.0f64;
    let mut parts = Vec::new();
    for (name, t) in &topologies {
        let profile = tuned(t);
        let d = t.diameter().unwrap();
        let runners: [(&str, Runner, u64); 2] = [
            ("sb", run_s_broadcast, 4 * profile.sb_round_budget(d)),
            ("nos", run_nos_broadcast, 4 * profile.nos_round_budget(d)),
        ];
        for (label, run, budget) in runners {
            let mut ok = 0;
            for seed in 0..100 {
                let (s, trace) = run(t, &params(), &profile, 0, seed, &options(budget)).unwrap();
                ok += usize::from(s.completion_rounds.is_some_and(|c| c <= budget));
                replays.check(label, &trace, t, &params());
            }
            worst = worst.min(rate(ok, 100));
            parts.push(format!("{name}(D={d}) {label} {ok}/100 within {budget}"));
        }
    }
    Verdict {
        pass: worst >= 0.95,
        detail: parts.join("; "),
    }
}

// 7. Broadcast time does not depend on granularity.
fn criterion7(replays: &mut Replays) -> Verdict {
    let mut worst = 1.0f64;
    let mut parts = Vec::new();
    for n in [20usize, 30, 40] {
        let geometric = generate_topology(TopologyFamily::LineGeometric, n, EPS, 0).unwrap();
        let d = geometric.diameter().unwrap() as usize;
        let unit = unit_line(n, (n - 1).div_ceil(d));
        assert_eq!(unit.diameter(), geometric.diameter());
        let mut medians = Vec::new();
        for t in [&geometric, &unit] {
            let profile = tuned(t);
            let completions: Vec<u64> = (0..50)
                .map(|seed| {
                    let (s, trace) = run_s_broadcast(t, &params(), &profile, 0, seed, &options(1_000_000)).unwrap();
                    replays.check("granularity", &trace, t, &params());
                    s.completion_rounds.unwrap_or(u64::MAX)
                })
                .collect();
            medians.push(median(&completions).unwrap().max(1.0));
        }
        let ratio = medians[0].max(medians[1]) / medians[0].min(medians[1]);
        worst = worst.max(ratio);
        parts.push(format!(
            "n={n} D={d} granularity {:.1e}: medians {} vs {}",
            geometric.granularity(),
            medians[0],
            medians[1]
        ));
    }
    Verdict {
        pass: worst <= 2.0,
        detail: format!("max ratio {worst:.2}; {}", parts.join("; ")),
    }
}

// 8. Leave-one-out stability of the scaling fits.
fn criterion8(replays: &mut Replays) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    let runners: [(&str, Runner, ScalingModel); 2] = [
        ("sb", run_s_broadcast, ScalingModel::Spontaneous),
        ("nos", run_nos_broadcast, ScalingModel::NonSpontaneous),
    ];
    for (label, run, model) in runners {
        let mut groups = Vec::new();
        for d in [4u32, 8, 16, 32] {
            let n = 3 * d as usize + 1;
            let t = unit_line(n, 3);
            let profile = tuned(&t);
            let summaries: Vec<RunSummary> = (0..30)
                .map(|seed| {
                    let (s, trace) = run(&t, &params(), &profile, 0, seed, &options(1_000_000)).unwrap();
                    replays.check("scaling", &trace, &t, &params());
                    s
                })
                .collect();
            groups.push(ScalingGroup::from_summaries(d, n as u64, &summaries));
        }
        let fit = fit_scaling(&groups, model).unwrap();
        let spread = fit.loo_spread();
        pass &= spread <= 2.0;
        parts.push(format!(
            "{label}: coefficient {:.3}, R^2 {:.3}, leave-one-out spread {spread:.3}",
            fit.coefficient, fit.r_squared
        ));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

// 9. Consensus outputs and leader uniqueness.
fn criterion9(replays: &mut Replays) -> Verdict {
    let n = 30;
    let t = square(n, 3);
    let profile = tuned(&t);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut completed, mut correct) = (0, 0);
    for i in 0..500u64 {
        let x = [1u64, 7, 255][(i % 3) as usize];
        let values: Vec<u64> = (0..n).map(|_| rng.random_range(0..=x)).collect();
        let sched = WakeSchedule::simultaneous(n, 0);
        let (s, trace) = run_consensus(&t, &params(), &profile, &values, x, &sched, i, &options(10_000_000)).unwrap();
        if s.extra_value("complete") == Some("true") {
            completed += 1;
            let min = values.iter().min().unwrap().to_string();
            let outputs = s.extra_value("outputs").unwrap_or("");
            correct += usize::from(outputs.split(' ').all(|o| o == min));
        }
        replays.check("consensus", &trace, &t, &params());
    }
    let mut unique = 0;
    let elections = 10_000;
    for seed in 0..elections as u64 {
        let (s, trace) = run_leader_election(&t, &params(), &profile, seed, 1, &options(10_000_000)).unwrap();
        unique += usize::from(s.extra_value("first_attempt_unique") == Some("true"));
        if seed % 100 == 0 {
            replays.check("leader", &trace, &t, &params());
        }
    }
    let unique_rate = rate(unique, elections);
    let floor = 1.0 - 3.0 / (2.0 * n as f64);
    // Wilson 95% lower bound, reported alongside the point estimate
    let z = 1.96f64;
    let m = elections as f64;
    let centre = unique_rate + z * z / (2.0 * m);
    let spread = z * (unique_rate * (1.0 - unique_rate) / m + z * z / (4.0 * m * m)).sqrt();
    let lower = (centre - spread) / (1.0 + z * z / m);
    Verdict {
        pass: completed > 0 && correct == completed && unique_rate >= floor,
        detail: format!(
            "consensus {correct}/{completed} completed runs correct (of 500); unique leader {unique}/{elections} = {unique_rate:.4} (95% lower {lower:.4}) vs floor {floor:.4}"
        ),
    }
}

fn main() -> ExitCode {
    let mut replays = Replays::default();
    type Step<'a> = Box<dyn FnOnce(&mut Replays) -> Verdict + 'a>;
    let steps: Vec<(u32, &str, Option<Duration>, Step)> = vec![
        (
            1,
            "SINR oracle equivalence",
            Some(Duration::from_secs(60)),
            Box::new(|_: &mut Replays| criterion1()),
        ),
        (
            2,
            "probability fact oracles",
            Some(Duration::from_secs(10)),
            Box::new(|_: &mut Replays| criterion2()),
        ),
        (
            3,
            "reception facts",
            Some(Duration::from_secs(60)),
            Box::new(|_: &mut Replays| criterion3()),
        ),
        (4, "coloring structure", None, Box::new(criterion4)),
        (
            5,
            "coloring verifiers",
            Some(Duration::from_secs(600)),
            Box::new(criterion5),
        ),
        (
            6,
            "broadcast budgets",
            Some(Duration::from_secs(900)),
            Box::new(criterion6),
        ),
        (7, "granularity independence", None, Box::new(criterion7)),
        (8, "scaling regression", None, Box::new(criterion8)),
        (9, "consensus and leader election", None, Box::new(criterion9)),
    ];
    let mut all = true;
    for (id, name, limit, step) in steps {
        let start = Instant::now();
        let v = step(&mut replays);
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = v.pass && in_time;
        all &= pass;
        let limit = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
        println!(
            "criterion {id:>2} [{name}]: {} ({}; {:.1}s{limit})",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    let pass = replays.mismatches.is_empty() && replays.traces > 0;
    all &= pass;
    println!(
        "criterion 10 [trace replay]: {} ({} traces, {} rounds, {} receptions re-resolved, {} mismatches{})",
        if pass { "PASS" } else { "FAIL" },
        replays.traces,
        replays.rounds,
        replays.receptions,
        replays.mismatches.len(),
        replays
            .mismatches
            .first()
            .map_or(String::new(), |m| format!(", first at {m}"))
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
