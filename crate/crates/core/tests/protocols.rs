use adhoc_sinr::coloring::{
    legal_colors, run_coloring, schedule_length, verify_ball_mass, verify_proximity, ConstantProfile,
};
use adhoc_sinr::geometry::{
    generate_topology, line_spacing_for_hops, MetricPoint, MetricSpace, NetworkTopology, StationId, TopologyFamily,
};
use adhoc_sinr::harness::{EventKind, RoundEngine};
use adhoc_sinr::protocols::*;
use adhoc_sinr::sinr::SinrParams;

fn params() -> SinrParams {
    SinrParams::default()
}

fn tuned(t: &NetworkTopology) -> ConstantProfile {
    ConstantProfile::tuned(&params(), t.space().growth_dimension(), t.len() as u64).unwrap()
}

fn line(xs: &[f64]) -> NetworkTopology {
    NetworkTopology::new(
        MetricSpace::Line,
        0.5,
        xs.iter().map(|&x| MetricPoint::line(x)).collect(),
    )
    .unwrap()
}

fn path(n: usize) -> NetworkTopology {
    generate_topology(
        TopologyFamily::LineUniform {
            spacing: line_spacing_for_hops(0.5, 1),
        },
        n,
        0.5,
        0,
    )
    .unwrap()
}

fn quiet(budget: u64) -> RunOptions {
    RunOptions {
        keep_events: false,
        ..RunOptions::with_budget(budget)
    }
}

fn phase_len(profile: &ConstantProfile) -> u64 {
    PhaseLayout::new(profile).phase_len()
}

#[test]
fn single_station_runs() {
    let t = line(&[0.0]);
    let p = tuned(&t);
    let opts = RunOptions::with_budget(1000);
    let (s, _) = run_nos_broadcast(&t, &params(), &p, 0, 1, &opts).unwrap();
    assert!(s.success);
    assert_eq!(s.completion_rounds, Some(0));
    assert_eq!(s.extra_value("phases"), Some("0"));
    let (s, _) = run_s_broadcast(&t, &params(), &p, 0, 1, &opts).unwrap();
    assert!(s.success);
    assert_eq!(s.completion_rounds, Some(0));
    let (s, _) = run_leader_election(&t, &params(), &p, 1, 3, &opts).unwrap();
    assert!(s.success);
    assert_eq!(s.extra_value("leader"), Some("0"));
}

#[test]
fn nos_two_stations_first_phase() {
    // a lone holder keeps the top color, so the neighbor hears it within
    // the first window with probability 1 - (1 - q)^W
    let t = line(&[0.0, 0.4]);
    let p = tuned(&t);
    let len = phase_len(&p);
    let top = legal_colors(&p, &schedule_length(&p, 2))
        .into_iter()
        .fold(0.0, f64::max);
    let q = p.broadcast_probability(top);
    let expect = 1.0 - (1.0 - q).powi(p.transmit_window() as i32);
    let trials = 1000;
    let informed = (0..trials)
        .filter(|&seed| {
            let (s, _) = run_nos_broadcast(&t, &params(), &p, 0, seed, &quiet(len)).unwrap();
            s.first_informed[1].is_some_and(|r| r <= len)
        })
        .count();
    let rate = informed as f64 / trials as f64;
    let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
    assert!((rate - expect).abs() <= 4.0 * sigma, "rate {rate}, expected {expect}");
}

#[test]
fn nos_path_of_diameter_eight() {
    let t = path(9);
    assert_eq!(t.diameter(), Some(8));
    let p = tuned(&t);
    let bound = 8 * phase_len(&p);
    let ok = (0..100)
        .filter(|&seed| {
            let (s, _) = run_nos_broadcast(&t, &params(), &p, 0, seed, &quiet(bound)).unwrap();
            s.completion_rounds.is_some_and(|c| c <= bound)
        })
        .count();
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn nos_phase_boundaries_in_trace() {
    let t = path(5);
    let p = tuned(&t);
    let (s, trace) = run_nos_broadcast(&t, &params(), &p, 0, 4, &RunOptions::with_budget(1_000_000)).unwrap();
    assert!(s.invariants_hold());
    let len = phase_len(&p);
    for e in trace.events().iter().filter(|e| e.kind == EventKind::PhaseBoundary) {
        assert_eq!(e.round % len, 0);
    }
}

#[test]
fn sb_clique_within_window() {
    let t = generate_topology(TopologyFamily::UniformSquare { side: 0.35 }, 50, 0.5, 8).unwrap();
    assert_eq!(t.diameter(), Some(1));
    let p = tuned(&t);
    let window = p.transmit_window();
    let ok = (0..100)
        .filter(|&seed| {
            let (s, _) = run_s_broadcast(&t, &params(), &p, 0, seed, &quiet(1_000_000)).unwrap();
            let coloring: u64 = s.extra_value("coloring_rounds").unwrap().parse().unwrap();
            s.completion_rounds.is_some_and(|c| c <= coloring + 1 + window)
        })
        .count();
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn protocols_are_deterministic() {
    let t = path(6);
    let p = tuned(&t);
    let opts = RunOptions::with_budget(1_000_000);
    let values = [3, 1, 4, 1, 5, 2];
    let schedule = WakeSchedule::single(6, 2, 5);
    let runs = |seed| {
        vec![
            run_nos_broadcast(&t, &params(), &p, 0, seed, &opts)
                .unwrap()
                .0
                .trace_hash,
            run_s_broadcast(&t, &params(), &p, 0, seed, &opts).unwrap().0.trace_hash,
            run_wakeup_adhoc(&t, &params(), &p, &schedule, seed, &opts)
                .unwrap()
                .0
                .trace_hash,
            run_consensus(
                &t,
                &params(),
                &p,
                &values,
                7,
                &WakeSchedule::simultaneous(6, 0),
                seed,
                &opts,
            )
            .unwrap()
            .0
            .trace_hash,
            run_leader_election(&t, &params(), &p, seed, 3, &opts)
                .unwrap()
                .0
                .trace_hash,
        ]
    };
    assert_eq!(runs(11), runs(11));
    assert_ne!(runs(11), runs(12));
}

#[test]
fn leader_is_fixed_by_seed() {
    let t = path(6);
    let p = tuned(&t);
    let opts = RunOptions::with_budget(1_000_000);
    let a = run_leader_election(&t, &params(), &p, 99, 3, &opts).unwrap().0;
    let b = run_leader_election(&t, &params(), &p, 99, 3, &opts).unwrap().0;
    assert!(a.success);
    assert_eq!(a.extra_value("leader"), b.extra_value("leader"));
}

#[test]
fn waker_just_before_period_is_deferred() {
    let t = path(4);
    let p = tuned(&t);
    let period = adhoc_period(&p, t.diameter().unwrap());
    assert_eq!(deferred_start(period - 1, period), period);
    assert_eq!(deferred_start(period, period), period);
    assert_eq!(deferred_start(0, period), 0);
    let schedule = WakeSchedule::single(4, 0, period - 1);
    let (s, trace) = run_wakeup_adhoc(&t, &params(), &p, &schedule, 3, &RunOptions::with_budget(10 * period)).unwrap();
    assert_eq!(s.extra_value("first_start"), Some(period.to_string().as_str()));
    let first_tx = trace.events().iter().find(|e| e.kind == EventKind::Transmit).unwrap();
    assert!(first_tx.round >= period);
}

#[test]
fn adhoc_all_spontaneous_and_single_waker() {
    let t = path(8);
    let p = tuned(&t);
    let period = adhoc_period(&p, t.diameter().unwrap());
    let all = WakeSchedule::simultaneous(8, 0);
    let (s, _) = run_wakeup_adhoc(&t, &params(), &p, &all, 0, &quiet(10 * period)).unwrap();
    assert_eq!(s.completion_rounds, Some(0));
    let single = WakeSchedule::single(8, 3, 17);
    let ok = (0..100)
        .filter(|&seed| {
            let (s, _) = run_wakeup_adhoc(&t, &params(), &p, &single, seed, &quiet(10 * period)).unwrap();
            s.completion_rounds.is_some_and(|c| c <= 2 * period)
        })
        .count();
    assert!(ok >= 95, "{ok}/100");
}

fn base_coloring(t: &NetworkTopology, p: &ConstantProfile, seed: u64) -> adhoc_sinr::coloring::Coloring {
    let mut engine = RoundEngine::new(t, &params(), seed, false).unwrap();
    let all: Vec<StationId> = (0..t.len()).collect();
    run_coloring(&mut engine, &all, p).unwrap()
}

#[test]
fn colored_wakeup_informed_station_never_recolors() {
    let t = line(&[0.0, 0.3, 0.6]);
    let p = tuned(&t);
    let base = base_coloring(&t, &p, 1);
    let period = colored_period(&p, t.diameter().unwrap());
    let schedule = WakeSchedule::new(vec![Some(0), Some(1), None]).unwrap();
    let mut checked = 0;
    for seed in 0..30 {
        let out = run_wakeup_colored(
            &t,
            &params(),
            &p,
            &base,
            &schedule,
            seed,
            &RunOptions::with_budget(10 * period),
        )
        .unwrap();
        let informed_early = out
            .trace
            .events()
            .iter()
            .any(|e| e.kind == EventKind::Inform && e.station == 1 && e.round < period);
        if informed_early {
            checked += 1;
            assert!(!out.recoloring.contains_key(&1));
        }
        assert!(out.recoloring.contains_key(&0));
    }
    assert!(checked > 0);
}

#[test]
fn colored_wakeup_missing_base_color() {
    let t = line(&[0.0, 0.3]);
    let p = tuned(&t);
    let mut base = base_coloring(&t, &p, 1);
    base.remove(&1);
    let schedule = WakeSchedule::single(2, 0, 0);
    assert!(run_wakeup_colored(&t, &params(), &p, &base, &schedule, 0, &RunOptions::with_budget(100)).is_err());
}

#[test]
fn all_spontaneous_recoloring_passes_verifiers() {
    let t = generate_topology(
        TopologyFamily::UniformSquare {
            side: (100.0f64 / 12.0).sqrt(),
        },
        100,
        0.5,
        2,
    )
    .unwrap();
    let p = tuned(&t);
    let pass = (0..20)
        .filter(|&seed| {
            let q = base_coloring(&t, &p, seed);
            verify_ball_mass(&q, &t, p.ball_mass_cap).pass
                && verify_proximity(&q, &t, p.epsilon, p.proximity_threshold()).pass
        })
        .count();
    assert!(pass >= 19, "{pass}/20");
}

#[test]
fn consensus_examples() {
    let t = path(3);
    let p = tuned(&t);
    let opts = RunOptions::with_budget(10_000_000);
    let sched = WakeSchedule::simultaneous(3, 0);
    let cases: [(&[u64], u64, u64); 3] = [(&[5, 3, 7], 7, 3), (&[4, 4, 4], 7, 4), (&[0, 1, 1], 1, 0)];
    for (values, x, min) in cases {
        let (s, _) = run_consensus(&t, &params(), &p, values, x, &sched, 5, &opts).unwrap();
        assert!(s.success, "{values:?}");
        let expect = vec![min.to_string(); 3].join(" ");
        assert_eq!(s.extra_value("outputs"), Some(expect.as_str()));
    }
    let (s, _) = run_consensus(&t, &params(), &p, &[0, 1, 1], 1, &sched, 5, &opts).unwrap();
    assert_eq!(s.extra_value("bits"), Some("1"));
}

#[test]
fn consensus_rejects_out_of_range() {
    let t = path(2);
    let p = tuned(&t);
    let sched = WakeSchedule::simultaneous(2, 0);
    let opts = RunOptions::with_budget(100);
    assert!(run_consensus(&t, &params(), &p, &[8, 0], 7, &sched, 0, &opts).is_err());
    assert!(run_consensus(&t, &params(), &p, &[0, 0], 0, &sched, 0, &opts).is_err());
}

#[test]
fn message_counter_bits() {
    assert_eq!(ProtocolMessage::new(MessageKind::Source, 5, 1000).bit_length(), 15);
    assert_eq!(ProtocolMessage::new(MessageKind::Hello, 0, 0).bit_length(), 4);
}
