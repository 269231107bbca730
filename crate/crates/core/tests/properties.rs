use adhoc_sinr::coloring::{ConstantProfile, ProfileOverrides};
use adhoc_sinr::geometry::{
    covering_bound, hop_distances, MetricPoint, MetricSpace, NetworkTopology, StationId, TopologyFamily,
};
use adhoc_sinr::harness::{
    check_fact_notransmit, check_fact_sum, ExperimentConfig, Protocol, TopologySpec, FACT_SLACK,
};
use adhoc_sinr::protocols::{run_nos_broadcast, run_s_broadcast, RunOptions};
use adhoc_sinr::sinr::{sinr_ratio, SinrEngine, SinrParams};
use proptest::prelude::*;

fn plane_points(max: usize, side: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..side, 0.0..side), 1..=max)
}

fn plane(points: &[(f64, f64)]) -> Option<NetworkTopology> {
    NetworkTopology::new(
        MetricSpace::Euclidean2,
        0.5,
        points.iter().map(|&(x, y)| MetricPoint::plane(x, y)).collect(),
    )
    .ok()
}

fn floyd_warshall(t: &NetworkTopology) -> Vec<Vec<u32>> {
    let n = t.len();
    let mut d = vec![vec![u32::MAX; n]; n];
    for u in 0..n {
        d[u][u] = 0;
        for v in 0..n {
            if u != v && t.distance(u, v) <= 1.0 - t.epsilon() {
                d[u][v] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != u32::MAX && d[k][j] != u32::MAX {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
    }
    d
}

proptest! {
    #[test]
    fn metric_axioms(a in (-5.0..5.0f64, -5.0..5.0f64), b in (-5.0..5.0f64, -5.0..5.0f64), c in (-5.0..5.0f64, -5.0..5.0f64)) {
        for space in [MetricSpace::Line, MetricSpace::Euclidean2] {
            let pt = |p: (f64, f64)| match space {
                MetricSpace::Line => MetricPoint::line(p.0),
                MetricSpace::Euclidean2 => MetricPoint::plane(p.0, p.1),
            };
            let (a, b, c) = (pt(a), pt(b), pt(c));
            let ab = space.dist(&a, &b).unwrap();
            prop_assert_eq!(ab, space.dist(&b, &a).unwrap());
            prop_assert_eq!(space.dist(&a, &a).unwrap(), 0.0);
            prop_assert!(ab >= 0.0);
            let bc = space.dist(&b, &c).unwrap();
            let ac = space.dist(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn adjacency_and_hop_distances(points in plane_points(14, 2.5)) {
        let Some(t) = plane(&points) else { return Ok(()) };
        let fw = floyd_warshall(&t);
        for u in 0..t.len() {
            for &v in t.neighbors(u) {
                prop_assert!(t.neighbors(v).contains(&u));
                prop_assert!(t.distance(u, v) <= 1.0 - t.epsilon());
            }
            let bfs = hop_distances(&t, u);
            prop_assert_eq!(&bfs, &fw[u]);
        }
        let longest = fw.iter().flatten().copied().max().unwrap();
        let expect = (longest != u32::MAX).then_some(longest);
        prop_assert_eq!(t.diameter(), expect);
    }

    #[test]
    fn covering_bound_is_monotone(big in 0.1..10.0f64, small in 0.05..2.0f64, gamma in 1.0..3.0f64) {
        let c = covering_bound(big, small, gamma).unwrap();
        prop_assert!(c >= 1);
        prop_assert!(covering_bound(2.0 * big, small, gamma).unwrap() >= c);
        prop_assert!(covering_bound(big, small / 2.0, gamma).unwrap() >= c);
    }

    #[test]
    fn engine_matches_brute_force(points in plane_points(10, 2.0), mask in any::<u16>()) {
        let Some(t) = plane(&points) else { return Ok(()) };
        let params = SinrParams::default();
        let tx: Vec<StationId> = (0..t.len()).filter(|&v| mask >> v & 1 == 1).collect();
        let mut engine = SinrEngine::new(&t, &params).unwrap();
        let got = engine.resolve(0, &tx).unwrap().to_vec();
        let mut expect = Vec::new();
        for u in (0..t.len()).filter(|u| !tx.contains(u)) {
            for &v in &tx {
                if sinr_ratio(v, u, &tx, &params, &t).unwrap() >= params.beta {
                    expect.push((u, v));
                }
            }
        }
        let got: Vec<(StationId, StationId)> = got.iter().map(|r| (r.receiver, r.sender)).collect();
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn fact_sum_matches_enumeration(p in prop::collection::vec(0.0..0.2f64, 1..8)) {
        let total: f64 = p.iter().sum();
        prop_assume!(total <= 0.5);
        // probability that exactly one coin comes up, summed over all outcomes
        let k = p.len();
        let exact: f64 = (0u32..1 << k)
            .filter(|m| m.count_ones() == 1)
            .map(|m| (0..k).map(|i| if m >> i & 1 == 1 { p[i] } else { 1.0 - p[i] }).product::<f64>())
            .sum();
        let v = check_fact_sum(&p).unwrap();
        prop_assert!((v.value - exact).abs() < 1e-12);
        prop_assert!(v.holds);
        prop_assert!(v.value >= total / 2.0 - FACT_SLACK);
    }

    #[test]
    fn fact_notransmit_holds(p in prop::collection::vec(0.0..=0.5f64, 0..12)) {
        let v = check_fact_notransmit(&p).unwrap();
        prop_assert!(v.holds);
        prop_assert!(v.value >= 0.25f64.powf(p.iter().sum()) - FACT_SLACK);
    }

    #[test]
    fn config_round_trip(
        protocol in 0..Protocol::ALL.len(),
        n in 1usize..500,
        seeds in prop::collection::vec(any::<u32>(), 1..4),
        c_bc in prop::option::of(0.05..2.0f64),
        budget in prop::option::of(1u64..1_000_000),
    ) {
        let topology = TopologySpec::generated(TopologyFamily::UniformSquare { side: 3.0 }, n, 3);
        let mut config = ExperimentConfig::new(Protocol::ALL[protocol], topology);
        config.seeds = seeds.into_iter().map(u64::from).collect();
        config.constants = ProfileOverrides { c_bc, ..ProfileOverrides::default() };
        config.run.budget = budget;
        let back = ExperimentConfig::parse(&config.to_text()).unwrap();
        prop_assert_eq!(back, config);
    }

    #[test]
    fn informed_stations_heard_an_earlier_holder(steps in prop::collection::vec(0.1..0.5f64, 1..8), seed in any::<u64>()) {
        let mut x = 0.0;
        let mut xs = vec![0.0];
        for s in steps {
            x += s;
            xs.push(x);
        }
        let t = NetworkTopology::new(MetricSpace::Line, 0.5, xs.iter().map(|&x| MetricPoint::line(x)).collect()).unwrap();
        let params = SinrParams::default();
        let profile = ConstantProfile::tuned(&params, 1.0, t.len() as u64).unwrap();
        let opts = RunOptions { keep_events: false, ..RunOptions::with_budget(200_000) };
        for run in [run_nos_broadcast, run_s_broadcast] {
            let (s, _) = run(&t, &params, &profile, 0, seed, &opts).unwrap();
            prop_assert!(s.invariants_hold());
            prop_assert_eq!(s.first_informed[0], Some(0));
            for v in 1..t.len() {
                if let Some(at) = s.first_informed[v] {
                    // decoding reaches past graph edges, up to the range 1
                    let earlier = (0..t.len())
                        .any(|u| t.distance(u, v) <= 1.0 && s.first_informed[u].is_some_and(|h| h < at));
                    prop_assert!(earlier, "station {} informed at {} with no earlier holder in range", v, at);
                }
            }
        }
    }
}
