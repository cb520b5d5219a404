mod common;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skim::ranks::RankAssignment;
use skim::{build_sketches, to_uniform_rank, MultiInstanceGraph, NodeId, Rank};

/// Union estimate recomputed from brute-force sketches: every rank below
/// some sketch's threshold weighs 1 / r(largest such threshold); partial
/// sketches have threshold r = 1.
fn union_estimate(g: &MultiInstanceGraph, ra: &RankAssignment, k: u32, seeds: &[NodeId]) -> f64 {
    let (n, ell) = (g.node_count(), g.instance_count());
    let mut best: HashMap<Rank, f64> = HashMap::new();
    for &u in seeds {
        let sk = common::brute_force_sketch(g, ra, u, k);
        let (members, r) = if sk.len() == k as usize {
            let t = *sk.last().unwrap();
            (&sk[..sk.len() - 1], to_uniform_rank(t, n, ell).unwrap())
        } else {
            (&sk[..], 1.0)
        };
        for &z in members {
            let e = best.entry(z).or_insert(r);
            *e = e.max(r);
        }
    }
    best.values().map(|r| 1.0 / r).sum::<f64>() / ell as f64
}

#[test]
fn path_query_matches_hand_rolled_sum() {
    let g =
        MultiInstanceGraph::from_arc_lists(5, vec![vec![(0, 1), (1, 2), (2, 3), (3, 4)]]).unwrap();
    for seed in 0..20 {
        let ra = RankAssignment::new(5, 1, 2, seed).unwrap();
        let set = build_sketches(&g, &ra, 2).unwrap();
        let q = set.query(&[0, 2]).unwrap();
        assert!((q - union_estimate(&g, &ra, 2, &[0, 2])).abs() < 1e-12);
    }
}

#[test]
fn random_queries_match_hand_rolled_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(2..40);
        let ell = rng.gen_range(1..5);
        let arcs = rng.gen_range(0..3 * n as usize);
        let g = common::random_instances(&mut rng, n, ell, arcs);
        let k = rng.gen_range(1..12);
        let ra = RankAssignment::new(n, ell, k, rng.gen()).unwrap();
        let set = build_sketches(&g, &ra, k).unwrap();
        let seeds: Vec<NodeId> = (0..rng.gen_range(1..6))
            .map(|_| rng.gen_range(0..n))
            .collect();
        let q = set.query(&seeds).unwrap();
        let expected = union_estimate(&g, &ra, k, &seeds);
        assert!(
            (q - expected).abs() <= 1e-9 * expected.max(1.0),
            "{q} vs {expected}"
        );
    }
}

#[test]
fn dag_sketches_match_brute_force() {
    let arcs = vec![
        (0, 1),
        (0, 2),
        (1, 3),
        (2, 3),
        (3, 4),
        (4, 5),
        (2, 6),
        (6, 7),
        (5, 7),
    ];
    let second = vec![(0, 2), (2, 6), (1, 4), (4, 7)];
    let g = MultiInstanceGraph::from_arc_lists(8, vec![arcs, second]).unwrap();
    let ra = RankAssignment::new(8, 2, 4, 2024).unwrap();
    let set = build_sketches(&g, &ra, 4).unwrap();
    for u in 0..8 {
        assert_eq!(
            set.sketch(u).unwrap().ranks(),
            &common::brute_force_sketch(&g, &ra, u, 4)[..]
        );
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E[f(T)]` where `T` is the k-th smallest of `c` positions drawn without
/// replacement from `1..=d`.
fn expect_over_threshold(d: u64, c: u64, k: u64, f: impl Fn(f64) -> f64) -> f64 {
    (k..=d - c + k)
        .map(|t| binomial(t - 1, k - 1) * binomial(d - t, c - k) / binomial(d, c) * f(t as f64))
        .sum()
}

#[test]
fn permutation_estimator_expectations() {
    // With a single instance the ranks are a uniform permutation, so the
    // threshold of a full sketch follows the order statistic above.
    for (d, c, k) in [(20u64, 7u64, 3u64), (50, 30, 8), (12, 12, 4), (40, 5, 2)] {
        let (df, cf, kf) = (d as f64, c as f64, k as f64);
        let listed = expect_over_threshold(d, c, k, |t| 1.0 + (kf - 1.0) * (df - 1.0) / (t - 1.0));
        let union_single = expect_over_threshold(d, c, k, |t| (kf - 1.0) * (df - 1.0) / (t - 1.0));
        let scaled = expect_over_threshold(d, c, k, |t| (kf - 1.0) * df / (t - 1.0));
        assert!((scaled - cf).abs() < 1e-9, "{scaled} vs {c}");
        assert!((listed - (cf + 1.0 - cf / df)).abs() < 1e-9);
        assert!((union_single - (cf - cf / df)).abs() < 1e-9);
    }
}
