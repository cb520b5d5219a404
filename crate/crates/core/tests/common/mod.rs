#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use skim::ranks::RankAssignment;
use skim::seeds::SeedSequence;
use skim::{exact_influence, BaseGraph, MultiInstanceGraph, NodeId, Rank};

/// Directed G(n, m): `m` distinct arcs without self loops.
pub fn gnm<R: Rng>(rng: &mut R, n: u32, m: usize) -> BaseGraph {
    assert!(m as u64 <= n as u64 * (n as u64 - 1));
    let mut seen = HashSet::with_capacity(m);
    while seen.len() < m {
        let t = rng.gen_range(0..n);
        let h = rng.gen_range(0..n);
        if t != h {
            seen.insert((t, h));
        }
    }
    BaseGraph::new(n, seen.into_iter().collect()).unwrap()
}

/// Instances with independently drawn arcs (self loops allowed, duplicates merged).
pub fn random_instances<R: Rng>(rng: &mut R, n: u32, ell: u32, arcs: usize) -> MultiInstanceGraph {
    let lists = (0..ell)
        .map(|_| {
            (0..arcs)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect()
        })
        .collect();
    MultiInstanceGraph::from_arc_lists(n, lists).unwrap()
}

/// Nodes reachable from `seeds` in instance `i`.
pub fn reach(g: &MultiInstanceGraph, i: u32, seeds: &[NodeId]) -> Vec<NodeId> {
    let inst = g.instance(i);
    let mut seen = vec![false; g.node_count() as usize];
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for &s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    let mut out = Vec::new();
    while let Some(v) = queue.pop_front() {
        out.push(v);
        for &w in inst.out_neighbors(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    out
}

/// Number of pairs reachable from `seeds` across all instances.
pub fn reach_pairs(g: &MultiInstanceGraph, seeds: &[NodeId]) -> u64 {
    (0..g.instance_count())
        .map(|i| reach(g, i, seeds).len() as u64)
        .sum()
}

/// Bottom-k of all ranks reachable from `u`, by exhaustive search.
pub fn brute_force_sketch(
    g: &MultiInstanceGraph,
    ra: &RankAssignment,
    u: NodeId,
    k: u32,
) -> Vec<Rank> {
    let mut ranks: Vec<Rank> = (0..g.instance_count())
        .flat_map(|i| {
            reach(g, i, &[u])
                .into_iter()
                .filter_map(move |v| ra.rank_of(v, i))
        })
        .collect();
    ranks.sort_unstable();
    ranks.truncate(k as usize);
    ranks
}

/// Whether every prefix's summed marginals equal its exact coverage.
pub fn prefix_identity_holds(g: &MultiInstanceGraph, seq: &SeedSequence) -> bool {
    let nodes = seq.nodes();
    (1..=nodes.len())
        .all(|len| exact_influence(g, &nodes[..len]).unwrap().covered == seq.prefix_covered(len))
}
