//! Exact influence evaluation and the exact selection baselines used as
//! oracles: greedy (lazy or naive), out-degree ordering and brute force.
//!
//! All counts are integers over node-instance pairs; division by `ell` only
//! happens for presentation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Instance, MultiInstanceGraph, NodeId};
use crate::seeds::SeedSequence;

/// Upper bound on the number of subsets [`brute_force_optimum`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Influence as an exact pair count over `ell` instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InfluenceValue {
    pub covered: u64,
    pub ell: u32,
}

impl InfluenceValue {
    pub fn value(&self) -> f64 {
        self.covered as f64 / self.ell as f64
    }
}

fn check_nodes(g: &MultiInstanceGraph, nodes: &[NodeId]) -> Result<()> {
    let unknown: Vec<u64> = nodes
        .iter()
        .filter(|&&v| v >= g.node_count())
        .map(|&v| v as u64)
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::UnknownNodes(unknown))
    }
}

fn reach_count(inst: &Instance, seeds: &[NodeId], n: usize) -> u64 {
    let mut seen = vec![false; n];
    let mut queue = Vec::new();
    for &s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push(s);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &w in inst.out_neighbors(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push(w);
            }
        }
    }
    queue.len() as u64
}

/// Average number of nodes reachable from `seeds` over all instances.
pub fn exact_influence(g: &MultiInstanceGraph, seeds: &[NodeId]) -> Result<InfluenceValue> {
    check_nodes(g, seeds)?;
    let n = g.node_count() as usize;
    let covered = g
        .instances()
        .par_iter()
        .map(|inst| reach_count(inst, seeds, n))
        .sum();
    Ok(InfluenceValue {
        covered,
        ell: g.instance_count(),
    })
}

/// Covered flags of every node-instance pair under a growing seed set.
pub struct Coverage<'a> {
    g: &'a MultiInstanceGraph,
    n: usize,
    covered: Vec<bool>,
    mark: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
}

impl<'a> Coverage<'a> {
    pub fn new(g: &'a MultiInstanceGraph) -> Self {
        let n = g.node_count() as usize;
        Coverage {
            g,
            n,
            covered: vec![false; g.pair_count() as usize],
            mark: vec![0; n],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    pub fn is_covered(&self, v: NodeId, instance: u32) -> bool {
        self.covered[instance as usize * self.n + v as usize]
    }

    /// Pairs `v` would newly cover.
    pub fn gain(&mut self, v: NodeId) -> u64 {
        let mut total = 0;
        for (i, inst) in self.g.instances().iter().enumerate() {
            let base = i * self.n;
            if self.covered[base + v as usize] {
                continue;
            }
            self.epoch = self.epoch.wrapping_add(1);
            if self.epoch == 0 {
                self.mark.fill(0);
                self.epoch = 1;
            }
            let epoch = self.epoch;
            self.queue.clear();
            self.queue.push(v);
            self.mark[v as usize] = epoch;
            let mut head = 0;
            while head < self.queue.len() {
                let u = self.queue[head];
                head += 1;
                for &w in inst.out_neighbors(u) {
                    if self.mark[w as usize] != epoch && !self.covered[base + w as usize] {
                        self.mark[w as usize] = epoch;
                        self.queue.push(w);
                    }
                }
            }
            total += self.queue.len() as u64;
        }
        total
    }

    /// Covers everything `v` reaches and returns the number of new pairs.
    pub fn add(&mut self, v: NodeId) -> u64 {
        let mut total = 0;
        for (i, inst) in self.g.instances().iter().enumerate() {
            let base = i * self.n;
            if self.covered[base + v as usize] {
                continue;
            }
            self.covered[base + v as usize] = true;
            self.queue.clear();
            self.queue.push(v);
            let mut head = 0;
            while head < self.queue.len() {
                let u = self.queue[head];
                head += 1;
                for &w in inst.out_neighbors(u) {
                    if !self.covered[base + w as usize] {
                        self.covered[base + w as usize] = true;
                        self.queue.push(w);
                    }
                }
            }
            total += self.queue.len() as u64;
        }
        total
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GreedyMode {
    /// Re-evaluate stale upper bounds lazily from a priority queue.
    #[default]
    Lazy,
    /// Re-evaluate every candidate in every round.
    Naive,
}

fn check_seed_count(g: &MultiInstanceGraph, s: usize) -> Result<()> {
    if s > g.node_count() as usize {
        Err(Error::domain(format!(
            "s = {s} exceeds n = {}",
            g.node_count()
        )))
    } else {
        Ok(())
    }
}

/// Greedy maximization of exact marginal gain. Ties go to the smallest id.
pub fn exact_greedy(g: &MultiInstanceGraph, s: usize, mode: GreedyMode) -> Result<SeedSequence> {
    check_seed_count(g, s)?;
    let n = g.node_count();
    let mut cov = Coverage::new(g);
    let mut seq = SeedSequence::new(g.instance_count());
    match mode {
        GreedyMode::Naive => {
            let mut chosen = vec![false; n as usize];
            for _ in 0..s {
                let mut best: Option<(u64, NodeId)> = None;
                for v in (0..n).filter(|&v| !chosen[v as usize]) {
                    let gain = cov.gain(v);
                    if best.is_none_or(|(b, _)| gain > b) {
                        best = Some((gain, v));
                    }
                }
                let (_, v) = best.expect("s <= n leaves a candidate");
                chosen[v as usize] = true;
                let covered = cov.add(v);
                seq.push(v, covered);
            }
        }
        GreedyMode::Lazy => {
            // (gain bound, smallest id first, round the bound was computed in)
            let initial: Vec<u64> = (0..n)
                .into_par_iter()
                .map(|v| {
                    let n = g.node_count() as usize;
                    g.instances()
                        .iter()
                        .map(|inst| reach_count(inst, &[v], n))
                        .sum()
                })
                .collect();
            let mut heap: BinaryHeap<(u64, Reverse<NodeId>, usize)> = initial
                .into_iter()
                .enumerate()
                .map(|(v, gain)| (gain, Reverse(v as NodeId), 0))
                .collect();
            for round in 0..s {
                loop {
                    let (bound, Reverse(v), at) = heap.pop().expect("s <= n leaves a candidate");
                    if at == round {
                        let covered = cov.add(v);
                        debug_assert_eq!(covered, bound);
                        seq.push(v, covered);
                        break;
                    }
                    heap.push((cov.gain(v), Reverse(v), round));
                }
            }
        }
    }
    Ok(seq)
}

/// Nodes by decreasing out-degree in the union of all instances (ties by
/// id), with exact marginal influences.
pub fn degree_baseline(g: &MultiInstanceGraph, s: usize) -> Result<SeedSequence> {
    check_seed_count(g, s)?;
    let degrees = g.union_out_degrees();
    let order: Vec<NodeId> = (0..g.node_count())
        .sorted_by_key(|&v| (Reverse(degrees[v as usize]), v))
        .take(s)
        .collect();
    evaluate_sequence(g, &order)
}

/// Exact marginal influences of `order`, taken as a seed sequence.
pub fn evaluate_sequence(g: &MultiInstanceGraph, order: &[NodeId]) -> Result<SeedSequence> {
    check_nodes(g, order)?;
    let mut cov = Coverage::new(g);
    let mut seq = SeedSequence::new(g.instance_count());
    for &v in order {
        let covered = cov.add(v);
        seq.push(v, covered);
    }
    Ok(seq)
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exhaustive search over all size-`s` seed sets; the lexicographically
/// first maximizer is returned.
pub fn brute_force_optimum(
    g: &MultiInstanceGraph,
    s: usize,
) -> Result<(Vec<NodeId>, InfluenceValue)> {
    check_seed_count(g, s)?;
    let n = g.node_count();
    let subsets = binomial(n as u64, s as u64);
    if subsets > BRUTE_FORCE_LIMIT {
        return Err(Error::domain(format!(
            "C({n}, {s}) = {subsets} subsets exceeds the limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let nu = n as usize;
    let mut best: Option<(Vec<NodeId>, u64)> = None;
    for set in (0..n).combinations(s) {
        let covered: u64 = g
            .instances()
            .iter()
            .map(|inst| reach_count(inst, &set, nu))
            .sum();
        if best.as_ref().is_none_or(|(_, b)| covered > *b) {
            best = Some((set, covered));
        }
    }
    let (set, covered) = best.expect("at least one subset");
    Ok((
        set,
        InfluenceValue {
            covered,
            ell: g.instance_count(),
        },
    ))
}
