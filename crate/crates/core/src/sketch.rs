//! Combined bottom-k reachability sketches and the influence oracle built on
//! them.
//!
//! The sketch `X_u` of node `u` holds the `k` smallest permutation ranks of
//! the node-instance pairs `(v, i)` that `u` reaches in instance `i`.
//! Sketches are built one instance at a time with pruned reverse searches
//! and merged into the global bottom-k.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Instance, MultiInstanceGraph, NodeId};
use crate::ranks::{to_uniform_rank, Rank, RankAssignment};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinedSketch {
    ranks: Vec<Rank>,
    k: u32,
}

impl CombinedSketch {
    /// `ranks` must be strictly increasing and hold at most `k` entries.
    pub fn new(ranks: Vec<Rank>, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("sketch size k must be at least 1"));
        }
        if ranks.len() > k as usize {
            return Err(Error::domain(format!(
                "{} ranks exceed k = {k}",
                ranks.len()
            )));
        }
        if ranks.first() == Some(&0) || ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(
                "sketch ranks must be positive and strictly increasing",
            ));
        }
        Ok(CombinedSketch { ranks, k })
    }

    pub fn ranks(&self) -> &[Rank] {
        &self.ranks
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.ranks.len() == self.k as usize
    }

    /// The k-th smallest rank, or `None` (beyond horizon) for a partial sketch.
    pub fn threshold(&self) -> Option<Rank> {
        if self.is_full() {
            self.ranks.last().copied()
        } else {
            None
        }
    }

    /// Entries strictly below the threshold: all but the largest rank of a
    /// full sketch, everything in a partial one.
    fn members(&self) -> &[Rank] {
        if self.is_full() {
            &self.ranks[..self.ranks.len() - 1]
        } else {
            &self.ranks
        }
    }
}

/// Sketches of every node, all built from one rank assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchSet {
    n: u32,
    ell: u32,
    k: u32,
    rank_seed: u64,
    sketches: Vec<CombinedSketch>,
}

impl SketchSet {
    pub fn from_parts(
        n: u32,
        ell: u32,
        k: u32,
        rank_seed: u64,
        sketches: Vec<CombinedSketch>,
    ) -> Result<Self> {
        if n == 0 || ell == 0 || k == 0 {
            return Err(Error::domain("sketch set dimensions must be positive"));
        }
        if sketches.len() != n as usize {
            return Err(Error::domain(format!(
                "{} sketches for n = {n}",
                sketches.len()
            )));
        }
        let d = n as u64 * ell as u64;
        for s in &sketches {
            if s.k != k {
                return Err(Error::domain("sketch k differs from set k"));
            }
            if s.ranks.last().is_some_and(|&r| r > d) {
                return Err(Error::domain(format!("rank exceeds universe size {d}")));
            }
        }
        Ok(SketchSet {
            n,
            ell,
            k,
            rank_seed,
            sketches,
        })
    }

    pub fn node_count(&self) -> u32 {
        self.n
    }

    pub fn instance_count(&self) -> u32 {
        self.ell
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn rank_seed(&self) -> u64 {
        self.rank_seed
    }

    pub fn sketches(&self) -> &[CombinedSketch] {
        &self.sketches
    }

    pub fn sketch(&self, v: NodeId) -> Option<&CombinedSketch> {
        self.sketches.get(v as usize)
    }

    /// Estimated influence of a single node.
    pub fn estimate_node(&self, v: NodeId) -> Result<f64> {
        let s = self
            .sketch(v)
            .ok_or_else(|| Error::UnknownNodes(vec![v as u64]))?;
        Ok(estimate_cardinality(s, self.n, self.ell) / self.ell as f64)
    }

    /// Estimated influence of `seeds` from their sketches alone.
    pub fn query(&self, seeds: &[NodeId]) -> Result<f64> {
        let unknown: Vec<u64> = seeds
            .iter()
            .filter(|&&v| v >= self.n)
            .map(|&v| v as u64)
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownNodes(unknown));
        }
        let chosen: Vec<&CombinedSketch> =
            seeds.iter().map(|&v| &self.sketches[v as usize]).collect();
        query_influence(&chosen, self.n, self.ell)
    }
}

/// Local bottom-k sketches for one instance: pairs of that instance are
/// processed by increasing rank, and each reverse search stops at nodes
/// whose local sketch is already full.
fn local_sketches(
    instance: &Instance,
    pairs: &[(Rank, NodeId)],
    n: usize,
    k: usize,
) -> Vec<Vec<Rank>> {
    let mut local: Vec<Vec<Rank>> = vec![Vec::new(); n];
    let mut mark = vec![u32::MAX; n];
    let mut queue: Vec<NodeId> = Vec::new();
    for (search, &(rank, source)) in pairs.iter().enumerate() {
        let search = search as u32;
        queue.clear();
        queue.push(source);
        mark[source as usize] = search;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            let sketch = &mut local[v as usize];
            if sketch.len() == k {
                continue;
            }
            sketch.push(rank);
            for &w in instance.in_neighbors(v) {
                if mark[w as usize] != search {
                    mark[w as usize] = search;
                    queue.push(w);
                }
            }
        }
    }
    local
}

fn merge_bottom_k(global: &mut Vec<Rank>, local: &[Rank], k: usize, scratch: &mut Vec<Rank>) {
    if local.is_empty() {
        return;
    }
    scratch.clear();
    let (mut a, mut b) = (0, 0);
    while scratch.len() < k && (a < global.len() || b < local.len()) {
        let take_global = b == local.len() || (a < global.len() && global[a] < local[b]);
        if take_global {
            scratch.push(global[a]);
            a += 1;
        } else {
            scratch.push(local[b]);
            b += 1;
        }
    }
    std::mem::swap(global, scratch);
}

/// Builds the combined reachability sketch of every node.
///
/// Instances are processed in parallel batches; each batch's local sketches
/// are merged into the global ones in instance order. The result does not
/// depend on the batching since the merge is a bottom-k of a union.
pub fn build_sketches(g: &MultiInstanceGraph, ra: &RankAssignment, k: u32) -> Result<SketchSet> {
    if k == 0 {
        return Err(Error::domain("sketch size k must be at least 1"));
    }
    let (n, ell) = (g.node_count(), g.instance_count());
    if ra.node_count() != n || ra.instance_count() != ell {
        return Err(Error::domain(format!(
            "rank assignment is for n = {}, ell = {} but the graph has n = {n}, ell = {ell}",
            ra.node_count(),
            ra.instance_count()
        )));
    }
    if ra.chunk_count() < k.min(ell) {
        return Err(Error::domain(format!(
            "rank assignment has {} chunks, need {}",
            ra.chunk_count(),
            k.min(ell)
        )));
    }

    let by_instance = ra.ranks_by_instance();
    let (nu, ku) = (n as usize, k as usize);
    let mut global: Vec<Vec<Rank>> = vec![Vec::new(); nu];
    let mut scratch = Vec::with_capacity(ku);
    let batch = rayon::current_num_threads().max(1);
    let indices: Vec<usize> = (0..ell as usize).collect();
    for chunk in indices.chunks(batch) {
        let locals: Vec<Vec<Vec<Rank>>> = chunk
            .par_iter()
            .map(|&i| local_sketches(&g.instances()[i], &by_instance[i], nu, ku))
            .collect();
        for local in &locals {
            for (sketch, part) in global.iter_mut().zip(local) {
                merge_bottom_k(sketch, part, ku, &mut scratch);
            }
        }
    }

    let sketches = global
        .into_iter()
        .map(|ranks| CombinedSketch { ranks, k })
        .collect();
    Ok(SketchSet {
        n,
        ell,
        k,
        rank_seed: ra.seed(),
        sketches,
    })
}

/// Cardinality of the combined reachability set behind `s`: exact for a
/// partial sketch, otherwise `1 + (k-1)(D-1)/(T-1)` with `D = n * ell` and
/// `T` the threshold rank.
pub fn estimate_cardinality(s: &CombinedSketch, n: u32, ell: u32) -> f64 {
    match s.threshold() {
        None => s.len() as f64,
        Some(t) => {
            let d = n as f64 * ell as f64;
            if s.k == 1 {
                // (k-1) = 0, and T may be 1
                return 1.0;
            }
            1.0 + (s.k as f64 - 1.0) * (d - 1.0) / (t as f64 - 1.0)
        }
    }
}

/// `(k-1)/tau` with the threshold converted to a uniform rank. Kept for
/// cross-checking the permutation estimator.
pub fn estimate_cardinality_continuous(s: &CombinedSketch, n: u32, ell: u32) -> Result<f64> {
    match s.threshold() {
        None => Ok(s.len() as f64),
        Some(t) => Ok((s.k as f64 - 1.0) / to_uniform_rank(t, n, ell)?),
    }
}

/// Influence estimate `n(k-1)/(T-1)`, the many-instance limit of the
/// permutation estimator divided by `ell`.
pub fn estimate_influence_limit(t: Rank, k: u32, n: u32) -> Result<f64> {
    if t < 2 {
        return Err(Error::domain(format!(
            "threshold rank {t} is degenerate, need T >= 2"
        )));
    }
    Ok(n as f64 * (k as f64 - 1.0) / (t as f64 - 1.0))
}

/// Union-cardinality estimate over the seed sketches, divided by `ell`.
///
/// Each distinct rank `z` below the threshold of some seed sketch adds
/// `1 / r(tau*)`, where `tau*` is the largest threshold among sketches that
/// hold `z` below their threshold and `r` converts permutation ranks to
/// uniform ranks. Partial sketches count as threshold 1, so their entries
/// weigh 1. Sketches are visited by decreasing threshold, so the first
/// sketch that holds a rank determines its weight.
pub fn query_influence(seeds: &[&CombinedSketch], n: u32, ell: u32) -> Result<f64> {
    let first = seeds
        .first()
        .ok_or_else(|| Error::domain("seed set must not be empty"))?;
    if seeds.iter().any(|s| s.k != first.k) {
        return Err(Error::domain(
            "seed sketches come from different sketch sets",
        ));
    }
    let d = n as u64 * ell as u64;

    let mut order: Vec<&CombinedSketch> = seeds.to_vec();
    // None (beyond horizon) sorts before every finite threshold.
    order.sort_by_key(|s| std::cmp::Reverse(s.threshold().map_or(Rank::MAX, |t| t)));

    let mut seen: HashSet<Rank> = HashSet::with_capacity(seeds.len() * first.k as usize);
    let mut total = 0.0;
    for s in order {
        let weight = match s.threshold() {
            None => 1.0,
            Some(t) => {
                if t > d {
                    return Err(Error::domain(format!("rank {t} outside universe of {d}")));
                }
                if s.members().is_empty() {
                    continue;
                }
                1.0 / to_uniform_rank(t, n, ell)?
            }
        };
        for &z in s.members() {
            if seen.insert(z) {
                total += weight;
            }
        }
    }
    Ok(total / ell as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sketch(ranks: &[Rank], k: u32) -> CombinedSketch {
        CombinedSketch::new(ranks.to_vec(), k).unwrap()
    }

    #[test]
    fn sketch_validation() {
        assert!(CombinedSketch::new(vec![1, 2, 3], 2).is_err());
        assert!(CombinedSketch::new(vec![3, 2], 4).is_err());
        assert!(CombinedSketch::new(vec![2, 2], 4).is_err());
        assert!(CombinedSketch::new(vec![0, 2], 4).is_err());
        let s = sketch(&[4, 9], 2);
        assert_eq!(s.threshold(), Some(9));
        assert_eq!(sketch(&[4], 2).threshold(), None);
    }

    #[test]
    fn partial_sketch_estimate_is_exact_size() {
        assert_eq!(estimate_cardinality(&sketch(&[3, 7], 4), 10, 10), 2.0);
    }

    #[test]
    fn permutation_estimator_value() {
        // D = 100, k = 4, T = 10: 1 + 3 * 99 / 9
        let s = sketch(&[2, 5, 7, 10], 4);
        assert_eq!(estimate_cardinality(&s, 10, 10), 34.0);
    }

    #[test]
    fn full_universe_estimate_is_d() {
        let s = sketch(&[1, 2, 3, 4, 5], 5);
        assert_eq!(estimate_cardinality(&s, 20, 3), 60.0);
    }

    #[test]
    fn continuous_form_matches_conversion() {
        let s = sketch(&[2, 5, 7, 10], 4);
        let cont = estimate_cardinality_continuous(&s, 10, 10).unwrap();
        assert!((cont - 3.0 / (9.0 / 99.0)).abs() < 1e-12);
        assert_eq!(
            estimate_cardinality_continuous(&sketch(&[1], 3), 10, 10).unwrap(),
            1.0
        );
    }

    #[test]
    fn influence_limit_estimator() {
        assert_eq!(estimate_influence_limit(21, 5, 100).unwrap(), 20.0);
        assert_eq!(estimate_influence_limit(4 * 100 + 1, 5, 100).unwrap(), 1.0);
        assert!(estimate_influence_limit(1, 5, 100).is_err());
    }

    #[test]
    fn influence_limit_is_many_instance_limit() {
        let (n, k, t) = (100u32, 5u32, 21u64);
        let ell = 1_000_000f64;
        let d = n as f64 * ell;
        let per_instance = (1.0 + (k as f64 - 1.0) * (d - 1.0) / (t as f64 - 1.0)) / ell;
        let limit = estimate_influence_limit(t, k, n).unwrap();
        assert!(
            (per_instance - limit).abs() / limit < 1e-5,
            "{per_instance} vs {limit}"
        );
    }

    #[test]
    fn single_full_sketch_query() {
        // the union sum sets the threshold entry aside, so it trails the
        // single-set estimator by exactly one pair
        let s = sketch(&[2, 5, 7, 10], 4);
        let q = query_influence(&[&s], 10, 10).unwrap();
        assert!((q - 3.0 * 99.0 / 9.0 / 10.0).abs() < 1e-12);
        assert!((q - (estimate_cardinality(&s, 10, 10) - 1.0) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn identical_sketches_match_single() {
        let s = sketch(&[2, 5, 7, 10], 4);
        let t = s.clone();
        assert_eq!(
            query_influence(&[&s, &t], 10, 10).unwrap(),
            query_influence(&[&s], 10, 10).unwrap()
        );
    }

    #[test]
    fn partial_sketches_count_members_exactly() {
        let a = sketch(&[1, 4], 3);
        let b = sketch(&[4, 6], 3);
        assert_eq!(query_influence(&[&a, &b], 5, 2).unwrap(), 3.0 / 2.0);
    }

    #[test]
    fn mixed_partial_and_full() {
        // full sketch threshold 9 -> r = 8/19; partial members weigh 1
        let full = sketch(&[2, 3, 9], 3);
        let part = sketch(&[3, 5], 3);
        let expected = (1.0 + 1.0 + 19.0 / 8.0) / 4.0;
        let q = query_influence(&[&full, &part], 5, 4).unwrap();
        assert!((q - expected).abs() < 1e-12);
    }

    #[test]
    fn query_errors() {
        let a = sketch(&[1, 4], 3);
        let b = sketch(&[1, 4], 2);
        assert!(query_influence(&[], 5, 2).is_err());
        assert!(query_influence(&[&a, &b], 5, 2).is_err());
    }

    #[test]
    fn larger_threshold_can_lower_union_weight() {
        // Both sketches hold ranks 1 and 2 below their thresholds; adding the
        // second lifts their threshold from 3 to 10, which lowers the sum.
        let a = sketch(&[1, 2, 3], 3);
        let b = sketch(&[1, 2, 10], 3);
        let one = query_influence(&[&a], 10, 10).unwrap();
        let both = query_influence(&[&a, &b], 10, 10).unwrap();
        assert!(both < one);
    }

    #[test]
    fn merge_keeps_bottom_k() {
        let mut g = vec![1, 5, 9];
        let mut scratch = Vec::new();
        merge_bottom_k(&mut g, &[2, 3, 10], 4, &mut scratch);
        assert_eq!(g, vec![1, 2, 3, 5]);
        merge_bottom_k(&mut g, &[], 4, &mut scratch);
        assert_eq!(g, vec![1, 2, 3, 5]);
        let mut e = Vec::new();
        merge_bottom_k(&mut e, &[7], 4, &mut scratch);
        assert_eq!(e, vec![7]);
    }

    #[test]
    fn isolated_node_sketch_holds_own_pairs() {
        let g = MultiInstanceGraph::from_arc_lists(3, vec![vec![(1, 2)], vec![(2, 1)]]).unwrap();
        let ra = RankAssignment::new(3, 2, 4, 9).unwrap();
        let set = build_sketches(&g, &ra, 4).unwrap();
        let mut own = [ra.rank_of(0, 0).unwrap(), ra.rank_of(0, 1).unwrap()];
        own.sort();
        assert_eq!(set.sketch(0).unwrap().ranks(), &own[..]);
    }

    #[test]
    fn complete_graph_sketches_are_global_bottom_k() {
        let n = 6u32;
        let arcs: Vec<_> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let g =
            MultiInstanceGraph::from_arc_lists(n, vec![arcs.clone(), arcs.clone(), arcs]).unwrap();
        let ra = RankAssignment::new(n, 3, 4, 1).unwrap();
        let set = build_sketches(&g, &ra, 4).unwrap();
        for s in set.sketches() {
            assert_eq!(s.ranks(), &[1, 2, 3, 4]);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = MultiInstanceGraph::from_arc_lists(3, vec![vec![(0, 1)]]).unwrap();
        let ra = RankAssignment::new(4, 1, 2, 0).unwrap();
        assert!(build_sketches(&g, &ra, 2).is_err());
        let ra = RankAssignment::new(3, 1, 2, 0).unwrap();
        assert!(build_sketches(&g, &ra, 0).is_err());
        let g2 = MultiInstanceGraph::from_arc_lists(3, vec![vec![], vec![]]).unwrap();
        let ra = RankAssignment::new(3, 2, 1, 0).unwrap();
        assert!(build_sketches(&g2, &ra, 2).is_err());
    }

    #[test]
    fn query_rejects_unknown_nodes() {
        let g = MultiInstanceGraph::from_arc_lists(3, vec![vec![(0, 1)]]).unwrap();
        let ra = RankAssignment::new(3, 1, 2, 0).unwrap();
        let set = build_sketches(&g, &ra, 2).unwrap();
        match set.query(&[0, 7, 9]) {
            Err(Error::UnknownNodes(ids)) => assert_eq!(ids, vec![7, 9]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
