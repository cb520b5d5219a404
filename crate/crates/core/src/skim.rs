//! Sketch-space greedy influence maximization.
//!
//! Node-instance pairs are processed by increasing permutation rank. Each
//! uncovered pair `(u, i)` starts a reverse search in instance `i` that adds
//! the pair's rank to the partial sketch of every node reaching `u`. The
//! first node whose sketch reaches `k` entries has the smallest threshold
//! and hence the largest estimated influence; it becomes the next seed.
//! Everything the seed reaches is then covered, and covered ranks are
//! removed from all partial sketches through an inverted index, which leaves
//! the sketches of the residual problem. Sketch building resumes after the
//! last processed rank.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{MultiInstanceGraph, NodeId};
use crate::ledger::{ErrorLedger, IterationRecord};
use crate::ranks::{to_uniform_rank, Pair, Rank, RankAssignment};
use crate::seeds::SeedSequence;

/// Outcome of one sketch-building phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Advance {
    /// `node`'s sketch reached size k while processing `rank`.
    Full { node: NodeId, rank: Rank },
    /// All ranks were processed without a full sketch; `node` has the
    /// largest partial sketch (smallest id among ties).
    Largest { node: NodeId },
    /// Every pair is covered.
    Exhausted,
}

impl Advance {
    pub fn node(&self) -> Option<NodeId> {
        match *self {
            Advance::Full { node, .. } | Advance::Largest { node } => Some(node),
            Advance::Exhausted => None,
        }
    }
}

/// Counters describing a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SkimStats {
    /// Ranks added to partial sketches.
    pub insertions: u64,
    /// Arcs scanned by reverse searches.
    pub reverse_arc_scans: u64,
    /// Pairs whose reverse search was started.
    pub searches: u64,
    /// Chunks of ranks materialized.
    pub chunks: u32,
    /// Failed in-run checks (only counted with verification enabled).
    pub violations: u64,
}

/// Mutable state of the residual problem: coverage, partial sketch sizes and
/// the inverted index from processed pairs to the nodes holding their rank.
pub struct ResidualState<'g> {
    g: &'g MultiInstanceGraph,
    ranks: RankAssignment,
    n: usize,
    k: u32,
    /// Instance-major: pair `(v, i)` at `i * n + v`.
    covered: Vec<bool>,
    size: Vec<u32>,
    index: Vec<Vec<NodeId>>,
    /// Non-seed nodes per sketch size `0..=k`.
    histogram: Vec<u32>,
    seeded: Vec<bool>,
    /// Last processed rank; 0 before the first.
    cursor: Rank,
    mark: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
    stats: SkimStats,
}

impl<'g> ResidualState<'g> {
    pub fn new(g: &'g MultiInstanceGraph, k: u32, rank_seed: u64) -> Result<Self> {
        let ranks = RankAssignment::new(g.node_count(), g.instance_count(), k, rank_seed)?;
        Self::with_ranks(g, ranks, k)
    }

    pub fn with_ranks(g: &'g MultiInstanceGraph, ranks: RankAssignment, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("sketch size k must be at least 1"));
        }
        if ranks.node_count() != g.node_count() || ranks.instance_count() != g.instance_count() {
            return Err(Error::domain("rank assignment does not match the graph"));
        }
        let n = g.node_count() as usize;
        let pairs = g.pair_count() as usize;
        let mut histogram = vec![0; k as usize + 1];
        histogram[0] = n as u32;
        Ok(ResidualState {
            g,
            n,
            k,
            covered: vec![false; pairs],
            size: vec![0; n],
            index: vec![Vec::new(); pairs],
            histogram,
            seeded: vec![false; n],
            cursor: 0,
            mark: vec![u32::MAX; n],
            epoch: 0,
            queue: Vec::new(),
            stats: SkimStats {
                chunks: ranks.chunk_count(),
                ..SkimStats::default()
            },
            ranks,
        })
    }

    #[inline]
    fn slot(&self, p: Pair) -> usize {
        p.instance as usize * self.n + p.node as usize
    }

    pub fn is_covered(&self, v: NodeId, instance: u32) -> bool {
        self.covered[instance as usize * self.n + v as usize]
    }

    pub fn is_seed(&self, v: NodeId) -> bool {
        self.seeded[v as usize]
    }

    pub fn sketch_size(&self, v: NodeId) -> u32 {
        self.size[v as usize]
    }

    pub fn cursor(&self) -> Rank {
        self.cursor
    }

    pub fn ranks(&self) -> &RankAssignment {
        &self.ranks
    }

    pub fn stats(&self) -> SkimStats {
        self.stats
    }

    /// Nodes whose partial sketch holds the rank of pair `(v, i)`.
    pub fn index_entry(&self, v: NodeId, instance: u32) -> &[NodeId] {
        &self.index[instance as usize * self.n + v as usize]
    }

    fn bump_size(&mut self, v: NodeId, up: bool) {
        let s = &mut self.size[v as usize];
        self.histogram[*s as usize] -= 1;
        if up {
            *s += 1;
        } else {
            *s -= 1;
        }
        self.histogram[*s as usize] += 1;
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == u32::MAX {
            self.mark.fill(u32::MAX);
            self.epoch = 0;
        }
        self.epoch
    }

    /// Processes pairs by increasing rank until some partial sketch reaches
    /// size k. The search that fills it is abandoned at that point: its
    /// source pair is reachable from the returned node and gets covered by
    /// the residual update.
    pub fn advance(&mut self) -> Advance {
        let k = self.k;
        loop {
            if self.cursor == self.ranks.horizon() {
                if !self.ranks.extend_chunk() {
                    break;
                }
                self.stats.chunks += 1;
            }
            self.cursor += 1;
            let pair = self
                .ranks
                .pair_at(self.cursor)
                .expect("rank within horizon");
            let slot = self.slot(pair);
            if self.covered[slot] {
                continue;
            }
            self.stats.searches += 1;
            let inst = self.g.instance(pair.instance);
            let base = pair.instance as usize * self.n;
            let epoch = self.next_epoch();
            self.queue.clear();
            self.queue.push(pair.node);
            self.mark[pair.node as usize] = epoch;
            let mut head = 0;
            while head < self.queue.len() {
                let v = self.queue[head];
                head += 1;
                self.bump_size(v, true);
                self.stats.insertions += 1;
                self.index[slot].push(v);
                if self.size[v as usize] == k {
                    return Advance::Full {
                        node: v,
                        rank: self.cursor,
                    };
                }
                let preds = inst.in_neighbors(v);
                self.stats.reverse_arc_scans += preds.len() as u64;
                for &w in preds {
                    if self.mark[w as usize] != epoch && !self.covered[base + w as usize] {
                        self.mark[w as usize] = epoch;
                        self.queue.push(w);
                    }
                }
            }
        }
        // every rank processed
        let mut best: Option<NodeId> = None;
        for v in 0..self.n as NodeId {
            let s = self.size[v as usize];
            if s > 0 && best.is_none_or(|b| s > self.size[b as usize]) {
                best = Some(v);
            }
        }
        match best {
            Some(node) => Advance::Largest { node },
            None => Advance::Exhausted,
        }
    }

    /// Largest sketch size among non-seed nodes other than `selected`, where
    /// the rank processed last (if its search was cut short at `selected`)
    /// is not counted.
    pub fn runner_up_size(&mut self, outcome: Advance) -> u32 {
        let (selected, last_slot) = match outcome {
            Advance::Full { node, rank } => {
                let pair = self.ranks.pair_at(rank).expect("processed rank");
                (node, Some(self.slot(pair)))
            }
            Advance::Largest { node } => (node, None),
            Advance::Exhausted => return 0,
        };
        let last: Vec<NodeId> = last_slot.map(|s| self.index[s].clone()).unwrap_or_default();
        let excluded = |v: NodeId| v == selected;
        // take the last rank out of everyone's count, and the selected node out entirely
        for &w in last.iter().filter(|&&w| !excluded(w)) {
            let s = self.size[w as usize] as usize;
            self.histogram[s] -= 1;
            self.histogram[s - 1] += 1;
        }
        let sel = self.size[selected as usize] as usize;
        self.histogram[sel] -= 1;
        let runner_up = (0..self.histogram.len())
            .rev()
            .find(|&s| self.histogram[s] > 0)
            .unwrap_or(0) as u32;
        self.histogram[sel] += 1;
        for &w in last.iter().filter(|&&w| !excluded(w)) {
            let s = self.size[w as usize] as usize;
            self.histogram[s - 1] -= 1;
            self.histogram[s] += 1;
        }
        runner_up
    }

    /// Makes `x` a seed: covers every uncovered pair `x` reaches, drops the
    /// covered ranks from all partial sketches and returns the number of
    /// newly covered pairs.
    pub fn apply_residual(&mut self, x: NodeId) -> Result<u64> {
        if x as usize >= self.n {
            return Err(Error::UnknownNodes(vec![x as u64]));
        }
        if self.seeded[x as usize] {
            return Err(Error::domain(format!("node {x} is already a seed")));
        }
        let mut newly = 0u64;
        for i in 0..self.g.instance_count() {
            let base = i as usize * self.n;
            if self.covered[base + x as usize] {
                continue;
            }
            let inst = self.g.instance(i);
            self.covered[base + x as usize] = true;
            self.queue.clear();
            self.queue.push(x);
            let mut head = 0;
            while head < self.queue.len() {
                let v = self.queue[head];
                head += 1;
                newly += 1;
                let holders = std::mem::take(&mut self.index[base + v as usize]);
                for w in holders {
                    self.bump_size(w, false);
                }
                for &w in inst.out_neighbors(v) {
                    if !self.covered[base + w as usize] {
                        self.covered[base + w as usize] = true;
                        self.queue.push(w);
                    }
                }
            }
        }
        self.seeded[x as usize] = true;
        let s = self.size[x as usize] as usize;
        self.histogram[s] -= 1;
        Ok(newly)
    }

    /// Instances in which `v` is still uncovered.
    pub fn uncovered_instances(&self, v: NodeId) -> u64 {
        (0..self.g.instance_count())
            .filter(|&i| !self.is_covered(v, i))
            .count() as u64
    }

    /// At a `Full` outcome, no other node may hold a full sketch.
    fn check_selection(&self, outcome: Advance) -> bool {
        match outcome {
            Advance::Full { node, .. } => {
                self.histogram[self.k as usize] == 1 && self.size[node as usize] == self.k
            }
            _ => self.histogram[self.k as usize] == 0,
        }
    }

    /// Rebuilds the partial sketches of the residual problem from scratch
    /// (reverse searches from every processed uncovered pair) and compares
    /// them with the maintained index and sizes.
    pub fn check_residual_sketches(&mut self) -> bool {
        let mut expected_size = vec![0u32; self.n];
        for rank in 1..=self.cursor {
            let pair = self.ranks.pair_at(rank).expect("processed rank");
            let slot = self.slot(pair);
            if self.covered[slot] {
                if !self.index[slot].is_empty() {
                    return false;
                }
                continue;
            }
            let inst = self.g.instance(pair.instance);
            let base = pair.instance as usize * self.n;
            let mut seen = vec![false; self.n];
            let mut stack = vec![pair.node];
            seen[pair.node as usize] = true;
            let mut reach = Vec::new();
            while let Some(v) = stack.pop() {
                reach.push(v);
                for &w in inst.in_neighbors(v) {
                    if !seen[w as usize] && !self.covered[base + w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            reach.sort_unstable();
            let mut held = self.index[slot].clone();
            held.sort_unstable();
            if reach != held {
                return false;
            }
            for v in reach {
                expected_size[v as usize] += 1;
            }
        }
        (0..self.n).all(|v| self.seeded[v] || expected_size[v] == self.size[v])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkimConfig {
    pub k: u32,
    /// Number of seeds to select; `None` selects all `n` nodes.
    pub seeds: Option<usize>,
    pub rank_seed: u64,
    /// Run the selection and residual checks after every iteration.
    pub verify: bool,
}

impl SkimConfig {
    pub fn new(k: u32, seeds: Option<usize>, rank_seed: u64) -> Self {
        SkimConfig {
            k,
            seeds,
            rank_seed,
            verify: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SkimOutput {
    pub seeds: SeedSequence,
    pub ledger: ErrorLedger,
    pub stats: SkimStats,
}

/// Runs SKIM and returns the first `config.seeds` (or all) selections with
/// their exact marginal influences.
pub fn skim_run(g: &MultiInstanceGraph, config: SkimConfig) -> Result<SkimOutput> {
    let n = g.node_count() as usize;
    let target = config.seeds.unwrap_or(n);
    if target > n {
        return Err(Error::domain(format!("s = {target} exceeds n = {n}")));
    }
    let (nn, ell) = (g.node_count(), g.instance_count());
    let mut state = ResidualState::new(g, config.k, config.rank_seed)?;
    let mut seeds = SeedSequence::new(ell);
    let mut ledger = ErrorLedger::new(nn, ell);
    let mut violations = 0u64;

    while seeds.len() < target {
        let outcome = state.advance();
        if config.verify && !state.check_selection(outcome) {
            violations += 1;
        }
        let Some(node) = outcome.node() else {
            // nothing left to cover: finish in id order
            for v in 0..nn {
                if seeds.len() == target {
                    break;
                }
                if !state.is_seed(v) {
                    let covered = state.uncovered_instances(v);
                    state.apply_residual(v)?;
                    seeds.push(v, covered);
                }
            }
            break;
        };
        let runner_up = state.runner_up_size(outcome);
        let tau = match state.cursor() {
            0 => 0.0,
            c => to_uniform_rank(c, nn, ell)?,
        };
        let covered = state.apply_residual(node)?;
        if config.verify && !state.check_residual_sketches() {
            violations += 1;
        }
        seeds.push(node, covered);
        ledger.accumulate(IterationRecord::new(runner_up, tau, covered));
    }

    let mut stats = state.stats();
    stats.violations = violations;
    Ok(SkimOutput {
        seeds,
        ledger,
        stats,
    })
}
