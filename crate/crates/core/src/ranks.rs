//! Structured permutation ranks over node-instance pairs.
//!
//! Ranks are positions `1..=n*ell` of a random permutation of all pairs
//! `(v, i)`. The permutation is built in chunks of `n` consecutive ranks;
//! every node appears exactly once per chunk, paired with an instance drawn
//! uniformly from the instances not yet used for that node. Only the first
//! `min(k, ell)` chunks can ever enter a bottom-k sketch, so that many are
//! materialized up front and more are generated on demand.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Permutation rank, starting at 1.
pub type Rank = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub node: NodeId,
    pub instance: u32,
}

#[derive(Clone, Debug)]
pub struct RankAssignment {
    n: u32,
    ell: u32,
    seed: u64,
    /// `pairs[t - 1]` holds the pair with rank `t`.
    pairs: Vec<Pair>,
    /// Rank of pair `(v, i)` at `v * ell + i`; 0 means beyond the horizon.
    rank_of: Vec<Rank>,
    /// Per node, a block of `ell` instance ids; the first
    /// `ell - chunks` entries of each block are still unused.
    pools: Vec<u32>,
    order: Vec<NodeId>,
    rng: ChaCha8Rng,
}

impl RankAssignment {
    /// Materializes `min(k, ell)` chunks.
    pub fn new(n: u32, ell: u32, k: u32, seed: u64) -> Result<Self> {
        if n == 0 || ell == 0 {
            return Err(Error::domain("rank assignment needs n >= 1 and ell >= 1"));
        }
        if k == 0 {
            return Err(Error::domain("sketch size k must be at least 1"));
        }
        let pair_count = n as usize * ell as usize;
        let mut ra = RankAssignment {
            n,
            ell,
            seed,
            pairs: Vec::new(),
            rank_of: vec![0; pair_count],
            pools: (0..n).flat_map(|_| 0..ell).collect(),
            order: (0..n).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for _ in 0..k.min(ell) {
            ra.extend_chunk();
        }
        Ok(ra)
    }

    /// Appends the next chunk of `n` ranks. Returns false once all `ell`
    /// chunks exist.
    pub fn extend_chunk(&mut self) -> bool {
        let chunk = self.chunk_count();
        if chunk == self.ell {
            return false;
        }
        let ell = self.ell as usize;
        let remaining = ell - chunk as usize;
        self.order.shuffle(&mut self.rng);
        for v in 0..self.n as usize {
            let block = &mut self.pools[v * ell..v * ell + remaining];
            let pick = self.rng.gen_range(0..remaining);
            block.swap(pick, remaining - 1);
        }
        let base = self.pairs.len() as Rank;
        for (offset, &v) in self.order.iter().enumerate() {
            let instance = self.pools[v as usize * ell + remaining - 1];
            let rank = base + offset as Rank + 1;
            self.rank_of[v as usize * ell + instance as usize] = rank;
            self.pairs.push(Pair { node: v, instance });
        }
        true
    }

    pub fn node_count(&self) -> u32 {
        self.n
    }

    pub fn instance_count(&self) -> u32 {
        self.ell
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Size of the pair universe, `D = n * ell`.
    pub fn universe(&self) -> u64 {
        self.n as u64 * self.ell as u64
    }

    pub fn chunk_count(&self) -> u32 {
        (self.pairs.len() / self.n as usize) as u32
    }

    /// Number of materialized ranks; ranks `1..=horizon()` are defined.
    pub fn horizon(&self) -> Rank {
        self.pairs.len() as Rank
    }

    pub fn pair_at(&self, rank: Rank) -> Option<Pair> {
        if rank == 0 {
            return None;
        }
        self.pairs.get(rank as usize - 1).copied()
    }

    /// `None` when the pair lies beyond the materialized horizon.
    pub fn rank_of(&self, node: NodeId, instance: u32) -> Option<Rank> {
        if node >= self.n || instance >= self.ell {
            return None;
        }
        match self.rank_of[node as usize * self.ell as usize + instance as usize] {
            0 => None,
            r => Some(r),
        }
    }

    /// Materialized pairs in rank order.
    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// For each instance, its materialized `(rank, node)` pairs by increasing rank.
    pub fn ranks_by_instance(&self) -> Vec<Vec<(Rank, NodeId)>> {
        let mut out = vec![Vec::new(); self.ell as usize];
        for (idx, p) in self.pairs.iter().enumerate() {
            out[p.instance as usize].push((idx as Rank + 1, p.node));
        }
        out
    }
}

/// Maps permutation rank `t` of a universe of `n * ell` pairs to the
/// fraction `(t - 1) / (n * ell - 1)` of other pairs ranked below it.
pub fn to_uniform_rank(t: Rank, n: u32, ell: u32) -> Result<f64> {
    let d = n as u64 * ell as u64;
    if t == 0 || t > d {
        return Err(Error::domain(format!("rank {t} outside 1..={d}")));
    }
    if d == 1 {
        return Ok(0.0);
    }
    Ok((t - 1) as f64 / (d - 1) as f64)
}
