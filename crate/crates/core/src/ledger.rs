//! Adaptive error estimation for SKIM.
//!
//! Each selection yields a Chernoff tail bound on how far the selected
//! seed's marginal gain may trail the true maximum. The per-iteration bounds
//! are turned into dominating discrete distributions and convolved into a
//! confidence curve for the total discrepancy of the seed prefix.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative error levels evaluated for every iteration.
pub const EPSILONS: [f64; 4] = [0.01, 0.02, 0.05, 0.1];

/// Number of geometric points in the reported curve.
pub const CURVE_POINTS: usize = 512;

/// Accumulation resolution as a fraction of `n`; also the low end of the
/// reported curve.
pub const RESOLUTION: f64 = 1e-4;

/// Upper bound on `Pr[Z < (1 - nu) mu]` for a sum of independent Bernoulli
/// trials, with `Z = k'`, `mu = tau * delta * (1 + eps)` and
/// `nu = 1 - k' / mu`: the probability that the selected seed's gain `delta`
/// (in pairs) trails the best gain by more than `eps * delta`, given that the
/// runner-up sketch held only `k'` entries below uniform rank `tau`.
///
/// Returns 1 when the bound is vacuous (`nu <= 0`).
pub fn discrepancy_confidence(k_prime: f64, tau: f64, delta: f64, eps: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::domain(format!("gain {delta} must be positive")));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::domain(format!("uniform rank {tau} outside (0, 1]")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::domain(format!("eps {eps} must be positive")));
    }
    if k_prime.is_nan() || k_prime < 0.0 {
        return Err(Error::domain(format!(
            "sketch size {k_prime} must be non-negative"
        )));
    }
    let mu = tau * delta * (1.0 + eps);
    let nu = 1.0 - k_prime / mu;
    if nu <= 0.0 {
        return Ok(1.0);
    }
    let rest = 1.0 - nu;
    let rest_log = if rest > 0.0 { rest * rest.ln() } else { 0.0 };
    Ok((mu * (-nu - rest_log)).exp().min(1.0))
}

/// One SKIM iteration as seen by the ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    /// Runner-up sketch size, not counting the last processed rank.
    pub k_prime: u32,
    /// Uniform rank of the last processed pair.
    pub tau: f64,
    /// Exact marginal gain of the selected seed, in pairs.
    pub delta: u64,
    /// `(eps, failure probability)` for every level in [`EPSILONS`].
    pub bounds: Vec<(f64, f64)>,
}

impl IterationRecord {
    pub fn new(k_prime: u32, tau: f64, delta: u64) -> Self {
        let bounds = EPSILONS
            .iter()
            .map(|&eps| {
                let p = if delta == 0 || tau <= 0.0 {
                    1.0
                } else {
                    discrepancy_confidence(k_prime as f64, tau, delta as f64, eps)
                        .expect("arguments validated above")
                };
                (eps, p)
            })
            .collect();
        IterationRecord {
            k_prime,
            tau,
            delta,
            bounds,
        }
    }

    /// Smallest `eps` whose failure probability is at most `alpha`.
    pub fn best_bound(&self, alpha: f64) -> Option<(f64, f64)> {
        self.bounds.iter().copied().find(|&(_, p)| p <= alpha)
    }
}

/// Confidence-vs-total-discrepancy distribution over a seed prefix.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorLedger {
    n: u32,
    ell: u32,
    quantum: f64,
    /// `mass[b]` bounds the probability that the total discrepancy is at
    /// most `b * quantum`; the final slot collects everything beyond `n`.
    mass: Vec<f64>,
    hi: usize,
    records: Vec<IterationRecord>,
}

impl ErrorLedger {
    pub fn new(n: u32, ell: u32) -> Self {
        let buckets = (1.0 / RESOLUTION).round() as usize;
        let mut mass = vec![0.0; buckets + 2];
        mass[0] = 1.0;
        ErrorLedger {
            n,
            ell,
            quantum: n as f64 * RESOLUTION,
            mass,
            hi: 0,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    fn overflow(&self) -> usize {
        self.mass.len() - 1
    }

    /// Grid slot holding discrepancy `d` (in expected nodes), rounded up.
    pub fn bucket_of(&self, d: f64) -> usize {
        let b = (d / self.quantum - 1e-9).ceil().max(0.0) as usize;
        b.min(self.overflow())
    }

    /// Support of the iteration's dominating distribution: `(slot, mass)`.
    fn iteration_masses(&self, rec: &IterationRecord) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(rec.bounds.len() + 1);
        let mut prev_tail = 1.0;
        for &(eps, p) in &rec.bounds {
            let tail = p.min(prev_tail);
            let d = eps * rec.delta as f64 / self.ell as f64;
            out.push((self.bucket_of(d), prev_tail - tail));
            prev_tail = tail;
        }
        out.push((self.overflow(), prev_tail));
        out
    }

    /// Folds one iteration into the curve.
    pub fn accumulate(&mut self, rec: IterationRecord) {
        let support = self.iteration_masses(&rec);
        let over = self.overflow();
        let mut next = vec![0.0; self.mass.len()];
        let mut hi = 0;
        for b in (0..=self.hi).chain(std::iter::once(over)) {
            let m = self.mass[b];
            if m == 0.0 {
                continue;
            }
            for &(shift, w) in &support {
                if w == 0.0 {
                    continue;
                }
                let target = if b == over || shift == over {
                    over
                } else {
                    (b + shift).min(over)
                };
                next[target] += m * w;
                if target != over {
                    hi = hi.max(target);
                }
            }
        }
        self.mass = next;
        self.hi = hi;
        self.records.push(rec);
    }

    /// Lower bound on the probability that the total discrepancy is at most `d`.
    pub fn confidence_at(&self, d: f64) -> f64 {
        if d < 0.0 {
            return 0.0;
        }
        let last = ((d / self.quantum + 1e-9).floor() as usize).min(self.overflow() - 1);
        self.mass[..=last].iter().sum::<f64>().min(1.0)
    }

    /// `(total discrepancy, confidence)` at [`CURVE_POINTS`] geometrically
    /// spaced points from `RESOLUTION * n` to `n`.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        let lo = self.quantum;
        let hi = self.n as f64;
        let ratio = (hi / lo).powf(1.0 / (CURVE_POINTS - 1) as f64);
        let mut cdf = Vec::with_capacity(self.mass.len());
        let mut acc = 0.0;
        for &m in &self.mass[..self.overflow()] {
            acc += m;
            cdf.push(acc.min(1.0));
        }
        (0..CURVE_POINTS)
            .map(|j| {
                let d = if j == CURVE_POINTS - 1 {
                    hi
                } else {
                    lo * ratio.powi(j as i32)
                };
                let last = ((d / self.quantum + 1e-9).floor() as usize).min(cdf.len() - 1);
                (d, cdf[last])
            })
            .collect()
    }
}
