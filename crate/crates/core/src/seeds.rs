//! Ordered seed lists with exact marginal influences, and their CSV form.

use std::io::{self, Write};

use serde::Serialize;

use crate::graph::NodeId;

/// One selected seed. `covered` is the number of node-instance pairs the
/// seed newly covers; its marginal influence is `covered / ell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeedEntry {
    pub node: NodeId,
    pub covered: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeedSequence {
    ell: u32,
    entries: Vec<SeedEntry>,
}

impl SeedSequence {
    pub fn new(ell: u32) -> Self {
        SeedSequence {
            ell,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, node: NodeId, covered: u64) {
        self.entries.push(SeedEntry { node, covered });
    }

    pub fn instance_count(&self) -> u32 {
        self.ell
    }

    pub fn entries(&self) -> &[SeedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.node).collect()
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    /// Marginal influence of the seed at `pos`, in expected nodes.
    pub fn marginal(&self, pos: usize) -> f64 {
        self.entries[pos].covered as f64 / self.ell as f64
    }

    /// Pairs covered by the first `len` seeds.
    pub fn prefix_covered(&self, len: usize) -> u64 {
        self.entries[..len].iter().map(|e| e.covered).sum()
    }

    /// Influence of the first `len` seeds, in expected nodes.
    pub fn prefix_influence(&self, len: usize) -> f64 {
        self.prefix_covered(len) as f64 / self.ell as f64
    }

    /// Writes `position,node,marginal,cumulative,marginal_num` rows, plus an
    /// `influence_heldout` column when `heldout` is given (one value per row).
    /// `labels` maps dense node ids back to input ids.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        labels: Option<&[u64]>,
        heldout: Option<&[f64]>,
    ) -> io::Result<()> {
        write!(out, "position,node,marginal,cumulative,marginal_num")?;
        if heldout.is_some() {
            write!(out, ",influence_heldout")?;
        }
        writeln!(out)?;
        let mut cumulative = 0u64;
        for (pos, e) in self.entries.iter().enumerate() {
            cumulative += e.covered;
            let node = labels.map_or(e.node as u64, |l| l[e.node as usize]);
            write!(
                out,
                "{},{},{},{},{}",
                pos + 1,
                node,
                e.covered as f64 / self.ell as f64,
                cumulative as f64 / self.ell as f64,
                e.covered
            )?;
            if let Some(h) = heldout {
                write!(out, ",{}", h[pos])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut s = SeedSequence::new(4);
        s.push(3, 6);
        s.push(0, 1);
        let mut buf = Vec::new();
        s.write_csv(&mut buf, None, None).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "position,node,marginal,cumulative,marginal_num\n1,3,1.5,1.5,6\n2,0,0.25,1.75,1\n"
        );
        let mut buf = Vec::new();
        s.write_csv(&mut buf, Some(&[10, 11, 12, 13]), Some(&[1.0, 2.5]))
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "position,node,marginal,cumulative,marginal_num,influence_heldout\n\
             1,13,1.5,1.5,6,1\n2,10,0.25,1.75,1,2.5\n"
        );
    }
}
