//! Binary file formats. All integers are little-endian.
//!
//! Instance sets (`MIGR`):
//!
//! ```text
//! "MIGR" | version: u32 | n: u32 | ell: u32
//! per instance: arc count: u32, then (tail: u32, head: u32) pairs sorted by (tail, head)
//! ```
//!
//! Sketch sets (`CSKE`):
//!
//! ```text
//! "CSKE" | version: u32 | n: u32 | ell: u32 | k: u32 | rank seed: u64
//! per node: byte count: u32, then byte count / 8 ranks as u64, ascending
//! ```

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::graph::MultiInstanceGraph;
use crate::sketch::{CombinedSketch, SketchSet};

pub const INSTANCES_MAGIC: &[u8; 4] = b"MIGR";
pub const SKETCHES_MAGIC: &[u8; 4] = b"CSKE";
pub const VERSION: u32 = 1;

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format("truncated file".into())
    } else {
        Error::Io(e)
    }
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(truncated)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&m)
        )));
    }
    let version = read_u32(r).map_err(truncated)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn write_instances<W: Write>(g: &MultiInstanceGraph, mut w: W) -> io::Result<()> {
    w.write_all(INSTANCES_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&g.node_count().to_le_bytes())?;
    w.write_all(&g.instance_count().to_le_bytes())?;
    for inst in g.instances() {
        w.write_all(&(inst.arc_count() as u32).to_le_bytes())?;
        for (t, h) in inst.arcs() {
            w.write_all(&t.to_le_bytes())?;
            w.write_all(&h.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_instances<R: Read>(mut r: R) -> Result<MultiInstanceGraph> {
    read_header(&mut r, INSTANCES_MAGIC)?;
    let n = read_u32(&mut r).map_err(truncated)?;
    let ell = read_u32(&mut r).map_err(truncated)?;
    let mut lists = Vec::with_capacity(ell.min(1 << 16) as usize);
    for _ in 0..ell {
        let count = read_u32(&mut r).map_err(truncated)?;
        let mut arcs = Vec::with_capacity(count.min(1 << 20) as usize);
        let mut prev = None;
        for _ in 0..count {
            let t = read_u32(&mut r).map_err(truncated)?;
            let h = read_u32(&mut r).map_err(truncated)?;
            if prev.is_some_and(|p| p >= (t, h)) {
                return Err(Error::Format("arcs are not strictly sorted".into()));
            }
            prev = Some((t, h));
            arcs.push((t, h));
        }
        lists.push(arcs);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last instance".into()));
    }
    MultiInstanceGraph::from_arc_lists(n, lists).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_sketches<W: Write>(set: &SketchSet, mut w: W) -> io::Result<()> {
    w.write_all(SKETCHES_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&set.node_count().to_le_bytes())?;
    w.write_all(&set.instance_count().to_le_bytes())?;
    w.write_all(&set.k().to_le_bytes())?;
    w.write_all(&set.rank_seed().to_le_bytes())?;
    for s in set.sketches() {
        w.write_all(&((s.len() * 8) as u32).to_le_bytes())?;
        for r in s.ranks() {
            w.write_all(&r.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_sketches<R: Read>(mut r: R) -> Result<SketchSet> {
    read_header(&mut r, SKETCHES_MAGIC)?;
    let n = read_u32(&mut r).map_err(truncated)?;
    let ell = read_u32(&mut r).map_err(truncated)?;
    let k = read_u32(&mut r).map_err(truncated)?;
    let seed = read_u64(&mut r).map_err(truncated)?;
    let mut sketches = Vec::with_capacity(n.min(1 << 20) as usize);
    for _ in 0..n {
        let bytes = read_u32(&mut r).map_err(truncated)?;
        if bytes % 8 != 0 {
            return Err(Error::Format(format!(
                "sketch byte count {bytes} is not a multiple of 8"
            )));
        }
        if bytes / 8 > k {
            return Err(Error::Format(format!(
                "sketch of {} ranks exceeds k = {k}",
                bytes / 8
            )));
        }
        let ranks = (0..bytes / 8)
            .map(|_| read_u64(&mut r).map_err(truncated))
            .collect::<Result<Vec<_>>>()?;
        sketches.push(CombinedSketch::new(ranks, k).map_err(|e| Error::Format(e.to_string()))?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last sketch".into()));
    }
    SketchSet::from_parts(n, ell, k, seed, sketches).map_err(|e| Error::Format(e.to_string()))
}

/// Whether `bytes` starts with the instance-set magic.
pub fn is_instance_file(bytes: &[u8]) -> bool {
    bytes.starts_with(INSTANCES_MAGIC)
}
