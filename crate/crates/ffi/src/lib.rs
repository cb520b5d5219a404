//! C interface to skim-core.
//!
//! Every fallible call returns a [`SkimStatus`]; on failure the message is
//! available from [`skim_last_error`] until the next call on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skim::format;
use skim::{
    assign_uniform, assign_weighted_cascade, build_sketches, exact_greedy, exact_influence,
    load_edge_list, sample_instances, skim_run, Error, GreedyMode, MultiInstanceGraph, NodeId,
    RankAssignment, SeedSequence, SketchSet, SkimConfig,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Format = 4,
    Io = 5,
    UnknownNodes = 6,
    Panic = 7,
}

/// Propagation instances.
pub struct SkimGraph(MultiInstanceGraph);

/// Combined reachability sketches for every node.
pub struct SkimSketches(SketchSet);

/// Seed nodes in selection order with their marginal coverage.
pub struct SkimSeeds(SeedSequence);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SkimStatus {
    match e {
        Error::Parse { .. } | Error::EmptyInput => SkimStatus::Parse,
        Error::Domain(_) => SkimStatus::InvalidArgument,
        Error::UnknownNodes(_) => SkimStatus::UnknownNodes,
        Error::Format(_) => SkimStatus::Format,
        Error::Io(_) => SkimStatus::Io,
    }
}

struct Fail(SkimStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(SkimStatus::Io, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SkimStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkimStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SkimStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(SkimStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SkimStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn skim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads an edge list and samples `ell` instances. `p < 0` selects the
/// weighted cascade scheme, otherwise every arc is live with probability `p`.
///
/// # Safety
/// `edge_list` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_sample(
    edge_list: *const c_char,
    directed: bool,
    p: f64,
    ell: u32,
    seed: u64,
    out_graph: *mut *mut SkimGraph,
) -> SkimStatus {
    guard(|| {
        let slot = out(out_graph)?;
        let file = File::open(path(edge_list)?)?;
        let base = load_edge_list(BufReader::new(file), directed)?;
        let model = if p < 0.0 {
            assign_weighted_cascade(base)
        } else {
            assign_uniform(base, p)?
        };
        *slot = boxed(SkimGraph(sample_instances(&model, ell, seed)?));
        Ok(())
    })
}

/// Builds instances from flat arc arrays: instance `i` owns the next
/// `arc_counts[i]` entries of `tails` and `heads`.
///
/// # Safety
/// `arc_counts` must hold `ell` entries and `tails`/`heads` their sum.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_from_arcs(
    n: u32,
    ell: u32,
    arc_counts: *const usize,
    tails: *const u32,
    heads: *const u32,
    out_graph: *mut *mut SkimGraph,
) -> SkimStatus {
    guard(|| {
        let slot = out(out_graph)?;
        let counts = slice(arc_counts, ell as usize)?;
        let total: usize = counts.iter().sum();
        let (tails, heads) = (slice(tails, total)?, slice(heads, total)?);
        let mut lists = Vec::with_capacity(ell as usize);
        let mut at = 0;
        for &c in counts {
            lists.push(
                tails[at..at + c]
                    .iter()
                    .copied()
                    .zip(heads[at..at + c].iter().copied())
                    .collect(),
            );
            at += c;
        }
        *slot = boxed(SkimGraph(MultiInstanceGraph::from_arc_lists(n, lists)?));
        Ok(())
    })
}

/// # Safety
/// `file` must be a NUL-terminated string and `out_graph` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_read(
    file: *const c_char,
    out_graph: *mut *mut SkimGraph,
) -> SkimStatus {
    guard(|| {
        let slot = out(out_graph)?;
        let g = format::read_instances(BufReader::new(File::open(path(file)?)?))?;
        *slot = boxed(SkimGraph(g));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library; `file` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_write(
    graph: *const SkimGraph,
    file: *const c_char,
) -> SkimStatus {
    guard(|| {
        let g = deref(graph)?;
        format::write_instances(&g.0, BufWriter::new(File::create(path(file)?)?))?;
        Ok(())
    })
}

/// Node count, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_node_count(graph: *const SkimGraph) -> u32 {
    graph.as_ref().map_or(0, |g| g.0.node_count())
}

/// Instance count, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_instance_count(graph: *const SkimGraph) -> u32 {
    graph.as_ref().map_or(0, |g| g.0.instance_count())
}

/// # Safety
/// `graph` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skim_graph_free(graph: *mut SkimGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Exact influence of `seeds` averaged over the instances.
///
/// # Safety
/// `seeds` must hold `len` entries; `graph` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn skim_exact_influence(
    graph: *const SkimGraph,
    seeds: *const u32,
    len: usize,
    out_value: *mut f64,
) -> SkimStatus {
    guard(|| {
        let g = deref(graph)?;
        let slot = out(out_value)?;
        *slot = exact_influence(&g.0, slice(seeds, len)?)?.value();
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library; `out_sketches` must be valid.
#[no_mangle]
pub unsafe extern "C" fn skim_sketches_build(
    graph: *const SkimGraph,
    k: u32,
    seed: u64,
    out_sketches: *mut *mut SkimSketches,
) -> SkimStatus {
    guard(|| {
        let g = &deref(graph)?.0;
        let slot = out(out_sketches)?;
        let ra = RankAssignment::new(g.node_count(), g.instance_count(), k, seed)?;
        *slot = boxed(SkimSketches(build_sketches(g, &ra, k)?));
        Ok(())
    })
}

/// # Safety
/// `file` must be NUL-terminated and `out_sketches` valid.
#[no_mangle]
pub unsafe extern "C" fn skim_sketches_read(
    file: *const c_char,
    out_sketches: *mut *mut SkimSketches,
) -> SkimStatus {
    guard(|| {
        let slot = out(out_sketches)?;
        let set = format::read_sketches(BufReader::new(File::open(path(file)?)?))?;
        *slot = boxed(SkimSketches(set));
        Ok(())
    })
}

/// # Safety
/// `sketches` must come from this library; `file` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn skim_sketches_write(
    sketches: *const SkimSketches,
    file: *const c_char,
) -> SkimStatus {
    guard(|| {
        let s = deref(sketches)?;
        format::write_sketches(&s.0, BufWriter::new(File::create(path(file)?)?))?;
        Ok(())
    })
}

/// Estimated influence of `seeds` from their sketches.
///
/// # Safety
/// `seeds` must hold `len` entries; `sketches` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn skim_sketches_query(
    sketches: *const SkimSketches,
    seeds: *const u32,
    len: usize,
    out_value: *mut f64,
) -> SkimStatus {
    guard(|| {
        let s = deref(sketches)?;
        let slot = out(out_value)?;
        *slot = s.0.query(slice(seeds, len)?)?;
        Ok(())
    })
}

/// # Safety
/// `sketches` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skim_sketches_free(sketches: *mut SkimSketches) {
    if !sketches.is_null() {
        drop(Box::from_raw(sketches));
    }
}

/// Sketch-based greedy selection of `s` seeds (`s == 0` selects all nodes).
///
/// # Safety
/// `graph` must come from this library; `out_seeds` must be valid.
#[no_mangle]
pub unsafe extern "C" fn skim_select(
    graph: *const SkimGraph,
    k: u32,
    s: usize,
    seed: u64,
    out_seeds: *mut *mut SkimSeeds,
) -> SkimStatus {
    guard(|| {
        let g = &deref(graph)?.0;
        let slot = out(out_seeds)?;
        let target = (s > 0).then_some(s);
        *slot = boxed(SkimSeeds(
            skim_run(g, SkimConfig::new(k, target, seed))?.seeds,
        ));
        Ok(())
    })
}

/// Exact greedy selection of `s` seeds, lazy unless `naive` is set.
///
/// # Safety
/// `graph` must come from this library; `out_seeds` must be valid.
#[no_mangle]
pub unsafe extern "C" fn skim_greedy(
    graph: *const SkimGraph,
    s: usize,
    naive: bool,
    out_seeds: *mut *mut SkimSeeds,
) -> SkimStatus {
    guard(|| {
        let g = &deref(graph)?.0;
        let slot = out(out_seeds)?;
        let mode = if naive {
            GreedyMode::Naive
        } else {
            GreedyMode::Lazy
        };
        *slot = boxed(SkimSeeds(exact_greedy(g, s, mode)?));
        Ok(())
    })
}

/// Number of selected seeds, or 0 for NULL.
///
/// # Safety
/// `seeds` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn skim_seeds_len(seeds: *const SkimSeeds) -> usize {
    seeds.as_ref().map_or(0, |s| s.0.len())
}

/// Node and marginal coverage (in node-instance pairs) at `position`.
///
/// # Safety
/// `seeds` must come from this library; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn skim_seeds_get(
    seeds: *const SkimSeeds,
    position: usize,
    out_node: *mut u32,
    out_covered: *mut u64,
) -> SkimStatus {
    guard(|| {
        let s = deref(seeds)?;
        let (node, covered) = (out(out_node)?, out(out_covered)?);
        let e = s.0.entries().get(position).ok_or_else(|| {
            Fail(
                SkimStatus::InvalidArgument,
                format!("position {position} out of range"),
            )
        })?;
        *node = e.node as NodeId;
        *covered = e.covered;
        Ok(())
    })
}

/// # Safety
/// `seeds` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skim_seeds_free(seeds: *mut SkimSeeds) {
    if !seeds.is_null() {
        drop(Box::from_raw(seeds));
    }
}
