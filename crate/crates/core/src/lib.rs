//! Influence computation on sets of propagation instances with combined
//! bottom-k reachability sketches.
//!
//! * [`graph`]: edge-list loading, IC probability schemes, instance sampling.
//! * [`ranks`]: structured permutation ranks over node-instance pairs.
//! * [`sketch`]: combined reachability sketches and the influence oracle.
//! * [`skim`]: sketch-space greedy influence maximization with residual updates.
//! * [`ledger`]: adaptive error bounds for SKIM selections.
//! * [`baselines`]: exact influence, exact greedy, degree ordering, brute force.
//! * [`format`]: binary instance and sketch files.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod format;
pub mod graph;
pub mod ledger;
pub mod ranks;
pub mod seeds;
pub mod sketch;
pub mod skim;

pub use baselines::{
    brute_force_optimum, degree_baseline, evaluate_sequence, exact_greedy, exact_influence,
    GreedyMode, InfluenceValue,
};
pub use error::{Error, Result};
pub use graph::{
    assign_uniform, assign_weighted_cascade, derive_seed, load_edge_list, sample_instances,
    BaseGraph, IcModel, MultiInstanceGraph, NodeId,
};
pub use ledger::{discrepancy_confidence, ErrorLedger, IterationRecord};
pub use ranks::{to_uniform_rank, Rank, RankAssignment};
pub use seeds::SeedSequence;
pub use sketch::{
    build_sketches, estimate_cardinality, estimate_influence_limit, query_influence,
    CombinedSketch, SketchSet,
};
pub use skim::{skim_run, ResidualState, SkimConfig, SkimOutput, SkimStats};
