//! Collective streaming: a tree of collective-streaming elements (CEs)
//! between memory and MAC-only PEs.
//!
//! The root CE sits on the memory port. Data moves only along tree edges,
//! one level per `level_latency` cycles, and CEs replicate an element at
//! branch points so the memory port carries each distinct element once.
//! PEs never exchange data with each other.

mod gemm;
mod inner;
mod tree;

pub use gemm::{cs_gemm_cycle_formula, simulate_cs_gemm, PeAssignment};
pub use inner::simulate_tree_inner_product;
pub use tree::{build_ce_tree, tree_collective_latency, CeTree};
