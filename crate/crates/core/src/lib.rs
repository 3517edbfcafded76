//! Deterministic simulators and analytic models for matrix multiplication
//! on three on-chip fabrics (weight-stationary systolic array,
//! store-and-forward mesh, hierarchical collective-streaming tree) and on a
//! SUMMA-style process grid.
//!
//! Everything here is pure computation over exact integers (operands) and
//! `f64` (analytic costs). The crate is `no_std` and only needs `alloc`;
//! configuration parsing, report files and the CLI live in the companion
//! harness crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;
mod math;

pub mod bounds;
pub mod meshflow;
pub mod sim;
pub mod streamer;
pub mod summa;
pub mod systolic;
pub mod workload;

pub use error::{Error, Result};
pub use math::{ceil_div, ceil_log};
pub use sim::{SimResult, Trace, TransferCounts};
pub use workload::{GemmShape, Matrix};
