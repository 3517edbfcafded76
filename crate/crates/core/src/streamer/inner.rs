use alloc::vec;
use alloc::vec::Vec;

use super::tree::build_ce_tree;
use crate::error::{Error, Result};
use crate::sim::{SimResult, Trace};
use crate::workload::{check_operands, Matrix};

/// Inner product with one pair per PE and the sum formed inside the CE tree.
///
/// All PEs multiply in cycle 0. Each following group of `level_latency`
/// cycles moves partial sums up one level, where a CE adds its children,
/// so the root holds the result after `1 + levels * level_latency` cycles.
pub fn simulate_tree_inner_product(a: &[i64], b: &[i64], fanout: usize, level_latency: u64) -> Result<SimResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { op: "inner_product", left: (1, a.len()), right: (b.len(), 1) });
    }
    check_operands(a)?;
    check_operands(b)?;
    let tree = build_ce_tree(a.len(), fanout, level_latency, 1)?;
    let n = a.len();

    let mut trace = Trace::default();
    let mut level: Vec<i64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    trace.push(n as u32, 0);
    let pes: Vec<usize> = (0..n).collect();
    tree.count_upward(&pes, 1, true, &mut trace.transfers);
    for _ in 0..tree.levels() {
        level = level.chunks(fanout).map(|c| c.iter().sum()).collect();
        trace.idle(level_latency as usize);
    }
    debug_assert_eq!(level.len(), 1);

    Ok(SimResult {
        cycles: trace.cycles(),
        result: Matrix::new(1, 1, vec![level[0]])?,
        mac_ops_issued: n as u64,
        units: n as u64,
        trace,
    })
}
