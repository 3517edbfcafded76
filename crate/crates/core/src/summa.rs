//! Closed-form cost of SUMMA on a `p_rows x p_cols` process grid.
//!
//! Each of the `ceil(k / b)` steps broadcasts an `A` panel along every
//! process row and a `B` panel along every process column (all rows, resp.
//! columns, in parallel), then every node applies the rank-`b` update to its
//! local block. Accumulation is in place, so no reduce or gather is costed.
//! Communication and computation do not overlap.

use alloc::vec::Vec;

use crate::bounds::{collective_breakdown, CollectiveKind, CommModel, CostBreakdown};
use crate::error::{Error, Result};
use crate::math::{ceil_div, ceil_log};
use crate::workload::{step_widths, GemmShape};

pub const DEFAULT_ELEMENT_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterModel {
    p_rows: usize,
    p_cols: usize,
    comm: CommModel,
    node_mac_rate: f64,
    element_bytes: u64,
}

impl ClusterModel {
    pub fn new(p_rows: usize, p_cols: usize, comm: CommModel, node_mac_rate: f64) -> Result<Self> {
        if p_rows == 0 {
            return Err(Error::InvalidParameter { name: "p_rows", value: 0, expected: ">= 1" });
        }
        if p_cols == 0 {
            return Err(Error::InvalidParameter { name: "p_cols", value: 0, expected: ">= 1" });
        }
        if !(node_mac_rate.is_finite() && node_mac_rate > 0.0) {
            return Err(Error::InvalidReal { name: "node_mac_rate", expected: "finite and > 0" });
        }
        Ok(ClusterModel { p_rows, p_cols, comm, node_mac_rate, element_bytes: DEFAULT_ELEMENT_BYTES })
    }

    pub fn with_element_bytes(mut self, bytes: u64) -> Result<Self> {
        if bytes == 0 {
            return Err(Error::InvalidParameter { name: "element_bytes", value: 0, expected: ">= 1" });
        }
        self.element_bytes = bytes;
        Ok(self)
    }

    pub fn p_rows(&self) -> usize {
        self.p_rows
    }

    pub fn p_cols(&self) -> usize {
        self.p_cols
    }

    pub fn nodes(&self) -> usize {
        self.p_rows * self.p_cols
    }

    pub fn comm(&self) -> CommModel {
        self.comm
    }

    pub fn node_mac_rate(&self) -> f64 {
        self.node_mac_rate
    }

    pub fn element_bytes(&self) -> u64 {
        self.element_bytes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaReport {
    pub total_time: f64,
    pub comm_time: f64,
    pub comp_time: f64,
    /// Alpha part of `comm_time`.
    pub latency_time: f64,
    /// Beta part of `comm_time`.
    pub bandwidth_time: f64,
    pub steps: usize,
    pub row_broadcasts: usize,
    pub col_broadcasts: usize,
    /// MACs executed by each node, row-major over the process grid.
    pub node_macs: Vec<u64>,
}

pub fn simulate_summa(shape: GemmShape, block_width: usize, cluster: &ClusterModel) -> Result<SummaReport> {
    if block_width == 0 {
        return Err(Error::InvalidParameter { name: "block_width", value: 0, expected: ">= 1" });
    }
    let (pr, pc) = (cluster.p_rows, cluster.p_cols);
    let local_rows = ceil_div(shape.m(), pr) as u64;
    let local_cols = ceil_div(shape.n(), pc) as u64;
    let w = cluster.element_bytes;

    // Latency is summed as whole message rounds so it stays an exact multiple of alpha.
    let rounds_per_step = u64::from(ceil_log(pc as u64, 2) + ceil_log(pr as u64, 2));
    let mut comm = CostBreakdown::default();
    let mut steps = 0;
    // A block wider than k simply becomes a single step.
    for (_, bw) in step_widths(shape.k(), block_width.min(shape.k())) {
        let bw = bw as u64;
        let row = collective_breakdown(CollectiveKind::Broadcast, pc as u64, local_rows * bw * w, &cluster.comm);
        let col = collective_breakdown(CollectiveKind::Broadcast, pr as u64, bw * local_cols * w, &cluster.comm);
        comm.bandwidth += row.bandwidth + col.bandwidth;
        steps += 1;
    }
    comm.latency = (rounds_per_step * steps as u64) as f64 * cluster.comm.alpha();

    let node_macs = (0..pr)
        .flat_map(|r| {
            let rows = (r + 1) * shape.m() / pr - r * shape.m() / pr;
            (0..pc).map(move |c| {
                let cols = (c + 1) * shape.n() / pc - c * shape.n() / pc;
                (rows * cols * shape.k()) as u64
            })
        })
        .collect();
    let comp_time = shape.macs() as f64 / (cluster.nodes() as f64 * cluster.node_mac_rate);
    let comm_time = comm.total();
    Ok(SummaReport {
        total_time: comp_time + comm_time,
        comm_time,
        comp_time,
        latency_time: comm.latency,
        bandwidth_time: comm.bandwidth,
        steps,
        row_broadcasts: steps,
        col_broadcasts: steps,
        node_macs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub nodes: usize,
    pub report: SummaReport,
    /// `comm_time / total_time`.
    pub overhead: f64,
}

/// Weak scaling over square `q x q` grids: each node keeps an
/// `m x n` output block and the inner dimension stays `k`, so per-node work
/// and step count are fixed while broadcasts span `q` nodes.
pub fn weak_scaling_overhead(
    per_node: GemmShape,
    grid_sides: &[usize],
    block_width: usize,
    comm: CommModel,
    node_mac_rate: f64,
) -> Result<Vec<ScalingPoint>> {
    if grid_sides.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Other("grid sides must be strictly increasing".into()));
    }
    grid_sides
        .iter()
        .map(|&q| {
            let cluster = ClusterModel::new(q, q, comm, node_mac_rate)?;
            let shape = GemmShape::new(per_node.m() * q, per_node.n() * q, per_node.k())?;
            let report = simulate_summa(shape, block_width, &cluster)?;
            let overhead = if report.total_time > 0.0 { report.comm_time / report.total_time } else { 0.0 };
            Ok(ScalingPoint { nodes: q * q, report, overhead })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::collective_cost;

    fn cluster(pr: usize, pc: usize, alpha: f64, beta: f64) -> ClusterModel {
        ClusterModel::new(pr, pc, CommModel::new(alpha, beta).unwrap(), 1e9).unwrap()
    }

    fn cube(x: usize) -> GemmShape {
        GemmShape::new(x, x, x).unwrap()
    }

    #[test]
    fn single_node_has_no_communication() {
        let r = simulate_summa(cube(64), 8, &cluster(1, 1, 1e-6, 1e-9)).unwrap();
        assert_eq!(r.comm_time, 0.0);
        assert_eq!(r.total_time, r.comp_time);
        assert_eq!(r.comp_time, 64.0 * 64.0 * 64.0 / 1e9);
    }

    #[test]
    fn four_by_four_structure() {
        let cl = cluster(4, 4, 1e-6, 1e-9);
        let r = simulate_summa(cube(256), 32, &cl).unwrap();
        assert_eq!((r.steps, r.row_broadcasts, r.col_broadcasts), (8, 8, 8));
        // Hand enumeration of the eight identical steps.
        let m = cl.comm();
        let step = collective_cost(CollectiveKind::Broadcast, 4, 64 * 32 * 4, &m)
            + collective_cost(CollectiveKind::Broadcast, 4, 32 * 64 * 4, &m);
        let mut want = 0.0;
        for _ in 0..8 {
            want += step;
        }
        assert!((r.comm_time - want).abs() <= 1e-15 * want);
        // 2 rounds * (1e-6 + 8192 bytes * 1e-9) per broadcast, two per step.
        assert!((want - 8.0 * 2.0 * 2.0 * (1e-6 + 8192e-9)).abs() < 1e-15);

        let r16 = simulate_summa(cube(256), 16, &cl).unwrap();
        assert_eq!(r16.steps, 16);
        assert!(r16.latency_time > r.latency_time);
        assert!((r16.bandwidth_time - r.bandwidth_time).abs() <= 1e-15 * r.bandwidth_time);
    }

    #[test]
    fn latency_only_comm_is_exact() {
        let alpha = 3e-6;
        let r = simulate_summa(cube(256), 32, &cluster(4, 4, alpha, 0.0)).unwrap();
        assert_eq!(r.comm_time, 8.0 * (2.0 + 2.0) * alpha);
        let r = simulate_summa(GemmShape::new(100, 30, 77).unwrap(), 10, &cluster(3, 8, alpha, 0.0)).unwrap();
        assert_eq!(r.steps, 8);
        assert!((r.comm_time - 8.0 * (3.0 + 2.0) * alpha).abs() < 1e-18);
    }

    #[test]
    fn any_block_width_on_any_grid() {
        for b in [1, 7, 32, 256, 1000] {
            for (pr, pc) in [(1, 1), (4, 4), (3, 5), (16, 2)] {
                let r = simulate_summa(cube(256), b, &cluster(pr, pc, 1e-6, 1e-9)).unwrap();
                assert_eq!(r.steps, 256usize.div_ceil(b.min(256)));
                assert_eq!(r.node_macs.iter().sum::<u64>(), 256 * 256 * 256);
            }
        }
        assert!(simulate_summa(cube(8), 0, &cluster(2, 2, 0.0, 0.0)).is_err());
    }

    #[test]
    fn ragged_grids_conserve_macs() {
        let r = simulate_summa(GemmShape::new(10, 7, 3).unwrap(), 2, &cluster(3, 4, 1e-6, 1e-9)).unwrap();
        assert_eq!(r.node_macs.len(), 12);
        assert_eq!(r.node_macs.iter().sum::<u64>(), 210);
    }

    #[test]
    fn monotone_in_rate_and_costs() {
        let shape = cube(128);
        let base = simulate_summa(shape, 16, &cluster(4, 4, 1e-6, 1e-9)).unwrap();
        let fast = simulate_summa(
            shape,
            16,
            &ClusterModel::new(4, 4, CommModel::new(1e-6, 1e-9).unwrap(), 2e9).unwrap(),
        )
        .unwrap();
        assert!(fast.total_time <= base.total_time);
        let slow_a = simulate_summa(shape, 16, &cluster(4, 4, 2e-6, 1e-9)).unwrap();
        let slow_b = simulate_summa(shape, 16, &cluster(4, 4, 1e-6, 2e-9)).unwrap();
        assert!(slow_a.comm_time >= base.comm_time);
        assert!(slow_b.comm_time >= base.comm_time);
    }

    #[test]
    fn weak_scaling_latency_grows_with_log_side() {
        let comm = CommModel::new(1e-6, 1e-9).unwrap();
        let pts = weak_scaling_overhead(cube(64), &[1], 16, comm, 1e9).unwrap();
        assert_eq!(pts[0].overhead, 0.0);
        let pts = weak_scaling_overhead(cube(64), &[2, 4, 8], 16, comm, 1e9).unwrap();
        let lat: Vec<f64> = pts.iter().map(|p| p.report.latency_time).collect();
        assert!((lat[1] / lat[0] - 2.0).abs() < 1e-12);
        assert!((lat[2] / lat[0] - 3.0).abs() < 1e-12);
        assert!(pts.windows(2).all(|w| w[1].overhead > w[0].overhead));
        assert_eq!(pts.iter().map(|p| p.nodes).collect::<Vec<_>>(), [4, 16, 64]);

        let zero_beta = CommModel::new(2e-6, 0.0).unwrap();
        for p in weak_scaling_overhead(cube(32), &[2, 4, 8], 8, zero_beta, 1e9).unwrap() {
            let q = (p.nodes as f64).sqrt() as u64;
            let log = f64::from(crate::math::ceil_log(q, 2));
            assert_eq!(p.report.comm_time, p.report.steps as f64 * 2.0 * log * 2e-6);
        }
        assert!(weak_scaling_overhead(cube(4), &[4, 2], 1, comm, 1e9).is_err());
    }
}
