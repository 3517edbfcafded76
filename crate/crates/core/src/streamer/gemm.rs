use alloc::vec;
use alloc::vec::Vec;

use super::tree::CeTree;
use crate::error::{Error, Result};
use crate::math::ceil_div;
use crate::sim::{SimResult, Trace};
use crate::workload::{step_widths, GemmShape, Matrix};

/// Output-stationary ownership of the `m x n` result among PEs.
///
/// When `P` factors as `pr * pc` with `pr <= m` and `pc <= n`, PEs own
/// balanced rectangular tiles on a `pr x pc` grid (the factorisation with
/// the smallest tile, then the smallest perimeter). Otherwise the row-major
/// output index space is cut into `P` balanced contiguous runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeAssignment {
    owned: Vec<Vec<(usize, usize)>>,
}

fn balanced(len: usize, parts: usize, idx: usize) -> core::ops::Range<usize> {
    idx * len / parts..(idx + 1) * len / parts
}

impl PeAssignment {
    pub fn new(m: usize, n: usize, pes: usize) -> Result<Self> {
        if pes == 0 || pes > m * n {
            return Err(Error::Capacity { what: "outputs per PE (need P <= m*n)", required: pes, available: m * n });
        }
        let grid = (1..=pes)
            .filter(|pr| pes.is_multiple_of(*pr) && *pr <= m && pes / pr <= n)
            .min_by_key(|&pr| {
                let (th, tw) = (ceil_div(m, pr), ceil_div(n, pes / pr));
                (th * tw, th + tw, pr)
            });
        let owned = match grid {
            Some(pr) => {
                let pc = pes / pr;
                (0..pes)
                    .map(|p| {
                        let (rows, cols) = (balanced(m, pr, p / pc), balanced(n, pc, p % pc));
                        rows.flat_map(|i| cols.clone().map(move |j| (i, j))).collect()
                    })
                    .collect()
            }
            None => (0..pes)
                .map(|p| balanced(m * n, pes, p).map(|e| (e / n, e % n)).collect())
                .collect(),
        };
        Ok(PeAssignment { owned })
    }

    pub fn pes(&self) -> usize {
        self.owned.len()
    }

    /// Output coordinates held by `pe`; its accumulator count is the length.
    pub fn owned(&self, pe: usize) -> &[(usize, usize)] {
        &self.owned[pe]
    }

    pub fn max_accumulators(&self) -> usize {
        self.owned.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// For each output row (or column), the sorted PEs that need it.
    fn consumers(&self, m: usize, n: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut rows = vec![Vec::new(); m];
        let mut cols = vec![Vec::new(); n];
        for (p, cells) in self.owned.iter().enumerate() {
            for &(i, j) in cells {
                if rows[i].last() != Some(&p) {
                    rows[i].push(p);
                }
                if cols[j].last() != Some(&p) {
                    cols[j].push(p);
                }
            }
        }
        (rows, cols)
    }
}

/// Delivery-bound cycle count: tree fill, one root-port slot of
/// `ceil(elements / W)` cycles per outer-product step, tree drain plus
/// `ceil(m n / W)` cycles to stream the results out.
pub fn cs_gemm_cycle_formula(shape: GemmShape, tree: &CeTree, block_width: usize) -> u64 {
    let w = tree.port_width();
    let stream: usize = step_widths(shape.k(), block_width.clamp(1, shape.k()))
        .map(|(_, bw)| ceil_div((shape.m() + shape.n()) * bw, w))
        .sum();
    2 * tree.depth_latency() + (stream + ceil_div(shape.m() * shape.n(), w)) as u64
}

/// GEMM as streamed outer products of width `block_width` on a CE tree.
///
/// Per step, column `t` of the `A` block (all `m` elements) and then row
/// `t` of the `B` block are pushed through the root port, `W` elements per
/// cycle; a step starts on a fresh cycle. An element injected in cycle `c`
/// reaches every PE that needs it in cycle `c + levels * L`. Each PE holds
/// its outputs in place and issues at most one MAC per cycle, oldest-ready
/// first. Once the last MAC retires, results travel up the tree and leave
/// through the root port.
pub fn simulate_cs_gemm(a: &Matrix, b: &Matrix, tree: &CeTree, block_width: usize) -> Result<SimResult> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "cs_gemm",
            left: (a.rows(), a.cols()),
            right: (b.rows(), b.cols()),
        });
    }
    a.check_operand_range()?;
    b.check_operand_range()?;
    let shape = GemmShape::new(a.rows(), b.cols(), a.cols())?;
    let (m, n, k) = (shape.m(), shape.n(), shape.k());
    if block_width == 0 || block_width > k {
        return Err(Error::InvalidParameter {
            name: "block_width",
            value: block_width as u64,
            expected: "1 <= block_width <= k",
        });
    }
    let owners = PeAssignment::new(m, n, tree.num_pes())?;
    let (row_pes, col_pes) = owners.consumers(m, n);
    let width = tree.port_width();
    let depth = tree.depth_latency();

    let mut trace = Trace::default();
    // Arrival cycle at the PEs of A[i][t] and B[t][j].
    let mut arrive_a = vec![0u64; m * k];
    let mut arrive_b = vec![0u64; k * n];
    let mut deliveries: Vec<u32> = Vec::new();
    let mut deliver = |cycle: u64, count: usize| {
        let c = cycle as usize;
        if deliveries.len() <= c {
            deliveries.resize(c + 1, 0);
        }
        deliveries[c] += count as u32;
    };
    let mut step_start = 0u64;
    for (k0, bw) in step_widths(k, block_width) {
        let mut pos = 0usize;
        for t in k0..k0 + bw {
            for i in 0..m {
                let at = step_start + (pos / width) as u64 + depth;
                arrive_a[i * k + t] = at;
                deliver(at, row_pes[i].len());
                pos += 1;
            }
            for j in 0..n {
                let at = step_start + (pos / width) as u64 + depth;
                arrive_b[t * n + j] = at;
                deliver(at, col_pes[j].len());
                pos += 1;
            }
        }
        step_start += ceil_div(pos, width) as u64;
    }
    for pes in row_pes.iter().chain(&col_pes) {
        tree.count_multicast(pes, k as u64, &mut trace.transfers);
    }

    let mut out = Matrix::zeros(m, n);
    let mut active: Vec<u32> = Vec::new();
    let mut ready: Vec<(u64, usize, usize, usize)> = Vec::new();
    let mut macs = 0u64;
    for p in 0..owners.pes() {
        ready.clear();
        for &(i, j) in owners.owned(p) {
            for t in 0..k {
                ready.push((arrive_a[i * k + t].max(arrive_b[t * n + j]), t, i, j));
            }
        }
        ready.sort_unstable();
        let mut next_free = 0u64;
        for &(at, t, i, j) in &ready {
            let cycle = at.max(next_free);
            next_free = cycle + 1;
            let c = cycle as usize;
            if active.len() <= c {
                active.resize(c + 1, 0);
            }
            active[c] += 1;
            out.add_at(i, j, a.get(i, t) * b.get(t, j));
            macs += 1;
        }
        let srcs = [p];
        tree.count_upward(&srcs, owners.owned(p).len() as u64, false, &mut trace.transfers);
    }

    let compute_end = active.len().max(deliveries.len());
    let cycles = compute_end as u64 + depth + ceil_div(m * n, width) as u64;
    active.resize(cycles as usize, 0);
    deliveries.resize(cycles as usize, 0);
    trace.active = active;
    trace.deliveries = deliveries;

    Ok(SimResult { cycles, result: out, mac_ops_issued: macs, units: tree.num_pes() as u64, trace })
}

#[cfg(test)]
mod tests {
    use super::super::tree::build_ce_tree;
    use super::*;
    use crate::systolic::{simulate_systolic_gemm, SystolicConfig};
    use crate::workload::{make_gemm, reference_matmul};
    use proptest::prelude::*;

    fn gemm(m: usize, n: usize, k: usize, seed: u64) -> (Matrix, Matrix, Matrix) {
        let (a, b) = make_gemm(GemmShape::new(m, n, k).unwrap(), seed);
        let c = reference_matmul(&a, &b).unwrap();
        (a, b, c)
    }

    #[test]
    fn assignment_partitions_outputs() {
        for (m, n, p) in [(8, 8, 64), (64, 64, 256), (4, 4, 5), (3, 7, 21), (5, 5, 7), (1, 1, 1), (2, 9, 6)] {
            let owners = PeAssignment::new(m, n, p).unwrap();
            let mut seen = vec![0u8; m * n];
            for pe in 0..p {
                assert!(!owners.owned(pe).is_empty(), "{m}x{n} P={p} pe={pe}");
                for &(i, j) in owners.owned(pe) {
                    seen[i * n + j] += 1;
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
        assert_eq!(PeAssignment::new(64, 64, 256).unwrap().max_accumulators(), 16);
        assert!(PeAssignment::new(2, 2, 5).is_err());
    }

    #[test]
    fn single_pe_single_element() {
        let a = Matrix::from_rows(&[[3]]);
        let b = Matrix::from_rows(&[[-5]]);
        let tree = CeTree::with_defaults(1).unwrap();
        let r = simulate_cs_gemm(&a, &b, &tree, 1).unwrap();
        assert_eq!(r.result, Matrix::from_rows(&[[-15]]));
        assert_eq!(r.cycles, 2);
        assert_eq!(r.cycles, cs_gemm_cycle_formula(GemmShape::new(1, 1, 1).unwrap(), &tree, 1));
    }

    #[test]
    fn beats_systolic_at_low_k() {
        let (a, b, c) = gemm(8, 8, 2, 21);
        let tree = build_ce_tree(64, 2, 1, 16).unwrap();
        let cs = simulate_cs_gemm(&a, &b, &tree, 1).unwrap();
        assert_eq!(cs.result, c);
        // fill 6 + two 1-cycle steps + drain 6 + 64/16.
        assert_eq!(cs.cycles, 18);
        let sys = simulate_systolic_gemm(&a, &b, SystolicConfig::new(8, 8).unwrap()).unwrap();
        assert!(cs.utilization() > sys.utilization());
        assert_eq!(cs.trace.transfers.pe_to_pe, 0);

        // Same m, n, P: steady-state occupancy does not depend on k.
        let steady: Vec<f64> = [2, 4, 8, 16, 32]
            .iter()
            .map(|&k| {
                let (a, b, _) = gemm(8, 8, k, 2);
                simulate_cs_gemm(&a, &b, &tree, 1).unwrap().steady_state_utilization()
            })
            .collect();
        assert!(steady.iter().all(|&s| s == steady[0]), "{steady:?}");
    }

    #[test]
    fn more_pes_fewer_cycles() {
        let (a, b, c) = gemm(16, 16, 16, 5);
        let t64 = build_ce_tree(64, 2, 1, 16).unwrap();
        let t256 = build_ce_tree(256, 2, 1, 16).unwrap();
        let r64 = simulate_cs_gemm(&a, &b, &t64, 1).unwrap();
        let r256 = simulate_cs_gemm(&a, &b, &t256, 1).unwrap();
        assert_eq!(r64.result, c);
        assert_eq!(r256.result, c);
        assert!(r256.cycles < r64.cycles, "{} vs {}", r256.cycles, r64.cycles);
        let gather = ceil_div(256, 16) as u64;
        assert_eq!(r64.overhead_cycles(), 2 * 6 + gather);
        assert_eq!(r256.overhead_cycles(), 2 * 8 + gather);
    }

    #[test]
    fn formula_exact_when_each_pe_owns_one_output() {
        for (m, n, k, f, w) in [(4, 4, 6, 2, 3), (8, 2, 5, 4, 4), (3, 3, 3, 3, 1), (6, 5, 7, 2, 16)] {
            let (a, b, c) = gemm(m, n, k, 9);
            let tree = build_ce_tree(m * n, f, 2, w).unwrap();
            let r = simulate_cs_gemm(&a, &b, &tree, 1).unwrap();
            assert_eq!(r.result, c);
            assert_eq!(r.cycles, cs_gemm_cycle_formula(GemmShape::new(m, n, k).unwrap(), &tree, 1));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (a, b, _) = gemm(2, 2, 3, 1);
        let tree = CeTree::with_defaults(5).unwrap();
        assert!(matches!(simulate_cs_gemm(&a, &b, &tree, 1), Err(Error::Capacity { .. })));
        let tree = CeTree::with_defaults(4).unwrap();
        assert!(simulate_cs_gemm(&a, &b, &tree, 0).is_err());
        assert!(simulate_cs_gemm(&a, &b, &tree, 4).is_err());
        assert!(simulate_cs_gemm(&a, &a, &tree, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_conserving_and_hop_free(
            m in 1usize..=32, n in 1usize..=32, k in 1usize..=32,
            pfrac in 0.0f64..1.0, f in 2usize..=5, l in 1u64..=3, w in 1usize..=20,
            bfrac in 0.0f64..1.0, seed in any::<u64>()
        ) {
            let p = 1 + ((m * n - 1) as f64 * pfrac) as usize;
            let bw = 1 + ((k - 1) as f64 * bfrac) as usize;
            let (a, b, c) = gemm(m, n, k, seed);
            let tree = build_ce_tree(p, f, l, w).unwrap();
            let r = simulate_cs_gemm(&a, &b, &tree, bw).unwrap();
            let shape = GemmShape::new(m, n, k).unwrap();
            prop_assert_eq!(&r.result, &c);
            prop_assert_eq!(r.mac_ops_issued, shape.macs());
            prop_assert_eq!(r.trace.mac_total(), shape.macs());
            prop_assert_eq!(r.trace.transfers.pe_to_pe, 0);
            prop_assert!(r.cycles >= cs_gemm_cycle_formula(shape, &tree, bw));
            prop_assert_eq!(r.trace.fill_cycles(), tree.depth_latency());
            prop_assert_eq!(
                r.overhead_cycles(),
                2 * tree.depth_latency() + ceil_div(m * n, w) as u64
            );
            prop_assert!(r.utilization() <= 1.0);
            prop_assert!(r.trace.active.iter().all(|&x| x as usize <= p));
        }
    }
}
