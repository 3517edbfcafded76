//! Closed-form models: the mesh lower bound, reduction-tree depth, the
//! dark-silicon core budget and latency/bandwidth collective costs.

use crate::error::{Error, Result};
use crate::math::ceil_log;
use crate::workload::GemmShape;

/// `(inputs, outputs, computations, mesh dimension)` of a problem placed on a
/// `d`-dimensional mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshBoundInput {
    inputs: u64,
    outputs: u64,
    computations: u64,
    dimension: u32,
}

impl MeshBoundInput {
    pub fn new(inputs: u64, outputs: u64, computations: u64, dimension: u32) -> Result<Self> {
        for (name, value) in [("inputs", inputs), ("outputs", outputs), ("computations", computations)] {
            if value == 0 {
                return Err(Error::InvalidParameter { name, value, expected: ">= 1" });
            }
        }
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidParameter {
                name: "dimension",
                value: dimension.into(),
                expected: "1, 2 or 3",
            });
        }
        Ok(MeshBoundInput { inputs, outputs, computations, dimension })
    }

    /// Inner product of two length-`n` vectors: `2n` inputs, one output, `n` MACs.
    pub fn inner_product(n: u64, dimension: u32) -> Result<Self> {
        MeshBoundInput::new(2 * n, 1, n, dimension)
    }

    /// GEMM: every operand element is an input, every output element an
    /// output, every MAC a computation.
    pub fn gemm(shape: GemmShape, dimension: u32) -> Result<Self> {
        let (m, n, k) = (shape.m() as u64, shape.n() as u64, shape.k() as u64);
        MeshBoundInput::new(m * k + k * n, m * n, m * n * k, dimension)
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }
}

fn root(x: f64, degree: u32) -> f64 {
    match degree {
        1 => x,
        2 => libm::sqrt(x),
        3 => libm::cbrt(x),
        4 => libm::sqrt(libm::sqrt(x)),
        _ => libm::pow(x, 1.0 / f64::from(degree)),
    }
}

/// `max(I^(1/d), K^(1/d), T^(1/(d+1)))` with the asymptotic constant taken as 1.
pub fn fisher_bound(input: &MeshBoundInput) -> f64 {
    let d = input.dimension;
    let i = root(input.inputs as f64, d);
    let k = root(input.outputs as f64, d);
    let t = root(input.computations as f64, d + 1);
    i.max(k).max(t)
}

/// Levels of a `fanout`-ary reduction tree over `n` leaves.
pub fn tree_time(n: u64, fanout: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", value: 0, expected: ">= 1" });
    }
    if fanout < 2 {
        return Err(Error::InvalidParameter { name: "fanout", value: fanout, expected: ">= 2" });
    }
    Ok(ceil_log(n, fanout))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkSilicon {
    /// Cores that fit on the die relative to generation 0.
    pub core_multiplier: f64,
    /// Fraction of those cores the power budget can light up.
    pub powered_fraction: f64,
    pub effective_multiplier: f64,
}

/// Core count doubles per shrink while the powered fraction halves from the
/// second generation on: `2^g` cores, `min(1, 2^(1-g))` of them powered.
pub fn dark_silicon(generation: u32) -> DarkSilicon {
    let g = f64::from(generation);
    let core_multiplier = libm::exp2(g);
    let powered_fraction = libm::exp2(1.0 - g).min(1.0);
    DarkSilicon {
        core_multiplier,
        powered_fraction,
        effective_multiplier: core_multiplier * powered_fraction,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CollectiveKind {
    Broadcast,
    Scatter,
    Reduce,
    Gather,
}

impl CollectiveKind {
    pub const ALL: [CollectiveKind; 4] = [
        CollectiveKind::Broadcast,
        CollectiveKind::Scatter,
        CollectiveKind::Reduce,
        CollectiveKind::Gather,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectiveKind::Broadcast => "broadcast",
            CollectiveKind::Scatter => "scatter",
            CollectiveKind::Reduce => "reduce",
            CollectiveKind::Gather => "gather",
        }
    }
}

/// Per-message latency `alpha` (s) and per-byte time `beta` (s/byte).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommModel {
    alpha: f64,
    beta: f64,
}

impl CommModel {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidReal { name: "alpha", expected: "finite and >= 0" });
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidReal { name: "beta", expected: "finite and >= 0" });
        }
        Ok(CommModel { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Latency and bandwidth parts of a collective's cost, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub latency: f64,
    pub bandwidth: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.latency + self.bandwidth
    }
}

/// Binomial-tree / recursive-doubling cost of one collective over `p`
/// participants moving `bytes` bytes.
///
/// Broadcast and reduce move the full message at every one of the
/// `ceil(log2 p)` rounds. Scatter and gather halve the message each round,
/// so the bandwidth term sums to `(p-1)/p` of it.
pub fn collective_breakdown(kind: CollectiveKind, p: u64, bytes: u64, model: &CommModel) -> CostBreakdown {
    if p <= 1 {
        return CostBreakdown::default();
    }
    let rounds = f64::from(ceil_log(p, 2));
    let bytes = bytes as f64;
    let latency = rounds * model.alpha;
    let bandwidth = match kind {
        CollectiveKind::Broadcast | CollectiveKind::Reduce => rounds * model.beta * bytes,
        CollectiveKind::Scatter | CollectiveKind::Gather => {
            ((p - 1) as f64 / p as f64) * model.beta * bytes
        }
    };
    CostBreakdown { latency, bandwidth }
}

pub fn collective_cost(kind: CollectiveKind, p: u64, bytes: u64, model: &CommModel) -> f64 {
    collective_breakdown(kind, p, bytes, model).total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    #[test]
    fn fisher_inner_product_examples() {
        let d1 = MeshBoundInput::inner_product(16, 1).unwrap();
        assert_eq!(fisher_bound(&d1), 32.0);
        let d2 = MeshBoundInput::inner_product(16, 2).unwrap();
        assert!(close(fisher_bound(&d2), 32f64.sqrt()));
        assert!((fisher_bound(&d2) - 5.657).abs() < 1e-3);
        let unit = MeshBoundInput::new(1, 1, 1, 1).unwrap();
        assert_eq!(fisher_bound(&unit), 1.0);
    }

    #[test]
    fn fisher_rejects_bad_input() {
        assert!(MeshBoundInput::new(0, 1, 1, 1).is_err());
        assert!(MeshBoundInput::new(1, 1, 1, 0).is_err());
        assert!(MeshBoundInput::new(1, 1, 1, 4).is_err());
    }

    #[test]
    fn fisher_computation_term_can_dominate() {
        // T^(1/2) beats I on a 1-D mesh once T > I^2.
        let x = MeshBoundInput::new(4, 1, 100, 1).unwrap();
        assert_eq!(fisher_bound(&x), 10.0);
        let g = MeshBoundInput::gemm(GemmShape::new(2, 3, 4).unwrap(), 1).unwrap();
        assert_eq!(fisher_bound(&g), 20.0);
    }

    #[test]
    fn tree_time_examples() {
        assert_eq!(tree_time(8, 2).unwrap(), 3);
        assert_eq!(tree_time(1, 2).unwrap(), 0);
        assert_eq!(tree_time(9, 2).unwrap(), 4);
        assert!(tree_time(8, 1).is_err());
        assert!(tree_time(0, 2).is_err());
    }

    #[test]
    fn dark_silicon_generations() {
        assert_eq!(
            dark_silicon(0),
            DarkSilicon { core_multiplier: 1.0, powered_fraction: 1.0, effective_multiplier: 1.0 }
        );
        assert_eq!(
            dark_silicon(2),
            DarkSilicon { core_multiplier: 4.0, powered_fraction: 0.5, effective_multiplier: 2.0 }
        );
        assert_eq!(
            dark_silicon(3),
            DarkSilicon { core_multiplier: 8.0, powered_fraction: 0.25, effective_multiplier: 2.0 }
        );
        for g in 1..=40 {
            assert_eq!(dark_silicon(g).effective_multiplier, 2.0, "generation {g}");
        }
    }

    #[test]
    fn collective_examples() {
        let m = CommModel::new(1e-6, 1e-9).unwrap();
        for kind in CollectiveKind::ALL {
            assert_eq!(collective_cost(kind, 1, 12345, &m), 0.0);
        }
        assert!(close(collective_cost(CollectiveKind::Broadcast, 4, 1000, &m), 4e-6));
        let bw = CommModel::new(0.0, 1e-9).unwrap();
        assert!(close(collective_cost(CollectiveKind::Gather, 8, 800, &bw), 7e-7));
        assert!(close(collective_cost(CollectiveKind::Scatter, 8, 800, &bw), 7e-7));
        assert!(close(collective_cost(CollectiveKind::Reduce, 4, 1000, &m), 4e-6));
    }

    #[test]
    fn comm_model_rejects_negative_and_nan() {
        assert!(CommModel::new(-1.0, 0.0).is_err());
        assert!(CommModel::new(0.0, f64::NAN).is_err());
        assert!(CommModel::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn tree_beats_planar_mesh_from_32() {
        for n in 32u64..=1 << 14 {
            let planar = fisher_bound(&MeshBoundInput::inner_product(n, 2).unwrap());
            assert!(f64::from(tree_time(n, 2).unwrap()) < planar, "n={n}");
        }
    }

    proptest! {
        #[test]
        fn fisher_non_increasing_in_dimension(
            i in 1u64..1_000_000, k in 1u64..1_000_000, t in 1u64..1_000_000_000
        ) {
            let b: [f64; 3] = [1, 2, 3].map(|d| fisher_bound(&MeshBoundInput::new(i, k, t, d).unwrap()));
            prop_assert!(b[0] >= b[1] && b[1] >= b[2], "{:?}", b);
        }

        #[test]
        fn broadcast_cost_per_round_is_constant(p in 2u64..100_000, bytes in 0u64..1_000_000) {
            let m = CommModel::new(3e-6, 2e-9).unwrap();
            let per_round = collective_cost(CollectiveKind::Broadcast, p, bytes, &m)
                / f64::from(ceil_log(p, 2));
            let reference = collective_cost(CollectiveKind::Broadcast, 2, bytes, &m);
            prop_assert!((per_round - reference).abs() <= 1e-12 * reference.max(1e-300));
        }
    }
}
