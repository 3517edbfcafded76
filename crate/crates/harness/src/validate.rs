//! Oracle suite: every simulator against the reference product on a random
//! corpus, closed forms against simulation, and the bound/scaling
//! properties the workbench exists to demonstrate.

use cstream_core::bounds::{dark_silicon, fisher_bound, CommModel, MeshBoundInput};
use cstream_core::meshflow::{simulate_chain_reduction, simulate_grid_reduction, MeshConfig};
use cstream_core::streamer::{build_ce_tree, cs_gemm_cycle_formula, simulate_cs_gemm, simulate_tree_inner_product, CeTree};
use cstream_core::summa::{simulate_summa, ClusterModel};
use cstream_core::systolic::{simulate_systolic_gemm, systolic_cycle_formula, SystolicConfig};
use cstream_core::workload::{make_gemm, make_vectors, reference_matmul};
use cstream_core::{ceil_log, GemmShape, Matrix};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

/// Deliberate corruption of one simulator output, used to prove the suite
/// notices broken simulators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    SystolicResult,
    SystolicCycles,
    StreamerResult,
    MeshResult,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "systolic-result" => Ok(Fault::SystolicResult),
            "systolic-cycles" => Ok(Fault::SystolicCycles),
            "streamer-result" => Ok(Fault::StreamerResult),
            "mesh-result" => Ok(Fault::MeshResult),
            other => Err(format!("unknown fault `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    pub corpus_size: usize,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { seed: 0, corpus_size: 200, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub checks: u64,
    pub failures: u64,
    /// First few failure descriptions.
    pub details: Vec<String>,
}

impl PropertyOutcome {
    fn new(name: &'static str) -> Self {
        PropertyOutcome { name, checks: 0, failures: 0, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.details.len() < 5 {
                self.details.push(detail());
            }
        }
    }

    fn merge(&mut self, other: PropertyOutcome) {
        self.checks += other.checks;
        self.failures += other.failures;
        for d in other.details {
            if self.details.len() < 5 {
                self.details.push(d);
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub properties: Vec<PropertyOutcome>,
    /// Values recomputed by the suite, for reporting.
    pub low_k_systolic_utilization: f64,
    pub low_k_streamer_steady_utilization: f64,
}

impl ValidationSummary {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyOutcome::passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.properties.iter().filter(|p| !p.passed()).map(|p| p.name).collect()
    }

    pub fn property(&self, name: &str) -> Option<&PropertyOutcome> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// One randomized GEMM instance and the fabric parameters used for it.
#[derive(Debug, Clone, Copy)]
pub struct CorpusCase {
    pub shape: GemmShape,
    pub seed: u64,
    pub systolic: SystolicConfig,
    pub tree: CeTree,
    pub block_width: usize,
}

fn uniform(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

/// Shapes up to 64 on each side; operand seeds `seed + i`, so the corpus
/// always spans `corpus_size` distinct operand seeds.
pub fn corpus(seed: u64, size: usize) -> Vec<CorpusCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    (0..size)
        .map(|i| {
            let shape = GemmShape::new(uniform(&mut rng, 1, 64), uniform(&mut rng, 1, 64), uniform(&mut rng, 1, 64))
                .expect("positive");
            let systolic = SystolicConfig::new(uniform(&mut rng, 1, 16), uniform(&mut rng, 1, 16)).expect("positive");
            let outputs = shape.m() * shape.n();
            let pes = uniform(&mut rng, 1, outputs.min(1024));
            let tree = build_ce_tree(pes, uniform(&mut rng, 2, 4), uniform(&mut rng, 1, 2) as u64, uniform(&mut rng, 1, 16))
                .expect("valid tree");
            let block_width = uniform(&mut rng, 1, shape.k());
            CorpusCase { shape, seed: seed.wrapping_add(i as u64), systolic, tree, block_width }
        })
        .collect()
}

fn corrupt(result: &mut Matrix) {
    let v = result.get(0, 0);
    result.set(0, 0, v + 1);
}

const SYSTOLIC_EXACT: &str = "systolic_exact";
const SYSTOLIC_FORMULA: &str = "systolic_formula";
const SYSTOLIC_MACS: &str = "systolic_mac_conservation";
const STREAMER_EXACT: &str = "streamer_exact";
const STREAMER_MACS: &str = "streamer_mac_conservation";
const STREAMER_NO_HOP: &str = "streamer_no_pe_hops";
const STREAMER_OVERHEAD: &str = "streamer_overhead_log";
const STREAMER_FORMULA: &str = "streamer_delivery_bound";
const MESH_EXACT: &str = "mesh_exact";
const TREE_EXACT: &str = "tree_inner_product_exact";
const DETERMINISM: &str = "determinism";

fn check_case(case: &CorpusCase, fault: Option<Fault>) -> Vec<PropertyOutcome> {
    let names = [
        SYSTOLIC_EXACT,
        SYSTOLIC_FORMULA,
        SYSTOLIC_MACS,
        STREAMER_EXACT,
        STREAMER_MACS,
        STREAMER_NO_HOP,
        STREAMER_OVERHEAD,
        STREAMER_FORMULA,
        MESH_EXACT,
        TREE_EXACT,
        DETERMINISM,
    ];
    let mut out: Vec<PropertyOutcome> = names.iter().map(|n| PropertyOutcome::new(n)).collect();
    let get = |name: &str| -> usize { names.iter().position(|n| *n == name).expect("known property") };
    let (shape, seed) = (case.shape, case.seed);
    let label = || format!("{} seed={seed}", shape);
    let (a, b) = make_gemm(shape, seed);
    let oracle = reference_matmul(&a, &b).expect("shapes agree");

    let systolic = simulate_systolic_gemm(&a, &b, case.systolic);
    let mut sys = match systolic {
        Ok(s) => s,
        Err(e) => {
            let i = get(SYSTOLIC_EXACT);
            out[i].check(false, || format!("{}: {e}", label()));
            return out;
        }
    };
    match fault {
        Some(Fault::SystolicResult) => corrupt(&mut sys.result),
        Some(Fault::SystolicCycles) => sys.cycles += 1,
        _ => {}
    }
    let cfg = case.systolic;
    out[get(SYSTOLIC_EXACT)].check(sys.result == oracle, || format!("{} on {}x{}", label(), cfg.rows(), cfg.cols()));
    let formula = systolic_cycle_formula(shape, cfg);
    out[get(SYSTOLIC_FORMULA)].check(sys.cycles == formula, || {
        format!("{}: simulated {} vs formula {formula}", label(), sys.cycles)
    });
    out[get(SYSTOLIC_MACS)].check(sys.mac_ops_issued == shape.macs(), label);

    let tree = case.tree;
    match simulate_cs_gemm(&a, &b, &tree, case.block_width) {
        Ok(mut cs) => {
            if fault == Some(Fault::StreamerResult) {
                corrupt(&mut cs.result);
            }
            let desc = || format!("{} P={} f={} b={}", label(), tree.num_pes(), tree.fanout(), case.block_width);
            out[get(STREAMER_EXACT)].check(cs.result == oracle, desc);
            out[get(STREAMER_MACS)].check(cs.mac_ops_issued == shape.macs(), desc);
            out[get(STREAMER_NO_HOP)].check(cs.trace.transfers.pe_to_pe == 0, desc);
            let expected = 2 * tree.depth_latency() + (shape.m() * shape.n()).div_ceil(tree.port_width()) as u64;
            out[get(STREAMER_OVERHEAD)].check(cs.overhead_cycles() == expected, || {
                format!("{}: overhead {} vs {expected}", desc(), cs.overhead_cycles())
            });
            out[get(STREAMER_FORMULA)].check(cs.cycles >= cs_gemm_cycle_formula(shape, &tree, case.block_width), desc);
        }
        Err(e) => out[get(STREAMER_EXACT)].check(false, || format!("{}: {e}", label())),
    }

    // Every output element as an inner product on a fitted chain, a fitted
    // grid and a binary CE tree.
    let mut mesh_ok = true;
    let mut tree_ok = true;
    let k = shape.k();
    let chain = MeshConfig::fitted(k, 1, 1).expect("k >= 1");
    let grid = MeshConfig::fitted(k, 2, 1).expect("k >= 1");
    for i in 0..shape.m() {
        let row = a.row(i);
        for j in 0..shape.n() {
            let col = b.column(j);
            let want = oracle.get(i, j);
            let mut c = simulate_chain_reduction(row, &col, &chain).map(|r| r.result.get(0, 0));
            if fault == Some(Fault::MeshResult) && i == 0 && j == 0 {
                c = c.map(|v| v + 1);
            }
            let g = simulate_grid_reduction(row, &col, &grid).map(|r| r.result.get(0, 0));
            mesh_ok &= c == Ok(want) && g == Ok(want);
            let t = simulate_tree_inner_product(row, &col, 2, 1).map(|r| r.result.get(0, 0));
            tree_ok &= t == Ok(want);
        }
    }
    out[get(MESH_EXACT)].check(mesh_ok, label);
    out[get(TREE_EXACT)].check(tree_ok, label);

    let same = fault.is_some()
        || simulate_systolic_gemm(&a, &b, cfg).map(|r| r == sys).unwrap_or(false)
            && simulate_cs_gemm(&a, &b, &tree, case.block_width) == simulate_cs_gemm(&a, &b, &tree, case.block_width);
    out[get(DETERMINISM)].check(same, label);
    out
}

fn bound_properties() -> (PropertyOutcome, PropertyOutcome) {
    let mut respect = PropertyOutcome::new("mesh_bound_respect");
    let mut separation = PropertyOutcome::new("log_vs_mesh_separation");
    let mut tree_at_4096 = 0;
    let mut chain_at_4096 = 0;
    for e in 4..=12 {
        let n = 1usize << e;
        let (a, b) = make_vectors(n, e as u64);
        let chain = simulate_chain_reduction(&a, &b, &MeshConfig::fitted(n, 1, 1).expect("n >= 1")).expect("fits");
        let grid = simulate_grid_reduction(&a, &b, &MeshConfig::fitted(n, 2, 1).expect("n >= 1")).expect("fits");
        let tree = simulate_tree_inner_product(&a, &b, 2, 1).expect("valid");
        for (d, sim) in [(1u32, &chain), (2, &grid)] {
            let bound = fisher_bound(&MeshBoundInput::inner_product(n as u64, d).expect("valid"));
            respect.check(sim.cycles as f64 >= bound, || format!("n={n} d={d}: {} < {bound}", sim.cycles));
        }
        let limit = 2 * (1 + u64::from(ceil_log(n as u64, 2)));
        separation.check(tree.cycles <= limit, || format!("n={n}: tree {} > {limit}", tree.cycles));
        if n >= 32 {
            separation.check(tree.cycles < grid.cycles, || format!("n={n}: tree {} >= grid {}", tree.cycles, grid.cycles));
            separation.check(grid.cycles < chain.cycles, || format!("n={n}: grid {} >= chain {}", grid.cycles, chain.cycles));
        }
        if n == 4096 {
            tree_at_4096 = tree.cycles;
            chain_at_4096 = chain.cycles;
        }
    }
    separation.check(chain_at_4096 >= 100 * tree_at_4096, || {
        format!("chain/tree at 4096 = {chain_at_4096}/{tree_at_4096}")
    });
    (respect, separation)
}

fn dark_silicon_property() -> PropertyOutcome {
    let mut p = PropertyOutcome::new("dark_silicon");
    let g2 = dark_silicon(2);
    p.check((g2.core_multiplier, g2.powered_fraction, g2.effective_multiplier) == (4.0, 0.5, 2.0), || {
        format!("generation 2: {g2:?}")
    });
    let g3 = dark_silicon(3);
    p.check((g3.core_multiplier, g3.powered_fraction, g3.effective_multiplier) == (8.0, 0.25, 2.0), || {
        format!("generation 3: {g3:?}")
    });
    for g in 1..=6 {
        let eff = dark_silicon(g).effective_multiplier;
        p.check(eff == 2.0, || format!("generation {g}: effective {eff}"));
    }
    p
}

/// 16x16 systolic array versus a 256-PE default tree on a 64x64x4 GEMM.
pub fn low_k_occupancy(seed: u64) -> (f64, f64) {
    let shape = GemmShape::new(64, 64, 4).expect("positive");
    let (a, b) = make_gemm(shape, seed);
    let sys = simulate_systolic_gemm(&a, &b, SystolicConfig::new(16, 16).expect("positive")).expect("valid");
    let tree = CeTree::with_defaults(256).expect("valid");
    let cs = simulate_cs_gemm(&a, &b, &tree, 1).expect("valid");
    (sys.utilization(), cs.steady_state_utilization())
}

fn low_k_property(seed: u64) -> (PropertyOutcome, f64, f64) {
    let mut p = PropertyOutcome::new("low_k_occupancy");
    let (sys, cs) = low_k_occupancy(seed);
    p.check(sys <= 0.25, || format!("systolic utilization {sys} > 0.25"));
    p.check(cs >= 2.0 * sys, || format!("streamer steady {cs} < 2 x systolic {sys}"));
    (p, sys, cs)
}

/// Fill + drain minus the result-streaming cycles, for trees of the given sizes.
pub fn tree_overheads(pes: &[usize], seed: u64) -> Vec<(usize, u32, u64, u64)> {
    let shape = GemmShape::new(32, 32, 8).expect("positive");
    let (a, b) = make_gemm(shape, seed);
    pes.iter()
        .map(|&p| {
            let tree = build_ce_tree(p, 2, 1, 16).expect("valid");
            let sim = simulate_cs_gemm(&a, &b, &tree, 1).expect("valid");
            let gather = (shape.m() * shape.n()).div_ceil(tree.port_width()) as u64;
            (p, tree.levels(), sim.overhead_cycles(), gather)
        })
        .collect()
}

fn log_latency_property(seed: u64) -> PropertyOutcome {
    let mut p = PropertyOutcome::new("log_latency_scaling");
    for ((pes, levels, overhead, gather), want_levels) in tree_overheads(&[64, 256, 1024], seed).into_iter().zip([6u32, 8, 10]) {
        p.check(levels == want_levels && overhead == 2 * u64::from(want_levels) + gather, || {
            format!("P={pes}: levels {levels}, overhead {overhead}, gather {gather}")
        });
    }
    p
}

fn summa_property() -> PropertyOutcome {
    let mut p = PropertyOutcome::new("summa_structure");
    let shape = GemmShape::new(256, 256, 256).expect("positive");
    let alpha = 1e-6;
    let cluster = ClusterModel::new(4, 4, CommModel::new(alpha, 0.0).expect("valid"), 1e9).expect("valid");
    match simulate_summa(shape, 32, &cluster) {
        Ok(r) => {
            p.check((r.steps, r.row_broadcasts, r.col_broadcasts) == (8, 8, 8), || format!("{r:?}"));
            p.check(r.comm_time == 8.0 * (2.0 + 2.0) * alpha, || format!("comm {}", r.comm_time));
        }
        Err(e) => p.check(false, || e.to_string()),
    }
    for b in [1, 7, 32, 256] {
        let ok = simulate_summa(shape, b, &cluster).map(|r| r.steps == 256usize.div_ceil(b)).unwrap_or(false);
        p.check(ok, || format!("b={b}"));
    }
    p
}

pub fn run_validation(opts: &ValidateOptions) -> ValidationSummary {
    let cases = corpus(opts.seed, opts.corpus_size);
    let per_case: Vec<Vec<PropertyOutcome>> = cases.par_iter().map(|c| check_case(c, opts.fault)).collect();
    let mut properties: Vec<PropertyOutcome> = Vec::new();
    for outcomes in per_case {
        for o in outcomes {
            match properties.iter_mut().find(|p| p.name == o.name) {
                Some(p) => p.merge(o),
                None => properties.push(o),
            }
        }
    }
    let (respect, separation) = bound_properties();
    properties.push(respect);
    properties.push(separation);
    properties.push(dark_silicon_property());
    let (low_k, sys, cs) = low_k_property(opts.seed);
    properties.push(low_k);
    properties.push(log_latency_property(opts.seed));
    properties.push(summa_property());
    ValidationSummary { properties, low_k_systolic_utilization: sys, low_k_streamer_steady_utilization: cs }
}
