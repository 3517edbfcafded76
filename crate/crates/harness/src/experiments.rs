//! Executes one non-sweep experiment and turns its results into report rows.

use cstream_core::bounds::{dark_silicon, fisher_bound, tree_time, CommModel, MeshBoundInput};
use cstream_core::meshflow::{simulate_chain_reduction, simulate_grid_reduction, MeshConfig};
use cstream_core::streamer::{build_ce_tree, cs_gemm_cycle_formula, simulate_cs_gemm, simulate_tree_inner_product};
use cstream_core::summa::{simulate_summa, ClusterModel};
use cstream_core::systolic::{simulate_systolic_gemm, systolic_cycle_formula, SystolicConfig};
use cstream_core::workload::{dot, make_gemm, make_vectors, reference_matmul};
use cstream_core::{GemmShape, SimResult};

use crate::config::{ArchSpec, Config, ExperimentKind, InnerProductSpec, WorkloadSpec};
use crate::error::{HarnessError, Result};
use crate::report::ReportRow;
use crate::validate::{run_validation, ValidateOptions};

pub fn run_experiment(cfg: &Config) -> Result<Vec<ReportRow>> {
    match cfg.experiment {
        ExperimentKind::Simulate | ExperimentKind::Compare => {
            let workload = cfg.workload.as_ref().ok_or_else(|| HarnessError::config("missing key `workload`"))?;
            cfg.architectures.iter().map(|arch| run_gemm(workload, arch)).collect()
        }
        ExperimentKind::Bounds => {
            let ip = cfg.inner_product.as_ref().ok_or_else(|| HarnessError::config("missing key `inner_product`"))?;
            inner_product_rows(ip)
        }
        ExperimentKind::Darksilicon => {
            let g = cfg.darksilicon.as_ref().ok_or_else(|| HarnessError::config("missing key `darksilicon`"))?;
            let ds = dark_silicon(g.generation);
            let mut row = ReportRow::new("darksilicon", String::new(), format!("generation={}", g.generation));
            row.core_multiplier = Some(ds.core_multiplier);
            row.powered_fraction = Some(ds.powered_fraction);
            row.effective_multiplier = Some(ds.effective_multiplier);
            Ok(vec![row])
        }
        ExperimentKind::Validate => {
            let spec = cfg.validate.clone().unwrap_or_default();
            let summary = run_validation(&ValidateOptions { seed: spec.seed, corpus_size: spec.corpus_size, fault: None });
            Ok(summary
                .properties
                .iter()
                .map(|p| {
                    let mut row = ReportRow::new(
                        &format!("validate:{}", p.name),
                        String::new(),
                        format!("seed={};corpus={}", spec.seed, spec.corpus_size),
                    );
                    row.checks = Some(p.checks);
                    row.failures = Some(p.failures);
                    row
                })
                .collect())
        }
        ExperimentKind::Sweep => Err(HarnessError::config("`sweep` experiments go through the sweep runner")),
    }
}

fn workload_label(w: &WorkloadSpec) -> String {
    format!("m={};n={};k={};seed={};b={}", w.shape.m, w.shape.n, w.shape.k, w.seed, w.block_width)
}

fn fill_sim(row: &mut ReportRow, sim: &SimResult) {
    row.cycles = Some(sim.cycles);
    row.utilization = Some(sim.utilization());
    row.steady_utilization = Some(sim.steady_state_utilization());
    row.mac_ops = Some(sim.mac_ops_issued);
    row.fill_cycles = Some(sim.trace.fill_cycles());
    row.drain_cycles = Some(sim.trace.drain_cycles());
    row.overhead_cycles = Some(sim.overhead_cycles());
    row.pe_to_pe_transfers = Some(sim.trace.transfers.pe_to_pe);
}

fn run_gemm(w: &WorkloadSpec, arch: &ArchSpec) -> Result<ReportRow> {
    let shape = GemmShape::new(w.shape.m, w.shape.n, w.shape.k)
        .map_err(|e| HarnessError::config(format!("workload.shape: {e}")))?;
    // Planar-mesh lower bound for the same GEMM, as a yardstick for on-chip runs.
    let planar = fisher_bound(&MeshBoundInput::gemm(shape, 2)?);
    match *arch {
        ArchSpec::Systolic { rows, cols } => {
            let cfg = SystolicConfig::new(rows, cols)?;
            let (a, b) = make_gemm(shape, w.seed);
            let sim = simulate_systolic_gemm(&a, &b, cfg)?;
            let mut row = ReportRow::new("systolic", format!("rows={rows};cols={cols}"), workload_label(w));
            fill_sim(&mut row, &sim);
            row.model_cycles = Some(systolic_cycle_formula(shape, cfg));
            row.bound = Some(planar);
            row.bound_ratio = Some(sim.cycles as f64 / planar);
            row.exact = Some(sim.result == reference_matmul(&a, &b)?);
            Ok(row)
        }
        ArchSpec::Streamer { pes, fanout, level_latency, port_width } => {
            let width = port_width.unwrap_or(fanout);
            let tree = build_ce_tree(pes, fanout, level_latency, width)?;
            let (a, b) = make_gemm(shape, w.seed);
            let sim = simulate_cs_gemm(&a, &b, &tree, w.block_width)?;
            let mut row = ReportRow::new(
                "streamer",
                format!(
                    "pes={pes};fanout={fanout};level_latency={level_latency};port_width={width};levels={}",
                    tree.levels()
                ),
                workload_label(w),
            );
            fill_sim(&mut row, &sim);
            row.model_cycles = Some(cs_gemm_cycle_formula(shape, &tree, w.block_width));
            row.steps = Some(shape.k().div_ceil(w.block_width));
            row.bound = Some(planar);
            row.bound_ratio = Some(sim.cycles as f64 / planar);
            row.exact = Some(sim.result == reference_matmul(&a, &b)?);
            Ok(row)
        }
        ArchSpec::Summa { p_rows, p_cols, alpha, beta, node_mac_rate, element_bytes } => {
            let cluster = ClusterModel::new(p_rows, p_cols, CommModel::new(alpha, beta)?, node_mac_rate)?
                .with_element_bytes(element_bytes)?;
            let rep = simulate_summa(shape, w.block_width, &cluster)?;
            let mut row = ReportRow::new(
                "summa",
                format!(
                    "p_rows={p_rows};p_cols={p_cols};alpha={alpha};beta={beta};node_mac_rate={node_mac_rate};element_bytes={element_bytes}"
                ),
                workload_label(w),
            );
            row.seconds = Some(rep.total_time);
            row.comm_seconds = Some(rep.comm_time);
            row.comp_seconds = Some(rep.comp_time);
            row.latency_seconds = Some(rep.latency_time);
            row.steps = Some(rep.steps);
            row.mac_ops = Some(rep.node_macs.iter().sum());
            Ok(row)
        }
    }
}

/// Chain, grid and CE-tree inner products of the same vectors, each
/// against its own lower bound (mesh bound for the meshes, tree depth for
/// the tree).
fn inner_product_rows(ip: &InnerProductSpec) -> Result<Vec<ReportRow>> {
    let n = ip.n;
    let (a, b) = make_vectors(n, ip.seed);
    let want = dot(&a, &b)?;
    let label = format!("n={n};seed={}", ip.seed);
    let mut rows = Vec::with_capacity(3);
    for d in [1u32, 2] {
        let cfg = MeshConfig::fitted(n, d, ip.hop_latency)?;
        let sim = if d == 1 {
            simulate_chain_reduction(&a, &b, &cfg)?
        } else {
            simulate_grid_reduction(&a, &b, &cfg)?
        };
        let (x, y) = cfg.extents();
        let (arch, params) = if d == 1 {
            ("mesh_chain", format!("extent={x};hop_latency={}", ip.hop_latency))
        } else {
            ("mesh_grid", format!("extents={x}x{y};hop_latency={}", ip.hop_latency))
        };
        let bound = fisher_bound(&MeshBoundInput::inner_product(n as u64, d)?);
        let mut row = ReportRow::new(arch, params, label.clone());
        fill_sim(&mut row, &sim);
        row.bound = Some(bound);
        row.bound_ratio = Some(sim.cycles as f64 / bound);
        row.exact = Some(sim.result.get(0, 0) == want);
        rows.push(row);
    }
    let sim = simulate_tree_inner_product(&a, &b, ip.fanout, ip.level_latency)?;
    let depth = f64::from(tree_time(n as u64, ip.fanout as u64)?);
    let mut row = ReportRow::new(
        "ce_tree",
        format!("fanout={};level_latency={}", ip.fanout, ip.level_latency),
        label,
    );
    fill_sim(&mut row, &sim);
    row.model_cycles = Some(1 + depth as u64 * ip.level_latency);
    row.bound = Some(depth);
    row.bound_ratio = (depth > 0.0).then(|| sim.cycles as f64 / depth);
    row.exact = Some(sim.result.get(0, 0) == want);
    rows.push(row);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Config {
        Config::from_json_str(text).unwrap()
    }

    #[test]
    fn systolic_four_cubed() {
        let rows = run_experiment(&cfg(
            r#"{"schema_version":1,"experiment":"simulate","workload":{"shape":{"m":4,"n":4,"k":4}},
                "architectures":[{"kind":"systolic","rows":4,"cols":4}]}"#,
        ))
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cycles, Some(14));
        assert_eq!(rows[0].model_cycles, Some(14));
        assert_eq!(rows[0].exact, Some(true));
    }

    #[test]
    fn streamer_precondition_is_a_simulation_error() {
        let err = run_experiment(&cfg(
            r#"{"schema_version":1,"experiment":"simulate","workload":{"shape":{"m":2,"n":2,"k":4}},
                "architectures":[{"kind":"streamer","pes":5}]}"#,
        ))
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bounds_rows() {
        let rows = run_experiment(&cfg(r#"{"schema_version":1,"experiment":"bounds","inner_product":{"n":64}}"#))
            .unwrap();
        let names: Vec<_> = rows.iter().map(|r| r.architecture.as_str()).collect();
        assert_eq!(names, ["mesh_chain", "mesh_grid", "ce_tree"]);
        assert!(rows.iter().all(|r| r.exact == Some(true)));
        assert!(rows[0].bound_ratio.unwrap() >= 1.0 && rows[1].bound_ratio.unwrap() >= 1.0);
        assert_eq!(rows[2].cycles, Some(7));
    }

    #[test]
    fn summa_row() {
        let rows = run_experiment(&cfg(
            r#"{"schema_version":1,"experiment":"simulate","workload":{"shape":{"m":256,"n":256,"k":256},"block_width":32},
                "architectures":[{"kind":"summa","p_rows":4,"p_cols":4,"alpha":1e-6,"beta":0,"node_mac_rate":1e9}]}"#,
        ))
        .unwrap();
        assert_eq!(rows[0].steps, Some(8));
        assert_eq!(rows[0].comm_seconds, Some(32e-6));
        assert_eq!(rows[0].mac_ops, Some(256 * 256 * 256));
    }
}
