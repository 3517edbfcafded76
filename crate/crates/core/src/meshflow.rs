//! Store-and-forward inner products on 1-D and 2-D meshes.
//!
//! Operand pairs come from memory through a port on the west edge of each
//! mesh row, one pair per cycle, nearest PE first. Every link, including
//! the memory port, takes `hop_latency` cycles, and a PE may only talk to
//! its neighbours. Partial sums flow east along each row; row results are
//! then moved to the east column and reduced southward, and the final value
//! leaves the south-east corner for memory on the far side. A PE issues at
//! most one operation per cycle, one cycle after its inputs are present.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::bounds::{fisher_bound, MeshBoundInput};
use crate::error::{Error, Result};
use crate::math::ceil_div;
use crate::sim::{SimResult, Trace};
use crate::workload::{check_operands, make_vectors, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshConfig {
    dimension: u32,
    /// PEs per row (x) and number of rows (y); `rows == 1` for a chain.
    cols: usize,
    rows: usize,
    hop_latency: u64,
}

impl MeshConfig {
    pub fn new(dimension: u32, extents: &[usize], hop_latency: u64) -> Result<Self> {
        if hop_latency == 0 {
            return Err(Error::InvalidParameter { name: "hop_latency", value: 0, expected: ">= 1" });
        }
        let (cols, rows) = match (dimension, extents) {
            (1, [x]) => (*x, 1),
            (2, [x, y]) => (*x, *y),
            (1 | 2, _) => {
                return Err(Error::InvalidParameter {
                    name: "extents",
                    value: extents.len() as u64,
                    expected: "one extent per mesh dimension",
                })
            }
            _ => {
                return Err(Error::InvalidParameter {
                    name: "dimension",
                    value: dimension.into(),
                    expected: "1 or 2",
                })
            }
        };
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidParameter { name: "extents", value: 0, expected: ">= 1" });
        }
        Ok(MeshConfig { dimension, cols, rows, hop_latency })
    }

    pub fn chain(extent: usize, hop_latency: u64) -> Result<Self> {
        MeshConfig::new(1, &[extent], hop_latency)
    }

    pub fn grid(cols: usize, rows: usize, hop_latency: u64) -> Result<Self> {
        MeshConfig::new(2, &[cols, rows], hop_latency)
    }

    /// Smallest mesh of the given dimension that holds `n` operand pairs:
    /// a chain of `n`, or a `ceil(sqrt n)`-wide grid with just enough rows.
    pub fn fitted(n: usize, dimension: u32, hop_latency: u64) -> Result<Self> {
        match dimension {
            1 => MeshConfig::chain(n, hop_latency),
            _ => {
                let side = isqrt_ceil(n);
                MeshConfig::new(dimension, &[side, ceil_div(n, side)], hop_latency)
            }
        }
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn extents(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn hop_latency(&self) -> u64 {
        self.hop_latency
    }

    pub fn pes(&self) -> usize {
        self.cols * self.rows
    }
}

fn isqrt_ceil(n: usize) -> usize {
    let mut s = libm::sqrt(n as f64) as usize;
    while s * s < n {
        s += 1;
    }
    while s > 1 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    /// Operand pair `(a, b)` bound for column `dest` reaches `(row, col)`.
    Pair { row: usize, col: usize, dest: usize, a: i64, b: i64 },
    /// Eastbound row partial sum reaches `(row, col)`.
    RowSum { row: usize, col: usize, value: i64 },
    /// Southbound column partial sum reaches `(row, east column)`.
    ColSum { row: usize, value: i64 },
    Memory { value: i64 },
}

#[derive(Debug, Clone, Copy, Default)]
struct Pe {
    pair: Option<(u64, i64, i64)>,
    west_sum: Option<(u64, i64)>,
    /// Row result held at the east column and the column sum from the north.
    row_result: Option<(u64, i64)>,
    north_sum: Option<(u64, i64)>,
    last_op: Option<u64>,
}

struct Engine<'a> {
    cfg: &'a MeshConfig,
    queue: BinaryHeap<Reverse<(u64, u64, Event)>>,
    seq: u64,
    pes: Vec<Pe>,
    row_len: Vec<usize>,
    used_rows: usize,
    trace: Trace,
    macs: u64,
}

impl Engine<'_> {
    fn schedule(&mut self, time: u64, ev: Event) {
        self.seq += 1;
        self.queue.push(Reverse((time, self.seq, ev)));
    }

    fn pe(&mut self, row: usize, col: usize) -> &mut Pe {
        &mut self.pes[row * self.cfg.cols + col]
    }

    fn mark(slot: &mut Vec<u32>, cycle: u64, amount: u32) {
        let cycle = cycle as usize;
        if slot.len() <= cycle {
            slot.resize(cycle + 1, 0);
        }
        slot[cycle] += amount;
    }

    /// Claims the first free cycle after `ready` on a PE.
    fn issue(&mut self, row: usize, col: usize, ready: u64) -> u64 {
        let pe = self.pe(row, col);
        let cycle = match pe.last_op {
            Some(last) if last > ready => last + 1,
            _ => ready + 1,
        };
        pe.last_op = Some(cycle);
        cycle
    }

    fn hop(&mut self) -> u64 {
        self.trace.transfers.pe_to_pe += 1;
        self.cfg.hop_latency
    }

    fn try_mac(&mut self, row: usize, col: usize) {
        let pe = *self.pe(row, col);
        let Some((t_pair, a, b)) = pe.pair else { return };
        let (t_sum, sum) = match (col, pe.west_sum) {
            (0, _) => (0, 0),
            (_, Some(s)) => s,
            _ => return,
        };
        let cycle = self.issue(row, col, t_pair.max(t_sum));
        Engine::mark(&mut self.trace.active, cycle, 1);
        self.macs += 1;
        let value = sum + a * b;
        if col + 1 == self.cfg.cols {
            self.pe(row, col).row_result = Some((cycle, value));
            self.try_column(row);
        } else {
            let h = self.hop();
            self.schedule(cycle + h, Event::RowSum { row, col: col + 1, value });
        }
    }

    fn try_column(&mut self, row: usize) {
        let east = self.cfg.cols - 1;
        let pe = *self.pe(row, east);
        let (ready, value) = match (row, pe.row_result, pe.north_sum) {
            (_, None, _) => return,
            (0, Some(r), _) => r,
            (_, Some(_), None) => return,
            (_, Some((t_row, v_row)), Some((t_north, v_north))) => {
                (self.issue(row, east, t_row.max(t_north)), v_row + v_north)
            }
        };
        self.send_south(row, ready, value);
    }

    fn send_south(&mut self, row: usize, ready: u64, value: i64) {
        if row + 1 == self.cfg.rows {
            self.trace.transfers.pe_to_memory += 1;
            self.schedule(ready + self.cfg.hop_latency, Event::Memory { value });
        } else {
            let h = self.hop();
            self.schedule(ready + h, Event::ColSum { row: row + 1, value });
        }
    }

    fn handle(&mut self, time: u64, ev: Event) -> Option<i64> {
        match ev {
            Event::Pair { row, col, dest, a, b } => {
                // A pair moves as one transfer.
                if col == dest {
                    Engine::mark(&mut self.trace.deliveries, time, 2);
                    self.pe(row, col).pair = Some((time, a, b));
                    self.try_mac(row, col);
                } else {
                    self.trace.transfers.pe_to_pe += 1;
                    self.schedule(time + self.cfg.hop_latency, Event::Pair { row, col: col + 1, dest, a, b });
                }
            }
            Event::RowSum { row, col, value } => {
                if col < self.row_len[row] {
                    self.pe(row, col).west_sum = Some((time, value));
                    self.try_mac(row, col);
                } else if col + 1 == self.cfg.cols {
                    self.pe(row, col).row_result = Some((time, value));
                    self.try_column(row);
                } else {
                    let h = self.hop();
                    self.schedule(time + h, Event::RowSum { row, col: col + 1, value });
                }
            }
            Event::ColSum { row, value } => {
                if row < self.used_rows {
                    let east = self.cfg.cols - 1;
                    self.pe(row, east).north_sum = Some((time, value));
                    self.try_column(row);
                } else {
                    self.send_south(row, time, value);
                }
            }
            Event::Memory { value } => return Some(value),
        }
        None
    }
}

fn simulate_mesh(a: &[i64], b: &[i64], cfg: &MeshConfig) -> Result<SimResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { op: "inner_product", left: (1, a.len()), right: (b.len(), 1) });
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", value: 0, expected: ">= 1" });
    }
    if n > cfg.pes() {
        return Err(Error::Capacity { what: "mesh PEs", required: n, available: cfg.pes() });
    }
    check_operands(a)?;
    check_operands(b)?;

    let used_rows = ceil_div(n, cfg.cols);
    let row_len: Vec<usize> = (0..used_rows).map(|r| cfg.cols.min(n - r * cfg.cols)).collect();
    let mut eng = Engine {
        cfg,
        queue: BinaryHeap::new(),
        seq: 0,
        pes: vec![Pe::default(); cfg.pes()],
        row_len,
        used_rows,
        trace: Trace::default(),
        macs: 0,
    };
    for (row, &len) in eng.row_len.clone().iter().enumerate() {
        for col in 0..len {
            let e = row * cfg.cols + col;
            // Pair `col` leaves memory at cycle `col` and lands in the row's first PE.
            eng.trace.transfers.memory_to_pe += 2;
            let arrive = col as u64 + cfg.hop_latency - 1;
            eng.schedule(arrive, Event::Pair { row, col: 0, dest: col, a: a[e], b: b[e] });
        }
    }
    let mut finished = None;
    while let Some(Reverse((time, _, ev))) = eng.queue.pop() {
        if let Some(value) = eng.handle(time, ev) {
            finished = Some((time, value));
        }
    }
    let (time, value) = finished.expect("reduction reaches memory");
    let cycles = time + 1;
    let mut trace = eng.trace;
    trace.active.resize(cycles as usize, 0);
    trace.deliveries.resize(cycles as usize, 0);
    Ok(SimResult {
        cycles,
        result: Matrix::new(1, 1, vec![value])?,
        mac_ops_issued: eng.macs,
        units: cfg.pes() as u64,
        trace,
    })
}

/// Inner product of two length-`n` vectors on a 1-D chain of `extent >= n` PEs.
pub fn simulate_chain_reduction(a: &[i64], b: &[i64], cfg: &MeshConfig) -> Result<SimResult> {
    if cfg.dimension != 1 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            value: cfg.dimension.into(),
            expected: "1 for a chain",
        });
    }
    simulate_mesh(a, b, cfg)
}

/// Inner product on a 2-D grid: row-wise reduction, then down the east column.
pub fn simulate_grid_reduction(a: &[i64], b: &[i64], cfg: &MeshConfig) -> Result<SimResult> {
    if cfg.dimension != 2 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            value: cfg.dimension.into(),
            expected: "2 for a grid",
        });
    }
    simulate_mesh(a, b, cfg)
}

/// Simulated cycles over the mesh lower bound for a length-`n` inner product
/// on the fitted mesh of dimension `d`, one cycle per hop.
pub fn empirical_bound_ratio(n: usize, d: u32, seed: u64) -> Result<f64> {
    let cfg = MeshConfig::fitted(n, d, 1)?;
    let (a, b) = make_vectors(n, seed);
    let run = simulate_mesh(&a, &b, &cfg)?;
    let bound = fisher_bound(&MeshBoundInput::inner_product(n as u64, d)?);
    Ok(run.cycles as f64 / bound)
}
