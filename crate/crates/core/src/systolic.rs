//! Register-level model of a weight-stationary systolic array.
//!
//! A tile of `B` (R x C) is shifted into the array from the top, one row per
//! cycle. Rows of `A` then stream in from the west edge with a one-cycle
//! skew per array row: `A[i][r]` enters array row `r` at stream cycle
//! `i + r` and moves one PE east per clock. Partial sums move one PE south
//! per clock, so output `C[i][c]` leaves the bottom of column `c` at stream
//! cycle `i + (R - 1) + c`. Tiles run k-tile outer, n-tile inner, with no
//! overlap between weight load and streaming. Edge tiles pad unused PEs with
//! zero weights; those PEs still take the clock but issue no MAC.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::ceil_div;
use crate::sim::{SimResult, Trace};
use crate::workload::{step_widths, GemmShape, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystolicConfig {
    rows: usize,
    cols: usize,
}

impl SystolicConfig {
    /// `rows` runs along the inner dimension, `cols` along output columns.
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidParameter { name: "rows", value: 0, expected: ">= 1" });
        }
        if cols == 0 {
            return Err(Error::InvalidParameter { name: "cols", value: 0, expected: ">= 1" });
        }
        Ok(SystolicConfig { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pes(&self) -> usize {
        self.rows * self.cols
    }
}

/// Closed-form cycle count: `ceil(k/R) * ceil(n/C) * (R + m + R + C - 2)`.
pub fn systolic_cycle_formula(shape: GemmShape, cfg: SystolicConfig) -> u64 {
    let (r, c) = (cfg.rows, cfg.cols);
    let tiles = ceil_div(shape.k(), r) * ceil_div(shape.n(), c);
    (tiles * (r + shape.m() + r + c - 2)) as u64
}

/// What one PE latches at the end of a clock.
#[derive(Debug, Clone, Copy, Default)]
pub struct PeState {
    pub stationary_weight: i64,
    /// Operand forwarded east, tagged with the `A` row it came from.
    pub east_register: Option<(usize, i64)>,
    /// Partial sum forwarded south, tagged with its output row.
    pub south_register: Option<(usize, i64)>,
}

struct Array {
    cols: usize,
    cur: Vec<PeState>,
    next: Vec<PeState>,
    /// Whether the weight at each PE is a real element of `B`.
    live: Vec<bool>,
}

impl Array {
    fn new(cfg: SystolicConfig) -> Self {
        Array {
            cols: cfg.cols,
            cur: vec![PeState::default(); cfg.pes()],
            next: vec![PeState::default(); cfg.pes()],
            live: vec![false; cfg.pes()],
        }
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }
}

pub fn simulate_systolic_gemm(a: &Matrix, b: &Matrix, cfg: SystolicConfig) -> Result<SimResult> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "systolic_gemm",
            left: (a.rows(), a.cols()),
            right: (b.rows(), b.cols()),
        });
    }
    a.check_operand_range()?;
    b.check_operand_range()?;
    let shape = GemmShape::new(a.rows(), b.cols(), a.cols())?;
    let (m, rows, cols) = (shape.m(), cfg.rows, cfg.cols);
    let span = m + rows + cols - 2;

    let mut out = Matrix::zeros(m, shape.n());
    let mut trace = Trace::with_capacity(systolic_cycle_formula(shape, cfg) as usize);
    let mut macs = 0u64;
    let mut array = Array::new(cfg);

    for (k0, kw) in step_widths(shape.k(), rows) {
        for (n0, nw) in step_widths(shape.n(), cols) {
            // Weight load: row r of the tile enters the top and shifts down r rows.
            for r in 0..rows {
                for c in 0..cols {
                    let live = r < kw && c < nw;
                    let i = array.idx(r, c);
                    array.live[i] = live;
                    array.cur[i] = PeState {
                        stationary_weight: if live { b.get(k0 + r, n0 + c) } else { 0 },
                        east_register: None,
                        south_register: None,
                    };
                }
            }
            trace.idle(rows);
            trace.transfers.memory_to_pe += (rows * cols) as u64;
            trace.transfers.pe_to_pe += (cols * rows * (rows - 1) / 2) as u64;

            for t in 0..span {
                let mut active = 0u32;
                let mut injected = 0u32;
                for r in 0..rows {
                    for c in 0..cols {
                        let west = if c == 0 {
                            // Skewed injection; padded rows get zero activations.
                            t.checked_sub(r).filter(|&i| i < m).map(|i| {
                                injected += 1;
                                (i, if r < kw { a.get(i, k0 + r) } else { 0 })
                            })
                        } else {
                            array.cur[array.idx(r, c - 1)].east_register
                        };
                        let pe = array.idx(r, c);
                        let weight = array.cur[pe].stationary_weight;
                        let (east, south) = match west {
                            Some((row, x)) => {
                                let north = if r == 0 {
                                    0
                                } else {
                                    let (tag, v) = array.cur[array.idx(r - 1, c)]
                                        .south_register
                                        .expect("partial sum arrives with its operand");
                                    debug_assert_eq!(tag, row);
                                    v
                                };
                                if array.live[pe] {
                                    active += 1;
                                }
                                (Some((row, x)), Some((row, north + x * weight)))
                            }
                            None => (None, None),
                        };
                        array.next[pe] = PeState { stationary_weight: weight, east_register: east, south_register: south };
                    }
                }
                for c in 0..cols {
                    if let Some((row, v)) = array.next[array.idx(rows - 1, c)].south_register {
                        trace.transfers.pe_to_memory += 1;
                        if c < nw {
                            out.add_at(row, n0 + c, v);
                        }
                    }
                }
                let forwarded = array
                    .next
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % cols + 1 < cols)
                    .filter(|(_, s)| s.east_register.is_some())
                    .count()
                    + array.next[..(rows - 1) * cols].iter().filter(|s| s.south_register.is_some()).count();
                trace.transfers.pe_to_pe += forwarded as u64;
                trace.transfers.memory_to_pe += u64::from(injected);
                core::mem::swap(&mut array.cur, &mut array.next);
                macs += u64::from(active);
                trace.push(active, injected);
            }
        }
    }

    Ok(SimResult {
        cycles: trace.cycles(),
        result: out,
        mac_ops_issued: macs,
        units: cfg.pes() as u64,
        trace,
    })
}
