//! Output contract shared by the systolic, mesh and streaming simulators.

use alloc::vec::Vec;

use crate::workload::Matrix;

/// Link traversals observed during a run, grouped by endpoint type.
/// "CE" is a collective-streaming element of the streaming tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransferCounts {
    pub memory_to_pe: u64,
    pub memory_to_ce: u64,
    pub ce_to_ce: u64,
    pub ce_to_pe: u64,
    pub pe_to_ce: u64,
    pub ce_to_memory: u64,
    pub pe_to_memory: u64,
    pub pe_to_pe: u64,
}

impl TransferCounts {
    pub fn total(&self) -> u64 {
        self.memory_to_pe
            + self.memory_to_ce
            + self.ce_to_ce
            + self.ce_to_pe
            + self.pe_to_ce
            + self.ce_to_memory
            + self.pe_to_memory
            + self.pe_to_pe
    }
}

/// Per-cycle activity of a run. Both vectors have exactly `cycles` entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// MAC units issuing a multiply-accumulate in each cycle.
    pub active: Vec<u32>,
    /// Operand elements arriving at MAC units in each cycle.
    pub deliveries: Vec<u32>,
    pub transfers: TransferCounts,
}

impl Trace {
    pub(crate) fn with_capacity(cycles: usize) -> Self {
        Trace {
            active: Vec::with_capacity(cycles),
            deliveries: Vec::with_capacity(cycles),
            transfers: TransferCounts::default(),
        }
    }

    pub(crate) fn push(&mut self, active: u32, deliveries: u32) {
        self.active.push(active);
        self.deliveries.push(deliveries);
    }

    pub(crate) fn idle(&mut self, cycles: usize) {
        self.active.resize(self.active.len() + cycles, 0);
        self.deliveries.resize(self.deliveries.len() + cycles, 0);
    }

    pub fn cycles(&self) -> u64 {
        self.active.len() as u64
    }

    /// Cycles before the first operand reaches a MAC unit (or before the
    /// first MAC, if operands were preloaded).
    pub fn fill_cycles(&self) -> u64 {
        self.active
            .iter()
            .zip(&self.deliveries)
            .position(|(&a, &d)| a > 0 || d > 0)
            .unwrap_or(self.active.len()) as u64
    }

    /// Cycles after the last MAC or operand delivery.
    pub fn drain_cycles(&self) -> u64 {
        self.active
            .iter()
            .zip(&self.deliveries)
            .rev()
            .position(|(&a, &d)| a > 0 || d > 0)
            .unwrap_or(self.active.len()) as u64
    }

    pub fn mac_total(&self) -> u64 {
        self.active.iter().map(|&a| u64::from(a)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub cycles: u64,
    pub result: Matrix,
    pub mac_ops_issued: u64,
    /// MAC units the utilization is measured against.
    pub units: u64,
    pub trace: Trace,
}

impl SimResult {
    /// `mac_ops_issued / (units * cycles)`.
    pub fn utilization(&self) -> f64 {
        if self.cycles == 0 {
            return 0.0;
        }
        self.mac_ops_issued as f64 / (self.units as f64 * self.cycles as f64)
    }

    /// Fill plus drain, read off the trace.
    pub fn overhead_cycles(&self) -> u64 {
        let fill = self.trace.fill_cycles();
        if fill == self.cycles {
            return self.cycles;
        }
        fill + self.trace.drain_cycles()
    }

    /// Utilization over the cycles between fill and drain.
    pub fn steady_state_utilization(&self) -> f64 {
        let busy = self.cycles - self.overhead_cycles();
        if busy == 0 {
            return 0.0;
        }
        self.mac_ops_issued as f64 / (self.units as f64 * busy as f64)
    }
}
