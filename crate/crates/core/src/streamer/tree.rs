use crate::bounds::CollectiveKind;
use crate::error::{Error, Result};
use crate::math::ceil_log;
use crate::sim::TransferCounts;

/// A complete `fanout`-ary tree of CEs whose leaves are PEs `0..num_pes`.
///
/// PE `p` sits at depth `levels`; its ancestor at depth `l` is
/// `p / fanout^(levels - l)`, so the root (depth 0) is the only CE a single
/// memory port talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CeTree {
    num_pes: usize,
    fanout: usize,
    levels: u32,
    level_latency: u64,
    port_width: usize,
}

pub const DEFAULT_FANOUT: usize = 4;
pub const DEFAULT_LEVEL_LATENCY: u64 = 1;

/// Tree over `num_pes` PEs; see [`CeTree`].
pub fn build_ce_tree(num_pes: usize, fanout: usize, level_latency: u64, port_width: usize) -> Result<CeTree> {
    if num_pes == 0 {
        return Err(Error::InvalidParameter { name: "num_pes", value: 0, expected: ">= 1" });
    }
    if fanout < 2 {
        return Err(Error::InvalidParameter { name: "fanout", value: fanout as u64, expected: ">= 2" });
    }
    if level_latency == 0 {
        return Err(Error::InvalidParameter { name: "level_latency", value: 0, expected: ">= 1" });
    }
    if port_width == 0 {
        return Err(Error::InvalidParameter { name: "port_width", value: 0, expected: ">= 1" });
    }
    Ok(CeTree {
        num_pes,
        fanout,
        levels: ceil_log(num_pes as u64, fanout as u64),
        level_latency,
        port_width,
    })
}

impl CeTree {
    /// Fanout 4, one cycle per level, port width equal to the fanout.
    pub fn with_defaults(num_pes: usize) -> Result<CeTree> {
        build_ce_tree(num_pes, DEFAULT_FANOUT, DEFAULT_LEVEL_LATENCY, DEFAULT_FANOUT)
    }

    pub fn num_pes(&self) -> usize {
        self.num_pes
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn level_latency(&self) -> u64 {
        self.level_latency
    }

    pub fn port_width(&self) -> usize {
        self.port_width
    }

    pub fn leaf_capacity(&self) -> u64 {
        (self.fanout as u64).pow(self.levels)
    }

    /// Root-to-leaf latency in cycles.
    pub fn depth_latency(&self) -> u64 {
        u64::from(self.levels) * self.level_latency
    }

    fn ancestor(&self, pe: usize, depth: u32) -> usize {
        pe / self.fanout.pow(self.levels - depth)
    }

    /// Adds the link traversals of one multicast from memory to every PE in
    /// `dests` (sorted ascending). Each tree edge is used once.
    pub(crate) fn count_multicast(&self, dests: &[usize], times: u64, tc: &mut TransferCounts) {
        if self.levels == 0 {
            tc.memory_to_pe += times;
            return;
        }
        tc.memory_to_ce += times;
        for depth in 1..self.levels {
            tc.ce_to_ce += times * self.distinct_ancestors(dests, depth);
        }
        tc.ce_to_pe += times * dests.len() as u64;
    }

    /// Adds the link traversals of moving one value from each PE in `srcs` up to memory.
    pub(crate) fn count_upward(&self, srcs: &[usize], times: u64, combine: bool, tc: &mut TransferCounts) {
        if self.levels == 0 {
            tc.pe_to_memory += times * srcs.len() as u64;
            return;
        }
        tc.pe_to_ce += times * srcs.len() as u64;
        for depth in 1..self.levels {
            let per_edge = if combine { self.distinct_ancestors(srcs, depth) } else { srcs.len() as u64 };
            tc.ce_to_ce += times * per_edge;
        }
        tc.ce_to_memory += times * if combine { 1 } else { srcs.len() as u64 };
    }

    fn distinct_ancestors(&self, sorted: &[usize], depth: u32) -> u64 {
        let mut count = 0;
        let mut last = None;
        for &p in sorted {
            let a = self.ancestor(p, depth);
            if last != Some(a) {
                count += 1;
                last = Some(a);
            }
        }
        count
    }
}

/// One traversal of the hierarchy, the same for all four collectives.
pub fn tree_collective_latency(tree: &CeTree, _kind: CollectiveKind) -> u64 {
    tree.depth_latency()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn level_counts() {
        assert_eq!(build_ce_tree(1, 2, 1, 1).unwrap().levels(), 0);
        assert_eq!(build_ce_tree(16, 4, 1, 1).unwrap().levels(), 2);
        assert_eq!(build_ce_tree(10, 2, 1, 1).unwrap().levels(), 4);
        assert!(build_ce_tree(10, 1, 1, 1).is_err());
        assert!(build_ce_tree(0, 2, 1, 1).is_err());
        assert!(build_ce_tree(4, 2, 0, 1).is_err());
        assert!(build_ce_tree(4, 2, 1, 0).is_err());
        for p in 1..300 {
            let t = build_ce_tree(p, 3, 1, 1).unwrap();
            assert!(t.leaf_capacity() >= p as u64);
            assert!(t.levels() == 0 || t.leaf_capacity() / 3 < p as u64);
        }
    }

    #[test]
    fn collective_latency_examples() {
        for kind in CollectiveKind::ALL {
            assert_eq!(tree_collective_latency(&build_ce_tree(1, 2, 5, 1).unwrap(), kind), 0);
            assert_eq!(tree_collective_latency(&build_ce_tree(256, 2, 1, 1).unwrap(), kind), 8);
            assert_eq!(tree_collective_latency(&build_ce_tree(256, 4, 2, 1).unwrap(), kind), 8);
        }
    }

    #[test]
    fn multicast_uses_each_edge_once() {
        let t = build_ce_tree(16, 2, 1, 1).unwrap();
        let mut tc = TransferCounts::default();
        let all: Vec<usize> = (0..16).collect();
        t.count_multicast(&all, 1, &mut tc);
        // Full binary tree of depth 4: 2 + 4 + 8 inner edges, 16 leaf edges.
        assert_eq!((tc.memory_to_ce, tc.ce_to_ce, tc.ce_to_pe), (1, 14, 16));
        let mut tc = TransferCounts::default();
        t.count_multicast(&[0, 1], 1, &mut tc);
        assert_eq!((tc.memory_to_ce, tc.ce_to_ce, tc.ce_to_pe), (1, 3, 2));
        assert_eq!(tc.pe_to_pe, 0);
    }
}
