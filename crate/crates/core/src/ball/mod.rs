//! Covering-radius trees built by repeated insertion.
//!
//! Every routing entry stores a routing object, the exact maximum distance
//! from it to any record below (its covering radius) and its distance to the
//! routing object one level up. Records live only in leaves; a routing object
//! is a reference to a record that also sits in some leaf beneath it.
//!
//! Three insertion policies share the node layout and search:
//!
//! - [`BallVariant::Bisector`]: two routing objects per internal node, a new
//!   record follows the closer one, a full leaf turns into an internal node
//!   over two leaves seeded by its farthest pair.
//! - [`BallVariant::MTree`]: up to `fanout` entries per node, a new record
//!   follows the entry whose radius grows least (ties: closest), and splits
//!   propagate upwards.
//! - [`BallVariant::Mtb`]: M-tree layout, but a record follows the closest
//!   routing object and leaf-level covering radii never exceed `threshold`.

mod tree;

pub use tree::{BallNode, BallTree, InsertChoice, LeafEntry, RoutingEntry};

/// 8-byte entries in a 4 KiB page, halved for the stored parent distance.
pub const DEFAULT_LEAF_CAPACITY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallVariant {
    Bisector,
    MTree,
    Mtb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallParams {
    pub variant: BallVariant,
    /// Maximum entries per internal node. Fixed at 2 for the bisector tree.
    pub fanout: usize,
    pub leaf_capacity: usize,
    /// Leaf-level covering-radius bound; only used by MTB.
    pub threshold: u32,
}

impl BallParams {
    pub fn bisector() -> Self {
        Self {
            variant: BallVariant::Bisector,
            fanout: 2,
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            threshold: 0,
        }
    }

    pub fn mtree(fanout: usize) -> Self {
        Self {
            variant: BallVariant::MTree,
            fanout,
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            threshold: 0,
        }
    }

    pub fn mtb(fanout: usize, threshold: u32) -> Self {
        Self {
            variant: BallVariant::Mtb,
            fanout,
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            threshold,
        }
    }

    pub fn with_leaf_capacity(mut self, leaf_capacity: usize) -> Self {
        self.leaf_capacity = leaf_capacity;
        self
    }
}
