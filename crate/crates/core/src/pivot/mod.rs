//! Trees that partition by exact distance to a pivot: each child edge `i`
//! holds the records at distance exactly `i`, and a search descends the edges
//! in `[d(q, p) - e, d(q, p) + e]`.

mod bk;
mod fq;

pub use bk::{BkNode, BkTree};
pub use fq::{FqNode, FqTree};

/// Default bucket capacity: a 4 KiB page of 8-byte entries.
pub const DEFAULT_BUCKET_SIZE: usize = 512;
