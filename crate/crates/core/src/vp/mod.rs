//! Median-split spherical partitions: the binary vantage-point tree and its
//! multi-vantage-point generalization.

mod mvp;
#[allow(clippy::module_inception)]
mod vp;

pub use mvp::{MvpLeafEntry, MvpNode, MvpParams, MvpTree};
pub use vp::{VpNode, VpParams, VpTree};
