//! Range search over string collections in metric space.
//!
//! Every index in this crate answers the same question: given a query string
//! `q` and a radius `e`, return every stored record whose edit distance to `q`
//! is at most `e`. They differ in how they use the triangle inequality to
//! avoid computing that distance for most of the collection.
//!
//! The families are:
//!
//! - exact-distance partitions: [`BkTree`], [`FqTree`] (one fixed pivot per
//!   level) and its fixed-height variant built by [`FqTree::build_fixed_height`];
//! - median-split trees: [`VpTree`] and [`MvpTree`];
//! - covering-radius trees: [`BallTree`] in bisector, M-tree and
//!   bounded-leaf (MTB) flavours;
//! - threshold clustering: [`BubbleIndex`].
//!
//! Searches are instrumented through a [`DistanceCounter`], which counts edit
//! distance evaluations per query (memoized by record id) and, optionally,
//! screens candidates with the cheap bag distance first.

pub mod ball;
pub mod bubble;
mod catalog;
mod counter;
mod dataset;
mod error;
mod index;
pub mod metrics;
pub mod pivot;
pub mod rng;
pub mod vp;

pub use ball::{BallParams, BallTree, BallVariant};
pub use bubble::{BubbleIndex, BubbleParams};
pub use catalog::{build_index, IndexConfig, Structure};
pub use counter::DistanceCounter;
pub use dataset::{load_dataset, Dataset, RangeQuery, Record, RecordId};
pub use error::{Error, Result};
pub use index::{linear_scan, prune_subset, LinearScan, QueryResult, RangeIndex};
pub use metrics::{bag_distance, edit_distance, filtered_verify, CharBag};
pub use pivot::{BkTree, FqTree};
pub use vp::{MvpParams, MvpTree, VpParams, VpTree};
