use std::fmt;
use std::str::FromStr;

use crate::ball::{BallParams, BallTree, DEFAULT_LEAF_CAPACITY};
use crate::bubble::{BubbleIndex, BubbleParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::index::{LinearScan, RangeIndex};
use crate::pivot::{BkTree, FqTree, DEFAULT_BUCKET_SIZE};
use crate::vp::{MvpParams, MvpTree, VpParams, VpTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    Bk,
    Fq,
    Fh,
    Vp,
    Mvp,
    Bisector,
    MTree,
    Bubble,
    Mtb,
    Linear,
}

impl Structure {
    /// Every structure, in the default benchmark order.
    pub const ALL: [Structure; 10] = [
        Structure::Bk,
        Structure::Fq,
        Structure::Fh,
        Structure::Vp,
        Structure::Mvp,
        Structure::Bisector,
        Structure::MTree,
        Structure::Bubble,
        Structure::Mtb,
        Structure::Linear,
    ];

    /// The nine indexes, without the linear scan.
    pub const INDEXES: [Structure; 9] = [
        Structure::Bk,
        Structure::Fq,
        Structure::Fh,
        Structure::Vp,
        Structure::Mvp,
        Structure::Bisector,
        Structure::MTree,
        Structure::Bubble,
        Structure::Mtb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Bk => "bk",
            Structure::Fq => "fq",
            Structure::Fh => "fh",
            Structure::Vp => "vp",
            Structure::Mvp => "mvp",
            Structure::Bisector => "bisector",
            Structure::MTree => "mtree",
            Structure::Bubble => "bubble",
            Structure::Mtb => "mtb",
            Structure::Linear => "linear",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Structure::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown structure `{s}`")))
    }
}

/// Construction parameters for every structure, with the benchmark defaults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexConfig {
    pub seed: u64,
    /// BK/FQ/FH bucket capacity.
    pub bucket_size: usize,
    /// FH height; `None` extends to the deepest FQ bucket.
    pub fh_height: Option<usize>,
    pub vp: VpParams,
    pub mvp: MvpParams,
    /// Internal fan-out of the M tree and MTB.
    pub fanout: usize,
    /// Leaf capacity of the bisector tree, M tree and MTB.
    pub ball_leaf_capacity: usize,
    /// MTB leaf-radius bound and BUBBLE admission threshold.
    pub threshold: u32,
    pub bubble_branching: usize,
    pub bubble_sample_size: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            bucket_size: DEFAULT_BUCKET_SIZE,
            fh_height: None,
            vp: VpParams::default(),
            mvp: MvpParams::default(),
            fanout: 5,
            ball_leaf_capacity: DEFAULT_LEAF_CAPACITY,
            threshold: 5,
            bubble_branching: BubbleParams::default().branching,
            bubble_sample_size: BubbleParams::default().sample_size,
        }
    }
}

pub fn build_index<'a>(
    structure: Structure,
    dataset: &'a Dataset,
    config: &IndexConfig,
) -> Result<Box<dyn RangeIndex + 'a>> {
    let seed = config.seed;
    let leaf = config.ball_leaf_capacity;
    Ok(match structure {
        Structure::Bk => Box::new(BkTree::build(dataset, config.bucket_size, seed)?),
        Structure::Fq => Box::new(FqTree::build(dataset, config.bucket_size, seed)?),
        Structure::Fh => Box::new(FqTree::build_fixed_height(
            dataset,
            config.bucket_size,
            config.fh_height,
            seed,
        )?),
        Structure::Vp => Box::new(VpTree::build(dataset, VpParams { seed, ..config.vp })?),
        Structure::Mvp => Box::new(MvpTree::build(dataset, MvpParams { seed, ..config.mvp })?),
        Structure::Bisector => Box::new(BallTree::build(
            dataset,
            BallParams::bisector().with_leaf_capacity(leaf),
        )?),
        Structure::MTree => Box::new(BallTree::build(
            dataset,
            BallParams::mtree(config.fanout).with_leaf_capacity(leaf),
        )?),
        Structure::Mtb => Box::new(BallTree::build(
            dataset,
            BallParams::mtb(config.fanout, config.threshold).with_leaf_capacity(leaf),
        )?),
        Structure::Bubble => Box::new(BubbleIndex::build(
            dataset,
            BubbleParams {
                threshold: config.threshold,
                branching: config.bubble_branching,
                sample_size: config.bubble_sample_size,
            },
        )?),
        Structure::Linear => Box::new(LinearScan::new(dataset)),
    })
}
