use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};
use crate::error::{Error, Result};
use crate::index::{QueryResult, RangeIndex, Search};
use crate::rng::{self, Stream};

#[derive(Debug, Clone)]
pub enum FqNode {
    Bucket(Vec<RecordId>),
    /// Split by the pivot of this node's level.
    Split(BTreeMap<u32, FqNode>),
}

/// Fixed-queries tree: every internal node at depth `l` splits by the same
/// pivot, `level_pivots[l]`. Pivots are ordinary records and stay in the
/// buckets; matches are only ever collected from buckets.
///
/// The fixed-height variant extends every shallow bucket with further splits
/// until all buckets sit at the same depth.
#[derive(Debug, Clone)]
pub struct FqTree<'a> {
    dataset: &'a Dataset,
    level_pivots: Vec<RecordId>,
    root: FqNode,
    bucket_size: usize,
    fixed_height: Option<usize>,
}

impl<'a> FqTree<'a> {
    pub fn build(dataset: &'a Dataset, bucket_size: usize, seed: u64) -> Result<Self> {
        Self::build_inner(dataset, bucket_size, None, seed, false)
    }

    /// FH tree. Without an explicit `height` the tree is extended to the
    /// deepest bucket the plain FQ construction produces; with one, splitting
    /// also stops at that depth even if buckets remain over capacity.
    pub fn build_fixed_height(
        dataset: &'a Dataset,
        bucket_size: usize,
        height: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        if height == Some(0) {
            return Err(Error::InvalidParameter(
                "fixed height must be at least 1".into(),
            ));
        }
        Self::build_inner(dataset, bucket_size, height, seed, true)
    }

    fn build_inner(
        dataset: &'a Dataset,
        bucket_size: usize,
        height: Option<usize>,
        seed: u64,
        fixed: bool,
    ) -> Result<Self> {
        if bucket_size == 0 {
            return Err(Error::InvalidParameter(
                "bucket size must be at least 1".into(),
            ));
        }
        let mut order: Vec<RecordId> = dataset.ids().collect();
        order.shuffle(&mut rng::stream(seed, Stream::Pivots));

        let builder = Builder {
            dataset,
            pivots: &order,
            bucket_size,
            max_depth: height.unwrap_or(usize::MAX).min(order.len()),
        };
        let mut root = builder.split(dataset.ids().collect(), 0);
        let mut depth = max_bucket_depth(&root);
        let fixed_height = fixed.then(|| height.unwrap_or(depth));
        if let Some(h) = fixed_height {
            let h = h.min(order.len());
            builder.extend(&mut root, 0, h);
            depth = h;
        }
        Ok(Self {
            dataset,
            level_pivots: order[..depth].to_vec(),
            root,
            bucket_size,
            fixed_height,
        })
    }

    pub fn root(&self) -> &FqNode {
        &self.root
    }

    pub fn level_pivots(&self) -> &[RecordId] {
        &self.level_pivots
    }

    pub fn bucket_size(&self) -> usize {
        self.bucket_size
    }

    pub fn fixed_height(&self) -> Option<usize> {
        self.fixed_height
    }

    /// Depth of every bucket, in traversal order.
    pub fn bucket_depths(&self) -> Vec<usize> {
        let mut out = Vec::new();
        collect_depths(&self.root, 0, &mut out);
        out
    }
}

struct Builder<'d, 'p> {
    dataset: &'d Dataset,
    pivots: &'p [RecordId],
    bucket_size: usize,
    max_depth: usize,
}

impl Builder<'_, '_> {
    fn partition(&self, subset: Vec<RecordId>, depth: usize) -> BTreeMap<u32, Vec<RecordId>> {
        let pivot = self.pivots[depth];
        let mut parts: BTreeMap<u32, Vec<RecordId>> = BTreeMap::new();
        for id in subset {
            parts
                .entry(self.dataset.distance(pivot, id))
                .or_default()
                .push(id);
        }
        parts
    }

    fn split(&self, subset: Vec<RecordId>, depth: usize) -> FqNode {
        if subset.len() <= self.bucket_size || depth >= self.max_depth {
            return FqNode::Bucket(subset);
        }
        let children = self
            .partition(subset, depth)
            .into_iter()
            .map(|(d, part)| (d, self.split(part, depth + 1)))
            .collect();
        FqNode::Split(children)
    }

    /// Pushes every bucket shallower than `height` down to `height` by
    /// splitting it on the remaining level pivots.
    fn extend(&self, node: &mut FqNode, depth: usize, height: usize) {
        match node {
            FqNode::Split(children) => {
                for child in children.values_mut() {
                    self.extend(child, depth + 1, height);
                }
            }
            FqNode::Bucket(ids) if depth < height => {
                let mut children: BTreeMap<u32, FqNode> = self
                    .partition(std::mem::take(ids), depth)
                    .into_iter()
                    .map(|(d, part)| (d, FqNode::Bucket(part)))
                    .collect();
                for child in children.values_mut() {
                    self.extend(child, depth + 1, height);
                }
                *node = FqNode::Split(children);
            }
            FqNode::Bucket(_) => {}
        }
    }
}

fn max_bucket_depth(node: &FqNode) -> usize {
    match node {
        FqNode::Bucket(_) => 0,
        FqNode::Split(children) => 1 + children.values().map(max_bucket_depth).max().unwrap_or(0),
    }
}

fn collect_depths(node: &FqNode, depth: usize, out: &mut Vec<usize>) {
    match node {
        FqNode::Bucket(_) => out.push(depth),
        FqNode::Split(children) => {
            for child in children.values() {
                collect_depths(child, depth + 1, out);
            }
        }
    }
}

impl FqTree<'_> {
    fn search(&self, node: &FqNode, depth: usize, s: &mut Search<'_, '_>) {
        match node {
            FqNode::Bucket(ids) => ids.iter().for_each(|&id| s.verify(id)),
            FqNode::Split(children) => {
                // Memoized: paid once per level however many siblings we visit.
                let d = s.distance(self.level_pivots[depth]);
                let lo = d.saturating_sub(s.radius);
                let hi = d.saturating_add(s.radius);
                for child in children.range(lo..=hi).map(|(_, c)| c) {
                    self.search(child, depth + 1, s);
                }
            }
        }
    }
}

impl RangeIndex for FqTree<'_> {
    fn name(&self) -> &'static str {
        if self.fixed_height.is_some() {
            "fh"
        } else {
            "fq"
        }
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        let mut s = Search::new(self.dataset, query, counter);
        self.search(&self.root, 0, &mut s);
        s.finish()
    }
}
