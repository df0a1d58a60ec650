use std::collections::BTreeMap;

use rand::Rng;

use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};
use crate::error::{Error, Result};
use crate::index::{QueryResult, RangeIndex, Search};
use crate::rng::{self, Stream};

#[derive(Debug, Clone)]
pub enum BkNode {
    Bucket(Vec<RecordId>),
    Pivot {
        pivot: RecordId,
        /// Child at key `i` holds the records at distance `i` from `pivot`.
        children: BTreeMap<u32, BkNode>,
    },
}

/// Burkhard-Keller tree. Each internal node owns a pivot drawn at random from
/// the subset it splits; subsets of at most `bucket_size` records become
/// buckets.
#[derive(Debug, Clone)]
pub struct BkTree<'a> {
    dataset: &'a Dataset,
    root: BkNode,
    bucket_size: usize,
}

impl<'a> BkTree<'a> {
    pub fn build(dataset: &'a Dataset, bucket_size: usize, seed: u64) -> Result<Self> {
        if bucket_size == 0 {
            return Err(Error::InvalidParameter(
                "bucket size must be at least 1".into(),
            ));
        }
        let mut rng = rng::stream(seed, Stream::Pivots);
        let root = split(dataset, dataset.ids().collect(), bucket_size, &mut rng);
        Ok(Self {
            dataset,
            root,
            bucket_size,
        })
    }

    pub fn root(&self) -> &BkNode {
        &self.root
    }

    pub fn bucket_size(&self) -> usize {
        self.bucket_size
    }
}

fn split(
    dataset: &Dataset,
    mut subset: Vec<RecordId>,
    bucket_size: usize,
    rng: &mut impl Rng,
) -> BkNode {
    if subset.len() <= bucket_size {
        return BkNode::Bucket(subset);
    }
    let pivot = subset.swap_remove(rng.gen_range(0..subset.len()));
    let mut parts: BTreeMap<u32, Vec<RecordId>> = BTreeMap::new();
    for id in subset {
        parts
            .entry(dataset.distance(pivot, id))
            .or_default()
            .push(id);
    }
    let children = parts
        .into_iter()
        .map(|(d, part)| (d, split(dataset, part, bucket_size, rng)))
        .collect();
    BkNode::Pivot { pivot, children }
}

fn search(node: &BkNode, s: &mut Search<'_, '_>) {
    match node {
        BkNode::Bucket(ids) => ids.iter().for_each(|&id| s.verify(id)),
        BkNode::Pivot { pivot, children } => {
            let d = s.distance(*pivot);
            s.report(*pivot, d);
            let lo = d.saturating_sub(s.radius);
            let hi = d.saturating_add(s.radius);
            for child in children.range(lo..=hi).map(|(_, c)| c) {
                search(child, s);
            }
        }
    }
}

impl RangeIndex for BkTree<'_> {
    fn name(&self) -> &'static str {
        "bk"
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        let mut s = Search::new(self.dataset, query, counter);
        search(&self.root, &mut s);
        s.finish()
    }
}
