use rand::seq::index::sample;
use rand::Rng;

use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};
use crate::error::{Error, Result};
use crate::index::{QueryResult, RangeIndex, Search};
use crate::rng::{self, Stream};

/// Best-spread vantage selection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VpParams {
    /// Candidate vantage points tried per node.
    pub candidates: usize,
    /// Records sampled to measure each candidate's distance spread.
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for VpParams {
    fn default() -> Self {
        Self {
            candidates: 10,
            sample_size: 100,
            seed: 0,
        }
    }
}

/// Inclusive `[min, max]` of the distances from a vantage point to a subtree.
pub type Bounds = (u32, u32);

#[derive(Debug, Clone)]
pub enum VpNode {
    Leaf {
        id: RecordId,
        /// Distance to every ancestor vantage point, root first.
        ancestor_dists: Vec<u32>,
    },
    Vantage {
        vantage: RecordId,
        median: u32,
        /// Records with `d(vantage, r) <= median`.
        left: Option<Box<VpNode>>,
        /// Records with `d(vantage, r) > median`.
        right: Option<Box<VpNode>>,
        left_bounds: Option<Bounds>,
        right_bounds: Option<Bounds>,
    },
}

/// Vantage-point tree with single-record leaves.
#[derive(Debug, Clone)]
pub struct VpTree<'a> {
    dataset: &'a Dataset,
    root: VpNode,
}

type Pending = (RecordId, Vec<u32>);

impl<'a> VpTree<'a> {
    pub fn build(dataset: &'a Dataset, params: VpParams) -> Result<Self> {
        if params.candidates == 0 || params.sample_size == 0 {
            return Err(Error::InvalidParameter(
                "vantage candidates and sample size must be positive".into(),
            ));
        }
        let mut rng = rng::stream(params.seed, Stream::Vantage);
        let subset = dataset.ids().map(|id| (id, Vec::new())).collect();
        let root =
            build_node(dataset, subset, &params, &mut rng).expect("datasets are never empty");
        Ok(Self {
            dataset,
            root: *root,
        })
    }

    pub fn root(&self) -> &VpNode {
        &self.root
    }
}

fn variance(values: &[u32]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    values
        .iter()
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / n
}

/// Index into `subset` of the candidate whose sampled distances spread most.
fn best_spread(
    dataset: &Dataset,
    subset: &[Pending],
    params: &VpParams,
    rng: &mut impl Rng,
) -> usize {
    let n = subset.len();
    if n <= 2 {
        return 0;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for candidate in sample(rng, n, params.candidates.min(n)) {
        let probe = sample(rng, n, params.sample_size.min(n));
        let dists: Vec<u32> = probe
            .iter()
            .filter(|&i| i != candidate)
            .map(|i| dataset.distance(subset[candidate].0, subset[i].0))
            .collect();
        if dists.is_empty() {
            continue;
        }
        let spread = variance(&dists);
        if spread > best.1 {
            best = (candidate, spread);
        }
    }
    best.0
}

fn bounds(part: &[Pending]) -> Option<Bounds> {
    let dists = part.iter().map(|(_, d)| *d.last().unwrap());
    let lo = dists.clone().min()?;
    Some((lo, dists.max()?))
}

fn build_node(
    dataset: &Dataset,
    mut subset: Vec<Pending>,
    params: &VpParams,
    rng: &mut impl Rng,
) -> Option<Box<VpNode>> {
    if subset.len() <= 1 {
        return subset
            .pop()
            .map(|(id, ancestor_dists)| Box::new(VpNode::Leaf { id, ancestor_dists }));
    }
    let (vantage, _) = subset.swap_remove(best_spread(dataset, &subset, params, rng));
    for (id, dists) in subset.iter_mut() {
        dists.push(dataset.distance(vantage, *id));
    }
    let mut sorted: Vec<u32> = subset.iter().map(|(_, d)| *d.last().unwrap()).collect();
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];
    let (left, right): (Vec<_>, Vec<_>) = subset
        .into_iter()
        .partition(|(_, d)| *d.last().unwrap() <= median);
    let (left_bounds, right_bounds) = (bounds(&left), bounds(&right));
    Some(Box::new(VpNode::Vantage {
        vantage,
        median,
        left: build_node(dataset, left, params, rng),
        right: build_node(dataset, right, params, rng),
        left_bounds,
        right_bounds,
    }))
}

fn reachable(d: u32, e: u32, bounds: Option<Bounds>) -> bool {
    bounds.is_some_and(|(lo, hi)| d.saturating_add(e) >= lo && d <= hi.saturating_add(e))
}

fn search(node: &VpNode, path: &mut Vec<u32>, s: &mut Search<'_, '_>) {
    match node {
        VpNode::Leaf { id, ancestor_dists } => {
            let e = s.radius;
            let excluded = ancestor_dists
                .iter()
                .zip(path.iter())
                .any(|(&stored, &dq)| stored.abs_diff(dq) > e);
            if !excluded {
                s.verify(*id);
            }
        }
        VpNode::Vantage {
            vantage,
            median,
            left,
            right,
            left_bounds,
            right_bounds,
        } => {
            let e = s.radius;
            let d = s.distance(*vantage);
            s.report(*vantage, d);
            path.push(d);
            if let Some(left) = left {
                if d <= median.saturating_add(e) && reachable(d, e, *left_bounds) {
                    search(left, path, s);
                }
            }
            if let Some(right) = right {
                if d.saturating_add(e) >= *median && reachable(d, e, *right_bounds) {
                    search(right, path, s);
                }
            }
            path.pop();
        }
    }
}

impl RangeIndex for VpTree<'_> {
    fn name(&self) -> &'static str {
        "vp"
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        let mut s = Search::new(self.dataset, query, counter);
        search(&self.root, &mut Vec::new(), &mut s);
        s.finish()
    }
}
