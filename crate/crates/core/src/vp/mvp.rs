use rand::Rng;

use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};
use crate::error::{Error, Result};
use crate::index::{QueryResult, RangeIndex, Search};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MvpParams {
    /// Vantage points per internal node (v).
    pub vantage_points: usize,
    /// Partitions each vantage point cuts its groups into (m).
    pub partitions: usize,
    /// Ancestor distances kept per leaf entry (p).
    pub path_len: usize,
    pub leaf_capacity: usize,
    pub seed: u64,
}

impl Default for MvpParams {
    fn default() -> Self {
        Self {
            vantage_points: 2,
            partitions: 2,
            path_len: 10,
            leaf_capacity: 110,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvpLeafEntry {
    pub id: RecordId,
    /// Distances to the nearest ancestor vantage points, deepest first.
    pub path_dists: Vec<u32>,
}

#[derive(Debug, Clone)]
pub enum MvpNode {
    Leaf(Vec<MvpLeafEntry>),
    Internal {
        vantages: Vec<RecordId>,
        /// `cutoffs[k][g]` holds the `m - 1` ascending cut values vantage
        /// `k` applied to group `g` of level `k`. Region `j` of a group holds
        /// distances in `(cut[j - 1], cut[j]]`, open-ended at both extremes.
        cutoffs: Vec<Vec<Vec<u32>>>,
        /// `m^k` children for `k` vantages, indexed lexicographically by the
        /// region chosen under each vantage in turn.
        children: Vec<Option<Box<MvpNode>>>,
    },
}

/// Multi-vantage-point tree.
#[derive(Debug, Clone)]
pub struct MvpTree<'a> {
    dataset: &'a Dataset,
    root: MvpNode,
    params: MvpParams,
}

type Pending = (RecordId, Vec<u32>);

impl<'a> MvpTree<'a> {
    pub fn build(dataset: &'a Dataset, params: MvpParams) -> Result<Self> {
        if params.vantage_points == 0 || params.partitions < 2 || params.leaf_capacity == 0 {
            return Err(Error::InvalidParameter(
                "MVP tree needs v >= 1, m >= 2 and a positive leaf capacity".into(),
            ));
        }
        let mut builder = Builder {
            dataset,
            params,
            rng: rng::stream(params.seed, Stream::MultiVantage),
        };
        let root = builder.node(dataset.ids().map(|id| (id, Vec::new())).collect());
        Ok(Self {
            dataset,
            root,
            params,
        })
    }

    pub fn root(&self) -> &MvpNode {
        &self.root
    }

    pub fn params(&self) -> &MvpParams {
        &self.params
    }
}

/// Region of `d` under ascending `cuts`: the first `j` with `d <= cuts[j]`.
pub(crate) fn region(d: u32, cuts: &[u32]) -> usize {
    cuts.partition_point(|&c| c < d)
}

fn last(p: &Pending) -> u32 {
    *p.1.last().expect("distance pushed before use")
}

struct Builder<'d, R> {
    dataset: &'d Dataset,
    params: MvpParams,
    rng: R,
}

impl<R: Rng> Builder<'_, R> {
    fn node(&mut self, mut subset: Vec<Pending>) -> MvpNode {
        let MvpParams {
            vantage_points,
            partitions: m,
            path_len,
            leaf_capacity,
            ..
        } = self.params;
        if subset.len() <= leaf_capacity {
            return MvpNode::Leaf(
                subset
                    .into_iter()
                    .map(|(id, path)| MvpLeafEntry {
                        id,
                        path_dists: path.iter().rev().take(path_len).copied().collect(),
                    })
                    .collect(),
            );
        }

        let first = subset.swap_remove(self.rng.gen_range(0..subset.len())).0;
        let mut groups = vec![subset];
        let mut vantages = Vec::new();
        let mut cutoffs = Vec::new();
        for k in 0..vantage_points {
            let vantage = if k == 0 {
                first
            } else {
                match self.farthest_candidate(&groups, k) {
                    Some((g, i)) => groups[g].swap_remove(i).0,
                    None => break,
                }
            };
            vantages.push(vantage);

            let mut level_cuts = Vec::with_capacity(groups.len());
            let mut next = Vec::with_capacity(groups.len() * m);
            for group in groups {
                let mut group = group;
                for (id, path) in group.iter_mut() {
                    path.push(self.dataset.distance(vantage, *id));
                }
                let cuts = equal_count_cuts(&group, m);
                let mut parts: Vec<Vec<Pending>> = vec![Vec::new(); m];
                for p in group {
                    parts[region(last(&p), &cuts)].push(p);
                }
                level_cuts.push(cuts);
                next.extend(parts);
            }
            cutoffs.push(level_cuts);
            groups = next;
        }

        let children = groups
            .into_iter()
            .map(|g| (!g.is_empty()).then(|| Box::new(self.node(g))))
            .collect();
        MvpNode::Internal {
            vantages,
            cutoffs,
            children,
        }
    }

    /// Vantage `k` (k >= 1) is the record farthest from vantage `k - 1`
    /// among those in the rightmost `m - k` partitions of the first vantage,
    /// falling back to every remaining record when that set is empty.
    /// Ties go to the lowest record id. Returns `(group, index)`.
    fn farthest_candidate(&self, groups: &[Vec<Pending>], k: usize) -> Option<(usize, usize)> {
        let m = self.params.partitions;
        // Level-k groups number m^k; the first vantage's region is g / m^(k-1).
        let stride = m.pow(k as u32 - 1);
        let pick = |eligible: &dyn Fn(usize) -> bool| {
            groups
                .iter()
                .enumerate()
                .filter(|(g, _)| eligible(*g))
                .flat_map(|(g, grp)| grp.iter().enumerate().map(move |(i, p)| (g, i, p)))
                .max_by(|a, b| last(a.2).cmp(&last(b.2)).then(b.2 .0.cmp(&a.2 .0)))
                .map(|(g, i, _)| (g, i))
        };
        pick(&|g| g / stride >= k).or_else(|| pick(&|_| true))
    }
}

/// The `m - 1` cut values splitting `group` into `m` runs of near-equal size
/// by its latest distance. Cut `j` is the largest distance of run `j`.
fn equal_count_cuts(group: &[Pending], m: usize) -> Vec<u32> {
    let mut dists: Vec<u32> = group.iter().map(last).collect();
    dists.sort_unstable();
    if dists.is_empty() {
        return vec![0; m - 1];
    }
    (1..m)
        .map(|j| dists[(j * dists.len() / m).max(1) - 1])
        .collect()
}

impl MvpTree<'_> {
    fn search(&self, node: &MvpNode, path: &mut Vec<u32>, s: &mut Search<'_, '_>) {
        match node {
            MvpNode::Leaf(entries) => {
                let e = s.radius;
                for entry in entries {
                    let excluded = entry
                        .path_dists
                        .iter()
                        .zip(path.iter().rev())
                        .any(|(&stored, &dq)| stored.abs_diff(dq) > e);
                    if !excluded {
                        s.verify(entry.id);
                    }
                }
            }
            MvpNode::Internal {
                vantages,
                cutoffs,
                children,
            } => {
                let dists: Vec<u32> = vantages
                    .iter()
                    .map(|&v| {
                        let d = s.distance(v);
                        s.report(v, d);
                        d
                    })
                    .collect();
                let depth = path.len();
                path.extend(&dists);
                self.visit_regions(0, 0, &dists, cutoffs, children, path, s);
                path.truncate(depth);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_regions(
        &self,
        k: usize,
        group: usize,
        dists: &[u32],
        cutoffs: &[Vec<Vec<u32>>],
        children: &[Option<Box<MvpNode>>],
        path: &mut Vec<u32>,
        s: &mut Search<'_, '_>,
    ) {
        if k == dists.len() {
            if let Some(child) = &children[group] {
                self.search(child, path, s);
            }
            return;
        }
        let m = self.params.partitions;
        let cuts = &cutoffs[k][group];
        let (d, e) = (dists[k], s.radius);
        for j in 0..m {
            let below_upper = j == m - 1 || d <= cuts[j].saturating_add(e);
            let above_lower = j == 0 || d.saturating_add(e) >= cuts[j - 1];
            if below_upper && above_lower {
                self.visit_regions(k + 1, group * m + j, dists, cutoffs, children, path, s);
            }
        }
    }
}

impl RangeIndex for MvpTree<'_> {
    fn name(&self) -> &'static str {
        "mvp"
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        let mut s = Search::new(self.dataset, query, counter);
        self.search(&self.root, &mut Vec::new(), &mut s);
        s.finish()
    }
}
