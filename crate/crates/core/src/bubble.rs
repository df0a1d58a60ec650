//! BUBBLE-style threshold clustering.
//!
//! Records are inserted one at a time into a height-balanced CF* tree whose
//! entries summarize their subtree by a handful of sample records. Descent
//! follows the entry with the smallest average inter-cluster distance (D2) to
//! the new record; at the leaf level the record joins the cluster with the
//! closest clusteroid if that distance is below the threshold, otherwise it
//! starts a new cluster.
//!
//! Search ignores the tree: the query is compared with every clusteroid and
//! a cluster is scanned only when its ball cannot be ruled out.

use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};
use crate::error::{Error, Result};
use crate::index::{prune_subset, QueryResult, RangeIndex, Search};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BubbleParams {
    /// A record joins a cluster only if strictly closer than this to its
    /// clusteroid.
    pub threshold: u32,
    /// Maximum entries per CF* node.
    pub branching: usize,
    /// Sample records kept per CF* entry.
    pub sample_size: usize,
}

impl Default for BubbleParams {
    fn default() -> Self {
        Self {
            threshold: 5,
            branching: 16,
            sample_size: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub members: Vec<RecordId>,
    pub clusteroid: RecordId,
    /// `rowsums[i]` is the sum of squared distances from `members[i]` to
    /// every member.
    pub rowsums: Vec<u64>,
    /// `to_clusteroid[i]` is `d(members[i], clusteroid)`.
    pub to_clusteroid: Vec<u32>,
    /// Largest entry of `to_clusteroid`.
    pub radius: u32,
}

/// Record of a single insertion: which cluster took the record and how far
/// it was from that cluster's clusteroid at the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admission {
    pub record: RecordId,
    pub cluster: usize,
    pub clusteroid: RecordId,
    pub distance: u32,
}

#[derive(Debug, Clone)]
struct CfEntry {
    samples: Vec<RecordId>,
    count: usize,
    child: CfChild,
}

#[derive(Debug, Clone)]
enum CfChild {
    Node(Box<CfNode>),
    Cluster(usize),
}

#[derive(Debug, Clone, Default)]
struct CfNode {
    entries: Vec<CfEntry>,
}

/// Average inter-cluster distance: the root mean square of all cross
/// distances between `a` and `b`.
pub fn d2_distance(
    a: &[RecordId],
    b: &[RecordId],
    mut dist: impl FnMut(RecordId, RecordId) -> u32,
) -> f64 {
    let mut sum = 0u64;
    for &x in a {
        for &y in b {
            let d = u64::from(dist(x, y));
            sum += d * d;
        }
    }
    (sum as f64 / (a.len() * b.len()) as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct BubbleIndex<'a> {
    dataset: &'a Dataset,
    params: BubbleParams,
    clusters: Vec<Cluster>,
    root: CfNode,
    admissions: Vec<Admission>,
}

/// What an insertion reports back up the CF* path.
struct Outcome {
    clusteroid: RecordId,
    /// Samples of the entry just updated below, to refresh the parent entry.
    samples: Vec<RecordId>,
    split: Option<Vec<CfEntry>>,
}

impl<'a> BubbleIndex<'a> {
    pub fn build(dataset: &'a Dataset, params: BubbleParams) -> Result<Self> {
        if params.threshold == 0 || params.branching < 2 || params.sample_size == 0 {
            return Err(Error::InvalidParameter(
                "BUBBLE needs a positive threshold and sample size, and branching >= 2".into(),
            ));
        }
        let mut index = Self {
            dataset,
            params,
            clusters: Vec::new(),
            root: CfNode::default(),
            admissions: Vec::with_capacity(dataset.len()),
        };
        for id in dataset.ids() {
            index.insert(id);
        }
        Ok(index)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn admissions(&self) -> &[Admission] {
        &self.admissions
    }

    pub fn params(&self) -> &BubbleParams {
        &self.params
    }

    /// CF* tree height (1 when the root holds cluster entries directly).
    pub fn height(&self) -> usize {
        let mut node = &self.root;
        let mut h = 1;
        while let Some(CfEntry {
            child: CfChild::Node(next),
            ..
        }) = node.entries.first()
        {
            node = next;
            h += 1;
        }
        h
    }

    fn d(&self, a: RecordId, b: RecordId) -> u32 {
        self.dataset.distance(a, b)
    }

    fn insert(&mut self, id: RecordId) {
        let mut root = std::mem::take(&mut self.root);
        let outcome = self.insert_into(&mut root, id);
        self.root = match outcome.split {
            Some(entries) => CfNode { entries },
            None => root,
        };
    }

    fn insert_into(&mut self, node: &mut CfNode, id: RecordId) -> Outcome {
        let at_leaf_level = node
            .entries
            .first()
            .is_none_or(|e| matches!(e.child, CfChild::Cluster(_)));
        let outcome = if at_leaf_level {
            self.insert_leaf_level(node, id)
        } else {
            let chosen = node
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| (i, d2_distance(&[id], &e.samples, |a, b| self.d(a, b))))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i)
                .expect("internal CF nodes are never empty");
            let entry = &mut node.entries[chosen];
            entry.count += 1;
            let CfChild::Node(child) = &mut entry.child else {
                unreachable!("leaf-level entries handled above")
            };
            let below = self.insert_into(child, id);
            match below.split {
                Some(replacement) => {
                    node.entries.splice(chosen..=chosen, replacement);
                }
                None => {
                    let mut pool = std::mem::take(&mut node.entries[chosen].samples);
                    pool.extend(&below.samples);
                    node.entries[chosen].samples = self.closest_samples(pool, below.clusteroid);
                }
            }
            Outcome {
                clusteroid: below.clusteroid,
                samples: node
                    .entries
                    .get(chosen)
                    .map(|e| e.samples.clone())
                    .unwrap_or_default(),
                split: None,
            }
        };
        let split = (node.entries.len() > self.params.branching)
            .then(|| self.split(std::mem::take(&mut node.entries)));
        Outcome { split, ..outcome }
    }

    fn insert_leaf_level(&mut self, node: &mut CfNode, id: RecordId) -> Outcome {
        let closest = node
            .entries
            .iter()
            .enumerate()
            .filter_map(|(slot, e)| match e.child {
                CfChild::Cluster(c) => Some((slot, c)),
                CfChild::Node(_) => None,
            })
            .map(|(slot, c)| (slot, c, self.d(self.clusters[c].clusteroid, id)))
            .min_by_key(|&(_, c, d)| (d, c));

        match closest {
            Some((slot, c, d)) if d < self.params.threshold => {
                self.admissions.push(Admission {
                    record: id,
                    cluster: c,
                    clusteroid: self.clusters[c].clusteroid,
                    distance: d,
                });
                self.join(c, id, d);
                let entry = &mut node.entries[slot];
                entry.count += 1;
                entry.samples = self.cluster_samples(c);
                Outcome {
                    clusteroid: self.clusters[c].clusteroid,
                    samples: node.entries[slot].samples.clone(),
                    split: None,
                }
            }
            _ => {
                let c = self.clusters.len();
                self.admissions.push(Admission {
                    record: id,
                    cluster: c,
                    clusteroid: id,
                    distance: 0,
                });
                self.clusters.push(Cluster {
                    members: vec![id],
                    clusteroid: id,
                    rowsums: vec![0],
                    to_clusteroid: vec![0],
                    radius: 0,
                });
                node.entries.push(CfEntry {
                    samples: vec![id],
                    count: 1,
                    child: CfChild::Cluster(c),
                });
                Outcome {
                    clusteroid: id,
                    samples: vec![id],
                    split: None,
                }
            }
        }
    }

    /// Adds `id` to cluster `c`, updating row sums incrementally and
    /// re-electing the clusteroid. `to_current` is `d(id, clusteroid)`.
    fn join(&mut self, c: usize, id: RecordId, to_current: u32) {
        let dataset = self.dataset;
        let cluster = &mut self.clusters[c];
        let old_clusteroid = cluster.clusteroid;
        let dists: Vec<u32> = cluster
            .members
            .iter()
            .map(|&m| {
                if m == old_clusteroid {
                    to_current
                } else {
                    dataset.distance(m, id)
                }
            })
            .collect();
        let mut own = 0u64;
        for (rowsum, &d) in cluster.rowsums.iter_mut().zip(&dists) {
            let sq = u64::from(d) * u64::from(d);
            *rowsum += sq;
            own += sq;
        }
        cluster.members.push(id);
        cluster.rowsums.push(own);

        let best = (0..cluster.members.len())
            .min_by_key(|&i| (cluster.rowsums[i], cluster.members[i]))
            .expect("cluster is non-empty");
        let clusteroid = cluster.members[best];
        if clusteroid == old_clusteroid {
            cluster.to_clusteroid.push(to_current);
        } else if clusteroid == id {
            cluster.to_clusteroid = dists;
            cluster.to_clusteroid.push(0);
        } else {
            cluster.to_clusteroid = cluster
                .members
                .iter()
                .map(|&m| dataset.distance(m, clusteroid))
                .collect();
        }
        cluster.clusteroid = clusteroid;
        cluster.radius = cluster.to_clusteroid.iter().copied().max().unwrap_or(0);
    }

    /// The `sample_size` members closest to cluster `c`'s clusteroid.
    fn cluster_samples(&self, c: usize) -> Vec<RecordId> {
        let cluster = &self.clusters[c];
        let mut ranked: Vec<(u32, RecordId)> = cluster
            .to_clusteroid
            .iter()
            .copied()
            .zip(cluster.members.iter().copied())
            .collect();
        ranked.sort_unstable();
        ranked.truncate(self.params.sample_size);
        ranked.into_iter().map(|(_, id)| id).collect()
    }

    fn closest_samples(&self, mut pool: Vec<RecordId>, anchor: RecordId) -> Vec<RecordId> {
        pool.sort_unstable();
        pool.dedup();
        let mut ranked: Vec<(u32, RecordId)> = pool
            .into_iter()
            .map(|id| (self.d(anchor, id), id))
            .collect();
        ranked.sort_unstable();
        ranked.truncate(self.params.sample_size);
        ranked.into_iter().map(|(_, id)| id).collect()
    }

    /// Splits an overfull CF* node around its two entries farthest apart by
    /// D2, returning the two entries that replace it in its parent.
    fn split(&self, entries: Vec<CfEntry>) -> Vec<CfEntry> {
        let d2 =
            |a: &CfEntry, b: &CfEntry| d2_distance(&a.samples, &b.samples, |x, y| self.d(x, y));
        let mut seeds = (0, 1, f64::NEG_INFINITY);
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                let d = d2(&entries[i], &entries[j]);
                if d > seeds.2 {
                    seeds = (i, j, d);
                }
            }
        }
        let (a, b) = (seeds.0, seeds.1);
        let anchors = [entries[a].samples[0], entries[b].samples[0]];
        let mut groups: [Vec<CfEntry>; 2] = [Vec::new(), Vec::new()];
        let side: Vec<usize> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if i == a {
                    0
                } else if i == b {
                    1
                } else {
                    usize::from(d2(e, &entries[b]) < d2(e, &entries[a]))
                }
            })
            .collect();
        for (entry, s) in entries.into_iter().zip(side) {
            groups[s].push(entry);
        }
        groups
            .into_iter()
            .zip(anchors)
            .map(|(group, anchor)| {
                let pool = group
                    .iter()
                    .flat_map(|e| e.samples.iter().copied())
                    .collect();
                CfEntry {
                    samples: self.closest_samples(pool, anchor),
                    count: group.iter().map(|e| e.count).sum(),
                    child: CfChild::Node(Box::new(CfNode { entries: group })),
                }
            })
            .collect()
    }
}

impl RangeIndex for BubbleIndex<'_> {
    fn name(&self) -> &'static str {
        "bubble"
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        let mut s = Search::new(self.dataset, query, counter);
        let e = s.radius;
        for cluster in &self.clusters {
            let d = s.distance(cluster.clusteroid);
            if prune_subset(d, cluster.radius, e) {
                continue;
            }
            for (&member, &cached) in cluster.members.iter().zip(&cluster.to_clusteroid) {
                s.verify_near(member, d, cached);
            }
        }
        s.finish()
    }
}
