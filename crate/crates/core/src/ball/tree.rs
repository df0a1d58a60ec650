use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};
use crate::error::{Error, Result};
use crate::index::{QueryResult, RangeIndex, Search};

use super::{BallParams, BallVariant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafEntry {
    pub id: RecordId,
    /// Distance to the routing object of the entry owning this leaf; `None`
    /// while the root is a leaf.
    pub parent_dist: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct RoutingEntry {
    pub routing: RecordId,
    pub radius: u32,
    /// Distance to the routing object one level up; `None` in the root.
    pub parent_dist: Option<u32>,
    pub child: Box<BallNode>,
}

#[derive(Debug, Clone)]
pub enum BallNode {
    Leaf(Vec<LeafEntry>),
    Internal(Vec<RoutingEntry>),
}

impl BallNode {
    /// Every record stored in leaves below this node.
    pub fn records(&self) -> Vec<RecordId> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<RecordId>) {
        match self {
            BallNode::Leaf(entries) => out.extend(entries.iter().map(|e| e.id)),
            BallNode::Internal(entries) => entries.iter().for_each(|e| e.child.collect(out)),
        }
    }
}

/// One routing decision made while inserting `record`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertChoice {
    pub record: RecordId,
    /// `(routing object, distance to record, radius before insertion)`.
    pub candidates: Vec<(RecordId, u32, u32)>,
    pub chosen: usize,
}

#[derive(Debug, Clone)]
pub struct BallTree<'a> {
    dataset: &'a Dataset,
    root: BallNode,
    params: BallParams,
    log: Option<Vec<InsertChoice>>,
}

impl<'a> BallTree<'a> {
    /// Inserts every record in dataset order.
    pub fn build(dataset: &'a Dataset, params: BallParams) -> Result<Self> {
        Self::build_inner(dataset, params, false)
    }

    /// As [`build`](Self::build), additionally recording every routing
    /// decision for later inspection.
    pub fn build_logged(dataset: &'a Dataset, params: BallParams) -> Result<Self> {
        Self::build_inner(dataset, params, true)
    }

    fn build_inner(dataset: &'a Dataset, params: BallParams, logged: bool) -> Result<Self> {
        if params.leaf_capacity < 2 {
            return Err(Error::InvalidParameter(
                "leaf capacity must be at least 2".into(),
            ));
        }
        match params.variant {
            BallVariant::Bisector if params.fanout != 2 => {
                return Err(Error::InvalidParameter(
                    "bisector trees have fan-out 2".into(),
                ));
            }
            _ if params.fanout < 2 => {
                return Err(Error::InvalidParameter("fan-out must be at least 2".into()));
            }
            BallVariant::Mtb if params.threshold == 0 => {
                return Err(Error::InvalidParameter(
                    "MTB threshold must be positive".into(),
                ));
            }
            _ => {}
        }
        let mut tree = Self {
            dataset,
            root: BallNode::Leaf(Vec::new()),
            params,
            log: logged.then(Vec::new),
        };
        for id in dataset.ids() {
            tree.insert(id);
        }
        Ok(tree)
    }

    pub fn root(&self) -> &BallNode {
        &self.root
    }

    pub fn params(&self) -> &BallParams {
        &self.params
    }

    pub fn insertion_log(&self) -> Option<&[InsertChoice]> {
        self.log.as_deref()
    }

    fn insert(&mut self, id: RecordId) {
        let mut root = std::mem::replace(&mut self.root, BallNode::Leaf(Vec::new()));
        let mut ctx = Inserter {
            dataset: self.dataset,
            params: self.params,
            log: self.log.as_mut(),
        };
        if let Some(mut entries) = ctx.insert(&mut root, id, None) {
            loop {
                for entry in &mut entries {
                    entry.parent_dist = None;
                }
                if entries.len() <= self.params.fanout {
                    break;
                }
                entries = ctx.split_internal(entries);
            }
            root = BallNode::Internal(entries);
        }
        self.root = root;
    }
}

struct Inserter<'d, 'l> {
    dataset: &'d Dataset,
    params: BallParams,
    log: Option<&'l mut Vec<InsertChoice>>,
}

impl Inserter<'_, '_> {
    fn d(&self, a: RecordId, b: RecordId) -> u32 {
        self.dataset.distance(a, b)
    }

    /// Inserts `id` below `node`, whose owning entry routes through
    /// `parent_routing`. Returns the entries that must replace the owning
    /// entry when the node had to be split.
    fn insert(
        &mut self,
        node: &mut BallNode,
        id: RecordId,
        parent_routing: Option<RecordId>,
    ) -> Option<Vec<RoutingEntry>> {
        match node {
            BallNode::Leaf(entries) => {
                let parent_dist = parent_routing.map(|p| self.d(p, id));
                entries.push(LeafEntry { id, parent_dist });
                let over_capacity = entries.len() > self.params.leaf_capacity;
                match self.params.variant {
                    BallVariant::Bisector if over_capacity => {
                        let ids = take_ids(entries);
                        let mut halves = self.split_leaf(ids);
                        for half in &mut halves {
                            half.parent_dist = parent_routing.map(|p| self.d(p, half.routing));
                        }
                        *node = BallNode::Internal(halves);
                        None
                    }
                    BallVariant::MTree if over_capacity => Some(self.split_leaf(take_ids(entries))),
                    BallVariant::Mtb
                        if over_capacity
                            || parent_dist.is_some_and(|d| d > self.params.threshold) =>
                    {
                        Some(self.partition_bounded(take_ids(entries)))
                    }
                    _ => None,
                }
            }
            BallNode::Internal(entries) => {
                let dists: Vec<u32> = entries.iter().map(|e| self.d(e.routing, id)).collect();
                let chosen = self.choose(entries, &dists);
                if let Some(log) = self.log.as_mut() {
                    log.push(InsertChoice {
                        record: id,
                        candidates: entries
                            .iter()
                            .zip(&dists)
                            .map(|(e, &d)| (e.routing, d, e.radius))
                            .collect(),
                        chosen,
                    });
                }
                let entry = &mut entries[chosen];
                entry.radius = entry.radius.max(dists[chosen]);
                let routing = entry.routing;
                let mut replacement = self.insert(&mut entry.child, id, Some(routing))?;
                for e in &mut replacement {
                    e.parent_dist = parent_routing.map(|p| self.d(p, e.routing));
                }
                entries.splice(chosen..=chosen, replacement);
                if entries.len() > self.params.fanout {
                    Some(self.split_internal(std::mem::take(entries)))
                } else {
                    None
                }
            }
        }
    }

    fn choose(&self, entries: &[RoutingEntry], dists: &[u32]) -> usize {
        let keyed = entries.iter().zip(dists).enumerate();
        match self.params.variant {
            BallVariant::MTree => {
                keyed
                    .min_by_key(|(i, (e, &d))| (d.saturating_sub(e.radius), d, *i))
                    .expect("internal nodes are never empty")
                    .0
            }
            BallVariant::Bisector | BallVariant::Mtb => {
                keyed
                    .min_by_key(|(i, (_, &d))| (d, *i))
                    .expect("internal nodes are never empty")
                    .0
            }
        }
    }

    /// The pair of ids at maximum distance; ties keep the first pair found.
    fn farthest_pair(&self, ids: &[RecordId]) -> (RecordId, RecordId) {
        let mut best = (ids[0], ids[ids.len() - 1], 0);
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let d = self.d(a, b);
                if d > best.2 {
                    best = (a, b, d);
                }
            }
        }
        (best.0, best.1)
    }

    /// Groups `ids` around `seeds`, each id going to its closest seed (ties
    /// to the earlier seed), into leaves under fresh routing entries.
    fn leaves_around(&self, seeds: &[RecordId], ids: &[RecordId]) -> Vec<RoutingEntry> {
        let mut groups: Vec<Vec<LeafEntry>> = vec![Vec::new(); seeds.len()];
        for &id in ids {
            let (slot, d) = seeds
                .iter()
                .map(|&s| self.d(s, id))
                .enumerate()
                .min_by_key(|&(i, d)| (d, i))
                .expect("at least one seed");
            groups[slot].push(LeafEntry {
                id,
                parent_dist: Some(d),
            });
        }
        seeds
            .iter()
            .zip(groups)
            .map(|(&routing, leaf)| RoutingEntry {
                routing,
                radius: leaf.iter().filter_map(|e| e.parent_dist).max().unwrap_or(0),
                parent_dist: None,
                child: Box::new(BallNode::Leaf(leaf)),
            })
            .collect()
    }

    fn split_leaf(&self, ids: Vec<RecordId>) -> Vec<RoutingEntry> {
        let (a, b) = self.farthest_pair(&ids);
        self.leaves_around(&[a, b], &ids)
    }

    /// Splits an over-threshold or over-capacity leaf into groups whose
    /// radius is at most the threshold: start from the farthest pair, then
    /// keep promoting the worst violator to a new seed.
    fn partition_bounded(&self, ids: Vec<RecordId>) -> Vec<RoutingEntry> {
        if ids.len() < 2 {
            return self.leaves_around(&ids, &ids);
        }
        let (a, b) = self.farthest_pair(&ids);
        let mut seeds = vec![a, b];
        let mut nearest: Vec<u32> = ids
            .iter()
            .map(|&id| self.d(a, id).min(self.d(b, id)))
            .collect();
        loop {
            let worst = nearest
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > self.params.threshold)
                .max_by_key(|&(i, &d)| (d, std::cmp::Reverse(i)));
            let Some((i, _)) = worst else { break };
            let seed = ids[i];
            seeds.push(seed);
            for (slot, &id) in nearest.iter_mut().zip(&ids) {
                *slot = (*slot).min(self.d(seed, id));
            }
        }
        self.leaves_around(&seeds, &ids)
    }

    /// Splits an overfull internal node into groups of at most `fanout`
    /// entries, each under the routing object of one of its members.
    fn split_internal(&self, entries: Vec<RoutingEntry>) -> Vec<RoutingEntry> {
        let routings: Vec<RecordId> = entries.iter().map(|e| e.routing).collect();
        let (a, b) = self.farthest_pair(&routings);
        let mut out = Vec::new();
        for (seed, group) in self.bisect(a, b, entries) {
            self.regroup(seed, group, &mut out);
        }
        out
    }

    fn bisect(
        &self,
        a: RecordId,
        b: RecordId,
        entries: Vec<RoutingEntry>,
    ) -> [(RecordId, Vec<RoutingEntry>); 2] {
        let (left, right) = entries
            .into_iter()
            .partition(|e| self.d(a, e.routing) <= self.d(b, e.routing));
        [(a, left), (b, right)]
    }

    fn regroup(&self, seed: RecordId, group: Vec<RoutingEntry>, out: &mut Vec<RoutingEntry>) {
        if group.len() > self.params.fanout {
            let routings: Vec<RecordId> = group.iter().map(|e| e.routing).collect();
            let (a, b) = self.farthest_pair(&routings);
            for (s, g) in self.bisect(a, b, group) {
                self.regroup(s, g, out);
            }
            return;
        }
        let mut group = group;
        for e in &mut group {
            e.parent_dist = Some(self.d(seed, e.routing));
        }
        let child = BallNode::Internal(group);
        let radius = child
            .records()
            .into_iter()
            .map(|r| self.d(seed, r))
            .max()
            .unwrap_or(0);
        out.push(RoutingEntry {
            routing: seed,
            radius,
            parent_dist: None,
            child: Box::new(child),
        });
    }
}

fn take_ids(entries: &mut Vec<LeafEntry>) -> Vec<RecordId> {
    std::mem::take(entries).into_iter().map(|e| e.id).collect()
}

impl BallTree<'_> {
    fn search(&self, node: &BallNode, parent_qd: Option<u32>, s: &mut Search<'_, '_>) {
        let e = s.radius;
        match node {
            BallNode::Leaf(entries) => {
                for entry in entries {
                    match (parent_qd, entry.parent_dist) {
                        (Some(qd), Some(pd)) => s.verify_near(entry.id, qd, pd),
                        _ => s.verify(entry.id),
                    }
                }
            }
            BallNode::Internal(entries) => {
                let parent_test = self.params.variant != BallVariant::Bisector;
                for entry in entries {
                    let reach = entry.radius.saturating_add(e);
                    if parent_test {
                        if let (Some(qd), Some(pd)) = (parent_qd, entry.parent_dist) {
                            if qd.abs_diff(pd) > reach {
                                continue;
                            }
                        }
                    }
                    let d = s.distance(entry.routing);
                    if d <= reach {
                        self.search(&entry.child, Some(d), s);
                    }
                }
            }
        }
    }
}

impl RangeIndex for BallTree<'_> {
    fn name(&self) -> &'static str {
        match self.params.variant {
            BallVariant::Bisector => "bisector",
            BallVariant::MTree => "mtree",
            BallVariant::Mtb => "mtb",
        }
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        let mut s = Search::new(self.dataset, query, counter);
        self.search(&self.root, None, &mut s);
        s.finish()
    }
}
