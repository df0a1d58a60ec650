use crate::counter::DistanceCounter;
use crate::dataset::{Dataset, RangeQuery, RecordId};

/// Outcome of one range query.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryResult {
    /// Matching record ids, sorted ascending without repeats.
    pub match_ids: Vec<RecordId>,
    /// Edit-distance evaluations performed.
    pub primary_evals: u64,
    /// Bag-distance evaluations performed.
    pub filter_evals: u64,
}

impl QueryResult {
    /// Edit-distance evaluations as a percentage of the collection size.
    pub fn percent_scanned(&self, dataset_len: usize) -> f64 {
        self.primary_evals as f64 * 100.0 / dataset_len as f64
    }
}

/// A structure answering range queries over a [`Dataset`].
///
/// Implementations must return exactly the records within the query radius.
/// Each call resets `counter` first, so one counter can serve a sequence of
/// queries.
pub trait RangeIndex: Send + Sync {
    fn name(&self) -> &'static str;

    fn dataset(&self) -> &Dataset;

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult;
}

/// True when a subset whose members all lie within `k` of a pivot at distance
/// `d_qp` from the query can be discarded: `d_qp - k > e`.
pub fn prune_subset(d_qp: u32, k: u32, e: u32) -> bool {
    d_qp > k.saturating_add(e)
}

/// Brute-force range query: one verification per record.
pub fn linear_scan(
    dataset: &Dataset,
    query: &RangeQuery,
    counter: &mut DistanceCounter,
) -> QueryResult {
    let mut search = Search::new(dataset, query, counter);
    for id in dataset.ids() {
        search.verify(id);
    }
    search.finish()
}

/// The ground-truth "index": no structure, every record is checked.
#[derive(Debug, Clone, Copy)]
pub struct LinearScan<'a> {
    dataset: &'a Dataset,
}

impl<'a> LinearScan<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        Self { dataset }
    }
}

impl RangeIndex for LinearScan<'_> {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn range_search(&self, query: &RangeQuery, counter: &mut DistanceCounter) -> QueryResult {
        linear_scan(self.dataset, query, counter)
    }
}

/// Per-query state shared by every search routine.
pub(crate) struct Search<'a, 'c> {
    dataset: &'a Dataset,
    query: Vec<char>,
    pub(crate) radius: u32,
    counter: &'c mut DistanceCounter,
    matches: Vec<RecordId>,
}

impl<'a, 'c> Search<'a, 'c> {
    pub(crate) fn new(
        dataset: &'a Dataset,
        query: &RangeQuery,
        counter: &'c mut DistanceCounter,
    ) -> Self {
        counter.reset();
        Self {
            dataset,
            query: query.text.chars().collect(),
            radius: query.radius,
            counter,
            matches: Vec::new(),
        }
    }

    pub(crate) fn distance(&mut self, id: RecordId) -> u32 {
        self.counter
            .distance(&self.query, id, self.dataset.chars(id))
    }

    /// Records `id` as a match when it is within the radius.
    pub(crate) fn verify(&mut self, id: RecordId) {
        if self
            .counter
            .verify(&self.query, id, self.dataset.chars(id), self.radius)
        {
            self.matches.push(id);
        }
    }

    /// Verification for a record whose distance `stored` to a reference
    /// object at distance `reference` from the query is known: skipped when
    /// the triangle inequality already rules it out.
    pub(crate) fn verify_near(&mut self, id: RecordId, reference: u32, stored: u32) {
        if reference.abs_diff(stored) <= self.radius {
            self.verify(id);
        }
    }

    /// Records `id` as a match if `d` (its known distance) is within range.
    pub(crate) fn report(&mut self, id: RecordId, d: u32) {
        if d <= self.radius {
            self.matches.push(id);
        }
    }

    pub(crate) fn finish(mut self) -> QueryResult {
        self.matches.sort_unstable();
        self.matches.dedup();
        QueryResult {
            match_ids: self.matches,
            primary_evals: self.counter.primary_evals(),
            filter_evals: self.counter.filter_evals(),
        }
    }
}
