use crate::dataset::RecordId;
use crate::metrics::{bag_distance_chars, edit_distance_chars};

const UNSEEN: u32 = u32::MAX;

/// Per-query instrumentation: counts edit-distance and bag-distance
/// evaluations, and memoizes query-to-record distances so a record that is
/// both a pivot and a bucket member is only paid for once.
///
/// A counter belongs to one query at a time; call [`reset`](Self::reset)
/// before reusing it for another.
#[derive(Debug, Clone)]
pub struct DistanceCounter {
    primary_evals: u64,
    filter_evals: u64,
    memo: Vec<u32>,
    touched: Vec<RecordId>,
    memoize: bool,
    bag_filter: bool,
}

impl Default for DistanceCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl DistanceCounter {
    /// Memoization on, bag filter off.
    pub fn new() -> Self {
        Self {
            primary_evals: 0,
            filter_evals: 0,
            memo: Vec::new(),
            touched: Vec::new(),
            memoize: true,
            bag_filter: false,
        }
    }

    pub fn with_bag_filter(mut self, on: bool) -> Self {
        self.bag_filter = on;
        self
    }

    /// Disables memoization: every distance request is evaluated and counted.
    pub fn without_memo(mut self) -> Self {
        self.memoize = false;
        self
    }

    pub fn bag_filter(&self) -> bool {
        self.bag_filter
    }

    pub fn memoizes(&self) -> bool {
        self.memoize
    }

    pub fn primary_evals(&self) -> u64 {
        self.primary_evals
    }

    pub fn filter_evals(&self) -> u64 {
        self.filter_evals
    }

    pub fn reset(&mut self) {
        self.primary_evals = 0;
        self.filter_evals = 0;
        for id in self.touched.drain(..) {
            self.memo[id as usize] = UNSEEN;
        }
    }

    /// The memoized distance to `id`, if it was evaluated during this query.
    pub fn cached(&self, id: RecordId) -> Option<u32> {
        match self.memo.get(id as usize) {
            Some(&d) if d != UNSEEN => Some(d),
            _ => None,
        }
    }

    /// Exact edit distance from the query to record `id`.
    pub fn distance(&mut self, query: &[char], id: RecordId, text: &[char]) -> u32 {
        if let Some(d) = self.cached(id) {
            return d;
        }
        self.primary_evals += 1;
        let d = edit_distance_chars(query, text);
        self.remember(id, d);
        d
    }

    /// Whether record `id` lies within `radius` of the query. With the bag
    /// filter enabled, a candidate whose bag distance already exceeds the
    /// radius is rejected without an edit-distance evaluation.
    pub fn verify(&mut self, query: &[char], id: RecordId, text: &[char], radius: u32) -> bool {
        if let Some(d) = self.cached(id) {
            return d <= radius;
        }
        if self.bag_filter {
            self.filter_evals += 1;
            if bag_distance_chars(query, text) > radius {
                return false;
            }
        }
        self.distance(query, id, text) <= radius
    }

    pub(crate) fn count_primary(&mut self) {
        self.primary_evals += 1;
    }

    pub(crate) fn count_filter(&mut self) {
        self.filter_evals += 1;
    }

    fn remember(&mut self, id: RecordId, d: u32) {
        if !self.memoize {
            return;
        }
        let slot = id as usize;
        if slot >= self.memo.len() {
            self.memo.resize(slot + 1, UNSEEN);
        }
        self.memo[slot] = d;
        self.touched.push(id);
    }
}
