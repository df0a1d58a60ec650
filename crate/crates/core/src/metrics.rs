//! Edit distance and the bag-distance lower bound.
//!
//! Both functions work on unicode scalar values. The `_chars` variants take
//! pre-split slices and are what the indexes call on the hot path.

use std::collections::HashMap;

use crate::counter::DistanceCounter;

/// Strings up to this many scalars use a stack buffer for the DP row.
const STACK_ROW: usize = 64;

/// Unit-cost Levenshtein distance (insertions, deletions, substitutions).
pub fn edit_distance(a: &str, b: &str) -> u32 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance_chars(&a, &b)
}

/// Two-row dynamic program over the shorter string, O(min(m, n)) memory.
pub fn edit_distance_chars(a: &[char], b: &[char]) -> u32 {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len() as u32;
    }
    if short.len() < STACK_ROW {
        let mut row = [0u32; STACK_ROW];
        levenshtein_rows(long, short, &mut row[..=short.len()])
    } else {
        let mut row = vec![0u32; short.len() + 1];
        levenshtein_rows(long, short, &mut row)
    }
}

fn levenshtein_rows(long: &[char], short: &[char], row: &mut [u32]) -> u32 {
    for (j, cell) in row.iter_mut().enumerate() {
        *cell = j as u32;
    }
    for (i, &lc) in long.iter().enumerate() {
        // `diag` holds row[j] of the previous iteration, i.e. D[i][j].
        let mut diag = row[0];
        row[0] = i as u32 + 1;
        for (j, &sc) in short.iter().enumerate() {
            let above = row[j + 1];
            let substitute = diag + u32::from(lc != sc);
            row[j + 1] = substitute.min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[short.len()]
}

/// Character multiset of a string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CharBag {
    counts: HashMap<char, u32>,
}

impl CharBag {
    pub fn new(s: &str) -> Self {
        s.chars().collect()
    }

    pub fn count(&self, c: char) -> u32 {
        self.counts.get(&c).copied().unwrap_or(0)
    }

    /// Total multiplicity, equal to the length of the source string.
    pub fn len(&self) -> usize {
        self.counts.values().map(|&n| n as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Size of the multiset difference `self - other`.
    pub fn difference_len(&self, other: &CharBag) -> u32 {
        self.counts
            .iter()
            .map(|(c, &n)| n.saturating_sub(other.count(*c)))
            .sum()
    }

    /// `max(|x - y|, |y - x|)`.
    pub fn distance(&self, other: &CharBag) -> u32 {
        self.difference_len(other).max(other.difference_len(self))
    }
}

impl FromIterator<char> for CharBag {
    fn from_iter<T: IntoIterator<Item = char>>(iter: T) -> Self {
        let mut counts = HashMap::new();
        for c in iter {
            *counts.entry(c).or_insert(0) += 1;
        }
        Self { counts }
    }
}

/// Bag distance: the larger of the two multiset differences between the
/// strings' characters. Never exceeds [`edit_distance`].
pub fn bag_distance(a: &str, b: &str) -> u32 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    bag_distance_chars(&a, &b)
}

pub fn bag_distance_chars(a: &[char], b: &[char]) -> u32 {
    if a.iter().chain(b).all(char::is_ascii) {
        let mut diff = [0i32; 128];
        for &c in a {
            diff[c as usize] += 1;
        }
        for &c in b {
            diff[c as usize] -= 1;
        }
        let (pos, neg) = diff.iter().fold((0u32, 0u32), |(p, n), &d| {
            if d > 0 {
                (p + d as u32, n)
            } else {
                (p, n + d.unsigned_abs())
            }
        });
        return pos.max(neg);
    }
    let mut diff: HashMap<char, i32> = HashMap::new();
    for &c in a {
        *diff.entry(c).or_insert(0) += 1;
    }
    for &c in b {
        *diff.entry(c).or_insert(0) -= 1;
    }
    let pos: u32 = diff.values().filter(|&&d| d > 0).map(|&d| d as u32).sum();
    let neg: u32 = diff
        .values()
        .filter(|&&d| d < 0)
        .map(|&d| d.unsigned_abs())
        .sum();
    pos.max(neg)
}

/// Decides `edit_distance(q, c) <= radius`, screening with the bag distance
/// first when `filter_on`. A candidate rejected by the screen costs one filter
/// evaluation and no edit distance.
///
/// This standalone form has no record identity and so bypasses the counter's
/// memo; indexes go through [`DistanceCounter::verify`] instead.
pub fn filtered_verify(
    q: &str,
    c: &str,
    radius: u32,
    counter: &mut DistanceCounter,
    filter_on: bool,
) -> bool {
    let q: Vec<char> = q.chars().collect();
    let c: Vec<char> = c.chars().collect();
    if filter_on {
        counter.count_filter();
        if bag_distance_chars(&q, &c) > radius {
            return false;
        }
    }
    counter.count_primary();
    edit_distance_chars(&q, &c) <= radius
}
