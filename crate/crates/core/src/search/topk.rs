use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{rank_cmp, Hypothesis};
use crate::model::TokenId;

struct Entry {
    score: f64,
    hyp: Hypothesis,
}

// Worse entries compare greater, so the max-heap root is the current minimum.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_cmp(self.score, &self.hyp.tokens, other.score, &other.hyp.tokens)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

/// The `k` best hypotheses seen so far, keyed by score.
///
/// Once full, [`gamma`](Self::gamma) is the lowest stored score and only
/// ever rises. Pushing a token sequence that is already stored is a no-op.
pub struct BoundedTopK {
    capacity: usize,
    heap: BinaryHeap<Entry>,
    members: HashSet<Vec<TokenId>>,
    trace: Option<Vec<f64>>,
}

impl BoundedTopK {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "top-k capacity must be at least 1");
        Self {
            capacity,
            heap: BinaryHeap::with_capacity(capacity + 1),
            members: HashSet::new(),
            trace: None,
        }
    }

    /// Records every change of the lower bound.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() == self.capacity
    }

    /// Lower bound on the score a new entry needs; `-inf` until full.
    pub fn gamma(&self) -> f64 {
        if self.is_full() {
            self.heap.peek().map_or(f64::NEG_INFINITY, |e| e.score)
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn contains(&self, tokens: &[TokenId]) -> bool {
        self.members.contains(tokens)
    }

    /// Offers `hyp`; returns whether it was kept.
    pub fn push(&mut self, score: f64, hyp: Hypothesis) -> bool {
        if self.members.contains(&hyp.tokens) {
            return false;
        }
        if self.is_full() {
            let worst = self.heap.peek().expect("full heap is non-empty");
            if rank_cmp(score, &hyp.tokens, worst.score, &worst.hyp.tokens) != Ordering::Less {
                return false;
            }
            let evicted = self.heap.pop().expect("full heap is non-empty");
            self.members.remove(&evicted.hyp.tokens);
        }
        self.members.insert(hyp.tokens.clone());
        self.heap.push(Entry { score, hyp });
        if self.is_full() {
            let gamma = self.gamma();
            if let Some(trace) = self.trace.as_mut() {
                debug_assert!(trace.last().is_none_or(|&g| g <= gamma));
                trace.push(gamma);
            }
        }
        true
    }

    pub fn trace(&self) -> &[f64] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Entries best first, as `(score, hypothesis)`.
    pub fn into_sorted(self) -> Vec<(f64, Hypothesis)> {
        // into_sorted_vec is ascending under Ord, i.e. best first here
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| (e.score, e.hyp))
            .collect()
    }
}
