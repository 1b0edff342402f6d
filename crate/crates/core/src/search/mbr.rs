use std::collections::HashSet;

use super::Hypothesis;
use crate::model::Vocab;
use crate::quality::{chrf, edit_distance};

/// Pairwise utilities for [`mbr_decode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MbrUtility {
    /// Negative token edit distance.
    NegEdit,
    Chrf { order: usize, beta: f64 },
}

impl MbrUtility {
    pub fn utility(&self, vocab: &Vocab, candidate: &Hypothesis, pseudo_ref: &Hypothesis) -> f64 {
        match *self {
            MbrUtility::NegEdit => -(edit_distance(candidate.body(), pseudo_ref.body()) as f64),
            MbrUtility::Chrf { order, beta } => chrf(
                &vocab.decode(candidate.body()).join(" "),
                &vocab.decode(pseudo_ref.body()).join(" "),
                order,
                beta,
            ),
        }
    }
}

/// Sample-based minimum Bayes risk decoding.
///
/// Each distinct sample is a candidate; the winner maximizes its mean
/// utility against the full sample list (duplicates included). Ties go to the
/// higher log-probability, then the lexicographically smaller sequence.
/// Returns `None` for an empty sample list.
pub fn mbr_decode<F>(samples: &[Hypothesis], utility: F) -> Option<Hypothesis>
where
    F: Fn(&Hypothesis, &Hypothesis) -> f64,
{
    let mut seen = HashSet::new();
    let n = samples.len() as f64;
    let mut best: Option<(f64, &Hypothesis)> = None;
    for cand in samples {
        if !seen.insert(cand.tokens.as_slice()) {
            continue;
        }
        let expected = samples.iter().map(|s| utility(cand, s)).sum::<f64>() / n;
        let better = match best {
            None => true,
            Some((score, b)) => expected
                .total_cmp(&score)
                .then(cand.logprob.total_cmp(&b.logprob))
                .then(b.tokens.cmp(&cand.tokens))
                .is_gt(),
        };
        if better {
            best = Some((expected, cand));
        }
    }
    best.map(|(_, h)| h.clone())
}
