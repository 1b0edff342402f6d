//! Decoders over a [`CondModel`](crate::model::CondModel).
//!
//! Every decoder ranks hypotheses the same way: higher score first, ties
//! broken by the lexicographically smaller token-id sequence. Scores are
//! accumulated left to right from `0.0`, so the same sequence always gets a
//! bit-identical log-probability whichever decoder produced it.

mod beam;
mod brute;
mod exact;
mod mbr;
mod sample;
mod topk;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TokenId;

pub use beam::{beam_search, min_heap_beam_search};
pub use brute::{brute_force, brute_force_capped, DEFAULT_ORACLE_CAP};
pub use exact::{exact_top_k, ExactSearch, DEFAULT_NODE_BUDGET};
pub use mbr::{mbr_decode, MbrUtility};
pub use sample::ancestral_sample;
pub use topk::BoundedTopK;

/// A finished sequence, EOS included, with its log-probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub logprob: f64,
    /// Set when EOS was appended because the prefix hit `max_len`.
    pub forced_eos: bool,
}

impl Hypothesis {
    /// Tokens without the trailing EOS.
    pub fn body(&self) -> &[TokenId] {
        &self.tokens[..self.tokens.len().saturating_sub(1)]
    }

    /// True for the empty translation `[EOS]`.
    pub fn is_empty_translation(&self) -> bool {
        self.tokens.len() == 1
    }
}

/// Ordering used for every ranked list: `Less` means `a` ranks ahead of `b`.
pub fn rank_cmp(a_score: f64, a: &[TokenId], b_score: f64, b: &[TokenId]) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a.cmp(b))
}

/// Sorts best first by raw log-probability.
pub fn sort_by_logprob(hyps: &mut [Hypothesis]) {
    hyps.sort_by(|a, b| rank_cmp(a.logprob, &a.tokens, b.logprob, &b.tokens));
}

/// `logprob / |tokens|^alpha`; `alpha = 0` leaves the log-probability unchanged.
pub fn length_normalized_score(h: &Hypothesis, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return h.logprob;
    }
    h.logprob / (h.tokens.len().max(1) as f64).powf(alpha)
}

/// Score used for final ranking: raw log-probability, or length-normalized
/// when `alpha` is set.
pub(crate) fn final_score(h: &Hypothesis, alpha: Option<f64>) -> f64 {
    alpha.map_or(h.logprob, |a| length_normalized_score(h, a))
}

/// Work counters collected during one search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Prefixes whose children were scored.
    pub nodes_expanded: u64,
    /// Successive values of the top-k lower bound (only when tracing is on).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutput {
    pub hypotheses: Vec<Hypothesis>,
    pub stats: SearchStats,
}

/// Decoder settings shared by the harness and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub beam_width: usize,
    pub k: usize,
    /// Length-normalization exponent for final ranking.
    pub alpha: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Node-expansion cap for exact search.
    pub budget: u64,
    /// Visit children in descending probability during exact search.
    pub greedy_order: bool,
    /// Seed exact search with a min-heap beam n-best list of width
    /// `max(beam_width, k)`.
    pub beam_bounds: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beam_width: 5,
            k: 1,
            alpha: None,
            samples: 200,
            seed: 0,
            budget: DEFAULT_NODE_BUDGET,
            greedy_order: true,
            beam_bounds: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width < 1 {
            return Err(Error::InvalidConfig("beam width must be at least 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            if !(a >= 0.0) {
                return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {a}")));
            }
        }
        Ok(())
    }
}
