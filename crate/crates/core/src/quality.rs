//! Sentence-level quality functions `Q(y, ref)`.
//!
//! `edit-sim`, `chrf` and `bleu` lie in `[0, 1]` and reach `1.0` exactly when
//! the hypothesis equals the reference. `edit` is the negated Levenshtein
//! distance and is unbounded below.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Levenshtein distance with unit insert, delete and substitute costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QualityKind {
    #[serde(rename = "edit")]
    EditNeg,
    #[serde(rename = "edit-sim")]
    EditSim,
    #[serde(rename = "chrf")]
    Chrf,
    #[serde(rename = "bleu")]
    SentenceBleu,
}

impl QualityKind {
    pub fn name(self) -> &'static str {
        match self {
            QualityKind::EditNeg => "edit",
            QualityKind::EditSim => "edit-sim",
            QualityKind::Chrf => "chrf",
            QualityKind::SentenceBleu => "bleu",
        }
    }
}

impl fmt::Display for QualityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QualityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edit" => Ok(QualityKind::EditNeg),
            "edit-sim" => Ok(QualityKind::EditSim),
            "chrf" => Ok(QualityKind::Chrf),
            "bleu" => Ok(QualityKind::SentenceBleu),
            other => Err(Error::InvalidConfig(format!("unknown quality {other:?}"))),
        }
    }
}

/// Anything that can score a hypothesis against a reference.
pub trait QualityMeasure {
    fn name(&self) -> String;
    /// Whether every score lies in `[0, 1]`.
    fn is_bounded(&self) -> bool;
    fn score(&self, hyp: &[&str], reference: &[&str]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityFn {
    pub kind: QualityKind,
    /// Maximum character n-gram order for chrF.
    pub chrf_order: usize,
    pub chrf_beta: f64,
    /// Additive smoothing for zero n-gram matches in sentence BLEU.
    pub bleu_eps: f64,
}

impl QualityFn {
    pub fn new(kind: QualityKind) -> Self {
        Self {
            kind,
            chrf_order: 6,
            chrf_beta: 2.0,
            bleu_eps: 0.1,
        }
    }

    pub fn score_tokens<S: AsRef<str>>(&self, hyp: &[S], reference: &[S]) -> Result<f64> {
        if reference.is_empty() {
            return Err(Error::EmptyReference);
        }
        let hyp: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
        let reference: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
        Ok(match self.kind {
            QualityKind::EditNeg => -(edit_distance(&hyp, &reference) as f64),
            QualityKind::EditSim => {
                let d = edit_distance(&hyp, &reference) as f64;
                let longest = hyp.len().max(reference.len()) as f64;
                (1.0 - d / longest).clamp(0.0, 1.0)
            }
            QualityKind::Chrf => chrf(&hyp.join(" "), &reference.join(" "), self.chrf_order, self.chrf_beta),
            QualityKind::SentenceBleu => sentence_bleu(&hyp, &reference, self.bleu_eps),
        })
    }
}

impl Default for QualityFn {
    fn default() -> Self {
        Self::new(QualityKind::EditSim)
    }
}

impl QualityMeasure for QualityFn {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn is_bounded(&self) -> bool {
        self.kind != QualityKind::EditNeg
    }

    fn score(&self, hyp: &[&str], reference: &[&str]) -> Result<f64> {
        self.score_tokens(hyp, reference)
    }
}

fn ngram_counts<T: Eq + Hash>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_matches<T: Eq + Hash>(hyp: &HashMap<&[T], usize>, reference: &HashMap<&[T], usize>) -> usize {
    hyp.iter()
        .map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0)))
        .sum()
}

/// Character n-gram F-score. Precision and recall are averaged over the
/// orders `1..=max_order` for which both strings have at least one n-gram;
/// spaces count as characters.
pub fn chrf(hyp: &str, reference: &str, max_order: usize, beta: f64) -> f64 {
    let h: Vec<char> = hyp.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    let (mut prec, mut rec, mut orders) = (0.0, 0.0, 0usize);
    for n in 1..=max_order {
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        let h_total: usize = hc.values().sum();
        let r_total: usize = rc.values().sum();
        if h_total == 0 || r_total == 0 {
            continue;
        }
        let m = clipped_matches(&hc, &rc) as f64;
        prec += m / h_total as f64;
        rec += m / r_total as f64;
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let (p, r) = (prec / orders as f64, rec / orders as f64);
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        0.0
    } else {
        ((1.0 + b2) * p * r / denom).clamp(0.0, 1.0)
    }
}

/// Smoothed sentence BLEU over token n-grams up to order 4 (or the
/// hypothesis length, if shorter). Zero match counts become `eps`.
pub fn sentence_bleu(hyp: &[&str], reference: &[&str], eps: f64) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let max_order = hyp.len().min(4);
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let hc = ngram_counts(hyp, n);
        let rc = ngram_counts(reference, n);
        let total: usize = hc.values().sum();
        let m = clipped_matches(&hc, &rc) as f64;
        let p = if m == 0.0 { eps } else { m } / total as f64;
        log_sum += p.ln();
    }
    let (c, r) = (hyp.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    (bp * (log_sum / max_order as f64).exp()).clamp(0.0, 1.0)
}
