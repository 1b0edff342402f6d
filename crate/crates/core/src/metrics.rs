//! Ranking metrics over a set of hypotheses.
//!
//! Two orders of the same hypotheses are compared: the quality ("HR") order,
//! sorted by `Q` descending, and the model order, sorted by log-probability
//! descending. kRG is a DCG ratio with relevance `k - rank_in_HR`; kQRG uses
//! the qualities themselves as gains and normalizes by the best possible
//! DCG of `k` perfect hypotheses. Positions are 1-based in the discount
//! `1 / log2(j + 1)`.
//!
//! The edit-distance side estimates where a hypothesis sits in the whole
//! space ordered by distance to the reference, counting hypotheses at each
//! distance exactly with big integers.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TokenId, Vocab};
use crate::quality::{edit_distance, QualityMeasure};
use crate::search::Hypothesis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedArrays {
    pub hyps: Vec<Hypothesis>,
    pub qualities: Vec<f64>,
    /// Indices into `hyps`, best quality first.
    pub hr_order: Vec<usize>,
    /// Indices into `hyps`, highest log-probability first.
    pub model_order: Vec<usize>,
    pub quality: String,
    /// Whether the qualities are guaranteed to lie in `[0, 1]`.
    pub bounded: bool,
}

impl RankedArrays {
    /// Builds both orders from precomputed qualities.
    pub fn from_qualities(
        hyps: Vec<Hypothesis>,
        qualities: Vec<f64>,
        quality: impl Into<String>,
        bounded: bool,
    ) -> Result<Self> {
        if hyps.is_empty() {
            return Err(Error::InvalidConfig("no hypotheses to rank".into()));
        }
        assert_eq!(hyps.len(), qualities.len(), "one quality per hypothesis");
        let mut seen = HashSet::new();
        for h in &hyps {
            if !seen.insert(h.tokens.as_slice()) {
                return Err(Error::DuplicateHypothesis(format!("{:?}", h.tokens)));
            }
        }
        let by_model = |a: &usize, b: &usize| -> Ordering {
            let (x, y) = (&hyps[*a], &hyps[*b]);
            y.logprob.total_cmp(&x.logprob).then_with(|| x.tokens.cmp(&y.tokens))
        };
        let mut model_order: Vec<usize> = (0..hyps.len()).collect();
        model_order.sort_by(by_model);
        let mut hr_order: Vec<usize> = (0..hyps.len()).collect();
        hr_order.sort_by(|a, b| qualities[*b].total_cmp(&qualities[*a]).then_with(|| by_model(a, b)));
        Ok(Self {
            hyps,
            qualities,
            hr_order,
            model_order,
            quality: quality.into(),
            bounded,
        })
    }

    pub fn k(&self) -> usize {
        self.hyps.len()
    }
}

/// Scores each hypothesis against `reference` and builds both orders.
pub fn build_ranked_arrays(
    hyps: Vec<Hypothesis>,
    reference: &[TokenId],
    quality: &dyn QualityMeasure,
    vocab: &Vocab,
) -> Result<RankedArrays> {
    let reference = vocab.decode(reference);
    let qualities = hyps
        .iter()
        .map(|h| quality.score(&vocab.decode(h.body()), &reference))
        .collect::<Result<Vec<_>>>()?;
    RankedArrays::from_qualities(hyps, qualities, quality.name(), quality.is_bounded())
}

/// `sum_j gains[j] / log2(j + 2)` with `j` 0-based.
pub fn dcg(gains: impl IntoIterator<Item = f64>) -> f64 {
    gains
        .into_iter()
        .enumerate()
        .map(|(j, g)| g / ((j + 2) as f64).log2())
        .sum()
}

/// kRG given the HR order and model order as permutations of `0..k`.
pub fn krg_of_orders(hr_order: &[usize], model_order: &[usize]) -> f64 {
    let k = hr_order.len();
    let mut relevance = vec![0.0; k];
    for (rank, &i) in hr_order.iter().enumerate() {
        relevance[i] = (k - rank) as f64;
    }
    let ideal = dcg(hr_order.iter().map(|&i| relevance[i]));
    dcg(model_order.iter().map(|&i| relevance[i])) / ideal
}

pub fn krg(arrays: &RankedArrays) -> f64 {
    krg_of_orders(&arrays.hr_order, &arrays.model_order)
}

/// Upper bound of DCG over `k` hypotheses of quality 1.
pub fn kqrg_bound(k: usize) -> f64 {
    dcg(std::iter::repeat_n(1.0, k))
}

pub fn kqrg(arrays: &RankedArrays) -> Result<f64> {
    if !arrays.bounded {
        return Err(Error::UnboundedQuality(arrays.quality.clone()));
    }
    let gains = arrays.model_order.iter().map(|&i| arrays.qualities[i]);
    Ok(dcg(gains) / kqrg_bound(arrays.k()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub k: usize,
    pub krg: f64,
    /// Absent for unbounded qualities.
    pub kqrg: Option<f64>,
    pub quality: String,
}

impl MetricRecord {
    pub fn from_arrays(arrays: &RankedArrays) -> Self {
        Self {
            k: arrays.k(),
            krg: krg(arrays),
            kqrg: kqrg(arrays).ok(),
            quality: arrays.quality.clone(),
        }
    }
}

/// `C(n, r)`, zero when `r < 0`, `n < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> BigUint {
    if n < 0 || r < 0 || r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        // exact at every step: acc = C(n, i) * (n - i) / (i + 1) = C(n, i + 1)
        acc = acc * BigUint::from((n - i) as u64) / BigUint::from((i + 1) as u64);
    }
    acc
}

/// Number of hypotheses at edit distance `e` from a reference of length `t`
/// over a vocabulary of size `v`:
/// `sum_{s=0}^{t} C(t, s) * C(t + e - 2s, e - s) * v^e`.
///
/// `v^e` multiplies every term exactly as in the published counting formula;
/// a tighter count would weight substitutions and insertions separately.
pub fn edit_count(e: u64, t: u64, v: u64) -> BigUint {
    let (e, t) = (e as i64, t as i64);
    let mut sum = BigUint::zero();
    for s in 0..=t {
        sum += binomial(t, s) * binomial(t + e - 2 * s, e - s);
    }
    sum * BigUint::from(v).pow(e as u32)
}

/// Position of a hypothesis in the edit-distance-ordered space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRankReport {
    pub edits: usize,
    pub ref_len: usize,
    /// Hypotheses strictly closer to the reference.
    #[serde(with = "decimal")]
    pub count_below: BigUint,
    /// Hypotheses at distance `0..=ref_len + max_len`.
    #[serde(with = "decimal")]
    pub total: BigUint,
    pub percentile: f64,
    pub decile: u8,
}

/// Cumulative edit counts for one `(T, V)` pair.
pub struct EditCountTable {
    ref_len: u64,
    vocab: u64,
    /// `cumulative[e] = sum_{e' < e} c(e', T)`
    cumulative: Vec<BigUint>,
}

impl EditCountTable {
    pub fn new(ref_len: usize, vocab: usize) -> Self {
        Self {
            ref_len: ref_len as u64,
            vocab: vocab as u64,
            cumulative: vec![BigUint::zero()],
        }
    }

    /// `sum_{e' < e} c(e', T)`.
    pub fn below(&mut self, e: usize) -> &BigUint {
        while self.cumulative.len() <= e {
            let next = self.cumulative.len() - 1;
            let add = edit_count(next as u64, self.ref_len, self.vocab);
            let last = self.cumulative.last().expect("non-empty");
            self.cumulative.push(last + add);
        }
        &self.cumulative[e]
    }
}

/// `sum_{e' < e} c(e', T)` summed term by term.
pub fn rank_below(e: usize, ref_len: usize, vocab: usize) -> BigUint {
    (0..e as u64)
        .map(|x| edit_count(x, ref_len as u64, vocab as u64))
        .sum()
}

pub fn edit_rank<T: PartialEq>(hyp: &[T], reference: &[T], vocab: usize, max_len: usize) -> Result<EditRankReport> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let mut table = EditCountTable::new(reference.len(), vocab);
    let e = edit_distance(hyp, reference);
    Ok(report_from_table(&mut table, e, max_len))
}

fn report_from_table(table: &mut EditCountTable, e: usize, max_len: usize) -> EditRankReport {
    let ref_len = table.ref_len as usize;
    let e_max = (ref_len + max_len).max(e);
    let count_below = table.below(e).clone();
    let total = table.below(e_max + 1).clone();
    let decile = ((&count_below * 10u32) / &total).to_u8().unwrap_or(9).min(9);
    EditRankReport {
        edits: e,
        ref_len,
        percentile: ratio(&count_below, &total),
        count_below,
        total,
        decile,
    }
}

/// Edit-rank reports for many hypotheses against one reference, sharing the
/// cumulative count table.
pub fn edit_rank_many(
    hyps: &[&[TokenId]],
    reference: &[TokenId],
    vocab: usize,
    max_len: usize,
) -> Result<Vec<EditRankReport>> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let mut table = EditCountTable::new(reference.len(), vocab);
    Ok(hyps
        .iter()
        .map(|h| report_from_table(&mut table, edit_distance(h, reference), max_len))
        .collect())
}

/// `num / den` as the nearest-ish `f64`, keeping ~64 significant bits
/// before rounding.
fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = (64 + den.bits()).saturating_sub(num.bits());
    let q = (num << shift) / den;
    let mut x = q.to_f64().unwrap_or(f64::MAX);
    let mut s = shift as i64;
    while s > 0 {
        let step = s.min(1000);
        x /= 2f64.powi(step as i32);
        s -= step;
    }
    x
}

pub fn edit_rank_histogram(reports: &[EditRankReport]) -> [u64; 10] {
    let mut buckets = [0u64; 10];
    for r in reports {
        buckets[r.decile.min(9) as usize] += 1;
    }
    buckets
}

/// Mean kRG of uniformly random model orders against the identity HR order.
pub fn random_krg_baseline(k: usize, n_perms: usize, seed: u64) -> Result<f64> {
    if k < 1 || n_perms < 1 {
        return Err(Error::InvalidConfig("need k >= 1 and n_perms >= 1".into()));
    }
    let identity: Vec<usize> = (0..k).collect();
    let mut perm = identity.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..n_perms {
        perm.shuffle(&mut rng);
        sum += krg_of_orders(&identity, &perm);
    }
    Ok(sum / n_perms as f64)
}

/// Largest `k` the exhaustive baseline accepts.
pub const EXHAUSTIVE_BASELINE_MAX_K: usize = 6;

/// Mean kRG over all `k!` model orders.
pub fn random_krg_exhaustive(k: usize) -> Result<f64> {
    if !(1..=EXHAUSTIVE_BASELINE_MAX_K).contains(&k) {
        return Err(Error::InvalidConfig(format!(
            "exhaustive baseline needs 1 <= k <= {EXHAUSTIVE_BASELINE_MAX_K}"
        )));
    }
    let identity: Vec<usize> = (0..k).collect();
    let mut perm = identity.clone();
    let (mut sum, mut count) = (0.0, 0usize);
    loop {
        sum += krg_of_orders(&identity, &perm);
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(sum / count as f64)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom("bad integer"))
    }
}
