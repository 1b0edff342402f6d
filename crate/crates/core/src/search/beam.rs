use std::cmp::Ordering;

use super::{final_score, rank_cmp, BoundedTopK, Hypothesis, SearchOutput, SearchStats};
use crate::error::{Error, Result};
use crate::model::{CondModel, SourceId, TokenId};

struct Candidate {
    parent: usize,
    token: TokenId,
    logprob: f64,
}

/// Plain beam search.
///
/// At each step the candidates `prefix ⊕ v` of every alive prefix are ranked;
/// EOS candidates ranked within the top `width` are moved to the finished
/// pool, and the beam refills with the best non-EOS candidates up to
/// `width`. Stops when nothing is alive or (without `alpha`) when the best
/// alive prefix scores below the `k`-th finished hypothesis.
pub fn beam_search(
    model: &CondModel,
    source: SourceId,
    width: usize,
    k: usize,
    alpha: Option<f64>,
) -> Result<SearchOutput> {
    run(model, source, width, k, alpha, false)
}

/// Beam search with every EOS-ending candidate of every step offered to a
/// bounded min-heap of capacity `width`; the heap replaces the beam's
/// finished list as output. Never scores worse than [`beam_search`] at any
/// rank.
pub fn min_heap_beam_search(
    model: &CondModel,
    source: SourceId,
    width: usize,
    k: usize,
    alpha: Option<f64>,
) -> Result<SearchOutput> {
    run(model, source, width, k, alpha, true)
}

fn run(
    model: &CondModel,
    source: SourceId,
    width: usize,
    k: usize,
    alpha: Option<f64>,
    with_heap: bool,
) -> Result<SearchOutput> {
    if k < 1 || width < k {
        return Err(Error::InvalidConfig(format!(
            "need beam width >= k >= 1, got width {width}, k {k}"
        )));
    }
    let eos = model.eos();
    let max_len = model.max_len();
    let vocab = model.vocab_size() as TokenId;

    let mut stats = SearchStats::default();
    let mut alive: Vec<(Vec<TokenId>, f64)> = vec![(Vec::new(), 0.0)];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut heap = with_heap.then(|| BoundedTopK::new(width));

    while !alive.is_empty() {
        stats.nodes_expanded += alive.len() as u64;
        let mut pool = Vec::with_capacity(alive.len() * vocab as usize);
        for (parent, (prefix, lp)) in alive.iter().enumerate() {
            let row = model.next_logprobs(source, prefix)?;
            if prefix.len() == max_len {
                pool.push(Candidate {
                    parent,
                    token: eos,
                    logprob: lp + row[eos as usize],
                });
            } else {
                for token in 0..vocab {
                    pool.push(Candidate {
                        parent,
                        token,
                        logprob: lp + row[token as usize],
                    });
                }
            }
        }
        // Candidates share a length, so (prefix, token) order is sequence order.
        pool.sort_by(|a, b| {
            b.logprob.total_cmp(&a.logprob).then_with(|| {
                alive[a.parent]
                    .0
                    .cmp(&alive[b.parent].0)
                    .then(a.token.cmp(&b.token))
            })
        });

        let finish = |c: &Candidate| {
            let prefix = &alive[c.parent].0;
            let mut tokens = Vec::with_capacity(prefix.len() + 1);
            tokens.extend_from_slice(prefix);
            tokens.push(eos);
            Hypothesis {
                tokens,
                logprob: c.logprob,
                forced_eos: prefix.len() == max_len,
            }
        };

        if let Some(heap) = heap.as_mut() {
            for c in pool.iter().filter(|c| c.token == eos) {
                let h = finish(c);
                heap.push(final_score(&h, alpha), h);
            }
        }

        let mut next = Vec::with_capacity(width);
        for (rank, c) in pool.iter().enumerate() {
            if next.len() == width && rank >= width {
                break;
            }
            if c.token == eos {
                if rank < width {
                    finished.push(finish(c));
                }
            } else if next.len() < width {
                let mut prefix = alive[c.parent].0.clone();
                prefix.push(c.token);
                next.push((prefix, c.logprob));
            }
        }
        alive = next;

        if alpha.is_none() && finished.len() >= k {
            if let Some(best_alive) = alive.first().map(|a| a.1) {
                let mut scores: Vec<f64> = finished.iter().map(|h| h.logprob).collect();
                scores.sort_by(|a, b| b.total_cmp(a));
                if best_alive < scores[k - 1] {
                    break;
                }
            }
        }
    }

    let hypotheses = match heap {
        Some(heap) => heap.into_sorted().into_iter().map(|(_, h)| h).take(k).collect(),
        None => {
            let mut scored: Vec<(f64, Hypothesis)> = finished
                .into_iter()
                .map(|h| (final_score(&h, alpha), h))
                .collect();
            scored.sort_by(|a, b| -> Ordering { rank_cmp(a.0, &a.1.tokens, b.0, &b.1.tokens) });
            scored.into_iter().map(|(_, h)| h).take(k).collect()
        }
    };
    Ok(SearchOutput { hypotheses, stats })
}
