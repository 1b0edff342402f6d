use super::{BoundedTopK, Hypothesis, SearchOutput, SearchStats};
use crate::error::{Error, Result};
use crate::model::{CondModel, SourceId, TokenId};

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

/// Depth-first branch-and-bound search for the exact `k` most probable
/// hypotheses.
///
/// A bounded min-heap holds the best finished hypotheses found so far; once
/// it is full its minimum score `gamma` prunes every extension whose
/// log-probability falls below it. Log-probabilities only decrease along a
/// path, so pruning never drops a member of the true top-k.
#[derive(Debug, Clone)]
pub struct ExactSearch {
    pub k: usize,
    /// Abort with [`Error::BudgetExceeded`] after this many node expansions.
    pub budget: u64,
    /// Visit children in descending conditional probability. Affects only
    /// the amount of work, never the result.
    pub greedy_order: bool,
    /// Record every lower-bound update in [`SearchStats::gamma_trace`].
    pub trace_gamma: bool,
}

impl ExactSearch {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            budget: DEFAULT_NODE_BUDGET,
            greedy_order: true,
            trace_gamma: false,
        }
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn greedy_order(mut self, on: bool) -> Self {
        self.greedy_order = on;
        self
    }

    pub fn trace_gamma(mut self, on: bool) -> Self {
        self.trace_gamma = on;
        self
    }

    /// Runs the search. `initial_bounds` (typically a beam search n-best
    /// list) pre-fills the heap so pruning starts early; their scores are
    /// recomputed from the model.
    pub fn run(
        &self,
        model: &CondModel,
        source: SourceId,
        initial_bounds: Option<&[Hypothesis]>,
    ) -> Result<SearchOutput> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let mut heap = BoundedTopK::new(self.k);
        if self.trace_gamma {
            heap = heap.with_trace();
        }
        for h in initial_bounds.unwrap_or(&[]) {
            let logprob = model.sequence_logprob(source, &h.tokens)?;
            let forced_eos = h.body().len() == model.max_len();
            heap.push(
                logprob,
                Hypothesis {
                    tokens: h.tokens.clone(),
                    logprob,
                    forced_eos,
                },
            );
        }

        let mut dfs = Dfs {
            model,
            source,
            heap,
            prefix: Vec::with_capacity(model.max_len() + 1),
            nodes: 0,
            budget: self.budget,
            greedy: self.greedy_order,
        };
        dfs.visit(0.0)?;

        let gamma_trace = dfs.heap.trace().to_vec();
        let hypotheses = dfs.heap.into_sorted().into_iter().map(|(_, h)| h).collect();
        Ok(SearchOutput {
            hypotheses,
            stats: SearchStats {
                nodes_expanded: dfs.nodes,
                gamma_trace,
            },
        })
    }
}

/// Exact top-`k` with the default budget and greedy child ordering.
pub fn exact_top_k(
    model: &CondModel,
    source: SourceId,
    k: usize,
    initial_bounds: Option<&[Hypothesis]>,
) -> Result<SearchOutput> {
    ExactSearch::new(k).run(model, source, initial_bounds)
}

struct Dfs<'a> {
    model: &'a CondModel,
    source: SourceId,
    heap: BoundedTopK,
    prefix: Vec<TokenId>,
    nodes: u64,
    budget: u64,
    greedy: bool,
}

impl Dfs<'_> {
    fn visit(&mut self, logprob: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded { limit: self.budget });
        }
        let model = self.model;
        let eos = model.eos();
        let row = model.next_logprobs(self.source, &self.prefix)?;

        let forced = self.prefix.len() == model.max_len();
        let mut children: Vec<TokenId> = if forced {
            vec![eos]
        } else {
            (0..model.vocab_size() as TokenId).collect()
        };
        if self.greedy && !forced {
            children.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        }

        for v in children {
            let next = logprob + row[v as usize];
            // gamma is re-read each time: finishing a sibling may raise it
            if next < self.heap.gamma() {
                continue;
            }
            if v == eos {
                let mut tokens = self.prefix.clone();
                tokens.push(eos);
                self.heap.push(
                    next,
                    Hypothesis {
                        tokens,
                        logprob: next,
                        forced_eos: forced,
                    },
                );
            } else {
                self.prefix.push(v);
                let res = self.visit(next);
                self.prefix.pop();
                res?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Order;

    fn pathology() -> CondModel {
        let mut m = CondModel::new(2, 0, Order::Window(1), 6, ["s1".to_string()]);
        m.insert_row(SourceId(0), vec![], vec![0.45, 0.55]);
        m.insert_row(SourceId(0), vec![1], vec![0.5, 0.5]);
        m
    }

    #[test]
    fn finds_empty_mode() {
        let out = exact_top_k(&pathology(), SourceId(0), 1, None).unwrap();
        assert_eq!(out.hypotheses.len(), 1);
        assert_eq!(out.hypotheses[0].tokens, vec![0]);
        assert!((out.hypotheses[0].logprob - 0.45f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn second_best_on_pathology() {
        let out = exact_top_k(&pathology(), SourceId(0), 2, None).unwrap();
        assert_eq!(out.hypotheses[1].tokens, vec![1, 0]);
    }

    #[test]
    fn returns_whole_space_when_smaller_than_k() {
        let m = CondModel::new(2, 0, Order::Window(0), 2, ["s".to_string()]);
        let out = exact_top_k(&m, SourceId(0), 10, None).unwrap();
        assert_eq!(out.hypotheses.len(), 3);
    }

    #[test]
    fn budget_aborts() {
        let m = CondModel::new(4, 0, Order::Window(0), 6, ["s".to_string()]);
        let err = ExactSearch::new(50).budget(10).run(&m, SourceId(0), None).unwrap_err();
        assert!(err.to_string().contains("search budget exceeded"));
    }

    #[test]
    fn gamma_trace_is_monotone() {
        let m = crate::model::random_model(11, 4, Order::Window(2), 5, 0.1);
        let out = ExactSearch::new(5)
            .trace_gamma(true)
            .greedy_order(false)
            .run(&m, SourceId(0), None)
            .unwrap();
        assert!(!out.stats.gamma_trace.is_empty());
        assert!(out.stats.gamma_trace.windows(2).all(|w| w[0] <= w[1]));
    }
}
