//! Results documents written by the command line.
//!
//! Every document embeds the [`RunManifest`] of the run that produced it.
//! Floats are written in shortest round-trip form and parsed back exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{CorpusSummary, CurseReport, SearchErrorTable, SourceBeamRanks};
use crate::model::Vocab;
use crate::search::{length_normalized_score, Hypothesis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: Option<String>,
    /// Effective settings of the run, flag name to value.
    pub config: serde_json::Map<String, serde_json::Value>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; absent with `--no-timestamp`.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub rank: usize,
    pub tokens: Vec<String>,
    pub logprob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_score: Option<f64>,
    pub forced_eos: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDecode {
    pub source: String,
    pub method: String,
    pub hypotheses: Vec<DecodedRecord>,
    pub nodes_expanded: u64,
}

impl SourceDecode {
    pub fn new(source: &str, method: &str, hyps: &[Hypothesis], vocab: &Vocab, alpha: Option<f64>, nodes: u64) -> Self {
        let hypotheses = hyps
            .iter()
            .enumerate()
            .map(|(rank, h)| DecodedRecord {
                rank,
                tokens: vocab.decode(&h.tokens).into_iter().map(String::from).collect(),
                logprob: h.logprob,
                normalized_score: alpha.map(|a| length_normalized_score(h, a)),
                forced_eos: h.forced_eos,
            })
            .collect();
        Self {
            source: source.to_string(),
            method: method.to_string(),
            hypotheses,
            nodes_expanded: nodes,
        }
    }

    /// Rebuilds the hypotheses, interning token strings with `vocab`.
    pub fn to_hypotheses(&self, vocab: &Vocab) -> Result<Vec<Hypothesis>> {
        self.hypotheses
            .iter()
            .map(|r| {
                let tokens = vocab.encode(&r.tokens)?;
                if tokens.last() != Some(&vocab.eos()) {
                    return Err(Error::InvalidHypothesis(format!("{:?} does not end with EOS", r.tokens)));
                }
                Ok(Hypothesis {
                    tokens,
                    logprob: r.logprob,
                    forced_eos: r.forced_eos,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub k: usize,
    pub exhaustive: bool,
    pub permutations: u64,
    pub seed: Option<u64>,
    pub mean_krg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Decode { outputs: Vec<SourceDecode> },
    Corpus(CorpusSummary),
    SearchErrors(SearchErrorTable),
    BeamRanks { ranks: Vec<SourceBeamRanks> },
    BeamCurse(CurseReport),
    RandomBaseline(BaselineResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub manifest: RunManifest,
    pub payload: Payload,
}

impl ResultsDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedResults(e.to_string()))
    }
}
