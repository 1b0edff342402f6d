//! Autoregressive conditional models over a finite vocabulary.
//!
//! A [`CondModel`] stores, per source sentence, a table of next-token
//! distributions keyed by the last `n` tokens of the prefix. Contexts without
//! a stored row fall back to the uniform distribution. Everything downstream
//! (decoders, the brute-force oracle, the samplers) reads the model only
//! through [`CondModel::next_logprobs`], so all of them agree on the same
//! hypothesis space, including the forced-EOS convention at `max_len`.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

pub type TokenId = u32;

/// Dense index of a source sentence inside a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceId(pub usize);

/// Probabilities below this are treated as zero.
pub const PROB_FLOOR: f64 = 1e-300;
/// Log value used in place of `ln 0`.
pub const LOG_FLOOR: f64 = -700.0;

/// Tolerance for a stored row to count as normalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Rows off by at most this much are renormalized at load time.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

pub fn floor_ln(p: f64) -> f64 {
    if p < PROB_FLOOR {
        LOG_FLOOR
    } else {
        p.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    eos: TokenId,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>, eos: &str) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut violations = Vec::new();
        if tokens.len() < 2 {
            violations.push(Violation::new("vocab", "need at least 2 tokens"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                violations.push(Violation::new("vocab", format!("token {i} is empty")));
            }
            if index.insert(tok.clone(), i as TokenId).is_some() {
                violations.push(Violation::new("vocab", format!("duplicate token {tok:?}")));
            }
        }
        let eos_id = match index.get(eos) {
            Some(&id) => id,
            None => {
                violations.push(Violation::new(
                    "vocab",
                    format!("eos {eos:?} is not in the token list"),
                ));
                0
            }
        };
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        Ok(Self {
            tokens,
            eos: eos_id,
            index,
        })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| Error::InvalidToken(t.as_ref().to_string()))
            })
            .collect()
    }

    /// Token strings for `ids`. Panics on ids outside the vocabulary.
    pub fn decode(&self, ids: &[TokenId]) -> Vec<&str> {
        ids.iter().map(|&id| self.tokens[id as usize].as_str()).collect()
    }
}

/// How much of the prefix a model conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    /// Last `n` tokens; `0` means every step uses the same distribution.
    Window(usize),
    /// The whole prefix.
    Full,
}

impl Order {
    pub fn context<'a>(&self, prefix: &'a [TokenId]) -> &'a [TokenId] {
        match *self {
            Order::Window(n) => &prefix[prefix.len().saturating_sub(n)..],
            Order::Full => prefix,
        }
    }

    fn max_context(&self, max_len: usize) -> usize {
        match *self {
            Order::Window(n) => n.min(max_len),
            Order::Full => max_len,
        }
    }
}

#[derive(Debug, Clone)]
struct Row {
    probs: Vec<f64>,
    logprobs: Vec<f64>,
}

impl Row {
    fn new(probs: Vec<f64>) -> Self {
        let logprobs = probs.iter().map(|&p| floor_ln(p)).collect();
        Self { probs, logprobs }
    }
}

/// Tabular conditional model `P(v | source, context)` with uniform backoff.
#[derive(Debug, Clone)]
pub struct CondModel {
    vocab_size: usize,
    eos: TokenId,
    order: Order,
    max_len: usize,
    sources: Vec<String>,
    source_index: HashMap<String, SourceId>,
    tables: Vec<HashMap<Vec<TokenId>, Row>>,
    uniform: Row,
}

impl CondModel {
    /// An empty model: every context falls back to uniform until rows are inserted.
    pub fn new(
        vocab_size: usize,
        eos: TokenId,
        order: Order,
        max_len: usize,
        sources: impl IntoIterator<Item = String>,
    ) -> Self {
        let sources: Vec<String> = sources.into_iter().collect();
        let source_index = sources
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), SourceId(i)))
            .collect();
        let tables = vec![HashMap::new(); sources.len()];
        let p = 1.0 / vocab_size.max(1) as f64;
        Self {
            vocab_size,
            eos,
            order,
            max_len,
            sources,
            source_index,
            tables,
            uniform: Row::new(vec![p; vocab_size]),
        }
    }

    /// Stores (or replaces) the distribution for `context`. Rows are not
    /// checked here; see [`CondModel::validate`].
    pub fn insert_row(&mut self, source: SourceId, context: Vec<TokenId>, probs: Vec<f64>) {
        self.tables[source.0].insert(context, Row::new(probs));
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn source(&self, name: &str) -> Result<SourceId> {
        self.source_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSource(name.to_string()))
    }

    pub fn source_name(&self, id: SourceId) -> Option<&str> {
        self.sources.get(id.0).map(String::as_str)
    }

    fn row(&self, source: SourceId, prefix: &[TokenId]) -> Result<&Row> {
        let table = self
            .tables
            .get(source.0)
            .ok_or_else(|| Error::UnknownSource(format!("#{}", source.0)))?;
        for &tok in prefix {
            if tok as usize >= self.vocab_size {
                return Err(Error::InvalidToken(format!("id {tok}")));
            }
            if tok == self.eos {
                return Err(Error::InvalidPrefix("prefix contains EOS".into()));
            }
        }
        // A prefix of exactly max_len tokens is allowed: its EOS entry prices
        // the forced termination.
        if prefix.len() > self.max_len {
            return Err(Error::InvalidPrefix(format!(
                "prefix length {} exceeds max_len {}",
                prefix.len(),
                self.max_len
            )));
        }
        let context = self.order.context(prefix);
        Ok(table.get(context).unwrap_or(&self.uniform))
    }

    /// Log-probabilities of every next token after `prefix`.
    pub fn next_logprobs(&self, source: SourceId, prefix: &[TokenId]) -> Result<&[f64]> {
        self.row(source, prefix).map(|r| r.logprobs.as_slice())
    }

    pub fn next_probs(&self, source: SourceId, prefix: &[TokenId]) -> Result<&[f64]> {
        self.row(source, prefix).map(|r| r.probs.as_slice())
    }

    /// Log-probability of a complete sequence ending in EOS.
    ///
    /// Accumulates left to right from `0.0`; every decoder uses the same
    /// order so identical sequences get bit-identical scores.
    pub fn sequence_logprob(&self, source: SourceId, tokens: &[TokenId]) -> Result<f64> {
        let (last, body) = tokens
            .split_last()
            .ok_or_else(|| Error::InvalidHypothesis("empty sequence".into()))?;
        if *last != self.eos {
            return Err(Error::InvalidHypothesis("does not end with EOS".into()));
        }
        if body.contains(&self.eos) {
            return Err(Error::InvalidHypothesis("EOS before the final position".into()));
        }
        if body.len() > self.max_len {
            return Err(Error::InvalidHypothesis(format!(
                "{} tokens before EOS exceeds max_len {}",
                body.len(),
                self.max_len
            )));
        }
        let mut total = 0.0;
        for t in 0..tokens.len() {
            let lp = self.next_logprobs(source, &tokens[..t])?;
            total += lp[tokens[t] as usize];
        }
        Ok(total)
    }

    /// Checks every model invariant; an empty list means the model is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.vocab_size < 2 {
            out.push(Violation::new("model", "vocabulary size must be at least 2"));
        }
        if self.eos as usize >= self.vocab_size {
            out.push(Violation::new("model", "eos id outside the vocabulary"));
        }
        if self.max_len < 1 {
            out.push(Violation::new("model", "max_len must be at least 1"));
        }
        let max_context = self.order.max_context(self.max_len);
        for (src, table) in self.tables.iter().enumerate() {
            let mut contexts: Vec<_> = table.iter().collect();
            contexts.sort_by(|a, b| a.0.cmp(b.0));
            for (context, row) in contexts {
                let at = format!("source {}, context {:?}", self.sources[src], context);
                if context.iter().any(|&t| t as usize >= self.vocab_size) {
                    out.push(Violation::new(&at, "context token outside the vocabulary"));
                }
                if context.contains(&self.eos) {
                    out.push(Violation::new(&at, "context contains EOS"));
                }
                if context.len() > max_context {
                    out.push(Violation::new(
                        &at,
                        format!("context longer than {max_context} is unreachable"),
                    ));
                }
                if row.probs.len() != self.vocab_size {
                    out.push(Violation::new(
                        &at,
                        format!("row has {} entries, expected {}", row.probs.len(), self.vocab_size),
                    ));
                    continue;
                }
                if let Some(p) = row.probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
                    out.push(Violation::new(&at, format!("invalid probability {p}")));
                    continue;
                }
                let sum: f64 = row.probs.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(Violation::new(&at, format!("row sums to {sum}")));
                }
            }
        }
        out
    }

    /// Stored rows as `(source, context, probs)`, sorted for stable output.
    pub fn rows(&self) -> Vec<(SourceId, &[TokenId], &[f64])> {
        let mut out = Vec::new();
        for (src, table) in self.tables.iter().enumerate() {
            let mut rows: Vec<_> = table
                .iter()
                .map(|(c, r)| (SourceId(src), c.as_slice(), r.probs.as_slice()))
                .collect();
            rows.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then(a.1.cmp(b.1)));
            out.extend(rows);
        }
        out
    }

    /// Number of complete sequences (including forced-EOS ones) in the space.
    pub fn space_size(&self) -> u128 {
        let branching = (self.vocab_size as u128).saturating_sub(1);
        let mut total: u128 = 0;
        let mut level: u128 = 1;
        for _ in 0..=self.max_len {
            total = total.saturating_add(level);
            level = level.saturating_mul(branching);
        }
        total
    }
}

pub fn validate_model(model: &CondModel) -> Vec<Violation> {
    model.validate()
}

/// Seeded random model with a single source named `s0`.
pub fn random_model(
    seed: u64,
    vocab_size: usize,
    order: Order,
    max_len: usize,
    eos_floor: f64,
) -> CondModel {
    let params = RandomScenarioParams {
        vocab_size,
        order,
        max_len,
        eos_floor,
        sources: 1,
        peakiness: 1.0,
    };
    random_scenario(seed, &params).model
}

#[derive(Debug, Clone)]
pub struct RandomScenarioParams {
    pub vocab_size: usize,
    pub order: Order,
    pub max_len: usize,
    /// Lower bound on `P(EOS | context)` for every context.
    pub eos_floor: f64,
    pub sources: usize,
    /// Exponent applied to the Dirichlet(1) draws; values above 1 give
    /// spikier rows.
    pub peakiness: f64,
}

impl Default for RandomScenarioParams {
    fn default() -> Self {
        Self {
            vocab_size: 4,
            order: Order::Window(1),
            max_len: 5,
            eos_floor: 0.1,
            sources: 1,
            peakiness: 1.0,
        }
    }
}

/// Seeded random scenario: vocabulary `</s> t1 .. t{V-1}`, one table per
/// source covering every reachable context, and a random reference per source.
pub fn random_scenario(seed: u64, params: &RandomScenarioParams) -> Scenario {
    assert!(params.vocab_size >= 2, "vocab_size must be at least 2");
    assert!(params.max_len >= 1, "max_len must be at least 1");
    assert!(
        params.eos_floor > 0.0 && params.eos_floor < 1.0,
        "eos_floor must lie in (0, 1)"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = params.vocab_size;
    let tokens: Vec<String> = std::iter::once("</s>".to_string())
        .chain((1..v).map(|i| format!("t{i}")))
        .collect();
    let vocab = Vocab::new(tokens, "</s>").expect("generated vocabulary is valid");
    let eos = vocab.eos();
    let names: Vec<String> = (0..params.sources).map(|i| format!("s{i}")).collect();
    let mut model = CondModel::new(v, eos, params.order, params.max_len, names.clone());

    let contexts = all_contexts(v, eos, params.order.max_context(params.max_len));
    for src in 0..params.sources {
        for ctx in &contexts {
            let mut w: Vec<f64> = (0..v)
                .map(|_| {
                    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    (-u.ln()).powf(params.peakiness)
                })
                .collect();
            let sum: f64 = w.iter().sum();
            for x in &mut w {
                *x = *x / sum * (1.0 - params.eos_floor);
            }
            w[eos as usize] += params.eos_floor;
            model.insert_row(SourceId(src), ctx.clone(), w);
        }
    }

    let mut references = BTreeMap::new();
    for name in &names {
        let len = rng.random_range(1..=params.max_len);
        // eos is id 0, so 1..v covers every content token
        let reference: Vec<TokenId> = (0..len)
            .map(|_| rng.random_range(1..v as TokenId))
            .collect();
        references.insert(name.clone(), reference);
    }
    let sources = names
        .iter()
        .map(|id| Source {
            id: id.clone(),
            text: format!("random source {id}"),
        })
        .collect();
    Scenario {
        vocab,
        model,
        sources,
        references,
    }
}

fn all_contexts(vocab_size: usize, eos: TokenId, max_len: usize) -> Vec<Vec<TokenId>> {
    let symbols: Vec<TokenId> = (0..vocab_size as TokenId).filter(|&t| t != eos).collect();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * symbols.len());
        for ctx in &frontier {
            for &s in &symbols {
                let mut c = ctx.clone();
                c.push(s);
                next.push(c);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub id: String,
    pub text: String,
}

/// Vocabulary, model, sources and references: the unit every command runs on.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub vocab: Vocab,
    pub model: CondModel,
    pub sources: Vec<Source>,
    pub references: BTreeMap<String, Vec<TokenId>>,
}

impl Scenario {
    pub fn reference(&self, source: &str) -> Option<&[TokenId]> {
        self.references.get(source).map(Vec::as_slice)
    }

    pub fn to_document(&self) -> ScenarioDoc {
        let rows = self
            .model
            .rows()
            .into_iter()
            .map(|(src, ctx, probs)| RowDoc {
                source: self.model.sources()[src.0].clone(),
                context: self.vocab.decode(ctx).into_iter().map(String::from).collect(),
                probs: probs.to_vec(),
            })
            .collect();
        ScenarioDoc {
            vocab: VocabDoc {
                tokens: self.vocab.tokens().to_vec(),
                eos: self.vocab.token(self.vocab.eos()).unwrap_or_default().to_string(),
            },
            model: ModelDoc {
                order: match self.model.order() {
                    Order::Window(n) => OrderDoc::Window(n),
                    Order::Full => OrderDoc::Named("full".into()),
                },
                max_len: self.model.max_len(),
                backoff: "uniform".into(),
                rows,
            },
            sources: self.sources.clone(),
            references: self
                .references
                .iter()
                .map(|(k, v)| {
                    let toks = self.vocab.decode(v).into_iter().map(String::from).collect();
                    (k.clone(), toks)
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub vocab: VocabDoc,
    pub model: ModelDoc,
    pub sources: Vec<Source>,
    #[serde(default)]
    pub references: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabDoc {
    pub tokens: Vec<String>,
    pub eos: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub order: OrderDoc,
    pub max_len: usize,
    #[serde(default = "default_backoff")]
    pub backoff: String,
    #[serde(default)]
    pub rows: Vec<RowDoc>,
}

fn default_backoff() -> String {
    "uniform".into()
}

/// `"order": 2` or `"order": "full"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderDoc {
    Window(usize),
    Named(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowDoc {
    pub source: String,
    #[serde(default)]
    pub context: Vec<String>,
    pub probs: Vec<f64>,
}

/// Parses and validates a scenario document.
pub fn load_scenario(bytes: &[u8]) -> Result<Scenario> {
    let doc: ScenarioDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedScenario(e.to_string()))?;
    Scenario::from_document(doc)
}

impl Scenario {
    pub fn from_document(doc: ScenarioDoc) -> Result<Self> {
        let vocab = Vocab::new(doc.vocab.tokens, &doc.vocab.eos)?;
        let mut violations = Vec::new();

        let order = match doc.model.order {
            OrderDoc::Window(n) => Order::Window(n),
            OrderDoc::Named(ref s) if s == "full" => Order::Full,
            OrderDoc::Named(s) => {
                return Err(Error::MalformedScenario(format!("unknown order {s:?}")));
            }
        };
        if doc.model.backoff != "uniform" {
            violations.push(Violation::new(
                "model",
                format!("unsupported backoff {:?}", doc.model.backoff),
            ));
        }
        if doc.model.max_len < 1 {
            violations.push(Violation::new("model", "max_len must be at least 1"));
        }

        let mut seen = HashSet::new();
        for s in &doc.sources {
            if s.id.is_empty() {
                violations.push(Violation::new("sources", "empty source id"));
            }
            if !seen.insert(s.id.as_str()) {
                violations.push(Violation::new("sources", format!("duplicate id {:?}", s.id)));
            }
        }

        let mut model = CondModel::new(
            vocab.size(),
            vocab.eos(),
            order,
            doc.model.max_len,
            doc.sources.iter().map(|s| s.id.clone()),
        );
        let mut seen_rows = HashSet::new();
        for row in doc.model.rows {
            let at = format!("source {}, context {:?}", row.source, row.context);
            let Ok(src) = model.source(&row.source) else {
                violations.push(Violation::new(&at, "row for unknown source"));
                continue;
            };
            let context = match vocab.encode(&row.context) {
                Ok(c) => c,
                Err(e) => {
                    violations.push(Violation::new(&at, e.to_string()));
                    continue;
                }
            };
            if !seen_rows.insert((src, context.clone())) {
                violations.push(Violation::new(&at, "duplicate row"));
                continue;
            }
            let mut probs = row.probs;
            let sum: f64 = probs.iter().sum();
            if sum.is_finite() && (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                if (sum - 1.0).abs() <= RENORMALIZE_TOLERANCE {
                    for p in &mut probs {
                        *p /= sum;
                    }
                } else {
                    violations.push(Violation::new(&at, format!("row sums to {sum}")));
                    continue;
                }
            }
            model.insert_row(src, context, probs);
        }

        let mut references = BTreeMap::new();
        for (id, toks) in doc.references {
            let at = format!("reference {id}");
            if !seen.contains(id.as_str()) {
                violations.push(Violation::new(&at, "reference for unknown source"));
                continue;
            }
            match vocab.encode(&toks) {
                Ok(ids) => {
                    if ids.contains(&vocab.eos()) {
                        violations.push(Violation::new(&at, "reference contains EOS"));
                    } else if ids.is_empty() {
                        violations.push(Violation::new(&at, "empty reference"));
                    } else {
                        references.insert(id, ids);
                    }
                }
                Err(e) => violations.push(Violation::new(&at, e.to_string())),
            }
        }

        violations.extend(model.validate());
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        Ok(Scenario {
            vocab,
            model,
            sources: doc.sources,
            references,
        })
    }
}
