//! `hyprank` command line.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 budget.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use hyprank::harness::{
    beam_curse_track, beam_rank_positions, evaluate_decoded, exact_search, sampling_eval, search_error_table,
    top_region_eval,
};
use hyprank::metrics::{random_krg_baseline, random_krg_exhaustive, EXHAUSTIVE_BASELINE_MAX_K};
use hyprank::model::{random_scenario, RandomScenarioParams};
use hyprank::quality::{QualityFn, QualityKind};
use hyprank::results::{BaselineResult, Payload, ResultsDocument, RunManifest, SourceDecode};
use hyprank::search::{
    ancestral_sample, beam_search, brute_force, mbr_decode, min_heap_beam_search, MbrUtility, DEFAULT_NODE_BUDGET,
};
use hyprank::{load_scenario, Error, Order, Scenario, SearchConfig};

const BUDGET_ENV: &str = "HYPRANK_BUDGET";

#[derive(Parser)]
#[command(name = "hyprank", version, about = "Exact top-k decoding and hypothesis-space ranking metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode one or all sources with a chosen decoder.
    Decode(DecodeArgs),
    /// Corpus kRG / kQRG over the exact top region or over samples.
    Evaluate(EvaluateArgs),
    /// Beam and heap-beam search error rates against the exact mode.
    SearchErrors(SearchErrorsArgs),
    /// Edit-distance ranks of the exact top-k, with a decile histogram.
    RankViz(RankVizArgs),
    /// Positions of beam outputs inside the exact top-k list.
    BeamRanks(BeamRanksArgs),
    /// Quality of the top beam output as the beam grows.
    BeamCurse(BeamCurseArgs),
    /// Expected kRG of a random ordering.
    RandomBaseline(RandomBaselineArgs),
    /// Write a seeded random scenario.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Common {
    /// Write the results document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the timestamp out of the manifest.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct QualityArgs {
    #[arg(long, value_enum, default_value_t = QualityArg::EditSim)]
    quality: QualityArg,
    #[arg(long, default_value_t = 6)]
    chrf_n: usize,
    #[arg(long, default_value_t = 2.0)]
    chrf_beta: f64,
    #[arg(long, default_value_t = 0.1)]
    bleu_eps: f64,
}

impl QualityArgs {
    fn build(&self) -> QualityFn {
        let kind = match self.quality {
            QualityArg::Edit => QualityKind::EditNeg,
            QualityArg::EditSim => QualityKind::EditSim,
            QualityArg::Chrf => QualityKind::Chrf,
            QualityArg::Bleu => QualityKind::SentenceBleu,
        };
        QualityFn {
            kind,
            chrf_order: self.chrf_n,
            chrf_beta: self.chrf_beta,
            bleu_eps: self.bleu_eps,
        }
    }

    fn record(&self, config: &mut Map<String, Value>) {
        let q = self.build();
        config.insert("quality".into(), json!(q.kind.name()));
        match q.kind {
            QualityKind::Chrf => {
                config.insert("chrf_n".into(), json!(q.chrf_order));
                config.insert("chrf_beta".into(), json!(q.chrf_beta));
            }
            QualityKind::SentenceBleu => {
                config.insert("bleu_eps".into(), json!(q.bleu_eps));
            }
            _ => {}
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QualityArg {
    Edit,
    EditSim,
    Chrf,
    Bleu,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    Beam,
    HeapBeam,
    Exact,
    Sample,
    Brute,
    Mbr,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Beam => "beam",
            MethodArg::HeapBeam => "heap-beam",
            MethodArg::Exact => "exact",
            MethodArg::Sample => "sample",
            MethodArg::Brute => "brute",
            MethodArg::Mbr => "mbr",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityArg {
    Edit,
    Chrf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Source id; all sources when omitted.
    #[arg(long)]
    source: Option<String>,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    beam: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Length-normalization exponent for final ranking.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Utility for `--method mbr`.
    #[arg(long, value_enum, default_value_t = UtilityArg::Chrf)]
    utility: UtilityArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EvalMode {
    TopRegion,
    Sampling,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::TopRegion, conflicts_with = "from_decode")]
    mode: EvalMode,
    /// Evaluate the hypotheses of a `decode` results document instead of
    /// searching.
    #[arg(long)]
    from_decode: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    beam: usize,
    #[arg(long)]
    budget: Option<u64>,
    #[command(flatten)]
    quality: QualityArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SearchErrorsArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![5, 10])]
    beams: Vec<usize>,
    #[arg(long)]
    budget: Option<u64>,
    /// Also write the rate table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RankVizArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    beam: usize,
    #[arg(long)]
    budget: Option<u64>,
    /// Also write the (decile, count) histogram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    quality: QualityArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BeamRanksArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10])]
    beams: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    budget: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BeamCurseArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Ascending beam sizes, at least two.
    #[arg(long, value_delimiter = ',', required = true)]
    beams: Vec<usize>,
    /// Also write the (net_change, count) histogram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    quality: QualityArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RandomBaselineArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    perms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Average over all k! orderings instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    vocab: usize,
    /// Context length, or `full`.
    #[arg(long, default_value = "1", value_parser = parse_order)]
    order: Order,
    #[arg(long, default_value_t = 5)]
    max_len: usize,
    #[arg(long, default_value_t = 0.1)]
    eos_floor: f64,
    #[arg(long, default_value_t = 10)]
    sources: usize,
    #[arg(long, default_value_t = 1.0)]
    peakiness: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_order(s: &str) -> Result<Order, String> {
    if s == "full" {
        return Ok(Order::Full);
    }
    s.parse::<usize>()
        .map(Order::Window)
        .map_err(|_| format!("expected a context length or `full`, got {s:?}"))
}

enum Failure {
    Usage(String),
    Data(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Budget(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        if e.is_budget() {
            Failure::Budget(msg)
        } else if matches!(e, Error::InvalidConfig(_)) {
            Failure::Usage(msg)
        } else {
            Failure::Data(msg)
        }
    }
}

type CmdResult<T> = Result<T, Failure>;

fn read_file(path: &Path) -> CmdResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult<()> {
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> CmdResult<Scenario> {
    Ok(load_scenario(&read_file(path)?)?)
}

fn resolve_budget(flag: Option<u64>) -> CmdResult<u64> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{BUDGET_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
    }
}

fn manifest(command: &str, scenario: Option<&Path>, config: Map<String, Value>, common: &Common) -> RunManifest {
    let timestamp = (!common.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    RunManifest {
        command: command.into(),
        scenario: scenario.map(|p| p.display().to_string()),
        config,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp,
    }
}

fn emit(doc: &ResultsDocument, common: &Common) -> CmdResult<()> {
    let text = doc.to_json();
    match &common.out {
        Some(path) => write_file(path, &text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("stdout: {e}"))),
    }
}

fn write_csv(path: &Path, header: [&str; 2], rows: impl IntoIterator<Item = (String, String)>) -> CmdResult<()> {
    let fail = |e: csv::Error| Failure::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    for (a, b) in rows {
        w.write_record([a, b]).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn search_config(beam: usize, k: usize, budget: u64) -> SearchConfig {
    SearchConfig {
        beam_width: beam,
        k,
        budget,
        ..Default::default()
    }
}

fn cmd_decode(a: DecodeArgs) -> CmdResult<()> {
    let scenario = load(&a.scenario)?;
    let budget = resolve_budget(a.budget)?;
    let cfg = SearchConfig {
        alpha: a.alpha,
        samples: a.samples,
        seed: a.seed,
        ..search_config(a.beam, a.k, budget)
    };
    cfg.validate()?;
    let names: Vec<String> = match &a.source {
        Some(s) => {
            scenario.model.source(s)?;
            vec![s.clone()]
        }
        None => scenario.sources.iter().map(|s| s.id.clone()).collect(),
    };
    let model = &scenario.model;
    let mut outputs = Vec::with_capacity(names.len());
    for name in &names {
        let src = model.source(name)?;
        let (hyps, nodes) = match a.method {
            MethodArg::Beam => {
                let out = beam_search(model, src, a.beam, a.k, a.alpha)?;
                (out.hypotheses, out.stats.nodes_expanded)
            }
            MethodArg::HeapBeam => {
                let out = min_heap_beam_search(model, src, a.beam, a.k, a.alpha)?;
                (out.hypotheses, out.stats.nodes_expanded)
            }
            MethodArg::Exact => {
                let out = exact_search(&scenario, src, a.k, &cfg)?;
                (out.hypotheses, out.stats.nodes_expanded)
            }
            MethodArg::Brute => (brute_force(model, src, Some(a.k))?, 0),
            MethodArg::Sample => {
                let seed = hyprank::harness::source_seed(a.seed, name);
                (ancestral_sample(model, src, a.samples, seed)?, 0)
            }
            MethodArg::Mbr => {
                let seed = hyprank::harness::source_seed(a.seed, name);
                let samples = ancestral_sample(model, src, a.samples, seed)?;
                let utility = match a.utility {
                    UtilityArg::Edit => MbrUtility::NegEdit,
                    UtilityArg::Chrf => MbrUtility::Chrf { order: 6, beta: 2.0 },
                };
                let best = mbr_decode(&samples, |c, r| utility.utility(&scenario.vocab, c, r));
                (best.into_iter().collect(), 0)
            }
        };
        let alpha = matches!(a.method, MethodArg::Beam | MethodArg::HeapBeam).then_some(a.alpha).flatten();
        outputs.push(SourceDecode::new(name, a.method.name(), &hyps, &scenario.vocab, alpha, nodes));
    }

    let mut config = Map::new();
    config.insert("method".into(), json!(a.method.name()));
    config.insert("source".into(), json!(a.source));
    config.insert("k".into(), json!(a.k));
    config.insert("beam".into(), json!(a.beam));
    config.insert("samples".into(), json!(a.samples));
    config.insert("seed".into(), json!(a.seed));
    config.insert("alpha".into(), json!(a.alpha));
    config.insert("budget".into(), json!(budget));
    if a.method == MethodArg::Mbr {
        let u = match a.utility {
            UtilityArg::Edit => "edit",
            UtilityArg::Chrf => "chrf",
        };
        config.insert("utility".into(), json!(u));
    }
    let doc = ResultsDocument {
        manifest: manifest("decode", Some(&a.scenario), config, &a.common),
        payload: Payload::Decode { outputs },
    };
    emit(&doc, &a.common)
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult<()> {
    let scenario = load(&a.scenario)?;
    let budget = resolve_budget(a.budget)?;
    let quality = a.quality.build();
    let mut config = Map::new();
    let summary = if let Some(path) = &a.from_decode {
        let doc = ResultsDocument::from_json(&read_file(path)?)?;
        let Payload::Decode { outputs } = doc.payload else {
            return Err(Failure::Data(format!("{}: not a decode results document", path.display())));
        };
        let decoded = outputs
            .iter()
            .map(|o| Ok((o.source.clone(), o.to_hypotheses(&scenario.vocab)?)))
            .collect::<hyprank::Result<Vec<_>>>()?;
        config.insert("from_decode".into(), json!(path.display().to_string()));
        evaluate_decoded(&scenario, decoded, &quality)?
    } else {
        config.insert(
            "mode".into(),
            json!(match a.mode {
                EvalMode::TopRegion => "top-region",
                EvalMode::Sampling => "sampling",
            }),
        );
        match a.mode {
            EvalMode::TopRegion => {
                config.insert("k".into(), json!(a.k));
                config.insert("beam".into(), json!(a.beam));
                config.insert("budget".into(), json!(budget));
                let cfg = search_config(a.beam, a.k, budget);
                cfg.validate()?;
                top_region_eval(&scenario, a.k, &quality, &cfg)?
            }
            EvalMode::Sampling => {
                config.insert("samples".into(), json!(a.samples));
                config.insert("seed".into(), json!(a.seed));
                sampling_eval(&scenario, a.samples, a.seed, &quality)?
            }
        }
    };
    a.quality.record(&mut config);
    let doc = ResultsDocument {
        manifest: manifest("evaluate", Some(&a.scenario), config, &a.common),
        payload: Payload::Corpus(summary),
    };
    emit(&doc, &a.common)
}

fn check_widths(widths: &[usize]) -> CmdResult<()> {
    if widths.is_empty() || widths.contains(&0) {
        return Err(Failure::Usage("beam sizes must be positive".into()));
    }
    Ok(())
}

fn cmd_search_errors(a: SearchErrorsArgs) -> CmdResult<()> {
    check_widths(&a.beams)?;
    let scenario = load(&a.scenario)?;
    let budget = resolve_budget(a.budget)?;
    let cfg = search_config(1, 1, budget);
    let table = search_error_table(&scenario, &a.beams, &cfg)?;
    if let Some(path) = &a.csv {
        let fail = |e: csv::Error| Failure::Data(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(fail)?;
        w.write_record([
            "beam_width",
            "beam",
            "heap_beam",
            "exact",
            "nodes_beam",
            "nodes_heap_beam",
            "nodes_exact",
        ])
        .map_err(fail)?;
        for r in &table.rows {
            w.write_record([
                r.beam_width.to_string(),
                r.beam.to_string(),
                r.heap_beam.to_string(),
                r.exact.to_string(),
                r.nodes.beam.to_string(),
                r.nodes.heap_beam.to_string(),
                r.nodes.exact.to_string(),
            ])
            .map_err(fail)?;
        }
        w.flush().map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }
    let mut config = Map::new();
    config.insert("beams".into(), json!(a.beams));
    config.insert("budget".into(), json!(budget));
    let doc = ResultsDocument {
        manifest: manifest("search-errors", Some(&a.scenario), config, &a.common),
        payload: Payload::SearchErrors(table),
    };
    emit(&doc, &a.common)
}

fn cmd_rank_viz(a: RankVizArgs) -> CmdResult<()> {
    let scenario = load(&a.scenario)?;
    let budget = resolve_budget(a.budget)?;
    let cfg = search_config(a.beam, a.k, budget);
    cfg.validate()?;
    let quality = a.quality.build();
    let summary = top_region_eval(&scenario, a.k, &quality, &cfg)?;
    if let Some(path) = &a.csv {
        let hist = summary.decile_histogram.unwrap_or_default();
        write_csv(
            path,
            ["decile", "count"],
            hist.iter().enumerate().map(|(d, c)| (d.to_string(), c.to_string())),
        )?;
    }
    let mut config = Map::new();
    config.insert("k".into(), json!(a.k));
    config.insert("beam".into(), json!(a.beam));
    config.insert("budget".into(), json!(budget));
    a.quality.record(&mut config);
    let doc = ResultsDocument {
        manifest: manifest("rank-viz", Some(&a.scenario), config, &a.common),
        payload: Payload::Corpus(summary),
    };
    emit(&doc, &a.common)
}

fn cmd_beam_ranks(a: BeamRanksArgs) -> CmdResult<()> {
    check_widths(&a.beams)?;
    let scenario = load(&a.scenario)?;
    let budget = resolve_budget(a.budget)?;
    let cfg = search_config(a.beams.iter().copied().max().unwrap_or(1), a.k, budget);
    cfg.validate()?;
    let ranks = beam_rank_positions(&scenario, &a.beams, a.k, &cfg)?;
    let mut config = Map::new();
    config.insert("beams".into(), json!(a.beams));
    config.insert("k".into(), json!(a.k));
    config.insert("budget".into(), json!(budget));
    let doc = ResultsDocument {
        manifest: manifest("beam-ranks", Some(&a.scenario), config, &a.common),
        payload: Payload::BeamRanks { ranks },
    };
    emit(&doc, &a.common)
}

fn cmd_beam_curse(a: BeamCurseArgs) -> CmdResult<()> {
    if a.beams.len() < 2 {
        return Err(Failure::Usage("need ≥ 2 beam sizes".into()));
    }
    let scenario = load(&a.scenario)?;
    let quality = a.quality.build();
    let report = beam_curse_track(&scenario, &a.beams, &quality)?;
    if let Some(path) = &a.csv {
        write_csv(
            path,
            ["net_change", "count"],
            report.histogram.iter().map(|b| (b.net_change.to_string(), b.count.to_string())),
        )?;
    }
    let mut config = Map::new();
    config.insert("beams".into(), json!(a.beams));
    a.quality.record(&mut config);
    let doc = ResultsDocument {
        manifest: manifest("beam-curse", Some(&a.scenario), config, &a.common),
        payload: Payload::BeamCurse(report),
    };
    emit(&doc, &a.common)
}

fn cmd_random_baseline(a: RandomBaselineArgs) -> CmdResult<()> {
    let result = if a.exhaustive {
        if a.k > EXHAUSTIVE_BASELINE_MAX_K {
            return Err(Failure::Usage(format!(
                "--exhaustive supports k <= {EXHAUSTIVE_BASELINE_MAX_K}"
            )));
        }
        BaselineResult {
            k: a.k,
            exhaustive: true,
            permutations: (1..=a.k as u64).product(),
            seed: None,
            mean_krg: random_krg_exhaustive(a.k)?,
        }
    } else {
        BaselineResult {
            k: a.k,
            exhaustive: false,
            permutations: a.perms as u64,
            seed: Some(a.seed),
            mean_krg: random_krg_baseline(a.k, a.perms, a.seed)?,
        }
    };
    let mut config = Map::new();
    config.insert("k".into(), json!(a.k));
    config.insert("exhaustive".into(), json!(a.exhaustive));
    if !a.exhaustive {
        config.insert("perms".into(), json!(a.perms));
        config.insert("seed".into(), json!(a.seed));
    }
    let doc = ResultsDocument {
        manifest: manifest("random-baseline", None, config, &a.common),
        payload: Payload::RandomBaseline(result),
    };
    emit(&doc, &a.common)
}

fn cmd_generate(a: GenerateArgs) -> CmdResult<()> {
    if a.vocab < 2 || a.max_len < 1 || !(a.eos_floor > 0.0 && a.eos_floor < 1.0) || !(a.peakiness > 0.0) {
        return Err(Failure::Usage(
            "need --vocab >= 2, --max-len >= 1, --eos-floor in (0, 1) and --peakiness > 0".into(),
        ));
    }
    let params = RandomScenarioParams {
        vocab_size: a.vocab,
        order: a.order,
        max_len: a.max_len,
        eos_floor: a.eos_floor,
        sources: a.sources,
        peakiness: a.peakiness,
    };
    let text = random_scenario(a.seed, &params).to_json();
    match &a.out {
        Some(path) => write_file(path, &text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decode(a) => cmd_decode(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::SearchErrors(a) => cmd_search_errors(a),
        Command::RankViz(a) => cmd_rank_viz(a),
        Command::BeamRanks(a) => cmd_beam_ranks(a),
        Command::BeamCurse(a) => cmd_beam_curse(a),
        Command::RandomBaseline(a) => cmd_random_baseline(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hyprank: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
