//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p hyprank-cli --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use hyprank::harness::search_error_table;
use hyprank::metrics::{
    dcg, edit_count, kqrg, krg, krg_of_orders, rank_below, random_krg_exhaustive, RankedArrays,
};
use hyprank::model::{random_scenario, Order, RandomScenarioParams};
use hyprank::results::{Payload, ResultsDocument};
use hyprank::search::{
    ancestral_sample, beam_search, brute_force, exact_top_k, min_heap_beam_search, Hypothesis,
};
use hyprank::{Scenario, SearchConfig, SourceId, TokenId};
use num_bigint::BigUint;

const SUITE_SIZE: u64 = 200;
const SUITE_TIME_LIMIT: Duration = Duration::from_secs(60);
const TOP_K: usize = 5;
const BEAM_WIDTHS: [usize; 4] = [1, 2, 4, 8];
const EXHAUSTIVE_WIDTH: usize = 128;
const METRIC_TOL: f64 = 1e-5;
const PERFECT_TOL: f64 = 1e-12;
const TV_SAMPLES: usize = 100_000;
const TV_LIMIT: f64 = 0.02;
const PIPELINE_SOURCES: usize = 50;
const PIPELINE_TIME_LIMIT: Duration = Duration::from_secs(300);
const MEAN_TOL: f64 = 1e-9;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn suite_params(seed: u64) -> RandomScenarioParams {
    RandomScenarioParams {
        vocab_size: 3 + (seed % 3) as usize,
        order: Order::Window((seed / 3 % 3) as usize),
        max_len: 4 + (seed / 9 % 3) as usize,
        eos_floor: 0.1,
        sources: 2,
        peakiness: 1.0 + (seed % 2) as f64,
    }
}

fn suite() -> impl Iterator<Item = (u64, Scenario)> {
    (0..SUITE_SIZE).map(|seed| (seed, random_scenario(seed, &suite_params(seed))))
}

fn sources(s: &Scenario) -> impl Iterator<Item = SourceId> {
    (0..s.sources.len()).map(SourceId)
}

fn same(a: &[Hypothesis], b: &[Hypothesis]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.tokens == y.tokens && x.logprob.to_bits() == y.logprob.to_bits())
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for (seed, s) in suite() {
        for src in sources(&s) {
            let exact = exact_top_k(&s.model, src, TOP_K, None).map_err(|e| e.to_string())?;
            let brute = brute_force(&s.model, src, Some(TOP_K)).map_err(|e| e.to_string())?;
            ensure!(same(&exact.hypotheses, &brute), "seed {seed} source {}: exact != brute", src.0);
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < SUITE_TIME_LIMIT, "took {elapsed:?}");
    Ok(format!("{checked} sources, {:.2}s", elapsed.as_secs_f64()))
}

fn heap_dominance() -> Check {
    let mut comparisons = 0;
    for (seed, s) in suite() {
        for src in sources(&s) {
            for b in BEAM_WIDTHS {
                let beam = beam_search(&s.model, src, b, b, None).map_err(|e| e.to_string())?;
                let heap = min_heap_beam_search(&s.model, src, b, b, None).map_err(|e| e.to_string())?;
                ensure!(
                    heap.hypotheses.len() >= beam.hypotheses.len(),
                    "seed {seed} b {b}: heap returned fewer hypotheses"
                );
                for (i, (h, f)) in heap.hypotheses.iter().zip(&beam.hypotheses).enumerate() {
                    ensure!(
                        h.logprob >= f.logprob,
                        "seed {seed} source {} b {b} rank {i}: {} < {}",
                        src.0,
                        h.logprob,
                        f.logprob
                    );
                    comparisons += 1;
                }
            }
        }
    }
    Ok(format!("{comparisons} rank comparisons, 0 violations"))
}

fn search_error_ordering() -> Check {
    let cfg = SearchConfig::default();
    let mut configs = 0;
    let mut worst_gap = 0.0f64;
    for group in 0..27u64 {
        let mut params = suite_params(group);
        params.sources = 8;
        let s = random_scenario(1000 + group, &params);
        let table = search_error_table(&s, &BEAM_WIDTHS, &cfg).map_err(|e| e.to_string())?;
        for row in &table.rows {
            ensure!(row.exact == 0.0, "config {group} b {}: exact rate {}", row.beam_width, row.exact);
            ensure!(
                row.heap_beam <= row.beam,
                "config {group} b {}: heap {} > beam {}",
                row.beam_width,
                row.heap_beam,
                row.beam
            );
            worst_gap = worst_gap.max(row.beam - row.heap_beam);
            configs += 1;
        }
    }
    Ok(format!("{configs} configurations, largest beam-minus-heap gap {worst_gap:.3}"))
}

fn exhaustive_breadth() -> Check {
    let mut n = 0;
    for seed in 0..30u64 {
        let params = RandomScenarioParams {
            vocab_size: 3,
            order: Order::Window((seed % 3) as usize),
            max_len: 4,
            eos_floor: 0.1,
            sources: 1,
            peakiness: 1.0,
        };
        let s = random_scenario(5000 + seed, &params);
        let heap = min_heap_beam_search(&s.model, SourceId(0), EXHAUSTIVE_WIDTH, TOP_K, None)
            .map_err(|e| e.to_string())?;
        let brute = brute_force(&s.model, SourceId(0), Some(TOP_K)).map_err(|e| e.to_string())?;
        ensure!(same(&heap.hypotheses, &brute), "seed {seed}: heap-beam top-5 != brute top-5");
        n += 1;
    }
    Ok(format!("{n} models at b = {EXHAUSTIVE_WIDTH}"))
}

fn hyps_with_logprobs(lps: &[f64]) -> Vec<Hypothesis> {
    lps.iter()
        .enumerate()
        .map(|(i, &lp)| Hypothesis {
            tokens: vec![i as TokenId + 1, 0],
            logprob: lp,
            forced_eos: false,
        })
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn metric_arithmetic() -> Check {
    let perfect = krg_of_orders(&[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4]);
    ensure!((perfect - 1.0).abs() <= PERFECT_TOL, "perfect kRG {perfect}");
    let arrays = RankedArrays::from_qualities(hyps_with_logprobs(&[-1.0, -2.0, -3.0]), vec![0.9, 0.5, 0.1], "q", true)
        .map_err(|e| e.to_string())?;
    ensure!((krg(&arrays) - 1.0).abs() <= PERFECT_TOL, "agreeing arrays kRG {}", krg(&arrays));

    let reversed = krg_of_orders(&[0, 1, 2], &[2, 1, 0]);
    ensure!((reversed - 0.78999).abs() <= METRIC_TOL, "reversed kRG {reversed}");
    let baseline = random_krg_exhaustive(2).map_err(|e| e.to_string())?;
    ensure!((baseline - 0.92985).abs() <= METRIC_TOL, "random baseline {baseline}");
    let hand = RankedArrays::from_qualities(hyps_with_logprobs(&[-2.0, -1.0]), vec![0.8, 0.5], "q", true)
        .map_err(|e| e.to_string())?;
    let hand_kqrg = kqrg(&hand).map_err(|e| e.to_string())?;
    ensure!((hand_kqrg - 0.61605).abs() <= METRIC_TOL, "kQRG hand case {hand_kqrg}");

    let mut perms_checked = 0;
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for k in 1..=5 {
        for _ in 0..20 {
            let q: Vec<f64> = (0..k)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect();
            let mut sorted = q.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let best = dcg(sorted.iter().copied());
            for p in permutations(k) {
                let v = dcg(p.iter().map(|&i| q[i]));
                ensure!(v <= best + 1e-12, "k {k}: permutation {p:?} beats sorted order");
                perms_checked += 1;
            }
        }
        let identity: Vec<usize> = (0..k).collect();
        for p in permutations(k) {
            let v = krg_of_orders(&identity, &p);
            ensure!(v <= 1.0 + 1e-12, "k {k}: kRG {v} > 1 for {p:?}");
            ensure!(p == identity || v < 1.0, "k {k}: kRG 1 for non-identity {p:?}");
        }
    }
    Ok(format!(
        "reversed {reversed:.6}, baseline {baseline:.6}, kQRG {hand_kqrg:.6}, {perms_checked} rearrangements"
    ))
}

fn pascal_binomial(n: i64, r: i64) -> BigUint {
    if n < 0 || r < 0 || r > n {
        return BigUint::from(0u32);
    }
    let mut row = vec![BigUint::from(1u32)];
    for i in 1..=n as usize {
        let mut next = vec![BigUint::from(1u32); i + 1];
        for j in 1..i {
            next[j] = &row[j - 1] + &row[j];
        }
        row = next;
    }
    row[r as usize].clone()
}

fn edit_count_formula() -> Check {
    for t in 1..=10 {
        ensure!(edit_count(0, t, 7) == BigUint::from(1u32), "c(0,{t}) != 1");
    }
    ensure!(edit_count(1, 2, 3) == BigUint::from(15u32), "c(1,2,3) = {}", edit_count(1, 2, 3));
    for (t, v) in [(1usize, 2usize), (3, 3), (5, 10)] {
        let e_max = t + 8;
        let ranks: Vec<BigUint> = (0..=e_max + 1).map(|e| rank_below(e, t, v)).collect();
        ensure!(ranks.windows(2).all(|w| w[0] < w[1]), "rank not monotone for T {t} V {v}");
    }
    let (e, t, v) = (30i64, 20i64, 50u32);
    let mut independent = BigUint::from(0u32);
    for s in 0..=e.min(t) {
        independent += pascal_binomial(t, s) * pascal_binomial(t + e - 2 * s, e - s);
    }
    independent *= BigUint::from(v).pow(e as u32);
    let got = edit_count(e as u64, t as u64, u64::from(v));
    ensure!(got == independent, "c(30,20,50) disagrees with Pascal's triangle");
    Ok(format!("c(30,20,50) has {} bits", got.bits()))
}

fn sampling_consistency() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let params = RandomScenarioParams {
            vocab_size: 3,
            order: Order::Window((seed % 3) as usize),
            max_len: 4,
            eos_floor: 0.1,
            sources: 1,
            peakiness: 1.0,
        };
        let s = random_scenario(7000 + seed, &params);
        let m = &s.model;
        let src = SourceId(0);
        ensure!(m.space_size() <= 50, "space has {} sequences", m.space_size());
        let mut exact = BTreeMap::new();
        for h in brute_force(m, src, None).map_err(|e| e.to_string())? {
            let mut lp = h.logprob;
            if h.forced_eos {
                lp -= m.next_logprobs(src, h.body()).map_err(|e| e.to_string())?[m.eos() as usize];
            }
            exact.insert(h.tokens, lp.exp());
        }
        let mass: f64 = exact.values().sum();
        ensure!((mass - 1.0).abs() < 1e-9, "seed {seed}: exact distribution sums to {mass}");
        let samples = ancestral_sample(m, src, TV_SAMPLES, seed).map_err(|e| e.to_string())?;
        let mut counts: BTreeMap<Vec<TokenId>, usize> = BTreeMap::new();
        for h in &samples {
            *counts.entry(h.tokens.clone()).or_insert(0) += 1;
        }
        let mut tv = 0.0;
        for (seq, p) in &exact {
            let q = counts.get(seq).copied().unwrap_or(0) as f64 / TV_SAMPLES as f64;
            tv += (p - q).abs();
        }
        ensure!(counts.keys().all(|k| exact.contains_key(k)), "seed {seed}: sample outside the space");
        tv /= 2.0;
        ensure!(tv < TV_LIMIT, "seed {seed}: total variation {tv}");
        worst = worst.max(tv);
        let again = ancestral_sample(m, src, TV_SAMPLES, seed).map_err(|e| e.to_string())?;
        let a = serde_json_bytes(&samples);
        let b = serde_json_bytes(&again);
        ensure!(a == b, "seed {seed}: sample lists differ between runs");
    }
    Ok(format!("worst total variation {worst:.4}"))
}

fn serde_json_bytes(h: &[Hypothesis]) -> Vec<u8> {
    serde_json::to_vec(h).expect("hypotheses serialize")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyprank"));
    c.env_remove("HYPRANK_BUDGET");
    c
}

fn run(cmd: &mut Command) -> Result<Output, String> {
    cmd.output().map_err(|e| format!("could not run hyprank: {e}"))
}

fn run_ok(cmd: &mut Command) -> Result<Vec<u8>, String> {
    let out = run(cmd)?;
    if !out.status.success() {
        return Err(format!(
            "hyprank failed ({}): {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn corpus_of(bytes: &[u8]) -> Result<(ResultsDocument, hyprank::harness::CorpusSummary), String> {
    let doc = ResultsDocument::from_json(bytes).map_err(|e| e.to_string())?;
    match doc.payload.clone() {
        Payload::Corpus(c) => Ok((doc, c)),
        _ => Err("expected a corpus document".into()),
    }
}

fn check_mean(summary: &hyprank::harness::CorpusSummary, label: &str) -> Result<(), String> {
    let mut records: Vec<_> = summary.records.iter().collect();
    records.sort_by(|a, b| a.source.cmp(&b.source));
    let n = records.len() as f64;
    let krg_mean = records.iter().map(|r| r.metrics.krg).sum::<f64>() / n;
    let reported = summary.mean_krg.ok_or(format!("{label}: no mean kRG"))?;
    ensure!((krg_mean - reported).abs() <= MEAN_TOL, "{label}: kRG mean {krg_mean} vs {reported}");
    let kqrg_mean = records.iter().map(|r| r.metrics.kqrg.unwrap_or(f64::NAN)).sum::<f64>() / n;
    let reported = summary.mean_kqrg.ok_or(format!("{label}: no mean kQRG"))?;
    ensure!((kqrg_mean - reported).abs() <= MEAN_TOL, "{label}: kQRG mean {kqrg_mean} vs {reported}");
    Ok(())
}

fn default_pipeline(dir: &Path) -> Check {
    let scenario = dir.join("pipeline.json");
    run_ok(bin().args(["generate", "--seed", "2024", "--vocab", "6", "--order", "2", "--max-len", "6"]).args([
        "--sources",
        &PIPELINE_SOURCES.to_string(),
        "--out",
        scenario.to_str().unwrap(),
    ]))?;
    let start = Instant::now();
    let top = run_ok(bin().args(["evaluate", "--scenario", scenario.to_str().unwrap(), "--mode", "top-region"]))?;
    let sampled = run_ok(bin().args(["evaluate", "--scenario", scenario.to_str().unwrap(), "--mode", "sampling"]))?;
    let elapsed = start.elapsed();
    ensure!(elapsed < PIPELINE_TIME_LIMIT, "pipeline took {elapsed:?}");

    let (top_doc, top) = corpus_of(&top)?;
    let (sample_doc, sampled) = corpus_of(&sampled)?;
    ensure!(top_doc.manifest.config.get("k") == Some(&10.into()), "default k is not 10");
    ensure!(
        sample_doc.manifest.config.get("samples") == Some(&200.into()),
        "default samples is not 200"
    );
    ensure!(
        top.records.len() + top.excluded.len() == PIPELINE_SOURCES,
        "top region covered {} sources",
        top.records.len() + top.excluded.len()
    );
    ensure!(top.records.iter().all(|r| r.metrics.k == 10), "top-region sets are not size 10");
    ensure!(sampled.records.len() == PIPELINE_SOURCES, "sampling covered {} sources", sampled.records.len());
    ensure!(
        sampled.records.iter().all(|r| r.metrics.k + r.duplicates == 200),
        "sample sets do not account for 200 draws"
    );
    check_mean(&top, "top-region")?;
    check_mean(&sampled, "sampling")?;
    Ok(format!(
        "{PIPELINE_SOURCES} sources in {:.1}s, top-region kRG {:.4}, sampling kRG {:.4}",
        elapsed.as_secs_f64(),
        top.mean_krg.unwrap_or(f64::NAN),
        sampled.mean_krg.unwrap_or(f64::NAN)
    ))
}

fn metric_bits(c: &hyprank::harness::CorpusSummary) -> Vec<(String, u64, Option<u64>)> {
    let mut v: Vec<_> = c
        .records
        .iter()
        .map(|r| (r.source.clone(), r.metrics.krg.to_bits(), r.metrics.kqrg.map(f64::to_bits)))
        .collect();
    v.sort();
    v
}

fn expect_code(cmd: &mut Command, code: i32, what: &str) -> Result<(), String> {
    let out = run(cmd)?;
    ensure!(
        out.status.code() == Some(code),
        "{what}: expected exit {code}, got {:?} ({})",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr).trim()
    );
    Ok(())
}

fn golden_round_trip(dir: &Path) -> Check {
    let scenario = dir.join("golden.json");
    run_ok(bin().args(["generate", "--seed", "77", "--vocab", "5", "--order", "1", "--max-len", "5"]).args([
        "--sources",
        "12",
        "--out",
        scenario.to_str().unwrap(),
    ]))?;
    let scenario = scenario.to_str().unwrap();
    let decoded = dir.join("decoded.json");
    let decode_args = ["decode", "--scenario", scenario, "--method", "exact", "--k", "10", "--no-timestamp"];
    run_ok(bin().args(decode_args).args(["--out", decoded.to_str().unwrap()]))?;
    let first = std::fs::read(&decoded).map_err(|e| e.to_string())?;
    let second = run_ok(bin().args(decode_args))?;
    ensure!(first == second, "decode is not byte-identical across runs");

    let doc = ResultsDocument::from_json(&first).map_err(|e| e.to_string())?;
    ensure!(doc.to_json().as_bytes() == first.as_slice(), "decode document does not round-trip");
    ensure!(doc.manifest.timestamp.is_none(), "timestamp present under --no-timestamp");

    let eval_args = ["evaluate", "--scenario", scenario, "--quality", "chrf", "--no-timestamp"];
    let from_decode = run_ok(bin().args(eval_args).args(["--from-decode", decoded.to_str().unwrap()]))?;
    let direct = run_ok(bin().args(eval_args).args(["--mode", "top-region", "--k", "10"]))?;
    let (_, a) = corpus_of(&from_decode)?;
    let (_, b) = corpus_of(&direct)?;
    ensure!(!a.records.is_empty(), "no records evaluated");
    ensure!(metric_bits(&a) == metric_bits(&b), "metrics differ between decoded and direct evaluation");
    ensure!(
        a.mean_krg.map(f64::to_bits) == b.mean_krg.map(f64::to_bits)
            && a.mean_kqrg.map(f64::to_bits) == b.mean_kqrg.map(f64::to_bits),
        "corpus means differ"
    );
    ensure!(a.decile_histogram == b.decile_histogram, "decile histograms differ");
    let again = run_ok(bin().args(eval_args).args(["--from-decode", decoded.to_str().unwrap()]))?;
    ensure!(again == from_decode, "evaluate is not byte-identical across runs");

    expect_code(bin().args(["decode", "--scenario", scenario, "--method", "nonsense"]), 2, "bad flag")?;
    expect_code(bin().args(["beam-curse", "--scenario", scenario, "--beams", "5"]), 2, "single beam size")?;
    expect_code(bin().args(["decode", "--scenario", "/nonexistent.json", "--method", "beam"]), 3, "missing scenario")?;
    let broken = dir.join("broken.json");
    std::fs::write(&broken, "{\"vocab\": ").map_err(|e| e.to_string())?;
    expect_code(
        bin().args(["decode", "--scenario", broken.to_str().unwrap(), "--method", "beam"]),
        3,
        "malformed scenario",
    )?;
    expect_code(
        bin().args(["decode", "--scenario", scenario, "--method", "exact", "--k", "50", "--budget", "3"]),
        4,
        "budget flag",
    )?;
    expect_code(
        bin()
            .env("HYPRANK_BUDGET", "3")
            .args(["decode", "--scenario", scenario, "--method", "exact", "--k", "50"]),
        4,
        "budget env",
    )?;
    let big = dir.join("big.json");
    run_ok(bin().args(["generate", "--vocab", "30", "--max-len", "6", "--sources", "1", "--order", "0"]).args([
        "--out",
        big.to_str().unwrap(),
    ]))?;
    expect_code(
        bin().args(["decode", "--scenario", big.to_str().unwrap(), "--method", "brute"]),
        4,
        "oversized oracle space",
    )?;
    Ok(format!("{} sources round-tripped, exit codes 2/3/4 verified", a.records.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("heap dominance", Box::new(heap_dominance)),
        ("search-error ordering", Box::new(search_error_ordering)),
        ("exhaustive-breadth collapse", Box::new(exhaustive_breadth)),
        ("metric arithmetic", Box::new(metric_arithmetic)),
        ("edit-count formula", Box::new(edit_count_formula)),
        ("sampling consistency", Box::new(sampling_consistency)),
        ("default evaluation pipeline", Box::new(|| default_pipeline(dir.path()))),
        ("golden CLI round-trip", Box::new(|| golden_round_trip(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
