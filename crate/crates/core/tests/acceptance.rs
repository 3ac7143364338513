//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! status if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use multicode::channel_sim::{default_guard, run_session};
use multicode::codebook::{BookSpec, LibraryParams};
use multicode::decoder::{decode_stream, DecoderConfig};
use multicode::exponents::{capacity, channel_mi, random_coding_exponent, random_coding_exponent_gallager};
use multicode::harness::lemmas::{
    expurgation_suite, js_suite, packing_suite, second_order_suite, type_class_suite, CheckStatus, LemmaCheck,
};
use multicode::harness::*;
use multicode::rng::derive;
use multicode::types::{binary_entropy, entropy};
use multicode::{ChannelMatrix, Distribution, Result};
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn uniform_book(l: usize, rate: f64) -> BookSpec {
    BookSpec::new(l, vec![(l - l / 2) as u64, (l / 2) as u64], rate)
}

fn single_book_library(l: usize, rate: f64, seed: u64) -> LibrarySource {
    LibrarySource::Params {
        params: LibraryParams {
            alphabet: 2,
            ratio_bound: 1.0,
            length_bound: l,
            books: vec![uniform_book(l, rate)],
        },
        seed,
        r_min_override: None,
        codeword_budget: None,
    }
}

fn suite_outcome(checks: &[LemmaCheck]) -> Result<Outcome> {
    let bad: Vec<String> = checks
        .iter()
        .filter(|c| matches!(c.status, CheckStatus::Fail | CheckStatus::Skipped))
        .map(|c| format!("{} [{:?}: {}]", c.name, c.status, c.detail))
        .collect();
    let passed = checks.iter().filter(|c| c.status == CheckStatus::Pass).count();
    if bad.is_empty() {
        outcome(true, format!("{passed} checks passed"))
    } else {
        outcome(false, format!("{passed} passed; failing: {}", bad.join("; ")))
    }
}

fn exponent_cross_validation() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut zero_ok = true;
    for c in 0..20u64 {
        let mut r = derive(SEED, &[1, c]);
        let nx = r.gen_range(2..=4);
        let ny = r.gen_range(2..=4);
        let w = ChannelMatrix::random(nx, ny, &mut r)?;
        let p: Vec<f64> = (0..nx).map(|_| r.gen::<f64>() + 0.05).collect();
        let s: f64 = p.iter().sum();
        let p = Distribution::new(p.iter().map(|v| v / s).collect())?;
        let i = channel_mi(&p, &w)?;
        for frac in [0.2, 0.5, 0.8, 1.0, 1.3] {
            let rate = frac * i;
            let direct = random_coding_exponent(rate, &p, &w, 1e-10)?.value;
            let dual = random_coding_exponent_gallager(rate, &p, &w, 1e-10)?.value;
            worst_gap = worst_gap.max((direct - dual).abs());
            zero_ok &= if rate >= i { direct.abs() <= 1e-6 } else { direct > 1e-6 };
        }
    }
    let (fast, t) = within(Duration::from_secs(60), start);
    outcome(
        worst_gap < 1e-4 && zero_ok && fast,
        format!("100 (channel, rate) pairs, max |direct − dual| = {worst_gap:.2e}, zero iff R ≥ I: {zero_ok}, {t}"),
    )
}

fn closed_forms() -> Result<Outcome> {
    let mut worst_cap = 0.0f64;
    for eps in [0.05, 0.1, 0.3] {
        let c = capacity(&ChannelMatrix::bsc(eps)?, 1e-12)?;
        worst_cap = worst_cap.max((c.value - (1.0 - binary_entropy(eps))).abs());
    }
    let mut worst_id = 0.0f64;
    let mut r = derive(SEED, &[2]);
    for k in 2..=6 {
        for _ in 0..20 {
            let p: Vec<f64> = (0..k).map(|_| r.gen::<f64>()).collect();
            let s: f64 = p.iter().sum();
            let p = Distribution::new(p.iter().map(|v| v / s).collect())?;
            let i = channel_mi(&p, &ChannelMatrix::identity(k)?)?;
            worst_id = worst_id.max((i - entropy(&p)).abs());
        }
    }
    outcome(
        worst_cap <= 1e-8 && worst_id <= 1e-10,
        format!("BSC capacity error {worst_cap:.2e}, identity I − H error {worst_id:.2e}"),
    )
}

fn type_machinery() -> Result<Outcome> {
    let cfg = lemmas::LemmaConfig {
        seed: SEED,
        ..Default::default()
    };
    let mut checks = type_class_suite(&cfg);
    checks.extend(second_order_suite(&cfg));
    checks.extend(js_suite(&cfg)?);
    suite_outcome(&checks)
}

fn expurgation() -> Result<Outcome> {
    let cfg = lemmas::LemmaConfig {
        seed: SEED,
        ..Default::default()
    };
    suite_outcome(&expurgation_suite(&cfg)?)
}

fn noiseless_end_to_end() -> Result<Outcome> {
    let start = Instant::now();
    let params = LibraryParams {
        alphabet: 2,
        ratio_bound: 0.75,
        length_bound: 64,
        books: vec![uniform_book(48, 0.2), uniform_book(64, 0.2)],
    };
    let source = LibrarySource::Params {
        params,
        seed: SEED,
        r_min_override: None,
        codeword_budget: None,
    };
    let mut cfg = ExperimentConfig::new(
        ChannelSpec::Identity { size: 2 },
        vec![source],
        ScheduleSpec::RoundRobin { length: 1000 },
        1,
        SEED,
    );
    cfg.eta = Some(0.05);
    let libs = prepare_libraries(&cfg)?;
    let lib = &libs[0];
    let distinct = lib.books.iter().all(|b| {
        let mut w: Vec<&[u8]> = b.codewords().collect();
        w.sort();
        w.dedup();
        w.len() == b.len()
    });
    let report = estimate_with_libraries(&cfg, &libs)?;
    let again = estimate_with_libraries(&cfg, &libs)?;
    // decoder output itself is reproducible too
    let sched = cfg.schedule.schedule(lib.m())?;
    let dcfg = DecoderConfig::new(0.05, DecoderConfig::DEFAULT_TIE_TOLERANCE)?;
    let w = ChannelMatrix::identity(2)?;
    let a = run_session(lib, &sched, &w, SEED, 0, default_guard(lib))?;
    let b = run_session(lib, &sched, &w, SEED, 0, default_guard(lib))?;
    let out = decode_stream(lib, &a.output, &dcfg);
    let deterministic = report == again && a == b && out == decode_stream(lib, &b.output, &dcfg);
    let errors: u64 = report.books.iter().map(|b| b.error_rate.count).sum();
    let erasures = a
        .measured()
        .flat_map(|j| a.message_span(lib, j))
        .filter(|&t| out.tokens[t].is_erasure())
        .count();
    let shifted: u64 = report.books.iter().map(|b| b.shifted_true_decodes).sum();
    let measured: u64 = report.books.iter().map(|b| b.measured).sum();
    let (fast, t) = within(Duration::from_secs(30), start);
    outcome(
        distinct && deterministic && errors == 0 && erasures == 0 && shifted == 0 && measured == 1000 && fast,
        format!(
            "{measured} messages, {errors} errors, {erasures} erased, distinct codewords: {distinct}, deterministic: {deterministic}, {t}"
        ),
    )
}

fn verdict_outcome(verdicts: &[Verdict], extra: &str) -> Result<Outcome> {
    let pass = !verdicts.is_empty() && verdicts.iter().all(|v| v.status == Status::Pass);
    let text: Vec<String> = verdicts
        .iter()
        .map(|v| format!("{} {:?} (measured {:.4}, bound {:.4}; {})", v.check, v.status, v.measured, v.bound, v.detail))
        .collect();
    outcome(pass, format!("{}{extra}", text.join("; ")))
}

fn error_exponent_trend() -> Result<Outcome> {
    let start = Instant::now();
    let cfg = ExperimentConfig::new(
        ChannelSpec::Bsc { epsilon: 0.05 },
        [32, 64, 128].iter().map(|&l| single_book_library(l, 0.2, SEED)).collect(),
        ScheduleSpec::RoundRobin { length: 1000 },
        100,
        SEED,
    );
    let report = estimate_error_rates(&cfg)?;
    let verdicts = compare_to_bound(&report, cfg.slack, cfg.erasure_target)?;
    let (fast, t) = within(Duration::from_secs(600), start);
    let mut o = verdict_outcome(&verdicts, &format!("; {t}"))?;
    o.pass &= fast && report.books.iter().all(|b| b.measured >= 100_000);
    Ok(o)
}

fn asynchronous_multi_codebook() -> Result<Outcome> {
    let params = LibraryParams {
        alphabet: 2,
        ratio_bound: 0.75,
        length_bound: 64,
        books: vec![uniform_book(48, 0.2), uniform_book(64, 0.2)],
    };
    let mut cfg = ExperimentConfig::new(
        ChannelSpec::Bsc { epsilon: 0.05 },
        vec![LibrarySource::Params {
            params,
            seed: SEED,
            r_min_override: None,
            codeword_budget: None,
        }],
        ScheduleSpec::RoundRobin { length: 1000 },
        400,
        SEED,
    );
    cfg.eta = Some(0.01);
    let report = estimate_error_rates(&cfg)?;
    let verdicts: Vec<Verdict> = compare_to_bound(&report, cfg.slack, cfg.erasure_target)?
        .into_iter()
        .filter(|v| v.check.starts_with("exponent"))
        .collect();
    let shifted: u64 = report.books.iter().map(|b| b.shifted_true_decodes).sum();
    let counts: Vec<String> = report
        .books
        .iter()
        .map(|b| format!("l={}: {}/{} errors", b.length, b.error_rate.count, b.measured))
        .collect();
    let mut o = verdict_outcome(&verdicts, &format!("; {}; shifted true decodes {shifted}", counts.join(", ")))?;
    o.pass &= shifted == 0;
    Ok(o)
}

fn erasure_regime() -> Result<Outcome> {
    let cfg = ExperimentConfig::new(
        ChannelSpec::Bsc { epsilon: 0.3 },
        [64, 128].iter().map(|&l| single_book_library(l, 0.8, SEED)).collect(),
        ScheduleSpec::RoundRobin { length: 200 },
        50,
        SEED,
    );
    let report = estimate_error_rates(&cfg)?;
    verdict_outcome(&compare_to_bound(&report, cfg.slack, cfg.erasure_target)?, "")
}

fn packing_statistic() -> Result<Outcome> {
    let cfg = lemmas::LemmaConfig {
        seed: SEED,
        ..Default::default()
    };
    let checks = packing_suite(&cfg)?;
    let mut o = suite_outcome(&checks)?;
    let values: Vec<String> = checks
        .iter()
        .filter(|c| c.status == CheckStatus::Info)
        .map(|c| format!("{} = {:.4}", c.name, c.slack))
        .collect();
    o.detail = format!("{}; {}", o.detail, values.join(", "));
    Ok(o)
}

fn channel_aware_library() -> Result<Outcome> {
    let cfg = CorollaryConfig {
        kinds: vec![KindSpec { length: 128, rate: 0.05 }, KindSpec { length: 20, rate: 0.75 }],
        channel: ChannelSpec::Bsc { epsilon: 0.05 },
        ratio_bound: 0.15,
        schedule: ScheduleSpec::RoundRobin { length: 100 },
        trials: 10,
        seed: SEED,
        guard: None,
        eta: None,
        gamma: None,
        codeword_budget: None,
    };
    let r = corollary1_workflow(&cfg)?;
    let a = &r.kinds[0];
    let b = &r.kinds[1];
    outcome(
        a.rate < r.capacity && b.rate >= r.capacity && a.correct.estimate >= 0.99 && b.declared_erasure.estimate >= 0.99,
        format!(
            "C = {:.4}; kind A (l={}, R={}) correct {}/{} = {:.4}; kind B (l={}, R={}) declared {}/{} = {:.4}",
            r.capacity,
            a.length,
            a.rate,
            a.correct.count,
            a.measured,
            a.correct.estimate,
            b.length,
            b.rate,
            b.declared_erasure.count,
            b.measured,
            b.declared_erasure.estimate
        ),
    )
}

fn main() -> ExitCode {
    init_threads();
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("exponent cross-validation", exponent_cross_validation),
        ("closed forms", closed_forms),
        ("type machinery", type_machinery),
        ("expurgation", expurgation),
        ("noiseless end-to-end", noiseless_end_to_end),
        ("error-exponent trend", error_exponent_trend),
        ("asynchronous multi-codebook", asynchronous_multi_codebook),
        ("erasure regime", erasure_regime),
        ("packing statistic", packing_statistic),
        ("channel-aware extended library", channel_aware_library),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
