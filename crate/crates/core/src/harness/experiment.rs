//! Monte Carlo estimation of per-codebook error and erasure rates, and the
//! comparison of those estimates against the exponent bounds.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::{empirical_exponent, Proportion};
use crate::channel::ChannelMatrix;
use crate::channel_sim::{default_guard, run_session, Schedule};
use crate::codebook::CodebookLibrary;
use crate::decoder::{classify_error_event, score_messages, BookTally, Decoder, DecoderConfig, ErrorClass, MessageOutcome, Token};
use crate::error::{Error, Result};
use crate::exponents::{capacity, channel_mi, default_eta, random_coding_exponent, threshold_exponent};

pub const REPORT_FORMAT: &str = "multicode-report";
pub const REPORT_VERSION: u32 = 1;

const EXPONENT_TOL: f64 = 1e-9;

/// Everything measured for one codebook of one library.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BookReport {
    pub library: usize,
    pub book: usize,
    pub length: usize,
    pub rate: f64,
    pub composition: Vec<u64>,
    pub codewords: usize,
    pub eta: f64,
    /// `I(P, W)` for the book's type.
    pub mutual_information: f64,
    pub random_coding_exponent: f64,
    #[serde(with = "crate::serde_float")]
    pub threshold_exponent: f64,
    pub measured: u64,
    pub correct: u64,
    pub erasure_runs: u64,
    pub edf_events: u64,
    /// `1 − correct` frequency.
    pub error_rate: Proportion,
    pub erasure_rate: Proportion,
    pub edf_rate: Proportion,
    /// `−log₂(Êrr)/l` from the point estimate and from the CI upper bound.
    #[serde(with = "crate::serde_float")]
    pub empirical_exponent: f64,
    #[serde(with = "crate::serde_float")]
    pub empirical_exponent_ci: f64,
    /// Decodes that name the message actually sent inside its span but not at
    /// its first instant; a correct decoder never produces one.
    pub shifted_true_decodes: u64,
    /// Multiset of error-event classes (empty unless classification is on).
    pub error_classes: BTreeMap<ErrorClass, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub trials: u64,
    pub channel: Vec<Vec<f64>>,
    pub capacity: f64,
    /// Sessions are finite stand-ins for the paper's doubly infinite stream,
    /// padded with `guard` unmeasured messages per side.
    pub finite_surrogate: bool,
    pub guards: Vec<usize>,
    pub books: Vec<BookReport>,
}

impl ExperimentReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// One plot-ready row per book.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "library", "book", "length", "rate", "codewords", "eta", "mutual_information", "e_r", "e_th", "measured",
            "correct", "errors", "err_hat", "err_lo", "err_hi", "erasure_runs", "erasure_hat", "edf_events", "edf_hat",
            "exponent_hat", "exponent_ci",
        ])?;
        for b in &self.books {
            w.write_record(&[
                b.library.to_string(),
                b.book.to_string(),
                b.length.to_string(),
                b.rate.to_string(),
                b.codewords.to_string(),
                b.eta.to_string(),
                b.mutual_information.to_string(),
                b.random_coding_exponent.to_string(),
                b.threshold_exponent.to_string(),
                b.measured.to_string(),
                b.correct.to_string(),
                b.error_rate.count.to_string(),
                b.error_rate.estimate.to_string(),
                b.error_rate.ci.lo.to_string(),
                b.error_rate.ci.hi.to_string(),
                b.erasure_runs.to_string(),
                b.erasure_rate.estimate.to_string(),
                b.edf_events.to_string(),
                b.edf_rate.estimate.to_string(),
                b.empirical_exponent.to_string(),
                b.empirical_exponent_ci.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads or samples every library of the config, in order. Nothing is
/// simulated until all of them exist.
pub fn prepare_libraries(cfg: &ExperimentConfig) -> Result<Vec<CodebookLibrary>> {
    cfg.validate()?;
    let libs = cfg
        .libraries
        .iter()
        .map(|s| s.load(cfg.gamma))
        .collect::<Result<Vec<_>>>()?;
    let w = cfg.channel.matrix()?;
    for (i, lib) in libs.iter().enumerate() {
        if lib.alphabet() != w.inputs() {
            return Err(Error::Config(format!(
                "library {i} has alphabet {}, channel has {} inputs",
                lib.alphabet(),
                w.inputs()
            )));
        }
        cfg.schedule.schedule(lib.m())?;
    }
    Ok(libs)
}

#[derive(Default)]
struct SessionTally {
    books: Vec<BookTally>,
    shifted: Vec<u64>,
    classes: Vec<BTreeMap<ErrorClass, u64>>,
    audit_failures: u64,
}

impl SessionTally {
    fn new(m: usize) -> Self {
        Self {
            books: vec![BookTally::default(); m],
            shifted: vec![0; m],
            classes: vec![BTreeMap::new(); m],
            audit_failures: 0,
        }
    }

    fn merge(&mut self, o: &SessionTally) {
        for (a, b) in self.books.iter_mut().zip(&o.books) {
            a.merge(b);
        }
        for (a, b) in self.shifted.iter_mut().zip(&o.shifted) {
            *a += b;
        }
        for (a, b) in self.classes.iter_mut().zip(&o.classes) {
            for (k, v) in b {
                *a.entry(*k).or_default() += v;
            }
        }
        self.audit_failures += o.audit_failures;
    }
}

/// Runs `trials` sessions of one library and tallies the measured messages.
#[allow(clippy::too_many_arguments)]
fn simulate_library(
    lib: &CodebookLibrary,
    w: &ChannelMatrix,
    schedule: &Schedule,
    dcfg: DecoderConfig,
    trials: u64,
    seed: u64,
    guard: usize,
    classify: bool,
) -> Result<SessionTally> {
    let dec = Decoder::new(lib, dcfg);
    let sessions: Vec<Result<SessionTally>> = (0..trials)
        .into_par_iter()
        .map(|s| {
            let trace = run_session(lib, schedule, w, seed, s, guard)?;
            let out = dec.decode(&trace.output);
            let (scores, books) = score_messages(lib, &trace, &out)?;
            let mut t = SessionTally::new(lib.m());
            t.books = books;
            for sc in &scores {
                // correct ⇒ some non-erasure instant; erasure run ⇔ no such instant
                let consistent = match sc.outcome {
                    MessageOutcome::Correct => sc.edf_event,
                    MessageOutcome::ErasureRun => !sc.edf_event,
                    _ => true,
                };
                t.audit_failures += !consistent as u64;
                let span = trace.message_span(lib, sc.index);
                let sent = Token::Decoded {
                    book: sc.book,
                    message: trace.messages[sc.index],
                };
                t.shifted[sc.book] += out.tokens[span.start + 1..span.end].iter().filter(|&&k| k == sent).count() as u64;
                if classify && sc.outcome != MessageOutcome::Correct {
                    for c in classify_error_event(&dec, &trace, &out, sc.index)? {
                        *t.classes[sc.book].entry(c).or_default() += 1;
                    }
                }
            }
            Ok(t)
        })
        .collect();
    // Fold in session order so the result never depends on scheduling.
    let mut total = SessionTally::new(lib.m());
    for s in sessions {
        total.merge(&s?);
    }
    Ok(total)
}

/// Per-codebook `Êrr`, `Êdf` and erasure-run frequencies with 99% Wilson
/// intervals, next to `E_r`, `E_TH` and `I(P,W)` for each book.
pub fn estimate_error_rates(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let libs = prepare_libraries(cfg)?;
    estimate_with_libraries(cfg, &libs)
}

/// [`estimate_error_rates`] on libraries that are already built.
pub fn estimate_with_libraries(cfg: &ExperimentConfig, libs: &[CodebookLibrary]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let w = cfg.channel.matrix()?;
    let cap = capacity(&w, 1e-10)?;
    let mut books = Vec::new();
    let mut guards = Vec::new();
    for (li, lib) in libs.iter().enumerate() {
        let schedule = cfg.schedule.schedule(lib.m())?;
        let guard = cfg.guard.unwrap_or_else(|| default_guard(lib));
        guards.push(guard);
        let eta = cfg.eta.unwrap_or_else(|| default_eta(lib.params.length_bound));
        let dcfg = DecoderConfig::new(eta, cfg.tie_tolerance.unwrap_or(DecoderConfig::DEFAULT_TIE_TOLERANCE))?;
        let tally = simulate_library(lib, &w, &schedule, dcfg, cfg.trials, cfg.seed, guard, cfg.classify_errors)?;
        if tally.audit_failures > 0 {
            return Err(Error::Numeric(format!(
                "library {li}: {} messages failed the outcome exclusivity audit",
                tally.audit_failures
            )));
        }
        for (h, t) in tally.books.iter().enumerate() {
            let expected = cfg.trials * schedule.indices.iter().filter(|&&k| k == h).count() as u64;
            if t.measured != expected {
                return Err(Error::Numeric(format!(
                    "library {li} book {h}: {} measured messages, expected {expected}",
                    t.measured
                )));
            }
            let book = lib.book(h);
            let p = book.spec.type_();
            let err = Proportion::new(t.errors(), t.measured);
            books.push(BookReport {
                library: li,
                book: h,
                length: book.length(),
                rate: book.rate(),
                composition: book.spec.composition.clone(),
                codewords: book.len(),
                eta,
                mutual_information: channel_mi(&p, &w)?,
                random_coding_exponent: random_coding_exponent(book.rate(), &p, &w, EXPONENT_TOL)?.value,
                threshold_exponent: threshold_exponent(book.rate(), &p, &w, eta, EXPONENT_TOL)?,
                measured: t.measured,
                correct: t.correct,
                erasure_runs: t.erasure_runs,
                edf_events: t.edf_events,
                error_rate: err,
                erasure_rate: Proportion::new(t.erasure_runs, t.measured),
                edf_rate: Proportion::new(t.edf_events, t.measured),
                empirical_exponent: empirical_exponent(err.estimate, book.length()),
                empirical_exponent_ci: empirical_exponent(err.ci.hi, book.length()),
                shifted_true_decodes: tally.shifted[h],
                error_classes: tally.classes[h].clone(),
            });
        }
    }
    Ok(ExperimentReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        seed: cfg.seed,
        trials: cfg.trials,
        channel: w.rows(),
        capacity: cap.value,
        finite_surrogate: true,
        guards,
        books,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The bound is trivially true (`E_r = 0`); nothing to test.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub family: String,
    pub check: String,
    pub status: Status,
    #[serde(with = "crate::serde_float")]
    pub measured: f64,
    #[serde(with = "crate::serde_float")]
    pub bound: f64,
    pub detail: String,
}

impl Verdict {
    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Books with the same rate and normalized type, ordered by length.
fn families(report: &ExperimentReport) -> BTreeMap<String, Vec<&BookReport>> {
    let mut fam: BTreeMap<String, Vec<&BookReport>> = BTreeMap::new();
    for b in &report.books {
        let probs: Vec<String> = b
            .composition
            .iter()
            .map(|&c| format!("{:.9}", c as f64 / b.length as f64))
            .collect();
        fam.entry(format!("R={:.9} P=({})", b.rate, probs.join(",")))
            .or_default()
            .push(b);
    }
    for v in fam.values_mut() {
        v.sort_by_key(|b| b.length);
    }
    fam
}

/// Checks each family against the exponent bound. Below `I(P,W)`: the
/// CI-based empirical exponent at the largest length is at least `E_r − slack`,
/// and `Êrr` decreases with length. At or above `I(P,W)`: the erasure-run
/// frequency is nondecreasing in length and at least `target` at the largest.
pub fn compare_to_bound(report: &ExperimentReport, slack: f64, target: f64) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for (name, books) in families(report) {
        let lengths: Vec<usize> = books.iter().map(|b| b.length).collect();
        let mut distinct = lengths.clone();
        distinct.dedup();
        if distinct.len() < 2 || distinct.len() != lengths.len() {
            return Err(Error::Config(format!(
                "family {name} needs at least two distinct lengths, one book each (has {lengths:?})"
            )));
        }
        let last = books[books.len() - 1];
        if last.rate < last.mutual_information {
            let bound = last.random_coding_exponent - slack;
            let status = if last.random_coding_exponent <= 0.0 {
                Status::Vacuous
            } else if last.empirical_exponent_ci >= bound {
                Status::Pass
            } else {
                Status::Fail
            };
            out.push(Verdict {
                family: name.clone(),
                check: format!("exponent at l={}", last.length),
                status,
                measured: last.empirical_exponent_ci,
                bound,
                detail: format!(
                    "{} errors in {}; CI upper {:.3e}; E_r = {:.6}",
                    last.error_rate.count, last.measured, last.error_rate.ci.hi, last.random_coding_exponent
                ),
            });
            // Strict decrease; when both estimates are zero the CI upper
            // bounds decide, so an unresolved trend is not claimed.
            let decreasing = books.windows(2).all(|p| {
                let (a, b) = (&p[0].error_rate, &p[1].error_rate);
                if a.count == 0 && b.count == 0 {
                    b.ci.hi <= a.ci.hi
                } else {
                    b.estimate < a.estimate
                }
            });
            out.push(Verdict {
                family: name.clone(),
                check: "error rate decreasing in length".into(),
                status: if decreasing { Status::Pass } else { Status::Fail },
                measured: last.error_rate.estimate,
                bound: books[0].error_rate.estimate,
                detail: books
                    .iter()
                    .map(|b| format!("l={}: {:.3e}", b.length, b.error_rate.estimate))
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        } else {
            let monotone = books
                .windows(2)
                .all(|p| p[1].erasure_rate.estimate >= p[0].erasure_rate.estimate);
            let reached = last.erasure_rate.estimate >= target;
            out.push(Verdict {
                family: name.clone(),
                check: format!("erasure runs at l={}", last.length),
                status: if monotone && reached { Status::Pass } else { Status::Fail },
                measured: last.erasure_rate.estimate,
                bound: target,
                detail: books
                    .iter()
                    .map(|b| format!("l={}: {:.4}", b.length, b.erasure_rate.estimate))
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
    }
    Ok(out)
}

pub fn write_verdicts_csv(verdicts: &[Verdict], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["family", "check", "status", "measured", "bound", "detail"])?;
    for v in verdicts {
        w.write_record(&[
            v.family.clone(),
            v.check.clone(),
            format!("{:?}", v.status).to_lowercase(),
            v.measured.to_string(),
            v.bound.to_string(),
            v.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
