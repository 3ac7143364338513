//! The channel-aware workflow: an extended library with a positive-rate and a
//! rate-0 book for every (message kind, type) pair. The sender, knowing the
//! channel, uses the type with the largest exponent, or announces the kind
//! alone through a rate-0 book when no type has a positive exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ChannelSpec, ScheduleSpec};
use super::stats::Proportion;
use crate::channel::ChannelMatrix;
use crate::channel_sim::{default_guard, run_session, Schedule};
use crate::codebook::{build_library, BookSpec, BuildOptions, CodebookLibrary, LibraryParams};
use crate::decoder::{Decoder, DecoderConfig, Token};
use crate::error::{Error, Result};
use crate::exponents::{capacity, default_eta, optimal_type_for_rate};
use crate::types::{enumerate_types, Distribution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindSpec {
    pub length: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryConfig {
    pub kinds: Vec<KindSpec>,
    pub channel: ChannelSpec,
    pub ratio_bound: f64,
    /// Schedule over message kinds.
    pub schedule: ScheduleSpec,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub guard: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub codeword_budget: Option<u64>,
}

/// What an extended-library book stands for: kind `i`, type `P`, and whether
/// it carries the kind's rate (`s = 1`) or only the kind (`s = 0`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedBook {
    pub kind: usize,
    pub composition: Vec<u64>,
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedLibrary {
    pub library: CodebookLibrary,
    pub books: Vec<ExtendedBook>,
}

impl ExtendedLibrary {
    /// Books `(i, P, s)` for every kind, every `l^i`-type `P` and `s ∈ {1, 0}`,
    /// with rate `R^i·s`.
    pub fn build(kinds: &[KindSpec], alphabet: usize, ratio_bound: f64, opts: &BuildOptions, seed: u64) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Config("no message kinds".into()));
        }
        let mut specs = Vec::new();
        let mut books = Vec::new();
        for (i, k) in kinds.iter().enumerate() {
            for comp in enumerate_types(k.length as u64, alphabet) {
                for positive in [true, false] {
                    let rate = if positive { k.rate } else { 0.0 };
                    specs.push(BookSpec::new(k.length, comp.clone(), rate));
                    books.push(ExtendedBook {
                        kind: i,
                        composition: comp.clone(),
                        positive,
                    });
                }
            }
        }
        let params = LibraryParams {
            alphabet,
            ratio_bound,
            length_bound: kinds.iter().map(|k| k.length).max().unwrap_or(0),
            books: specs,
        };
        Ok(Self {
            library: build_library(&params, opts, seed)?,
            books,
        })
    }

    pub fn find(&self, kind: usize, composition: &[u64], positive: bool) -> Option<usize> {
        self.books
            .iter()
            .position(|b| b.kind == kind && b.composition == composition && b.positive == positive)
    }

    /// Rate-0 books map to their kind.
    pub fn kind_map(&self) -> Vec<Option<usize>> {
        self.books.iter().map(|b| (!b.positive).then_some(b.kind)).collect()
    }
}

/// The sender's choice for one kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenderChoice {
    pub kind: usize,
    pub book: usize,
    pub composition: Vec<u64>,
    /// `max_P E_r(R^i, P, W)` over the `l^i`-types.
    pub exponent: f64,
    pub positive: bool,
}

/// Largest-exponent type when that exponent is positive; otherwise the rate-0
/// book of the type nearest the capacity-achieving input.
pub fn sender_choices(ext: &ExtendedLibrary, kinds: &[KindSpec], w: &ChannelMatrix) -> Result<Vec<SenderChoice>> {
    let cap = capacity(w, 1e-10)?;
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let opt = optimal_type_for_rate(k.length, k.rate, w, 1e-9, 1 << 12)?;
            let (comp, positive) = if opt.rounded_value > 0.0 {
                (opt.rounded.counts().expect("rounded types are exact").to_vec(), true)
            } else {
                let p = Distribution::round_to_type(cap.input.probs(), k.length as u64)?;
                (p.counts().expect("rounded types are exact").to_vec(), false)
            };
            let book = ext
                .find(i, &comp, positive)
                .ok_or_else(|| Error::Numeric(format!("kind {i}: no book for type {comp:?}")))?;
            Ok(SenderChoice {
                kind: i,
                book,
                composition: comp,
                exponent: opt.rounded_value,
                positive,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: usize,
    pub length: usize,
    pub rate: f64,
    pub choice: SenderChoice,
    pub measured: u64,
    /// The sent `(h, b)` decoded at the message's first instant.
    pub correct: Proportion,
    /// An erasure declaring this kind at the first instant, spanning the message.
    pub declared_erasure: Proportion,
    /// Any erasure declaring a different kind inside the message.
    pub wrong_kind: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub capacity: f64,
    pub eta: f64,
    pub books: usize,
    pub codewords: u64,
    pub kinds: Vec<KindReport>,
}

impl CorollaryReport {
    /// Per kind: whether its target frequency reaches `min` (correct decodes
    /// for kinds sent at a positive rate, kind declarations otherwise).
    pub fn meets(&self, min: f64) -> Vec<bool> {
        self.kinds
            .iter()
            .map(|k| {
                if k.choice.positive {
                    k.correct.estimate >= min
                } else {
                    k.declared_erasure.estimate >= min
                }
            })
            .collect()
    }
}

#[derive(Default, Clone)]
struct KindTally {
    measured: u64,
    correct: u64,
    declared: u64,
    wrong_kind: u64,
}

/// Builds the extended library, transmits the kind schedule through the
/// sender's choices, decodes with rate-0 books reported as kind-declaring
/// erasures, and tallies per kind.
pub fn corollary1_workflow(cfg: &CorollaryConfig) -> Result<CorollaryReport> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let w = cfg.channel.matrix()?;
    let mut opts = BuildOptions {
        gamma: cfg.gamma,
        ..BuildOptions::default()
    };
    if let Some(b) = cfg.codeword_budget {
        opts.codeword_budget = b as u128;
    }
    let ext = ExtendedLibrary::build(&cfg.kinds, w.inputs(), cfg.ratio_bound, &opts, cfg.seed)?;
    let choices = sender_choices(&ext, &cfg.kinds, &w)?;
    let lib = &ext.library;
    let kinds = cfg.schedule.schedule(cfg.kinds.len())?;
    let schedule = Schedule::new(kinds.indices.iter().map(|&i| choices[i].book).collect(), lib.m())?;
    let guard = cfg.guard.unwrap_or_else(|| default_guard(lib));
    let eta = cfg.eta.unwrap_or_else(|| default_eta(lib.params.length_bound));
    let dec = Decoder::new(lib, DecoderConfig::new(eta, DecoderConfig::DEFAULT_TIE_TOLERANCE)?);
    let kind_of_book = ext.kind_map();
    let kind_of_sent: Vec<usize> = ext.books.iter().map(|b| b.kind).collect();

    let sessions: Vec<Result<Vec<KindTally>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|s| {
            let trace = run_session(lib, &schedule, &w, cfg.seed, s, guard)?;
            let mut out = dec.decode(&trace.output);
            out.map_kinds(&kind_of_book);
            let mut t = vec![KindTally::default(); cfg.kinds.len()];
            for j in trace.measured() {
                let h = trace.schedule.indices[j];
                let kind = kind_of_sent[h];
                let span = trace.message_span(lib, j);
                let toks = &out.tokens[span];
                let tail_spaces = toks[1..].iter().all(|&k| k == Token::Space);
                let k = &mut t[kind];
                k.measured += 1;
                k.correct += (toks[0]
                    == Token::Decoded {
                        book: h,
                        message: trace.messages[j],
                    }
                    && tail_spaces) as u64;
                k.declared += (matches!(toks[0], Token::KindErasure { kind: d, .. } if d == kind) && tail_spaces) as u64;
                k.wrong_kind += toks
                    .iter()
                    .filter(|x| matches!(x, Token::KindErasure { kind: d, .. } if *d != kind))
                    .count() as u64;
            }
            Ok(t)
        })
        .collect();
    let mut total = vec![KindTally::default(); cfg.kinds.len()];
    for s in sessions {
        for (a, b) in total.iter_mut().zip(s?) {
            a.measured += b.measured;
            a.correct += b.correct;
            a.declared += b.declared;
            a.wrong_kind += b.wrong_kind;
        }
    }
    Ok(CorollaryReport {
        capacity: capacity(&w, 1e-10)?.value,
        eta,
        books: lib.m(),
        codewords: lib.books.iter().map(|b| b.len() as u64).sum(),
        kinds: total
            .into_iter()
            .enumerate()
            .map(|(i, t)| KindReport {
                kind: i,
                length: cfg.kinds[i].length,
                rate: cfg.kinds[i].rate,
                choice: choices[i].clone(),
                measured: t.measured,
                correct: Proportion::new(t.correct, t.measured),
                declared_erasure: Proportion::new(t.declared, t.measured),
                wrong_kind: t.wrong_kind,
            })
            .collect(),
    })
}
