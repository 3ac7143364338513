//! Constant-composition codebook libraries.
//!
//! A library holds M codebooks; book `i` has length `l^i`, type `P^i`, rate
//! `R^i`, and `N^i = ⌊2^{l^i R^i}⌋` codewords drawn uniformly from the
//! γ-independent part of the type class.

mod expurgation;
mod packing;

pub use expurgation::{
    expurgation_fraction_exact, is_gamma_independent, sample_expurgated,
    sample_uniform_type_class, Expurgation, ExactFraction,
};
pub use packing::{
    admissible_indices, library_score, packing_bound_exponent, packing_census,
    packing_statistic, PackingIndex,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{self, domain as tag};
use crate::types::{check_symbols, Distribution, Symbol};

pub const LIBRARY_FORMAT: &str = "multicode-library";
pub const LIBRARY_VERSION: u32 = 1;

/// `⌊2^{l R}⌋`. A relative slack of 1e-12 keeps exact powers of two exact.
pub fn codebook_size(length: usize, rate: f64) -> u128 {
    let v = (length as f64 * rate).exp2();
    if !v.is_finite() || v >= u128::MAX as f64 {
        return u128::MAX;
    }
    (v * (1.0 + 1e-12)).floor() as u128
}

/// `γ_n = (log₂ n)^{-1/2}`.
pub fn default_gamma(n: usize) -> f64 {
    let l = (n as f64).log2();
    if l <= 0.0 {
        f64::INFINITY
    } else {
        l.powf(-0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BookSpec {
    pub length: usize,
    /// Symbol counts of the book's type; they sum to `length`.
    pub composition: Vec<u64>,
    /// Bits per symbol.
    pub rate: f64,
}

impl BookSpec {
    pub fn new(length: usize, composition: Vec<u64>, rate: f64) -> Self {
        Self {
            length,
            composition,
            rate,
        }
    }

    /// A book whose type is the `length`-type nearest to `probs`.
    pub fn rounded(length: usize, probs: &[f64], rate: f64) -> Result<Self> {
        let p = Distribution::round_to_type(probs, length as u64)?;
        Ok(Self::new(length, p.counts().unwrap().to_vec(), rate))
    }

    pub fn type_(&self) -> Distribution {
        Distribution::from_counts(self.composition.clone()).expect("validated composition")
    }

    pub fn size(&self) -> u128 {
        codebook_size(self.length, self.rate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryParams {
    pub alphabet: usize,
    /// `D`: every length lies in `[D·n, n]`.
    pub ratio_bound: f64,
    /// `n`.
    pub length_bound: usize,
    pub books: Vec<BookSpec>,
}

impl LibraryParams {
    pub fn validate(&self) -> Result<()> {
        if self.alphabet == 0 || self.alphabet > crate::types::MAX_ALPHABET {
            return domain(format!("alphabet size {}", self.alphabet));
        }
        if !(self.ratio_bound > 0.0 && self.ratio_bound <= 1.0) {
            return domain(format!("ratio bound {} outside (0,1]", self.ratio_bound));
        }
        if self.books.is_empty() {
            return domain("library without codebooks");
        }
        let lo = self.ratio_bound * self.length_bound as f64;
        for (i, b) in self.books.iter().enumerate() {
            if (b.length as f64) < lo - 1e-9 || b.length > self.length_bound {
                return domain(format!(
                    "book {i}: length {} outside [D n, n] = [{lo}, {}]",
                    b.length, self.length_bound
                ));
            }
            if b.composition.len() != self.alphabet
                || b.composition.iter().sum::<u64>() != b.length as u64
            {
                return domain(format!("book {i}: composition is not a {}-type", b.length));
            }
            if !(b.rate >= 0.0 && b.rate.is_finite()) {
                return domain(format!("book {i}: rate {}", b.rate));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.books.len()
    }

    pub fn max_length(&self) -> usize {
        self.books.iter().map(|b| b.length).max().unwrap_or(0)
    }

    pub fn total_codewords(&self) -> u128 {
        self.books.iter().map(|b| b.size()).fold(0u128, |a, b| a.saturating_add(b))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub spec: BookSpec,
    symbols: Vec<Symbol>,
}

impl Codebook {
    pub fn from_codewords(spec: BookSpec, codewords: &[Vec<Symbol>]) -> Result<Self> {
        let mut symbols = Vec::with_capacity(codewords.len() * spec.length);
        for (b, c) in codewords.iter().enumerate() {
            if c.len() != spec.length {
                return domain(format!("codeword {b} has length {}, book has {}", c.len(), spec.length));
            }
            symbols.extend_from_slice(c);
        }
        Ok(Self { spec, symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len() / self.spec.length
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn length(&self) -> usize {
        self.spec.length
    }

    pub fn rate(&self) -> f64 {
        self.spec.rate
    }

    pub fn codeword(&self, b: usize) -> &[Symbol] {
        &self.symbols[b * self.spec.length..(b + 1) * self.spec.length]
    }

    pub fn codewords(&self) -> impl Iterator<Item = &[Symbol]> {
        self.symbols.chunks(self.spec.length)
    }
}

/// Options for [`build_library`].
#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Defaults to `(log₂ n)^{-1/2}`.
    pub gamma: Option<f64>,
    pub r_min_override: Option<usize>,
    pub max_attempts: u64,
    /// Hard cap on the total number of codewords.
    pub codeword_budget: u128,
    /// Resample until the library score is at most `threshold`.
    pub score: Option<ScoreAcceptance>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            gamma: None,
            r_min_override: None,
            max_attempts: 100_000,
            codeword_budget: 1 << 22,
            score: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScoreAcceptance {
    pub threshold: f64,
    pub retries: u32,
    /// Tuple budget for the exhaustive score computation.
    pub budget: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodebookLibrary {
    pub params: LibraryParams,
    pub expurgation: Expurgation,
    pub seed: u64,
    /// Resampling round that produced the library (0 without score acceptance).
    pub round: u32,
    pub score: Option<f64>,
    pub books: Vec<Codebook>,
}

impl CodebookLibrary {
    /// Wraps explicit codewords (hand-built test libraries, loaded files). Every
    /// codeword must have its book's length and type.
    pub fn from_codewords(
        params: LibraryParams,
        expurgation: Expurgation,
        books: Vec<Vec<Vec<Symbol>>>,
    ) -> Result<Self> {
        params.validate()?;
        if books.len() != params.m() {
            return domain(format!("{} codeword lists for {} books", books.len(), params.m()));
        }
        let mut out = Vec::with_capacity(books.len());
        for (i, (spec, words)) in params.books.iter().zip(&books).enumerate() {
            if words.is_empty() {
                return domain(format!("book {i} has no codewords"));
            }
            for w in words {
                check_symbols(w, params.alphabet)?;
                let mut c = vec![0u64; params.alphabet];
                w.iter().for_each(|&s| c[s as usize] += 1);
                if c != spec.composition {
                    return domain(format!("book {i}: codeword {w:?} does not have the book's type"));
                }
            }
            out.push(Codebook::from_codewords(spec.clone(), words)?);
        }
        Ok(Self {
            params,
            expurgation,
            seed: 0,
            round: 0,
            score: None,
            books: out,
        })
    }

    pub fn m(&self) -> usize {
        self.books.len()
    }

    pub fn book(&self, h: usize) -> &Codebook {
        &self.books[h]
    }

    pub fn alphabet(&self) -> usize {
        self.params.alphabet
    }

    pub fn max_length(&self) -> usize {
        self.params.max_length()
    }

    pub fn to_document(&self) -> LibraryDocument {
        LibraryDocument {
            format: LIBRARY_FORMAT.into(),
            version: LIBRARY_VERSION,
            params: self.params.clone(),
            gamma: self.expurgation.gamma,
            r_min_override: self.expurgation.r_min_override,
            seed: self.seed,
            round: self.round,
            score: self.score,
            codewords: self
                .books
                .iter()
                .map(|b| b.codewords().map(|c| c.to_vec()).collect())
                .collect(),
        }
    }

    pub fn from_document(doc: LibraryDocument) -> Result<Self> {
        if doc.format != LIBRARY_FORMAT || doc.version != LIBRARY_VERSION {
            return Err(Error::Config(format!(
                "unsupported library document {} v{}",
                doc.format, doc.version
            )));
        }
        let mut lib = Self::from_codewords(
            doc.params,
            Expurgation::new(doc.gamma, doc.r_min_override),
            doc.codewords,
        )?;
        lib.seed = doc.seed;
        lib.round = doc.round;
        lib.score = doc.score;
        Ok(lib)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Versioned on-disk form of a library.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LibraryDocument {
    pub format: String,
    pub version: u32,
    pub params: LibraryParams,
    /// `null` encodes γ = ∞ (no expurgation).
    #[serde(with = "crate::serde_float")]
    pub gamma: f64,
    pub r_min_override: Option<usize>,
    pub seed: u64,
    pub round: u32,
    pub score: Option<f64>,
    pub codewords: Vec<Vec<Vec<Symbol>>>,
}

fn sample_round(
    params: &LibraryParams,
    exp: &Expurgation,
    opts: &BuildOptions,
    seed: u64,
    round: u32,
) -> Result<Vec<Codebook>> {
    params
        .books
        .iter()
        .enumerate()
        .map(|(h, spec)| {
            let n = spec.size() as usize;
            let words: Result<Vec<Vec<Symbol>>> = (0..n)
                .into_par_iter()
                .map(|b| {
                    let mut r = rng::derive(seed, &[tag::CODEWORD, round as u64, h as u64, b as u64]);
                    sample_expurgated(&spec.composition, exp, &mut r, opts.max_attempts)
                })
                .collect();
            Codebook::from_codewords(spec.clone(), &words?)
        })
        .collect()
}

/// Draws every codeword independently (per-codeword streams keyed by
/// `(seed, round, book, index)`), optionally resampling until the library
/// score is acceptable.
pub fn build_library(params: &LibraryParams, opts: &BuildOptions, seed: u64) -> Result<CodebookLibrary> {
    params.validate()?;
    let total = params.total_codewords();
    if total > opts.codeword_budget {
        return Err(Error::Budget {
            what: "codewords in library".into(),
            needed: total,
            budget: opts.codeword_budget,
        });
    }
    let exp = Expurgation::new(
        opts.gamma.unwrap_or_else(|| default_gamma(params.length_bound)),
        opts.r_min_override,
    );
    let rounds = opts.score.as_ref().map_or(1, |s| s.retries.max(1));
    let mut last_score = None;
    for round in 0..rounds {
        let books = sample_round(params, &exp, opts, seed, round)?;
        let mut lib = CodebookLibrary {
            params: params.clone(),
            expurgation: exp.clone(),
            seed,
            round,
            score: None,
            books,
        };
        let Some(acc) = &opts.score else {
            return Ok(lib);
        };
        let s = library_score(&lib, acc.budget)?;
        lib.score = Some(s);
        if s <= acc.threshold {
            return Ok(lib);
        }
        last_score = Some(s);
    }
    Err(Error::Numeric(format!(
        "no library with score below threshold in {rounds} rounds (last score {})",
        last_score.unwrap_or(f64::NAN)
    )))
}
