//! The two-stage sequential universal decoder and per-message scoring.
//!
//! At instant `t` the decoder looks for the unique `(h,b)` maximizing
//! `l^h·(I(x_b^h ∧ y_t..y_{t+l^h−1}) − R^h)` (stage 1). It accepts that pair
//! only if the normalized metric exceeds η and the maximum strictly beats
//! every window of every book that overlaps `[t, t+l^h̃−1]` from the left
//! (starting in `[t−l^h+1, t−1]`) or starts inside it (stage 2). On accept it
//! emits `(h̃,b̃)` followed by `l^h̃−1` spaces and jumps; otherwise it emits an
//! erasure and moves one instant on.
//!
//! Two accepted windows can never overlap: each would have to strictly beat
//! the other. Whether `t` is accepted therefore depends only on `y` within
//! `2n−2` symbols of `t`, whatever the scan did before.

use serde::{Deserialize, Serialize};

use crate::channel_sim::TransmissionTrace;
use crate::codebook::CodebookLibrary;
use crate::error::{domain, Result};
use crate::types::{klogk, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Threshold on `I − R`, bits per symbol.
    pub eta: f64,
    pub tie_tolerance: f64,
}

impl DecoderConfig {
    pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;

    pub fn new(eta: f64, tie_tolerance: f64) -> Result<Self> {
        if !(eta >= 0.0) || !(tie_tolerance >= 0.0) {
            return domain(format!("decoder needs η ≥ 0 and tolerance ≥ 0, got {eta}, {tie_tolerance}"));
        }
        Ok(Self { eta, tie_tolerance })
    }

    /// `η = 1/log₂ n` for the library's length bound.
    pub fn for_library(lib: &CodebookLibrary) -> Self {
        Self {
            eta: crate::exponents::default_eta(lib.params.length_bound),
            tie_tolerance: Self::DEFAULT_TIE_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    Space,
    Erasure,
    Decoded { book: usize, message: usize },
    /// A decode of a rate-0 book of the extended library: an erasure that
    /// declares the message kind.
    KindErasure { kind: usize, book: usize },
}

impl Token {
    pub fn is_erasure(self) -> bool {
        matches!(self, Token::Erasure | Token::KindErasure { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderOutput {
    pub tokens: Vec<Token>,
}

impl DecoderOutput {
    /// Every decode is followed by exactly `l^h − 1` spaces, and spaces occur nowhere else.
    pub fn validate(&self, lib: &CodebookLibrary) -> Result<()> {
        let mut t = 0;
        while t < self.tokens.len() {
            match self.tokens[t] {
                Token::Decoded { book: h, .. } | Token::KindErasure { book: h, .. } => {
                    if h >= lib.m() {
                        return domain(format!("token at {t} names codebook {h}"));
                    }
                    let l = lib.book(h).length();
                    if t + l > self.tokens.len() || self.tokens[t + 1..t + l].iter().any(|&s| s != Token::Space) {
                        return domain(format!("decode at {t} is not followed by {} spaces", l - 1));
                    }
                    t += l;
                }
                Token::Erasure => t += 1,
                Token::Space => return domain(format!("unattached space at {t}")),
            }
        }
        Ok(())
    }

    /// One token per instant, whitespace separated: `_` space, `?` erasure,
    /// `h:b` decode, `?k/h` erasure declaring kind `k` via book `h`.
    pub fn to_compact(&self) -> String {
        let parts: Vec<String> = self
            .tokens
            .iter()
            .map(|t| match *t {
                Token::Space => "_".into(),
                Token::Erasure => "?".into(),
                Token::Decoded { book, message } => format!("{book}:{message}"),
                Token::KindErasure { kind, book } => format!("?{kind}/{book}"),
            })
            .collect();
        parts.join(" ")
    }

    pub fn from_compact(s: &str) -> Result<Self> {
        let bad = |t: &str| crate::Error::Config(format!("bad token {t:?}"));
        let tokens = s
            .split_whitespace()
            .map(|t| match t {
                "_" => Ok(Token::Space),
                "?" => Ok(Token::Erasure),
                _ if t.starts_with('?') => {
                    let (k, h) = t[1..].split_once('/').ok_or_else(|| bad(t))?;
                    Ok(Token::KindErasure {
                        kind: k.parse().map_err(|_| bad(t))?,
                        book: h.parse().map_err(|_| bad(t))?,
                    })
                }
                _ => {
                    let (h, b) = t.split_once(':').ok_or_else(|| bad(t))?;
                    Ok(Token::Decoded {
                        book: h.parse().map_err(|_| bad(t))?,
                        message: b.parse().map_err(|_| bad(t))?,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tokens })
    }

    /// Rewrites decodes of books mapped to a kind as kind-declaring erasures.
    pub fn map_kinds(&mut self, kinds: &[Option<usize>]) {
        for t in &mut self.tokens {
            if let Token::Decoded { book, .. } = *t {
                if let Some(Some(kind)) = kinds.get(book) {
                    *t = Token::KindErasure { kind: *kind, book };
                }
            }
        }
    }
}

fn output_alphabet(y: &[Symbol]) -> usize {
    y.iter().map(|&c| c as usize + 1).max().unwrap_or(1)
}

/// `l·(I − R)` from a joint count table; `klogk(k) = k log₂ k`.
fn metric_from_counts(n: &[u64], kx: usize, ky: usize, l: usize, lr: f64, k: &dyn Fn(u64) -> f64) -> f64 {
    let mut s = 0.0;
    for &v in n {
        s += k(v);
    }
    for a in 0..kx {
        s -= k(n[a * ky..(a + 1) * ky].iter().sum());
    }
    for c in 0..ky {
        s -= k((0..kx).map(|a| n[a * ky + c]).sum());
    }
    s + k(l as u64) - lr
}

/// `l^h·(Î(x_b^h ∧ y_t..y_{t+l^h−1}) − R^h)`, recounted from scratch.
pub fn window_metric(lib: &CodebookLibrary, h: usize, b: usize, y: &[Symbol], t: usize) -> Result<f64> {
    if h >= lib.m() || b >= lib.book(h).len() {
        return domain(format!("no codeword ({h},{b})"));
    }
    let book = lib.book(h);
    let l = book.length();
    if t + l > y.len() {
        return domain(format!("window [{t}, {}) outside the output of length {}", t + l, y.len()));
    }
    let kx = lib.alphabet();
    let ky = output_alphabet(y);
    let mut n = vec![0u64; kx * ky];
    for (&a, &c) in book.codeword(b).iter().zip(&y[t..t + l]) {
        n[a as usize * ky + c as usize] += 1;
    }
    Ok(metric_from_counts(&n, kx, ky, l, l as f64 * book.rate(), &klogk))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage1 {
    Unique { book: usize, message: usize, metric: f64 },
    Tie,
    /// No window of any book fits at `t`.
    Empty,
}

/// Unique maximizer over all `(h,b)` whose window fits, straight from the definition.
pub fn stage1(lib: &CodebookLibrary, y: &[Symbol], t: usize, cfg: &DecoderConfig) -> Stage1 {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut runner_up = f64::NEG_INFINITY;
    for h in 0..lib.m() {
        if t + lib.book(h).length() > y.len() {
            continue;
        }
        for b in 0..lib.book(h).len() {
            let m = window_metric(lib, h, b, y, t).expect("window fits");
            match best {
                Some((_, _, bm)) if m <= bm => runner_up = runner_up.max(m),
                _ => {
                    if let Some((_, _, bm)) = best {
                        runner_up = runner_up.max(bm);
                    }
                    best = Some((h, b, m));
                }
            }
        }
    }
    match best {
        None => Stage1::Empty,
        Some((_, _, m)) if m - runner_up <= cfg.tie_tolerance => Stage1::Tie,
        Some((book, message, metric)) => Stage1::Unique { book, message, metric },
    }
}

/// Threshold and dominance checks for a stage-1 winner, straight from the definition.
/// Windows that do not fit inside `y` are not candidates.
pub fn stage2(lib: &CodebookLibrary, y: &[Symbol], t: usize, book: usize, metric: f64, cfg: &DecoderConfig) -> bool {
    let lt = lib.book(book).length();
    if metric / lt as f64 <= cfg.eta {
        return false;
    }
    for h in 0..lib.m() {
        let l = lib.book(h).length();
        let before = (t + 1).saturating_sub(l)..t;
        let after = t + 1..t + lt;
        for d in before.chain(after) {
            if d + l > y.len() {
                continue;
            }
            for b in 0..lib.book(h).len() {
                if metric - window_metric(lib, h, b, y, d).expect("window fits") <= cfg.tie_tolerance {
                    return false;
                }
            }
        }
    }
    true
}

/// The sequential scan built directly on [`stage1`] and [`stage2`]. Slow;
/// kept as a reference for the fast decoder.
pub fn decode_stream_reference(lib: &CodebookLibrary, y: &[Symbol], cfg: &DecoderConfig) -> DecoderOutput {
    let mut tokens = vec![Token::Erasure; y.len()];
    let mut t = 0;
    while t < y.len() {
        if let Stage1::Unique { book, message, metric } = stage1(lib, y, t, cfg) {
            if stage2(lib, y, t, book, metric, cfg) {
                tokens[t] = Token::Decoded { book, message };
                let l = lib.book(book).length();
                tokens[t + 1..t + l].iter_mut().for_each(|s| *s = Token::Space);
                t += l;
                continue;
            }
        }
        t += 1;
    }
    DecoderOutput { tokens }
}

pub fn decode_stream(lib: &CodebookLibrary, y: &[Symbol], cfg: &DecoderConfig) -> DecoderOutput {
    Decoder::new(lib, *cfg).decode(y)
}

struct PreparedBook {
    length: usize,
    lr: f64,
    words: usize,
    size: usize,
    /// `[b][a][word]` bit planes.
    planes: Vec<u64>,
    /// `[b][word]` planes of symbol 1, for binary libraries.
    ones_plane: Vec<u64>,
    ones: u64,
}

/// A library preprocessed into bit planes for fast window metrics. Immutable
/// and shareable between threads; each `decode` call keeps its own state.
pub struct Decoder<'a> {
    lib: &'a CodebookLibrary,
    cfg: DecoderConfig,
    books: Vec<PreparedBook>,
    table: Vec<f64>,
    l_max: usize,
}

struct Output {
    len: usize,
    ky: usize,
    /// Per output symbol: packed indicator bits (with a padding word).
    planes: Vec<Vec<u64>>,
    /// Per output symbol: prefix counts.
    prefix: Vec<Vec<u32>>,
}

impl Output {
    fn new(y: &[Symbol], ky: usize) -> Self {
        let words = y.len() / 64 + 2;
        let mut planes = vec![vec![0u64; words]; ky];
        let mut prefix = vec![vec![0u32; y.len() + 1]; ky];
        for (t, &c) in y.iter().enumerate() {
            planes[c as usize][t / 64] |= 1 << (t % 64);
        }
        for c in 0..ky {
            for t in 0..y.len() {
                prefix[c][t + 1] = prefix[c][t] + (y[t] as usize == c) as u32;
            }
        }
        Self {
            len: y.len(),
            ky,
            planes,
            prefix,
        }
    }

    fn count(&self, c: usize, d: usize, l: usize) -> u64 {
        (self.prefix[c][d + l] - self.prefix[c][d]) as u64
    }

    /// Bits `[d, d+64·buf.len())` of plane `c`; bits past the window are
    /// harmless because codeword planes are zero there.
    fn window(&self, c: usize, d: usize, buf: &mut [u64]) {
        let p = &self.planes[c];
        for (w, out) in buf.iter_mut().enumerate() {
            let start = d + 64 * w;
            let (i, off) = (start / 64, start % 64);
            let lo = p.get(i).copied().unwrap_or(0);
            *out = if off == 0 {
                lo
            } else {
                (lo >> off) | (p.get(i + 1).copied().unwrap_or(0) << (64 - off))
            };
        }
    }
}

impl<'a> Decoder<'a> {
    pub fn new(lib: &'a CodebookLibrary, cfg: DecoderConfig) -> Self {
        let kx = lib.alphabet();
        let binary = kx == 2;
        let books = lib
            .books
            .iter()
            .map(|book| {
                let l = book.length();
                let words = l.div_ceil(64).max(1);
                let mut planes = vec![0u64; book.len() * kx * words];
                let mut ones_plane = vec![0u64; if binary { book.len() * words } else { 0 }];
                for (b, cw) in book.codewords().enumerate() {
                    for (t, &a) in cw.iter().enumerate() {
                        planes[(b * kx + a as usize) * words + t / 64] |= 1 << (t % 64);
                        if binary && a == 1 {
                            ones_plane[b * words + t / 64] |= 1 << (t % 64);
                        }
                    }
                }
                PreparedBook {
                    length: l,
                    lr: l as f64 * book.rate(),
                    words,
                    size: book.len(),
                    planes,
                    ones_plane,
                    ones: if binary { book.spec.composition[1] } else { 0 },
                }
            })
            .collect();
        let l_max = lib.max_length();
        Self {
            lib,
            cfg,
            books,
            table: (0..=l_max as u64).map(klogk).collect(),
            l_max,
        }
    }

    pub fn library(&self) -> &CodebookLibrary {
        self.lib
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    fn k(&self, v: u64) -> f64 {
        self.table[v as usize]
    }

    fn binary_path(&self, out: &Output) -> bool {
        self.lib.alphabet() == 2 && out.ky <= 2
    }

    fn binary_metric(&self, pb: &PreparedBook, out: &Output, d: usize, s: u64) -> f64 {
        let l = pb.length as u64;
        let m1 = if out.ky == 2 { out.count(1, d, pb.length) } else { 0 };
        let n1 = pb.ones;
        // rows: symbol 0, 1; columns: output 0, 1
        let n = [l + s - n1 - m1, m1 - s, n1 - s, s];
        metric_from_counts(&n, 2, 2, pb.length, pb.lr, &|v| self.k(v))
    }

    /// Metrics of every codeword of book `h` at `d` (window must fit).
    fn book_metrics(&self, h: usize, out: &Output, d: usize, sink: &mut dyn FnMut(usize, f64)) {
        let pb = &self.books[h];
        let wn = pb.words;
        if self.binary_path(out) {
            let mut yw = [0u64; 4];
            let mut big;
            let ybuf: &mut [u64] = if wn <= 4 {
                &mut yw[..wn]
            } else {
                big = vec![0u64; wn];
                &mut big
            };
            if out.ky == 2 {
                out.window(1, d, ybuf);
            }
            for b in 0..pb.size {
                let x = &pb.ones_plane[b * wn..(b + 1) * wn];
                let s: u64 = x.iter().zip(ybuf.iter()).map(|(a, c)| (a & c).count_ones() as u64).sum();
                sink(b, self.binary_metric(pb, out, d, s));
            }
        } else {
            let kx = self.lib.alphabet();
            let ky = out.ky;
            let mut yplanes = vec![0u64; ky * wn];
            for c in 0..ky {
                out.window(c, d, &mut yplanes[c * wn..(c + 1) * wn]);
            }
            let mut n = vec![0u64; kx * ky];
            for b in 0..pb.size {
                for a in 0..kx {
                    let x = &pb.planes[(b * kx + a) * wn..(b * kx + a + 1) * wn];
                    for c in 0..ky {
                        let yc = &yplanes[c * wn..(c + 1) * wn];
                        n[a * ky + c] = x.iter().zip(yc).map(|(p, q)| (p & q).count_ones() as u64).sum();
                    }
                }
                sink(b, metric_from_counts(&n, kx, ky, pb.length, pb.lr, &|v| self.k(v)));
            }
        }
    }

    /// `max_b` metric of book `h` at `d`; `−∞` if the window does not fit.
    fn book_best(&self, h: usize, out: &Output, d: usize) -> f64 {
        let pb = &self.books[h];
        if d + pb.length > out.len {
            return f64::NEG_INFINITY;
        }
        if self.binary_path(out) {
            // With both margins fixed, I is convex in the (1,1) count, so the
            // maximum sits at the smallest or largest overlap.
            let wn = pb.words;
            let mut small = [0u64; 4];
            let mut big = Vec::new();
            let ybuf: &mut [u64] = if wn <= 4 {
                &mut small[..wn]
            } else {
                big.resize(wn, 0);
                &mut big
            };
            if out.ky == 2 {
                out.window(1, d, ybuf);
            }
            let (lo, hi) = overlap_range(&pb.ones_plane, wn, ybuf);
            self.binary_metric(pb, out, d, lo as u64)
                .max(self.binary_metric(pb, out, d, hi as u64))
        } else {
            let mut best = f64::NEG_INFINITY;
            self.book_metrics(h, out, d, &mut |_, m| best = best.max(m));
            best
        }
    }

    fn decide(&self, t: usize, out: &Output, cache: &mut BestCache) -> Option<(usize, usize)> {
        let tol = self.cfg.tie_tolerance;
        let m = self.books.len();
        // stage 1 across books
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        let mut second = f64::NEG_INFINITY;
        for h in 0..m {
            let v = cache.get(self, out, t, h);
            if v > best.1 {
                second = second.max(best.1);
                best = (h, v);
            } else {
                second = second.max(v);
            }
        }
        let (hb, mstar) = best;
        if hb == usize::MAX || mstar == f64::NEG_INFINITY || mstar - second <= tol {
            return None;
        }
        let lt = self.books[hb].length;
        if mstar / lt as f64 <= self.cfg.eta {
            return None;
        }
        // stage 2 dominance
        for h in 0..m {
            let l = self.books[h].length;
            for d in (t + 1).saturating_sub(l)..t {
                if mstar - cache.get(self, out, d, h) <= tol {
                    return None;
                }
            }
        }
        for d in t + 1..t + lt {
            for h in 0..m {
                if mstar - cache.get(self, out, d, h) <= tol {
                    return None;
                }
            }
        }
        // stage 1 within the winning book
        let mut arg = usize::MAX;
        let mut top = f64::NEG_INFINITY;
        let mut runner = f64::NEG_INFINITY;
        self.book_metrics(hb, out, t, &mut |b, v| {
            if v > top {
                runner = runner.max(top);
                top = v;
                arg = b;
            } else {
                runner = runner.max(v);
            }
        });
        if top - runner <= tol {
            return None;
        }
        Some((hb, arg))
    }

    pub fn decode(&self, y: &[Symbol]) -> DecoderOutput {
        let out = Output::new(y, output_alphabet(y));
        let mut cache = BestCache::new(self.books.len(), 2 * self.l_max + 2);
        let mut tokens = vec![Token::Erasure; y.len()];
        let mut t = 0;
        while t < y.len() {
            match self.decide(t, &out, &mut cache) {
                Some((book, message)) => {
                    tokens[t] = Token::Decoded { book, message };
                    let l = self.books[book].length;
                    tokens[t + 1..t + l].iter_mut().for_each(|s| *s = Token::Space);
                    t += l;
                }
                None => t += 1,
            }
        }
        DecoderOutput { tokens }
    }

    /// `max_b` metric of book `h` at `d` on `y` (`−∞` when the window does not fit).
    pub fn best_metric(&self, y: &[Symbol], h: usize, d: usize) -> f64 {
        let out = Output::new(y, output_alphabet(y));
        self.book_best(h, &out, d)
    }
}

/// Smallest and largest `|x ∧ y|` over the packed codewords `planes`.
#[inline(always)]
fn overlap_range_generic(planes: &[u64], wn: usize, y: &[u64]) -> (u32, u32) {
    let (mut lo, mut hi) = (u32::MAX, 0u32);
    match wn {
        1 => {
            let y0 = y[0];
            for &x in planes {
                let s = (x & y0).count_ones();
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        2 => {
            let (y0, y1) = (y[0], y[1]);
            for x in planes.chunks_exact(2) {
                let s = (x[0] & y0).count_ones() + (x[1] & y1).count_ones();
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        _ => {
            for x in planes.chunks_exact(wn) {
                let s: u32 = x.iter().zip(y).map(|(a, c)| (a & c).count_ones()).sum();
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
    }
    (lo, hi)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt,avx2,avx512f,avx512bw,avx512vl")]
unsafe fn overlap_range_avx512(planes: &[u64], wn: usize, y: &[u64]) -> (u32, u32) {
    overlap_range_generic(planes, wn, y)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt,avx2")]
unsafe fn overlap_range_avx2(planes: &[u64], wn: usize, y: &[u64]) -> (u32, u32) {
    overlap_range_generic(planes, wn, y)
}

// The scan dominates decoding time; hardware popcount makes it ~5x faster.
fn overlap_range(planes: &[u64], wn: usize, y: &[u64]) -> (u32, u32) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx512bw") && std::arch::is_x86_feature_detected!("avx512vl") {
        // SAFETY: the required CPU features were just detected.
        return unsafe { overlap_range_avx512(planes, wn, y) };
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("popcnt") && std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU features were just detected.
        return unsafe { overlap_range_avx2(planes, wn, y) };
    }
    overlap_range_generic(planes, wn, y)
}

/// Per-book maxima for a sliding range of positions, filled in order.
struct BestCache {
    m: usize,
    cap: usize,
    hi: usize,
    data: Vec<f64>,
}

impl BestCache {
    fn new(m: usize, cap: usize) -> Self {
        Self {
            m,
            cap,
            hi: 0,
            data: vec![f64::NEG_INFINITY; m * cap],
        }
    }

    fn get(&mut self, dec: &Decoder, out: &Output, d: usize, h: usize) -> f64 {
        while self.hi <= d {
            let slot = (self.hi % self.cap) * self.m;
            for g in 0..self.m {
                self.data[slot + g] = dec.book_best(g, out, self.hi);
            }
            self.hi += 1;
        }
        debug_assert!(d + self.cap >= self.hi, "position {d} fell out of the cache");
        self.data[(d % self.cap) * self.m + h]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageOutcome {
    Correct,
    /// Every instant of the message was erased.
    ErasureRun,
    /// Wrong or misplaced decodes only, no erasure.
    Error,
    /// Some erasures and some decodes, not correct.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageScore {
    pub index: usize,
    pub book: usize,
    pub outcome: MessageOutcome,
    /// Some instant of the message carried a non-erasure output.
    pub edf_event: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookTally {
    pub measured: u64,
    pub correct: u64,
    pub erasure_runs: u64,
    pub edf_events: u64,
}

impl BookTally {
    pub fn errors(&self) -> u64 {
        self.measured - self.correct
    }

    pub fn merge(&mut self, o: &BookTally) {
        self.measured += o.measured;
        self.correct += o.correct;
        self.erasure_runs += o.erasure_runs;
        self.edf_events += o.edf_events;
    }
}

/// Scores the measured (non-guard) messages of a trace.
pub fn score_messages(
    lib: &CodebookLibrary,
    trace: &TransmissionTrace,
    out: &DecoderOutput,
) -> Result<(Vec<MessageScore>, Vec<BookTally>)> {
    if out.tokens.len() != trace.output.len() {
        return domain(format!(
            "decoder output has {} instants, trace has {}",
            out.tokens.len(),
            trace.output.len()
        ));
    }
    let mut tallies = vec![BookTally::default(); lib.m()];
    let mut scores = Vec::new();
    for j in trace.measured() {
        let h = trace.schedule.indices[j];
        let span = trace.message_span(lib, j);
        let toks = &out.tokens[span];
        let correct = toks[0]
            == Token::Decoded {
                book: h,
                message: trace.messages[j],
            }
            && toks[1..].iter().all(|&t| t == Token::Space);
        let erased = toks.iter().filter(|t| t.is_erasure()).count();
        let outcome = if correct {
            MessageOutcome::Correct
        } else if erased == toks.len() {
            MessageOutcome::ErasureRun
        } else if erased == 0 {
            MessageOutcome::Error
        } else {
            MessageOutcome::Mixed
        };
        let edf_event = erased < toks.len();
        let tally = &mut tallies[h];
        tally.measured += 1;
        tally.correct += correct as u64;
        tally.erasure_runs += (outcome == MessageOutcome::ErasureRun) as u64;
        tally.edf_events += edf_event as u64;
        scores.push(MessageScore {
            index: j,
            book: h,
            outcome,
            edf_event,
        });
    }
    Ok((scores, tallies))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// The sent codeword's normalized metric does not exceed η.
    Threshold,
    /// Another codeword of the same book does at least as well at the true start.
    SamePositionWrongCodeword,
    /// A codeword of another book does at least as well at the true start.
    WrongCodebook,
    /// Some window at another offset in the dominance range does at least as well.
    Misposition,
    /// None of the event conditions holds on the realized output.
    Unexplained,
}

/// Causes of an error at message `j`, evaluated on the realized output. Several
/// may hold at once.
pub fn classify_error_event(
    dec: &Decoder,
    trace: &TransmissionTrace,
    out: &DecoderOutput,
    j: usize,
) -> Result<Vec<ErrorClass>> {
    let lib = dec.library();
    let cfg = dec.config();
    let h = trace.schedule.indices[j];
    let s = trace.start_times[j];
    if out.tokens.get(s)
        == Some(&Token::Decoded {
            book: h,
            message: trace.messages[j],
        })
    {
        return domain(format!("message {j} was decoded correctly"));
    }
    let y = &trace.output;
    let l = lib.book(h).length();
    let truth = window_metric(lib, h, trace.messages[j], y, s)?;
    let tol = cfg.tie_tolerance;
    let mut classes = Vec::new();
    if truth / l as f64 <= cfg.eta {
        classes.push(ErrorClass::Threshold);
    }
    let view = Output::new(y, output_alphabet(y));
    let mut same = false;
    dec.book_metrics(h, &view, s, &mut |b, m| {
        if b != trace.messages[j] && truth - m <= tol {
            same = true;
        }
    });
    if same {
        classes.push(ErrorClass::SamePositionWrongCodeword);
    }
    if (0..lib.m()).any(|g| g != h && truth - dec.book_best(g, &view, s) <= tol) {
        classes.push(ErrorClass::WrongCodebook);
    }
    let mispositioned = (0..lib.m()).any(|g| {
        let lg = lib.book(g).length();
        ((s + 1).saturating_sub(lg)..s)
            .chain(s + 1..s + l)
            .any(|d| truth - dec.book_best(g, &view, d) <= tol)
    });
    if mispositioned {
        classes.push(ErrorClass::Misposition);
    }
    if classes.is_empty() {
        classes.push(ErrorClass::Unexplained);
    }
    Ok(classes)
}
