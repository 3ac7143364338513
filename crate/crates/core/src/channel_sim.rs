//! Message streams: schedules, encoding, the memoryless channel, and traces
//! with ground-truth boundaries.
//!
//! Positions and message indices are 0-based throughout (the first message
//! starts at instant 0, codewords are numbered from 0).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::codebook::CodebookLibrary;
use crate::error::{domain, Error, Result};
use crate::rng::{self, domain as tag};
use crate::types::Symbol;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub indices: Vec<usize>,
}

impl Schedule {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        let s = Self { indices };
        s.validate(m)?;
        Ok(s)
    }

    pub fn round_robin(m: usize, len: usize) -> Self {
        Self {
            indices: (0..len).map(|j| j % m.max(1)).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, len: usize, rng: &mut R) -> Self {
        Self {
            indices: (0..len).map(|_| rng.gen_range(0..m)).collect(),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self.indices.iter().find(|&&h| h >= m) {
            Some(h) => domain(format!("schedule refers to codebook {h} of {m}")),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn draw_messages<R: Rng + ?Sized>(lib: &CodebookLibrary, schedule: &Schedule, rng: &mut R) -> Vec<usize> {
    schedule
        .indices
        .iter()
        .map(|&h| rng.gen_range(0..lib.book(h).len()))
        .collect()
}

pub fn start_times(lib: &CodebookLibrary, schedule: &Schedule) -> Vec<usize> {
    let mut s = Vec::with_capacity(schedule.len());
    let mut t = 0;
    for &h in &schedule.indices {
        s.push(t);
        t += lib.book(h).length();
    }
    s
}

pub fn encode_stream(lib: &CodebookLibrary, schedule: &Schedule, messages: &[usize]) -> Result<Vec<Symbol>> {
    schedule.validate(lib.m())?;
    if messages.len() != schedule.len() {
        return domain(format!(
            "{} messages for a schedule of {}",
            messages.len(),
            schedule.len()
        ));
    }
    let total: usize = schedule.indices.iter().map(|&h| lib.book(h).length()).sum();
    let mut out = Vec::with_capacity(total);
    for (&h, &b) in schedule.indices.iter().zip(messages) {
        let book = lib.book(h);
        if b >= book.len() {
            return domain(format!("message {b} outside codebook {h} of size {}", book.len()));
        }
        out.extend_from_slice(book.codeword(b));
    }
    Ok(out)
}

pub fn transmit<R: Rng + ?Sized>(w: &ChannelMatrix, input: &[Symbol], rng: &mut R) -> Vec<Symbol> {
    input.iter().map(|&x| w.sample_with(x, rng.gen::<f64>())).collect()
}

/// `⌈2/D⌉ + 1` guard messages per side cover the decoder's look-back and
/// look-ahead of `2n − 2` symbols.
pub fn default_guard(lib: &CodebookLibrary) -> usize {
    (2.0 / lib.params.ratio_bound - 1e-9).ceil() as usize + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub seed: u64,
    pub session: u64,
    /// Guard messages on each side; `schedule` includes them.
    pub guard: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionTrace {
    pub schedule: Schedule,
    pub messages: Vec<usize>,
    pub start_times: Vec<usize>,
    pub input: Vec<Symbol>,
    pub output: Vec<Symbol>,
    pub meta: TraceMeta,
}

impl TransmissionTrace {
    /// Indices of the messages that count towards statistics.
    pub fn measured(&self) -> std::ops::Range<usize> {
        let g = self.meta.guard.min(self.schedule.len() / 2);
        g..self.schedule.len() - g
    }

    pub fn message_span(&self, lib: &CodebookLibrary, j: usize) -> std::ops::Range<usize> {
        let s = self.start_times[j];
        s..s + lib.book(self.schedule.indices[j]).length()
    }

    /// Checks the structural invariants against the library.
    pub fn validate(&self, lib: &CodebookLibrary) -> Result<()> {
        self.schedule.validate(lib.m())?;
        if self.start_times != start_times(lib, &self.schedule) {
            return domain("start times do not follow the schedule");
        }
        if self.input != encode_stream(lib, &self.schedule, &self.messages)? {
            return domain("input stream does not match the messages");
        }
        if self.output.len() != self.input.len() {
            return domain("output and input lengths differ");
        }
        Ok(())
    }

    /// Writes `<base>.json` (everything but the streams) and `<base>.bin`
    /// (input then output symbols, one byte each).
    pub fn save(&self, base: &Path) -> Result<()> {
        let doc = TraceDocument {
            format: TRACE_FORMAT.into(),
            version: TRACE_VERSION,
            schedule: self.schedule.clone(),
            messages: self.messages.clone(),
            start_times: self.start_times.clone(),
            stream_len: self.input.len(),
            meta: self.meta.clone(),
        };
        fs::write(with_ext(base, "json"), serde_json::to_string_pretty(&doc)?)?;
        let mut f = fs::File::create(with_ext(base, "bin"))?;
        f.write_all(&self.input)?;
        f.write_all(&self.output)?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<Self> {
        let doc: TraceDocument = serde_json::from_str(&fs::read_to_string(with_ext(base, "json"))?)?;
        if doc.format != TRACE_FORMAT || doc.version != TRACE_VERSION {
            return Err(Error::Config(format!(
                "unsupported trace format {} v{}",
                doc.format, doc.version
            )));
        }
        let mut bytes = Vec::new();
        fs::File::open(with_ext(base, "bin"))?.read_to_end(&mut bytes)?;
        if bytes.len() != 2 * doc.stream_len {
            return Err(Error::Config(format!(
                "trace payload has {} bytes, expected {}",
                bytes.len(),
                2 * doc.stream_len
            )));
        }
        let output = bytes.split_off(doc.stream_len);
        Ok(Self {
            schedule: doc.schedule,
            messages: doc.messages,
            start_times: doc.start_times,
            input: bytes,
            output,
            meta: doc.meta,
        })
    }
}

const TRACE_FORMAT: &str = "multicode-trace";
const TRACE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TraceDocument {
    format: String,
    version: u32,
    schedule: Schedule,
    messages: Vec<usize>,
    start_times: Vec<usize>,
    stream_len: usize,
    meta: TraceMeta,
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// The schedule padded with `guard` messages on each side, taken cyclically
/// from the schedule itself so the padding has the same mix of books.
pub fn guarded_schedule(schedule: &Schedule, guard: usize) -> Schedule {
    let j = schedule.len();
    if j == 0 || guard == 0 {
        return schedule.clone();
    }
    let mut indices = Vec::with_capacity(j + 2 * guard);
    indices.extend((0..guard).map(|i| schedule.indices[(j - guard % j + i) % j]));
    indices.extend_from_slice(&schedule.indices);
    indices.extend((0..guard).map(|i| schedule.indices[i % j]));
    Schedule { indices }
}

/// One session: messages and channel noise come from streams derived from
/// `(seed, session)`, so sessions can be generated in any order.
pub fn run_session(
    lib: &CodebookLibrary,
    schedule: &Schedule,
    w: &ChannelMatrix,
    seed: u64,
    session: u64,
    guard: usize,
) -> Result<TransmissionTrace> {
    schedule.validate(lib.m())?;
    if w.inputs() != lib.alphabet() {
        return domain(format!(
            "channel has {} inputs, library alphabet is {}",
            w.inputs(),
            lib.alphabet()
        ));
    }
    let full = guarded_schedule(schedule, guard);
    let mut msg_rng = rng::derive(seed, &[tag::SESSION, session, tag::MESSAGES]);
    let messages = draw_messages(lib, &full, &mut msg_rng);
    let input = encode_stream(lib, &full, &messages)?;
    let mut ch_rng = rng::derive(seed, &[tag::SESSION, session, tag::CHANNEL]);
    let output = transmit(w, &input, &mut ch_rng);
    Ok(TransmissionTrace {
        start_times: start_times(lib, &full),
        schedule: full,
        messages,
        input,
        output,
        meta: TraceMeta {
            seed,
            session,
            guard: if schedule.is_empty() { 0 } else { guard },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{BookSpec, LibraryParams};
    use crate::types::empirical_type;

    fn lib() -> CodebookLibrary {
        let params = LibraryParams {
            alphabet: 2,
            ratio_bound: 0.5,
            length_bound: 5,
            books: vec![BookSpec::new(3, vec![1, 2], 1.0 / 3.0), BookSpec::new(5, vec![2, 3], 0.4)],
        };
        CodebookLibrary::from_codewords(
            params,
            crate::codebook::Expurgation::none(),
            vec![
                vec![vec![0, 1, 1], vec![1, 0, 1]],
                vec![vec![0, 0, 1, 1, 1], vec![1, 1, 1, 0, 0], vec![1, 0, 1, 0, 1], vec![0, 1, 0, 1, 1]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn alternating_boundaries() {
        let lib = lib();
        let s = Schedule::round_robin(2, 4);
        assert_eq!(start_times(&lib, &s), vec![0, 3, 8, 11]);
        let x = encode_stream(&lib, &s, &[1, 2, 0, 3]).unwrap();
        assert_eq!(x.len(), 16);
        assert_eq!(&x[3..8], &[1, 0, 1, 0, 1]);
        for (j, &h) in s.indices.iter().enumerate() {
            let st = start_times(&lib, &s)[j];
            let t = empirical_type(&x[st..st + lib.book(h).length()], 2).unwrap();
            assert_eq!(t.counts().unwrap(), lib.book(h).spec.composition.as_slice());
        }
        assert!(encode_stream(&lib, &s, &[2, 0, 0, 0]).is_err());
        assert!(Schedule::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn channels() {
        let mut r = rng::derive(3, &[]);
        let x: Vec<Symbol> = (0..100).map(|i| (i % 2) as Symbol).collect();
        assert_eq!(transmit(&ChannelMatrix::identity(2).unwrap(), &x, &mut r), x);
        let c = ChannelMatrix::constant_output(2, 3, 2).unwrap();
        assert!(transmit(&c, &x, &mut r).iter().all(|&y| y == 2));
    }

    #[test]
    fn guards_and_determinism() {
        let lib = lib();
        assert_eq!(default_guard(&lib), 5);
        let s = Schedule::new(vec![0, 1, 1], 2).unwrap();
        assert_eq!(guarded_schedule(&s, 2).indices, vec![1, 1, 0, 1, 1, 0, 1]);
        let w = ChannelMatrix::bsc(0.2).unwrap();
        let a = run_session(&lib, &s, &w, 9, 4, 2).unwrap();
        let b = run_session(&lib, &s, &w, 9, 4, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.measured(), 2..5);
        a.validate(&lib).unwrap();
        let bare = run_session(&lib, &s, &w, 9, 4, 0).unwrap();
        assert_eq!(bare.schedule, s);
        assert_ne!(run_session(&lib, &s, &w, 9, 5, 2).unwrap().output, a.output);
    }
}
