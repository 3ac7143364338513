use multicode::channel_sim::*;
use multicode::codebook::{build_library, BookSpec, BuildOptions, CodebookLibrary, LibraryParams};
use multicode::harness::wilson;
use multicode::harness::Z99;
use multicode::ChannelMatrix;
use proptest::prelude::*;

fn library(books: &[(usize, f64)], seed: u64) -> CodebookLibrary {
    let n = books.iter().map(|b| b.0).max().unwrap();
    let params = LibraryParams {
        alphabet: 2,
        ratio_bound: 0.5,
        length_bound: n,
        books: books.iter().map(|&(l, r)| BookSpec::new(l, vec![(l / 2) as u64, (l - l / 2) as u64], r)).collect(),
    };
    build_library(&params, &BuildOptions::default(), seed).unwrap()
}

#[test]
fn messages_are_uniform() {
    let lib = library(&[(12, 0.25), (10, 0.3)], 2);
    let mut counts = vec![vec![0u64; lib.book(0).len()], vec![0u64; lib.book(1).len()]];
    for s in 0..200 {
        let tr = run_session(&lib, &Schedule::round_robin(2, 40), &ChannelMatrix::identity(2).unwrap(), 5, s, 0).unwrap();
        for (&h, &b) in tr.schedule.indices.iter().zip(&tr.messages) {
            counts[h][b] += 1;
        }
    }
    // chi-square against uniform; the 99.9% quantile for ≤ 15 degrees of
    // freedom is below 38
    for c in counts {
        let total: u64 = c.iter().sum();
        let e = total as f64 / c.len() as f64;
        let chi: f64 = c.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        assert!(c.len() <= 16 && chi < 38.0, "chi-square {chi} over {} cells", c.len());
    }
}

#[test]
fn bsc_flip_rate_within_interval() {
    let lib = library(&[(16, 0.25)], 1);
    let w = ChannelMatrix::bsc(0.11).unwrap();
    let (mut flips, mut total) = (0u64, 0u64);
    for s in 0..50 {
        let tr = run_session(&lib, &Schedule::round_robin(1, 100), &w, 9, s, 0).unwrap();
        flips += tr.input.iter().zip(&tr.output).filter(|(a, b)| a != b).count() as u64;
        total += tr.input.len() as u64;
    }
    let ci = wilson(flips, total, Z99);
    assert!(ci.lo <= 0.11 && 0.11 <= ci.hi, "{flips}/{total} → {ci:?}");
}

#[test]
fn trace_round_trip() {
    let lib = library(&[(12, 0.25), (8, 0.25)], 3);
    let tr = run_session(&lib, &Schedule::round_robin(2, 7), &ChannelMatrix::bsc(0.1).unwrap(), 1, 4, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("trace");
    tr.save(&base).unwrap();
    let back = TransmissionTrace::load(&base).unwrap();
    assert_eq!(back, tr);
    back.validate(&lib).unwrap();
}

#[test]
fn sessions_are_reproducible_and_independent() {
    let lib = library(&[(12, 0.25)], 3);
    let w = ChannelMatrix::bsc(0.2).unwrap();
    let s = Schedule::round_robin(1, 10);
    let a = run_session(&lib, &s, &w, 1, 0, 1).unwrap();
    assert_eq!(a, run_session(&lib, &s, &w, 1, 0, 1).unwrap());
    assert_ne!(a.output, run_session(&lib, &s, &w, 1, 1, 1).unwrap().output);
    assert!(run_session(&lib, &s, &ChannelMatrix::identity(3).unwrap(), 1, 0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guard_padding_invariants(idx in proptest::collection::vec(0usize..3, 1..12), guard in 0usize..6) {
        let s = Schedule::new(idx.clone(), 3).unwrap();
        let g = guarded_schedule(&s, guard);
        prop_assert_eq!(g.len(), idx.len() + 2 * guard);
        prop_assert_eq!(&g.indices[guard..guard + idx.len()], &idx[..]);
        // padding is read cyclically from the schedule
        for i in 0..guard {
            prop_assert_eq!(g.indices[guard + idx.len() + i], idx[i % idx.len()]);
            prop_assert!(idx.contains(&g.indices[i]));
        }
    }

    #[test]
    fn start_times_are_cumulative_lengths(idx in proptest::collection::vec(0usize..2, 0..15), seed in 0u64..50) {
        let lib = library(&[(9, 0.25), (6, 0.3)], 1);
        let s = Schedule::new(idx.clone(), 2).unwrap();
        let t = start_times(&lib, &s);
        let mut acc = 0;
        for (j, &h) in idx.iter().enumerate() {
            prop_assert_eq!(t[j], acc);
            acc += lib.book(h).length();
        }
        let tr = run_session(&lib, &s, &ChannelMatrix::identity(2).unwrap(), seed, 0, 0).unwrap();
        prop_assert_eq!(tr.input.len(), acc);
        prop_assert_eq!(&tr.input, &tr.output);
        for (j, &h) in idx.iter().enumerate() {
            prop_assert_eq!(&tr.input[t[j]..t[j] + lib.book(h).length()], lib.book(h).codeword(tr.messages[j]));
        }
    }
}
