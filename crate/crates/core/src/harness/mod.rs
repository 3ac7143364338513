//! Experiment engine: Monte Carlo error estimation, comparison with the
//! exponent bounds, desk-scale lemma verification and the channel-aware
//! extended-library workflow.

pub mod config;
pub mod corollary;
pub mod experiment;
pub mod lemmas;
pub mod stats;

pub use config::{ChannelSpec, ExperimentConfig, LibrarySource, OutputPaths, ScheduleSpec};
pub use corollary::{corollary1_workflow, CorollaryConfig, CorollaryReport, ExtendedLibrary, KindSpec};
pub use experiment::{compare_to_bound, estimate_error_rates, estimate_with_libraries, prepare_libraries, BookReport, ExperimentReport, Status, Verdict};
pub use lemmas::{verify_lemmas, CheckStatus, LemmaCheck, LemmaConfig, LemmaReport};
pub use stats::{wilson, Interval, Proportion, Z99};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "MULTICODE_THREADS";

/// Sizes rayon's global pool from `MULTICODE_THREADS` when set. Safe to call
/// more than once; only the first call takes effect.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
