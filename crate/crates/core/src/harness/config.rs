//! Versioned experiment configuration (a single JSON document).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::channel_sim::Schedule;
use crate::codebook::{build_library, BuildOptions, CodebookLibrary, LibraryParams};
use crate::error::{Error, Result};
use crate::rng;

pub const CONFIG_FORMAT: &str = "multicode-experiment";
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Bsc { epsilon: f64 },
    Identity { size: usize },
    Matrix { rows: Vec<Vec<f64>> },
}

impl ChannelSpec {
    pub fn matrix(&self) -> Result<ChannelMatrix> {
        match self {
            ChannelSpec::Bsc { epsilon } => ChannelMatrix::bsc(*epsilon),
            ChannelSpec::Identity { size } => ChannelMatrix::identity(*size),
            ChannelSpec::Matrix { rows } => ChannelMatrix::new(rows.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LibrarySource {
    /// Sample a fresh library.
    Params {
        params: LibraryParams,
        seed: u64,
        #[serde(default)]
        r_min_override: Option<usize>,
        #[serde(default)]
        codeword_budget: Option<u64>,
    },
    /// A library saved by `build-library`.
    File { path: PathBuf },
}

impl LibrarySource {
    /// `gamma` overrides the default `(log₂ n)^{-1/2}` for sampled libraries.
    pub fn load(&self, gamma: Option<f64>) -> Result<CodebookLibrary> {
        match self {
            LibrarySource::Params {
                params,
                seed,
                r_min_override,
                codeword_budget,
            } => {
                let mut opts = BuildOptions {
                    gamma,
                    r_min_override: *r_min_override,
                    ..BuildOptions::default()
                };
                if let Some(b) = codeword_budget {
                    opts.codeword_budget = *b as u128;
                }
                build_library(params, &opts, *seed)
            }
            LibrarySource::File { path } => CodebookLibrary::load(path),
        }
    }
}

/// Which codebook each measured message of a session uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Explicit { indices: Vec<usize> },
    /// Cycles through the books in order (for two books: alternating).
    #[serde(alias = "alternating")]
    RoundRobin { length: usize },
    /// Independent uniform choices; the same schedule is used by every session.
    Random { length: usize, seed: u64 },
}

impl ScheduleSpec {
    pub fn schedule(&self, m: usize) -> Result<Schedule> {
        let s = match self {
            ScheduleSpec::Explicit { indices } => Schedule::new(indices.clone(), m)?,
            ScheduleSpec::RoundRobin { length } => Schedule::round_robin(m, *length),
            ScheduleSpec::Random { length, seed } => Schedule::random(m, *length, &mut rng::derive(*seed, &[])),
        };
        if s.is_empty() {
            return Err(Error::Config("schedule has no messages".into()));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        match self {
            ScheduleSpec::Explicit { indices } => indices.len(),
            ScheduleSpec::RoundRobin { length } | ScheduleSpec::Random { length, .. } => *length,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

fn default_slack() -> f64 {
    0.05
}

fn default_erasure_target() -> f64 {
    0.9
}

fn default_format() -> String {
    CONFIG_FORMAT.into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_format")]
    pub format: String,
    pub version: u32,
    pub channel: ChannelSpec,
    /// One experiment point per library; several lengths of the same
    /// (rate, type) family give the trend checks their data.
    pub libraries: Vec<LibrarySource>,
    pub schedule: ScheduleSpec,
    /// Sessions per library.
    pub trials: u64,
    pub seed: u64,
    /// Guard messages per side; defaults to `⌈2/D⌉ + 1`.
    #[serde(default)]
    pub guard: Option<usize>,
    /// Decoder threshold; defaults to `1/log₂ n` per library.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub tie_tolerance: Option<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_erasure_target")]
    pub erasure_target: f64,
    /// Label every error with its event classes (costly for large libraries).
    #[serde(default)]
    pub classify_errors: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn new(channel: ChannelSpec, libraries: Vec<LibrarySource>, schedule: ScheduleSpec, trials: u64, seed: u64) -> Self {
        Self {
            format: CONFIG_FORMAT.into(),
            version: CONFIG_VERSION,
            channel,
            libraries,
            schedule,
            trials,
            seed,
            guard: None,
            eta: None,
            gamma: None,
            tie_tolerance: None,
            slack: default_slack(),
            erasure_target: default_erasure_target(),
            classify_errors: false,
            output: OutputPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.format != CONFIG_FORMAT {
            return bad(format!("not an experiment config (format {:?})", self.format));
        }
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.libraries.is_empty() {
            return bad("no libraries".into());
        }
        if self.schedule.is_empty() {
            return bad("schedule has no messages".into());
        }
        if let Some(e) = self.eta {
            if !(e >= 0.0) {
                return bad(format!("η = {e}"));
            }
        }
        if !(self.slack >= 0.0) || !(0.0..=1.0).contains(&self.erasure_target) {
            return bad("slack must be ≥ 0 and the erasure target in [0, 1]".into());
        }
        self.channel.matrix()?;
        Ok(())
    }

    /// Reads and validates a config; relative library paths are taken
    /// relative to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for lib in &mut cfg.libraries {
            if let LibrarySource::File { path: p } = lib {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::BookSpec;

    fn sample() -> ExperimentConfig {
        let params = LibraryParams {
            alphabet: 2,
            ratio_bound: 0.5,
            length_bound: 8,
            books: vec![BookSpec::new(8, vec![4, 4], 0.25)],
        };
        ExperimentConfig::new(
            ChannelSpec::Bsc { epsilon: 0.1 },
            vec![LibrarySource::Params {
                params,
                seed: 1,
                r_min_override: None,
                codeword_budget: None,
            }],
            ScheduleSpec::RoundRobin { length: 10 },
            3,
            7,
        )
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c = sample();
        let s = c.to_json().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let v: serde_json::Value = serde_json::json!({
            "version": 1,
            "channel": {"kind": "identity", "size": 2},
            "libraries": [{"kind": "file", "path": "lib.json"}],
            "schedule": {"kind": "alternating", "length": 4},
            "trials": 1,
            "seed": 0
        });
        let c: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(c.slack, 0.05);
        assert_eq!(c.schedule, ScheduleSpec::RoundRobin { length: 4 });
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation() {
        let mut c = sample();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = sample();
        c.version = 9;
        assert!(c.validate().is_err());
        assert!(ScheduleSpec::Explicit { indices: vec![0, 3] }.schedule(2).is_err());
    }
}
