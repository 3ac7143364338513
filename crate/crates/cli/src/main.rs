use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use multicode::codebook::{build_library, BuildOptions, LibraryParams};
use multicode::exponents::{
    capacity, channel_mi, random_coding_exponent, random_coding_exponent_gallager, threshold_exponent,
};
use multicode::harness::experiment::write_verdicts_csv;
use multicode::harness::*;
use multicode::{ChannelMatrix, Distribution};

#[derive(Parser)]
#[command(name = "multicode", version, about = "Multi-codebook coding over DMCs: exponents, libraries, simulation, verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random-coding and threshold exponents for one (rate, type, channel).
    Exponent {
        /// `bsc:EPS`, `identity:K`, or a JSON file with a channel spec or matrix rows.
        #[arg(long)]
        channel: String,
        /// Input distribution, comma separated.
        #[arg(long = "type", value_delimiter = ',')]
        input: Vec<f64>,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Sample a codebook library from a JSON parameter file and save it.
    BuildLibrary {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        r_min: Option<usize>,
    },
    /// Monte Carlo error and erasure estimates for an experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config's.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also check the report against the exponent bounds.
        #[arg(long)]
        compare: bool,
    },
    /// Verdicts of a saved report against the exponent bounds.
    Compare {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        slack: f64,
        #[arg(long, default_value_t = 0.9)]
        erasure_target: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exhaustive desk-scale checks of the combinatorial lemmas.
    VerifyLemmas {
        /// JSON lemma config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Extended-library run with a channel-aware sender.
    Corollary1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Required per-kind frequency of correct decodes or kind declarations.
        #[arg(long, default_value_t = 0.99)]
        min_frequency: f64,
    },
}

fn parse_channel(s: &str) -> Result<ChannelMatrix> {
    if let Some(eps) = s.strip_prefix("bsc:") {
        return Ok(ChannelMatrix::bsc(eps.parse()?)?);
    }
    if let Some(k) = s.strip_prefix("identity:") {
        return Ok(ChannelMatrix::identity(k.parse()?)?);
    }
    let text = std::fs::read_to_string(s).with_context(|| format!("reading channel {s}"))?;
    if let Ok(spec) = serde_json::from_str::<ChannelSpec>(&text) {
        return Ok(spec.matrix()?);
    }
    Ok(ChannelMatrix::new(serde_json::from_str(&text)?)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        println!(
            "{:<8} {} | {} | measured {:.4} bound {:.4} | {}",
            format!("{:?}", v.status).to_uppercase(),
            v.family,
            v.check,
            v.measured,
            v.bound,
            v.detail
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Exponent {
            channel,
            input,
            rate,
            eta,
        } => {
            let w = parse_channel(&channel)?;
            let p = Distribution::new(input)?;
            let direct = random_coding_exponent(rate, &p, &w, 1e-10)?;
            let dual = random_coding_exponent_gallager(rate, &p, &w, 1e-10)?;
            println!("I(P,W)      {:.10}", channel_mi(&p, &w)?);
            println!("capacity    {:.10}", capacity(&w, 1e-10)?.value);
            println!("E_r direct  {:.10}", direct.value);
            println!("E_r dual    {:.10}", dual.value);
            println!("E_TH        {:.10}", threshold_exponent(rate, &p, &w, eta, 1e-10)?);
            Ok(true)
        }
        Command::BuildLibrary {
            params,
            seed,
            out,
            gamma,
            r_min,
        } => {
            let params: LibraryParams = read_json(&params)?;
            let opts = BuildOptions {
                gamma,
                r_min_override: r_min,
                ..BuildOptions::default()
            };
            let lib = build_library(&params, &opts, seed)?;
            lib.save(&out)?;
            println!("{} books, {} codewords -> {}", lib.m(), lib.books.iter().map(|b| b.len()).sum::<usize>(), out.display());
            Ok(true)
        }
        Command::Simulate {
            config,
            seed,
            json,
            csv,
            compare,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.seed = seed;
            let report = estimate_error_rates(&cfg)?;
            for b in &report.books {
                println!(
                    "library {} book {} l={} R={:.4}: {} measured, Err {:.3e} [{:.3e}, {:.3e}], erasure runs {:.4}, E_r {:.4}",
                    b.library,
                    b.book,
                    b.length,
                    b.rate,
                    b.measured,
                    b.error_rate.estimate,
                    b.error_rate.ci.lo,
                    b.error_rate.ci.hi,
                    b.erasure_rate.estimate,
                    b.random_coding_exponent
                );
            }
            if let Some(p) = json.or(cfg.output.json.clone()) {
                report.write_json(&p)?;
            }
            if let Some(p) = csv.or(cfg.output.csv.clone()) {
                report.write_csv(&p)?;
            }
            if compare {
                let verdicts = compare_to_bound(&report, cfg.slack, cfg.erasure_target)?;
                print_verdicts(&verdicts);
                return Ok(!verdicts.iter().any(Verdict::failed));
            }
            Ok(true)
        }
        Command::Compare {
            report,
            slack,
            erasure_target,
            csv,
        } => {
            let report: ExperimentReport = read_json(&report)?;
            let verdicts = compare_to_bound(&report, slack, erasure_target)?;
            print_verdicts(&verdicts);
            if let Some(p) = csv {
                write_verdicts_csv(&verdicts, &p)?;
            }
            Ok(!verdicts.iter().any(Verdict::failed))
        }
        Command::VerifyLemmas { config, json, csv } => {
            let cfg: LemmaConfig = match config {
                Some(p) => read_json(&p)?,
                None => LemmaConfig::default(),
            };
            let report = verify_lemmas(&cfg)?;
            for c in &report.checks {
                println!(
                    "{:<8} {} | {} | {:.4e} | {}",
                    format!("{:?}", c.status).to_uppercase(),
                    c.suite,
                    c.name,
                    c.slack,
                    c.detail
                );
            }
            if let Some(p) = json {
                report.write_json(&p)?;
            }
            if let Some(p) = csv {
                report.write_csv(&p)?;
            }
            Ok(report.all_passed())
        }
        Command::Corollary1 {
            config,
            json,
            min_frequency,
        } => {
            let cfg: CorollaryConfig = read_json(&config)?;
            let report = corollary1_workflow(&cfg)?;
            let ok = report.meets(min_frequency);
            for (k, pass) in report.kinds.iter().zip(&ok) {
                println!(
                    "{} kind {} l={} R={}: {} book {} (E_r {:.4}); correct {:.4}, declared erasure {:.4}",
                    if *pass { "PASS" } else { "FAIL" },
                    k.kind,
                    k.length,
                    k.rate,
                    if k.choice.positive { "positive-rate" } else { "rate-0" },
                    k.choice.book,
                    k.choice.exponent,
                    k.correct.estimate,
                    k.declared_erasure.estimate
                );
            }
            if let Some(p) = json {
                std::fs::write(&p, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(ok.iter().all(|&b| b))
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
