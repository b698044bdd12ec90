//! `subseq`: command-line front end for subsequence-count analysis.
//!
//! Every subcommand prints one JSON document on stdout; diagnostics go to
//! stderr. Exit status is 0 on success, 1 when a preset gate fails and 2 on
//! invalid input or any other error.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use subseq::channel::{
    exact_mutual_information_direct, exact_mutual_information_via_counts, mc_mutual_information,
    ChannelConfig,
};
use subseq::counting::{count_subsequences, CountMode};
use subseq::decomposition::decompose;
use subseq::moments::{MomentReport, ReportConfig};
use subseq::presets::{run_preset, PresetName, PresetSpec};
use subseq::simulation::{run_experiment, ExperimentConfig, PatternSpec, Regime, Standardization};
use subseq::source::MAX_DENOMINATOR;
use subseq::{Alphabet, Error, Pattern, SourceDist, Symbol};

#[derive(Parser)]
#[command(name = "subseq", version, about = "Subsequence counts in random texts")]
struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Master seed for stochastic subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for sample and summary files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Counts,
    Direct,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsArg {
    Bits,
    Nats,
}

#[derive(Subcommand)]
enum Command {
    /// Count occurrences of a pattern as a (not necessarily contiguous) subsequence.
    Count {
        #[arg(long)]
        text: String,
        #[arg(long)]
        pattern: String,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Alphabet symbols in order; defaults to the symbols appearing in text and pattern.
        #[arg(long)]
        alphabet: Option<String>,
    },
    /// Mean, first-projection variance and bounds for a pattern in a random text.
    Moments {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        probs: String,
    },
    /// Exact orthogonal decomposition of the centred count for one text.
    Decompose {
        #[arg(long)]
        text: String,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        probs: String,
    },
    /// Monte Carlo study of the standardized count.
    Simulate {
        #[arg(long)]
        n: usize,
        /// Literal word, `const:a,m`, `alt:m` or `random:m`.
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        probs: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value = "normal")]
        regime: String,
        #[arg(long, default_value = "theoretical")]
        standardization: String,
    },
    /// Mutual information between the input and output of a deletion channel.
    ChannelMi {
        #[arg(long)]
        n: usize,
        /// Deletion probability.
        #[arg(long)]
        d: f64,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        probs: String,
        #[arg(long, value_enum, default_value = "counts")]
        method: MethodArg,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum, default_value = "bits")]
        units: UnitsArg,
    },
    /// Run a named experiment and check its gates.
    Preset {
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated seeds (overrides the preset defaults and `--seed`).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

enum Failure {
    Gate(Value),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64, Error> {
    seed.ok_or_else(|| Error::Config(format!("--seed is required for {what}")))
}

/// Encodes text and pattern over the explicit alphabet, or over the sorted set
/// of characters they contain (counting needs no distribution, so a
/// one-letter inferred alphabet is fine).
fn encode_pair(
    explicit: Option<&str>,
    text: &str,
    pattern: &str,
) -> Result<(Vec<Symbol>, Vec<Symbol>), Error> {
    if let Some(a) = explicit {
        let alphabet = Alphabet::new(a)?;
        return Ok((alphabet.encode(text)?, alphabet.encode(pattern)?));
    }
    let symbols: Vec<char> = text
        .chars()
        .chain(pattern.chars())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if symbols.len() > Symbol::MAX as usize + 1 {
        return Err(Error::Alphabet(format!(
            "{} distinct symbols is too many",
            symbols.len()
        )));
    }
    let encode = |s: &str| -> Vec<Symbol> {
        s.chars()
            .map(|c| symbols.binary_search(&c).expect("symbol collected above") as Symbol)
            .collect()
    };
    Ok((encode(text), encode(pattern)))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    let workers = cli.workers;
    if workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()).into());
    }
    match cli.command {
        Command::Count {
            text,
            pattern,
            mode,
            alphabet,
        } => {
            let (t, w) = encode_pair(alphabet.as_deref(), &text, &pattern)?;
            if w.is_empty() {
                return Err(Error::EmptyPattern.into());
            }
            let mode = match mode {
                ModeArg::Exact => CountMode::Exact,
                ModeArg::Float => CountMode::Float,
            };
            let c = count_subsequences(&t, &w, mode);
            let ln_count = if c.is_zero() {
                Value::Null
            } else {
                json!(c.log_value.ln_abs())
            };
            Ok(json!({
                "n": t.len(),
                "m": w.len(),
                "count": c.exact.map(|x| x.to_string()),
                "ln_count": ln_count,
            }))
        }
        Command::Moments {
            n,
            pattern,
            alphabet,
            probs,
        } => {
            let dist = SourceDist::parse(alphabet.as_deref(), &probs)?;
            let w = Pattern::parse(&pattern, &dist)?;
            let report = MomentReport::compute(&dist, &w, n, &ReportConfig::default())?;
            Ok(serde_json::to_value(report).map_err(Error::from)?)
        }
        Command::Decompose {
            text,
            pattern,
            alphabet,
            probs,
        } => {
            let dist = SourceDist::parse(alphabet.as_deref(), &probs)?;
            let exact = dist.rationalize(MAX_DENOMINATOR)?;
            let w = Pattern::parse(&pattern, &dist)?;
            let t = dist.alphabet().encode(&text)?;
            let report = decompose(&t, &exact, &w)?;
            eprintln!(
                "probabilities {probs} rationalized to {}",
                exact.describe().join(",")
            );
            let mut v = serde_json::to_value(report).map_err(Error::from)?;
            v["input_probabilities"] = json!(dist.probs());
            Ok(v)
        }
        Command::Simulate {
            n,
            pattern,
            alphabet,
            probs,
            trials,
            regime,
            standardization,
        } => {
            let seed = require_seed(cli.seed, "simulate")?;
            let dist = SourceDist::parse(alphabet.as_deref(), &probs)?;
            let pattern: PatternSpec = pattern.parse()?;
            let mut cfg = ExperimentConfig::new(dist, pattern, n, trials, seed);
            cfg.regime = regime.parse::<Regime>()?;
            cfg.standardization = standardization.parse::<Standardization>()?;
            cfg.workers = workers;
            let exp = run_experiment(&cfg)?;
            if let Some(dir) = &cli.out {
                exp.write_to(dir)?;
            }
            Ok(serde_json::to_value(&exp.summary).map_err(Error::from)?)
        }
        Command::ChannelMi {
            n,
            d,
            alphabet,
            probs,
            method,
            trials,
            units,
        } => {
            let dist = SourceDist::parse(alphabet.as_deref(), &probs)?;
            let cfg = ChannelConfig::new(dist, n, d)?;
            let (mi, stderr, name) = match method {
                MethodArg::Counts => (exact_mutual_information_via_counts(&cfg)?, None, "counts"),
                MethodArg::Direct => (exact_mutual_information_direct(&cfg)?, None, "direct"),
                MethodArg::Mc => {
                    let seed = require_seed(cli.seed, "channel-mi --method mc")?;
                    let trials = trials.ok_or_else(|| {
                        Error::Config("--trials is required for --method mc".into())
                    })?;
                    let est = mc_mutual_information(&cfg, trials, seed, workers)?;
                    (est.mi, Some(est.stderr), "mc")
                }
            };
            let scale = match units {
                UnitsArg::Bits => std::f64::consts::LN_2,
                UnitsArg::Nats => 1.0,
            };
            let mut out = json!({
                "mi": mi / scale,
                "method": name,
                "units": match units { UnitsArg::Bits => "bits", UnitsArg::Nats => "nats" },
            });
            if let Some(se) = stderr {
                out["stderr"] = json!(se / scale);
            }
            Ok(out)
        }
        Command::Preset {
            name,
            n,
            m,
            trials,
            seeds,
        } => {
            let mut spec = PresetSpec::new(name.parse::<PresetName>()?);
            spec.n = n;
            spec.m = m;
            spec.trials = trials;
            spec.seeds = seeds.or(cli.seed.map(|s| vec![s]));
            spec.workers = workers;
            let report = run_preset(&spec, cli.out.as_deref())?;
            for g in &report.gates {
                eprintln!(
                    "[{}] {}: {}",
                    if g.passed { "PASS" } else { "FAIL" },
                    g.name,
                    g.detail
                );
            }
            let v = serde_json::to_value(&report).map_err(Error::from)?;
            if report.passed {
                Ok(v)
            } else {
                Err(Failure::Gate(v))
            }
        }
    }
}

/// Prints a JSON document, ignoring a closed stdout (e.g. piped into `head`).
fn emit(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Gate(v)) => {
            emit(&v);
            eprintln!("error: one or more gates failed");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
