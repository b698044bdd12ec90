//! Seeded Monte Carlo experiments on the distribution of `Z`.
//!
//! Trial `t` draws its text from the stream `derive_seed(master_seed, t)`,
//! so results do not depend on how trials are scheduled over workers. All
//! samples are collected in trial order and sorted before they are written.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::counting::SubsequenceCounter;
use crate::error::{Error, Result};
use crate::lognum::LogNum;
use crate::moments::{expected_count, ln_binomial_real, log_binomial, sigma1_sq};
use crate::source::{
    count_symbol_in_generated, derive_seed, fill_text, Pattern, SourceDist, Symbol,
};
use crate::stats::{ks_critical_5pct, ks_statistic_sorted, Moments};

/// Stream index reserved for drawing a random pattern, disjoint from trial
/// indices.
const PATTERN_STREAM: u64 = u64::MAX;

/// Skip rates above this mark a log-normal run as non-conforming.
pub const MAX_SKIP_FRACTION: f64 = 0.01;

/// `auto` picks the normal regime when `b_n = (1/p_a - 1) m^2 / n` is at
/// most this.
pub const AUTO_LOGNORMAL_THRESHOLD: f64 = 0.1;

/// How the pattern of an experiment is obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PatternSpec {
    Explicit {
        word: String,
    },
    /// `a^m`.
    Constant {
        symbol: char,
        m: usize,
    },
    /// `abab...` of length `m`.
    Alternating {
        m: usize,
    },
    /// Drawn from the source with a stream derived from the master seed.
    Random {
        m: usize,
    },
}

impl PatternSpec {
    pub fn build(&self, dist: &SourceDist, master_seed: u64) -> Result<Pattern> {
        match self {
            PatternSpec::Explicit { word } => Pattern::parse(word, dist),
            PatternSpec::Constant { symbol, m } => {
                let a = dist
                    .alphabet()
                    .index_of(*symbol)
                    .ok_or(Error::UnknownSymbol(*symbol))?;
                Pattern::constant(a, *m, dist)
            }
            PatternSpec::Alternating { m } => Pattern::alternating(*m, dist),
            PatternSpec::Random { m } => {
                Pattern::random(*m, dist, derive_seed(master_seed, PATTERN_STREAM))
            }
        }
    }
}

impl FromStr for PatternSpec {
    type Err = Error;

    /// `const:a,30`, `alt:40`, `random:16`, or a literal word.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("cannot parse pattern {s:?}: {what}"));
        let parse_len = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| bad("length must be an integer"))
        };
        if let Some(rest) = s.strip_prefix("const:") {
            let (sym, m) = rest
                .split_once(',')
                .ok_or_else(|| bad("expected const:<symbol>,<m>"))?;
            let mut chars = sym.trim().chars();
            let (Some(symbol), None) = (chars.next(), chars.next()) else {
                return Err(bad("symbol must be a single character"));
            };
            Ok(PatternSpec::Constant {
                symbol,
                m: parse_len(m)?,
            })
        } else if let Some(m) = s.strip_prefix("alt:") {
            Ok(PatternSpec::Alternating { m: parse_len(m)? })
        } else if let Some(m) = s.strip_prefix("random:") {
            Ok(PatternSpec::Random { m: parse_len(m)? })
        } else if s.is_empty() {
            Err(Error::EmptyPattern)
        } else {
            Ok(PatternSpec::Explicit {
                word: s.to_string(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Normal,
    #[serde(rename = "lognormal")]
    LogNormal,
    Auto,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Regime::Normal),
            "lognormal" | "log_normal" | "log-normal" => Ok(Regime::LogNormal),
            "auto" => Ok(Regime::Auto),
            _ => Err(Error::Config(format!("unknown regime {s:?}"))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Normal => "normal",
            Regime::LogNormal => "lognormal",
            Regime::Auto => "auto",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// Centre and scale from the asymptotic theory.
    Theoretical,
    /// Sample mean and sample standard deviation.
    Empirical,
}

impl FromStr for Standardization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(Standardization::Theoretical),
            "empirical" => Ok(Standardization::Empirical),
            _ => Err(Error::Config(format!("unknown standardization {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dist: SourceDist,
    pub pattern: PatternSpec,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub regime: Regime,
    pub standardization: Standardization,
    /// Worker threads; results are identical for every value.
    pub workers: usize,
    /// The log-normal regime requires `n p_a - m >= lognormal_margin sqrt(n)`.
    pub lognormal_margin: f64,
}

impl ExperimentConfig {
    pub fn new(
        dist: SourceDist,
        pattern: PatternSpec,
        n: usize,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            dist,
            pattern,
            n,
            trials,
            master_seed,
            regime: Regime::Normal,
            standardization: Standardization::Theoretical,
            workers: 1,
            lognormal_margin: 10.0,
        }
    }

    fn validate(&self) -> Result<Pattern> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let pattern = self.pattern.build(&self.dist, self.master_seed)?;
        if self.n < pattern.len() {
            return Err(Error::TextTooShort {
                n: self.n,
                m: pattern.len(),
            });
        }
        Ok(pattern)
    }
}

/// Standardization of a second statistic computed on the same texts.
#[derive(Clone, Debug, Serialize)]
pub struct Companion {
    pub label: String,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub ks_stat: Option<f64>,
    pub ks_critical_5pct: f64,
    pub pass_normality: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimSummary {
    pub regime: Regime,
    pub standardization: Standardization,
    pub n: usize,
    pub m: usize,
    pub pattern: String,
    pub trials: usize,
    pub master_seed: u64,
    pub trials_used: usize,
    pub trials_skipped_zero: usize,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `None` when fewer than two trials were used.
    pub ks_stat: Option<f64>,
    pub ks_critical_5pct: f64,
    /// Relative error of the sample mean of the statistic (`Z` or `ln Z`)
    /// against its theoretical centre.
    pub mean_rel_err: f64,
    /// Sample variance of the statistic over its theoretical variance, minus one.
    pub var_rel_err: f64,
    pub pass_normality: bool,
    /// More than 1% of trials had `Z = 0`.
    pub non_conforming: bool,
    /// Theoretical centre and variance of the statistic, as natural logs
    /// for the normal regime (`ln E[Z]`, `ln p_w^2 sigma_1^2`) and plainly
    /// for the log-normal regime.
    pub theory_center: f64,
    pub theory_variance: f64,
    /// The normal standardization of `Z` on the same texts (log-normal
    /// regime only).
    pub companion: Option<Companion>,
}

/// Outcome of an experiment: the summary and the sorted standardized sample.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub summary: SimSummary,
    pub samples: Vec<f64>,
}

impl Experiment {
    /// Writes `samples.csv` and `summary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_samples(&dir.join("samples.csv"), &self.samples)?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&self.summary)? + "\n",
        )?;
        Ok(())
    }
}

/// One value per line under the header `standardized_value`.
pub fn write_samples(path: &Path, samples: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "standardized_value")?;
    for x in samples {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// `Z` for each of `trials` independent texts, in trial order.
pub fn sample_log_counts(
    dist: &SourceDist,
    pattern: &Pattern,
    n: usize,
    trials: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<LogNum>> {
    let pool = thread_pool(workers)?;
    let m = pattern.len() as i64;
    let trials = 0..trials as u64;
    let out = match pattern.constant_symbol() {
        // Z = C(N_a, m): only the letter count matters.
        Some(a) => pool.install(|| {
            trials
                .into_par_iter()
                .map(|t| {
                    let na = count_symbol_in_generated(dist, n, derive_seed(master_seed, t), a);
                    log_binomial(na as i64, m)
                })
                .collect()
        }),
        None => pool.install(|| {
            trials
                .into_par_iter()
                .map_init(
                    || {
                        (
                            SubsequenceCounter::new(pattern.word()),
                            Vec::<Symbol>::with_capacity(n),
                        )
                    },
                    |(counter, buf), t| {
                        fill_text(dist, n, derive_seed(master_seed, t), buf);
                        counter.count_float(buf)
                    },
                )
                .collect()
        }),
    };
    Ok(out)
}

/// Letter counts `N_a` for each trial, in trial order.
fn sample_letter_counts(
    dist: &SourceDist,
    symbol: Symbol,
    n: usize,
    trials: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<usize>> {
    let pool = thread_pool(workers)?;
    Ok(pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| count_symbol_in_generated(dist, n, derive_seed(master_seed, t), symbol))
            .collect()
    }))
}

/// `(Z - E[Z]) / scale` formed in log-space, exported as a double.
fn standardize_log(z: LogNum, center: LogNum, scale: LogNum) -> f64 {
    ((z - center) / scale).to_f64()
}

/// Diagnostics of a standardized sample against `N(0, 1)`.
struct Diagnostics {
    moments: Moments,
    ks_stat: Option<f64>,
    ks_critical: f64,
    samples: Vec<f64>,
}

fn diagnose(mut values: Vec<f64>, standardization: Standardization) -> Diagnostics {
    let raw = Moments::of(&values);
    if standardization == Standardization::Empirical {
        let sd = raw.variance.sqrt();
        for x in &mut values {
            *x -= raw.mean;
            if sd > 0.0 {
                *x /= sd;
            }
        }
    }
    values.sort_by(f64::total_cmp);
    let ks_stat = (values.len() >= 2).then(|| ks_statistic_sorted(&values));
    Diagnostics {
        moments: raw,
        ks_stat,
        ks_critical: ks_critical_5pct(values.len().max(1)),
        samples: values,
    }
}

fn passes(ks_stat: Option<f64>, critical: f64) -> bool {
    ks_stat.is_some_and(|d| d < critical)
}

/// Normal regime: `S = (Z - E[Z]) / (p_w sigma_1)` per trial.
pub fn run_normal_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let pattern = cfg.validate()?;
    let n = cfg.n;
    let mean_z = expected_count(&cfg.dist, &pattern, n)?;
    let sigma1 = sigma1_sq(&cfg.dist, &pattern, n)?;
    if sigma1.is_zero() {
        return Err(Error::Precondition(
            "sigma_1 = 0: the standardized count is undefined".into(),
        ));
    }
    let scale = sigma1.sqrt() * LogNum::from_ln(pattern.log_pw());
    let zs = sample_log_counts(
        &cfg.dist,
        &pattern,
        n,
        cfg.trials,
        cfg.master_seed,
        cfg.workers,
    )?;
    let values: Vec<f64> = zs
        .iter()
        .map(|&z| standardize_log(z, mean_z, scale))
        .collect();
    let d = diagnose(values, cfg.standardization);
    let summary = SimSummary {
        regime: Regime::Normal,
        standardization: cfg.standardization,
        n,
        m: pattern.len(),
        pattern: cfg.dist.alphabet().decode(pattern.word()),
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        trials_used: cfg.trials,
        trials_skipped_zero: 0,
        emp_mean: d.moments.mean,
        emp_var: d.moments.variance,
        skewness: d.moments.skewness,
        excess_kurtosis: d.moments.excess_kurtosis,
        ks_stat: d.ks_stat,
        ks_critical_5pct: d.ks_critical,
        // Mean of Z is E[Z] + p_w sigma_1 mean(S).
        mean_rel_err: d.moments.mean * scale.ratio(mean_z),
        var_rel_err: d.moments.variance - 1.0,
        pass_normality: passes(d.ks_stat, d.ks_critical),
        non_conforming: false,
        theory_center: mean_z.ln_abs(),
        theory_variance: scale.powi(2).ln_abs(),
        companion: None,
    };
    Ok(Experiment {
        summary,
        samples: d.samples,
    })
}

/// Parameters of the log-normal approximation for `Z` with `w = a^m`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LogNormalParams {
    pub p_a: f64,
    /// `ln C(n p_a, m)` through the Gamma function.
    pub center: f64,
    /// `n |ln(1 - m / (n p_a))|^2 p_a (1 - p_a)`.
    pub variance: f64,
    /// `(1/p_a - 1) m^2 / n`, the small-`m` form of the variance.
    pub variance_small_m: f64,
}

impl LogNormalParams {
    pub fn new(n: usize, m: usize, p_a: f64) -> Self {
        let (nf, mf) = (n as f64, m as f64);
        let np = nf * p_a;
        let l = (-mf / np).ln_1p();
        LogNormalParams {
            p_a,
            center: ln_binomial_real(np, mf),
            variance: nf * l * l * p_a * (1.0 - p_a),
            variance_small_m: (1.0 / p_a - 1.0) * mf * mf / nf,
        }
    }
}

/// Checks `m < n p_a` with `n p_a - m >= margin sqrt(n)`.
pub fn check_lognormal_hypothesis(n: usize, m: usize, p_a: f64, margin: f64) -> Result<()> {
    let gap = n as f64 * p_a - m as f64;
    let need = margin * (n as f64).sqrt();
    if gap < need {
        return Err(Error::Precondition(format!(
            "the log-normal approximation for a^m needs m < n p_a with n p_a - m >> sqrt(n); \
             here n p_a - m = {gap:.3} < {margin} sqrt(n) = {need:.3}"
        )));
    }
    Ok(())
}

/// Log-normal regime for `w = a^m`: `T = (ln Z - ln C(n p_a, m)) / sqrt(v)`,
/// skipping texts with `Z = 0`. The normal standardization of `Z` on the
/// same texts is reported as the companion.
pub fn run_lognormal_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let pattern = cfg.validate()?;
    let Some(a) = pattern.constant_symbol() else {
        return Err(Error::Config(
            "the log-normal regime is only parameterized for constant patterns a^m".into(),
        ));
    };
    let (n, m) = (cfg.n, pattern.len());
    let p_a = cfg.dist.prob(a);
    check_lognormal_hypothesis(n, m, p_a, cfg.lognormal_margin)?;
    let params = LogNormalParams::new(n, m, p_a);
    let sd = params.variance.sqrt();

    let counts = sample_letter_counts(&cfg.dist, a, n, cfg.trials, cfg.master_seed, cfg.workers)?;
    let zs: Vec<LogNum> = counts
        .iter()
        .map(|&na| log_binomial(na as i64, m as i64))
        .collect();
    let values: Vec<f64> = zs
        .iter()
        .filter(|z| !z.is_zero())
        .map(|z| (z.ln_abs() - params.center) / sd)
        .collect();
    let used = values.len();
    let skipped = cfg.trials - used;
    let d = diagnose(values, cfg.standardization);

    let companion = normal_companion(&cfg.dist, &pattern, n, &zs, cfg.standardization)?;
    let summary = SimSummary {
        regime: Regime::LogNormal,
        standardization: cfg.standardization,
        n,
        m,
        pattern: cfg.dist.alphabet().decode(pattern.word()),
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        trials_used: used,
        trials_skipped_zero: skipped,
        emp_mean: d.moments.mean,
        emp_var: d.moments.variance,
        skewness: d.moments.skewness,
        excess_kurtosis: d.moments.excess_kurtosis,
        ks_stat: d.ks_stat,
        ks_critical_5pct: d.ks_critical,
        mean_rel_err: d.moments.mean * sd / params.center.abs(),
        var_rel_err: d.moments.variance - 1.0,
        pass_normality: passes(d.ks_stat, d.ks_critical),
        non_conforming: skipped as f64 > MAX_SKIP_FRACTION * cfg.trials as f64,
        theory_center: params.center,
        theory_variance: params.variance,
        companion: Some(companion),
    };
    Ok(Experiment {
        summary,
        samples: d.samples,
    })
}

fn normal_companion(
    dist: &SourceDist,
    pattern: &Pattern,
    n: usize,
    zs: &[LogNum],
    standardization: Standardization,
) -> Result<Companion> {
    let mean_z = expected_count(dist, pattern, n)?;
    let scale = sigma1_sq(dist, pattern, n)?.sqrt() * LogNum::from_ln(pattern.log_pw());
    let values = zs
        .iter()
        .map(|&z| standardize_log(z, mean_z, scale))
        .collect();
    let d = diagnose(values, standardization);
    Ok(Companion {
        label: "(Z - E[Z]) / (p_w sigma_1)".into(),
        emp_mean: d.moments.mean,
        emp_var: d.moments.variance,
        ks_stat: d.ks_stat,
        ks_critical_5pct: d.ks_critical,
        pass_normality: passes(d.ks_stat, d.ks_critical),
    })
}

/// `b_n = (1/p_a - 1) m^2 / n` for a constant pattern, `None` otherwise.
pub fn lognormal_b_n(dist: &SourceDist, pattern: &Pattern, n: usize) -> Option<f64> {
    let a = pattern.constant_symbol()?;
    let m = pattern.len() as f64;
    Some((1.0 / dist.prob(a) - 1.0) * m * m / n as f64)
}

/// The regime `auto` resolves to.
pub fn resolve_regime(cfg: &ExperimentConfig) -> Result<Regime> {
    Ok(match cfg.regime {
        Regime::Auto => {
            let pattern = cfg.validate()?;
            match lognormal_b_n(&cfg.dist, &pattern, cfg.n) {
                Some(b) if b > AUTO_LOGNORMAL_THRESHOLD => Regime::LogNormal,
                _ => Regime::Normal,
            }
        }
        r => r,
    })
}

/// Dispatches on the (resolved) regime.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    match resolve_regime(cfg)? {
        Regime::LogNormal => run_lognormal_experiment(cfg),
        _ => run_normal_experiment(cfg),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LasnReport {
    pub n: usize,
    pub m: usize,
    pub p_a: f64,
    pub trials: usize,
    pub seed: u64,
    /// `(1/p_a - 1) m^2 / n`.
    pub b_n: f64,
    /// Whether `m <= n^0.45`, the proxy for `m = o(sqrt n)`.
    pub small_m_regime: bool,
    pub trials_skipped_zero: usize,
    /// `(ln Z - ln C(n p_a, m)) / sqrt(b_n)`.
    pub log_ks: Option<f64>,
    /// `(Z / E[Z] - 1) / sqrt(b_n)`.
    pub ratio_ks: Option<f64>,
    pub log_ks_critical: f64,
    pub ratio_ks_critical: f64,
    pub log_pass: bool,
    pub ratio_pass: bool,
    /// Both standardizations pass; expected whenever `b_n <= 0.1`.
    pub both_pass: bool,
}

/// Standardizes `ln Z` and `Z / E[Z]` of `w = a^m` (`a` the first letter of a
/// binary source with `P(a) = p_a`) on the same texts and tests both.
pub fn lasn_consistency_check(
    n: usize,
    m: usize,
    p_a: f64,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<LasnReport> {
    if trials == 0 || m == 0 || m > n {
        return Err(Error::Config(format!(
            "need trials >= 1 and 1 <= m <= n, got trials={trials}, n={n}, m={m}"
        )));
    }
    let dist = SourceDist::parse(None, &format!("{p_a},{}", 1.0 - p_a))?;
    let pattern = Pattern::constant(0, m, &dist)?;
    let b_n = lognormal_b_n(&dist, &pattern, n).expect("constant pattern");
    let sqrt_b = b_n.sqrt();
    let center = ln_binomial_real(n as f64 * p_a, m as f64);
    let mean_z = expected_count(&dist, &pattern, n)?;

    let counts = sample_letter_counts(&dist, 0, n, trials, seed, workers)?;
    let zs: Vec<LogNum> = counts
        .iter()
        .map(|&na| log_binomial(na as i64, m as i64))
        .collect();
    let log_values: Vec<f64> = zs
        .iter()
        .filter(|z| !z.is_zero())
        .map(|z| (z.ln_abs() - center) / sqrt_b)
        .collect();
    let skipped = trials - log_values.len();
    let ratio_values: Vec<f64> = zs
        .iter()
        .map(|&z| (z - mean_z).ratio(mean_z) / sqrt_b)
        .collect();
    let log_d = diagnose(log_values, Standardization::Theoretical);
    let ratio_d = diagnose(ratio_values, Standardization::Theoretical);
    let log_pass = passes(log_d.ks_stat, log_d.ks_critical);
    let ratio_pass = passes(ratio_d.ks_stat, ratio_d.ks_critical);
    Ok(LasnReport {
        n,
        m,
        p_a,
        trials,
        seed,
        b_n,
        small_m_regime: (m as f64) <= (n as f64).powf(0.45),
        trials_skipped_zero: skipped,
        log_ks: log_d.ks_stat,
        ratio_ks: ratio_d.ks_stat,
        log_ks_critical: log_d.ks_critical,
        ratio_ks_critical: ratio_d.ks_critical,
        log_pass,
        ratio_pass,
        both_pass: log_pass && ratio_pass,
    })
}
