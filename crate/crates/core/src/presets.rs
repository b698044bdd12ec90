//! Named experiments reproducing each regime at desk scale, with pass/fail
//! gates.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{
    alternating_sigma1_exact, binomial_exact, random_pattern_expected_sigma1, sigma1_sq_scaled,
};
use crate::simulation::{
    run_lognormal_experiment, run_normal_experiment, write_samples, Experiment, ExperimentConfig,
    PatternSpec, Regime, SimSummary,
};
use crate::source::{derive_seed, Pattern, SourceDist};
use crate::stats::Moments;

/// Seeds used by every stochastic preset unless overridden.
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Band for `E[sigma_1^2(W)] / ((n / sqrt m) C(n-1, m-1)^2)` on the
/// unbiased binary source, frozen from a pilot sweep (0.914, 0.900, 0.893 at
/// n = 400, 1600, 6400).
pub const RANDOM_RATIO_BAND: (f64, f64) = (0.85, 0.95);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    T2aNormal,
    TkaSkewed,
    TlnLognormal,
    EaaaDichotomy,
    TllowAlternating,
    TlrandomScaling,
    CorRandomNormal,
}

impl PresetName {
    pub const ALL: [PresetName; 7] = [
        PresetName::T2aNormal,
        PresetName::TkaSkewed,
        PresetName::TlnLognormal,
        PresetName::EaaaDichotomy,
        PresetName::TllowAlternating,
        PresetName::TlrandomScaling,
        PresetName::CorRandomNormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::T2aNormal => "t2a_normal",
            PresetName::TkaSkewed => "tka_skewed",
            PresetName::TlnLognormal => "tln_lognormal",
            PresetName::EaaaDichotomy => "eaaa_dichotomy",
            PresetName::TllowAlternating => "tllow_alternating",
            PresetName::TlrandomScaling => "tlrandom_scaling",
            PresetName::CorRandomNormal => "cor_random_normal",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetName::ALL.iter().map(|p| p.as_str()).collect();
                Error::Config(format!(
                    "unknown preset {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Parameter overrides; `None` keeps the preset default.
#[derive(Clone, Debug, Serialize)]
pub struct PresetSpec {
    pub name: PresetName,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub trials: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub workers: usize,
}

impl PresetSpec {
    pub fn new(name: PresetName) -> Self {
        PresetSpec {
            name,
            n: None,
            m: None,
            trials: None,
            seeds: None,
            workers: 1,
        }
    }

    fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Gate {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PresetReport {
    pub preset: PresetName,
    pub passed: bool,
    pub gates: Vec<Gate>,
    /// Monte Carlo runs, one per seed (log-normal presets list the normal
    /// runs after the log-normal ones).
    pub runs: Vec<SimSummary>,
    /// Preset-specific numbers (sweeps, ratios).
    pub details: serde_json::Value,
    #[serde(skip)]
    pub outputs: Vec<(String, Vec<f64>, &'static str)>,
}

impl PresetReport {
    fn new(
        preset: PresetName,
        gates: Vec<Gate>,
        runs: Vec<SimSummary>,
        details: serde_json::Value,
    ) -> Self {
        PresetReport {
            preset,
            passed: gates.iter().all(|g| g.passed),
            gates,
            runs,
            details,
            outputs: Vec::new(),
        }
    }

    /// Writes `summary.json` plus one sample file per run into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(self)? + "\n",
        )?;
        for (sub, samples, file) in &self.outputs {
            let d = dir.join(sub);
            fs::create_dir_all(&d)?;
            if *file == "samples.csv" {
                write_samples(&d.join(file), samples)?;
            } else {
                let mut body = String::from("sigma1_sq_scaled\n");
                for x in samples {
                    body.push_str(&format!("{x}\n"));
                }
                fs::write(d.join(file), body)?;
            }
        }
        Ok(())
    }
}

/// At least 4 of 5 (in general, 80% of) seeds.
pub fn seed_majority(passes: &[bool]) -> bool {
    let need = (passes.len() * 4).div_ceil(5);
    passes.iter().filter(|&&p| p).count() >= need
}

fn fair_binary() -> SourceDist {
    SourceDist::parse(None, "0.5,0.5").expect("valid source")
}

/// The skewed block pattern `a^{3m/4} b^{m/4}`.
pub fn skewed_block_pattern(m: usize) -> String {
    let a = 3 * m / 4;
    "a".repeat(a) + &"b".repeat(m - a)
}

/// Runs `cfg` once per seed (normal regime) and gates each run on the mean,
/// variance ratio and KS statistic.
fn normal_preset(
    name: PresetName,
    spec: &PresetSpec,
    base: ExperimentConfig,
    mean_tol: Option<f64>,
) -> Result<PresetReport> {
    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    let mut per_seed = Vec::new();
    let mut lines = Vec::new();
    for seed in spec.seeds() {
        let mut cfg = base.clone();
        cfg.master_seed = seed;
        cfg.workers = spec.workers;
        let Experiment { summary, samples } = run_normal_experiment(&cfg)?;
        let mean_ok = mean_tol.is_none_or(|t| summary.emp_mean.abs() <= t);
        let var_ok = summary.var_rel_err.abs() <= 0.05;
        let ok = mean_ok && var_ok && summary.pass_normality;
        lines.push(format!(
            "seed {seed}: mean {:.4}, var ratio {:.4}, KS {:.5} vs {:.5} -> {}",
            summary.emp_mean,
            summary.emp_var,
            summary.ks_stat.unwrap_or(f64::NAN),
            summary.ks_critical_5pct,
            if ok { "pass" } else { "fail" }
        ));
        per_seed.push(ok);
        outputs.push((format!("seed-{seed}"), samples, "samples.csv"));
        runs.push(summary);
    }
    let gate = Gate::new(
        "variance ratio within 5% and KS below the 5% critical value on at least 4 of 5 seeds",
        seed_majority(&per_seed),
        lines.join("; "),
    );
    let mut report = PresetReport::new(name, vec![gate], runs, serde_json::Value::Null);
    report.outputs = outputs;
    Ok(report)
}

fn t2a_normal(spec: &PresetSpec) -> Result<PresetReport> {
    let n = spec.n.unwrap_or(2000);
    let word = match spec.m {
        Some(m) => "ab".repeat(m).chars().take(m).collect(),
        None => "aba".to_string(),
    };
    let cfg = ExperimentConfig::new(
        fair_binary(),
        PatternSpec::Explicit { word },
        n,
        spec.trials.unwrap_or(100_000),
        0,
    );
    normal_preset(PresetName::T2aNormal, spec, cfg, Some(0.02))
}

fn tka_skewed(spec: &PresetSpec) -> Result<PresetReport> {
    let n = spec.n.unwrap_or(4000);
    let m = spec.m.unwrap_or(40);
    let cfg = ExperimentConfig::new(
        fair_binary(),
        PatternSpec::Explicit {
            word: skewed_block_pattern(m),
        },
        n,
        spec.trials.unwrap_or(100_000),
        0,
    );
    normal_preset(PresetName::TkaSkewed, spec, cfg, None)
}

fn cor_random_normal(spec: &PresetSpec) -> Result<PresetReport> {
    let n = spec.n.unwrap_or(2000);
    let m = spec.m.unwrap_or(4);
    let cfg = ExperimentConfig::new(
        fair_binary(),
        PatternSpec::Random { m },
        n,
        spec.trials.unwrap_or(20_000),
        0,
    );
    normal_preset(PresetName::CorRandomNormal, spec, cfg, None)
}

fn lognormal_config(
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
    workers: usize,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        fair_binary(),
        PatternSpec::Constant { symbol: 'a', m },
        n,
        trials,
        seed,
    );
    cfg.regime = Regime::LogNormal;
    cfg.workers = workers;
    cfg
}

fn tln_lognormal(spec: &PresetSpec) -> Result<PresetReport> {
    let n = spec.n.unwrap_or(10_000);
    let m = spec.m.unwrap_or(300);
    let trials = spec.trials.unwrap_or(100_000);
    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    let (mut log_ok, mut var_ok, mut normal_fails) = (Vec::new(), Vec::new(), Vec::new());
    let mut lines = Vec::new();
    for seed in spec.seeds() {
        let cfg = lognormal_config(n, m, trials, seed, spec.workers);
        let Experiment { summary, samples } = run_lognormal_experiment(&cfg)?;
        let companion = summary
            .companion
            .as_ref()
            .expect("log-normal runs carry a companion");
        log_ok.push(summary.pass_normality);
        var_ok.push(summary.var_rel_err.abs() <= 0.10);
        normal_fails.push(!companion.pass_normality);
        lines.push(format!(
            "seed {seed}: ln Z KS {:.5} vs {:.5}, Var ratio {:.4}, normal KS {:.5}",
            summary.ks_stat.unwrap_or(f64::NAN),
            summary.ks_critical_5pct,
            summary.emp_var,
            companion.ks_stat.unwrap_or(f64::NAN),
        ));
        outputs.push((format!("seed-{seed}"), samples, "samples.csv"));
        runs.push(summary);
    }
    let detail = lines.join("; ");
    let gates = vec![
        Gate::new(
            "standardized ln Z passes KS on at least 4 of 5 seeds",
            seed_majority(&log_ok),
            detail.clone(),
        ),
        Gate::new(
            "Var(ln Z) within 10% of the log-normal variance on at least 4 of 5 seeds",
            seed_majority(&var_ok),
            detail.clone(),
        ),
        Gate::new(
            "normal standardization of Z fails KS on at least 4 of 5 seeds",
            seed_majority(&normal_fails),
            detail,
        ),
    ];
    let mut report = PresetReport::new(
        PresetName::TlnLognormal,
        gates,
        runs,
        serde_json::Value::Null,
    );
    report.outputs = outputs;
    Ok(report)
}

fn eaaa_dichotomy(spec: &PresetSpec) -> Result<PresetReport> {
    let n = spec.n.unwrap_or(10_000);
    let m = spec.m.unwrap_or(100);
    let trials = spec.trials.unwrap_or(10_000);
    let mut log_runs = Vec::new();
    let mut normal_runs = Vec::new();
    let mut outputs = Vec::new();
    let (mut log_ok, mut normal_fails) = (Vec::new(), Vec::new());
    let mut lines = Vec::new();
    for seed in spec.seeds() {
        let cfg = lognormal_config(n, m, trials, seed, spec.workers);
        let log_run = run_lognormal_experiment(&cfg)?;
        let mut normal_cfg = cfg.clone();
        normal_cfg.regime = Regime::Normal;
        let normal_run = run_normal_experiment(&normal_cfg)?;
        log_ok.push(log_run.summary.pass_normality);
        normal_fails.push(!normal_run.summary.pass_normality);
        lines.push(format!(
            "seed {seed}: ln Z KS {:.5}, normal KS {:.5}, critical {:.5}",
            log_run.summary.ks_stat.unwrap_or(f64::NAN),
            normal_run.summary.ks_stat.unwrap_or(f64::NAN),
            log_run.summary.ks_critical_5pct,
        ));
        outputs.push((
            format!("seed-{seed}/lognormal"),
            log_run.samples,
            "samples.csv",
        ));
        outputs.push((
            format!("seed-{seed}/normal"),
            normal_run.samples,
            "samples.csv",
        ));
        log_runs.push(log_run.summary);
        normal_runs.push(normal_run.summary);
    }
    let detail = lines.join("; ");
    let gates = vec![
        Gate::new(
            "log-normal standardization passes KS on at least 4 of 5 seeds",
            seed_majority(&log_ok),
            detail.clone(),
        ),
        Gate::new(
            "normal regime fails KS on at least 4 of 5 seeds",
            seed_majority(&normal_fails),
            detail,
        ),
    ];
    log_runs.extend(normal_runs);
    let mut report = PresetReport::new(
        PresetName::EaaaDichotomy,
        gates,
        log_runs,
        serde_json::Value::Null,
    );
    report.outputs = outputs;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct AlternatingSweep {
    pub max_n: usize,
    pub instances: usize,
    pub violations: Vec<(usize, usize)>,
    /// Largest `m sigma_1^2 / (n C(n-1, m-1)^2)`; the bound says at most 10.
    pub max_scaled: f64,
    pub argmax: (usize, usize),
}

/// Checks `sigma_1^2 <= 10 (n / m) C(n-1, m-1)^2` exactly for the
/// alternating pattern over all `2 <= n <= max_n`, `1 <= m <= n / 2`.
pub fn alternating_sweep(max_n: usize) -> Result<AlternatingSweep> {
    let cases: Vec<(usize, usize)> = (2..=max_n)
        .flat_map(|n| (1..=n / 2).map(move |m| (n, m)))
        .collect();
    let results: Vec<((usize, usize), bool, f64)> = cases
        .par_iter()
        .map(|&(n, m)| {
            let sigma = alternating_sigma1_exact(n, m)?;
            let c = BigInt::from(binomial_exact(n as u64 - 1, m as u64 - 1));
            let c2 = &c * &c;
            let ok = BigInt::from(m) * &sigma <= BigInt::from(10 * n) * &c2;
            let scaled = crate::moments::binom::lognum_from_bigint(&(BigInt::from(m) * &sigma))
                .ratio(crate::moments::binom::lognum_from_bigint(
                    &(BigInt::from(n) * &c2),
                ));
            Ok(((n, m), ok, scaled))
        })
        .collect::<Result<_>>()?;
    let violations = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let (argmax, _, max_scaled) = results
        .iter()
        .copied()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap_or(((0, 0), true, 0.0));
    Ok(AlternatingSweep {
        max_n,
        instances: results.len(),
        violations,
        max_scaled,
        argmax,
    })
}

fn tllow_alternating(spec: &PresetSpec) -> Result<PresetReport> {
    let sweep = alternating_sweep(spec.n.unwrap_or(100))?;
    let gate = Gate::new(
        "alternating sigma_1^2 <= 10 (n/m) C(n-1,m-1)^2 for all m <= n/2",
        sweep.violations.is_empty(),
        format!(
            "{} instances, {} violations, max m sigma_1^2/(n C^2) = {:.4} at (n, m) = {:?}",
            sweep.instances,
            sweep.violations.len(),
            sweep.max_scaled,
            sweep.argmax
        ),
    );
    Ok(PresetReport::new(
        PresetName::TllowAlternating,
        vec![gate],
        Vec::new(),
        serde_json::to_value(&sweep)?,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct RandomPatternCheck {
    pub n: usize,
    pub m: usize,
    pub patterns: usize,
    pub seed: u64,
    /// `A_1 sum pi^2`, the formula for `E[sigma_1^2(W)] / C(n-1, m-1)^2`.
    pub formula: f64,
    pub sample_mean: f64,
    pub standard_error: f64,
    pub z_score: f64,
}

/// Draws `patterns` random patterns and compares the mean of
/// `sigma_1^2(W) / C(n-1, m-1)^2` with the closed form. Also returns the
/// per-pattern values in draw order.
pub fn random_pattern_check(
    dist: &SourceDist,
    n: usize,
    m: usize,
    patterns: usize,
    seed: u64,
    workers: usize,
) -> Result<(RandomPatternCheck, Vec<f64>)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let values: Vec<f64> = pool.install(|| {
        (0..patterns as u64)
            .into_par_iter()
            .map(|t| {
                let w = Pattern::random(m, dist, derive_seed(seed, t))?;
                sigma1_sq_scaled(dist, &w, n)
            })
            .collect::<Result<_>>()
    })?;
    let theory = random_pattern_expected_sigma1(dist, n, m)?;
    let formula = theory.a1 * theory.pi_sq_sum;
    let mom = Moments::of(&values);
    let se = (mom.variance / patterns as f64).sqrt();
    Ok((
        RandomPatternCheck {
            n,
            m,
            patterns,
            seed,
            formula,
            sample_mean: mom.mean,
            standard_error: se,
            z_score: (mom.mean - formula) / se,
        },
        values,
    ))
}

/// `E[sigma_1^2(W)] / ((n / sqrt m) C(n-1, m-1)^2)` at `m = ceil(sqrt n)`.
pub fn random_ratio_sweep(dist: &SourceDist, ns: &[usize]) -> Result<Vec<(usize, usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let m = (n as f64).sqrt().ceil() as usize;
            Ok((n, m, random_pattern_expected_sigma1(dist, n, m)?.ratio))
        })
        .collect()
}

fn tlrandom_scaling(spec: &PresetSpec) -> Result<PresetReport> {
    let dist = fair_binary();
    let seed = spec.seeds().first().copied().unwrap_or(1);
    let (check, mut values) = random_pattern_check(
        &dist,
        spec.n.unwrap_or(200),
        spec.m.unwrap_or(16),
        spec.trials.unwrap_or(2000),
        seed,
        spec.workers,
    )?;
    let sweep = random_ratio_sweep(&dist, &[400, 1600, 6400])?;
    let (lo, hi) = RANDOM_RATIO_BAND;
    let in_band = sweep.iter().all(|&(_, _, r)| (lo..=hi).contains(&r));
    let gates = vec![
        Gate::new(
            "closed form within 3 standard errors of the random-pattern sample mean",
            check.z_score.abs() <= 3.0,
            format!(
                "formula {:.5}, mean {:.5} +- {:.5} (z = {:.2})",
                check.formula, check.sample_mean, check.standard_error, check.z_score
            ),
        ),
        Gate::new(
            "scaling ratio inside the frozen band",
            in_band,
            format!("band [{lo}, {hi}], ratios {sweep:?}"),
        ),
    ];
    let details = serde_json::json!({ "mean_check": check, "ratio_sweep": sweep });
    let mut report = PresetReport::new(PresetName::TlrandomScaling, gates, Vec::new(), details);
    values.sort_by(f64::total_cmp);
    report.outputs = vec![(format!("seed-{seed}"), values, "pattern_sigma1.csv")];
    Ok(report)
}

/// Runs a preset and, when `out_dir` is given, writes its reports there.
pub fn run_preset(spec: &PresetSpec, out_dir: Option<&Path>) -> Result<PresetReport> {
    if spec.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    if spec.seeds.as_ref().is_some_and(|s| s.is_empty()) {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let report = match spec.name {
        PresetName::T2aNormal => t2a_normal(spec),
        PresetName::TkaSkewed => tka_skewed(spec),
        PresetName::TlnLognormal => tln_lognormal(spec),
        PresetName::EaaaDichotomy => eaaa_dichotomy(spec),
        PresetName::TllowAlternating => tllow_alternating(spec),
        PresetName::TlrandomScaling => tlrandom_scaling(spec),
        PresetName::CorRandomNormal => cor_random_normal(spec),
    }?;
    if let Some(dir) = out_dir {
        report.write_to(dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PresetName::ALL {
            assert_eq!(p.as_str().parse::<PresetName>().unwrap(), p);
        }
        assert!("nope".parse::<PresetName>().is_err());
    }

    #[test]
    fn majority_rule() {
        assert!(seed_majority(&[true, true, true, true, false]));
        assert!(!seed_majority(&[true, true, true, false, false]));
        assert!(seed_majority(&[true]));
        assert!(!seed_majority(&[false]));
    }

    #[test]
    fn skewed_pattern_shape() {
        assert_eq!(skewed_block_pattern(8), "aaaaaabb");
        assert_eq!(skewed_block_pattern(40).matches('a').count(), 30);
    }

    #[test]
    fn small_alternating_sweep_has_no_violations() {
        let s = alternating_sweep(30).unwrap();
        assert!(s.violations.is_empty());
        assert_eq!(s.instances, (2..=30).map(|n| n / 2).sum::<usize>());
        assert!(s.max_scaled > 0.0 && s.max_scaled <= 10.0);
    }

    #[test]
    fn small_normal_preset_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = PresetSpec::new(PresetName::T2aNormal);
        spec.n = Some(200);
        spec.trials = Some(300);
        spec.seeds = Some(vec![7, 8]);
        let r = run_preset(&spec, Some(dir.path())).unwrap();
        assert_eq!(r.runs.len(), 2);
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("seed-7/samples.csv").exists());
    }
}
