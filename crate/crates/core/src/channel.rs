//! Mutual information of the deletion channel, which deletes each input
//! letter independently with probability `d`.
//!
//! The output `z` of an input `x` has `P(z | x) = Z_x(z) d^{n-|z|} (1-d)^{|z|}`,
//! where `Z_x(z)` counts occurrences of `z` as a subsequence of `x`. Hence
//! `I = sum_w d^{n-|w|} (1-d)^{|w|} (E[Z ln Z] - E[Z] ln E[Z])` with `Z = Z_X(w)`.
//! All entropies are in nats.

use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{count_subsequences, CountMode, SubsequenceCounter};
use crate::error::{Error, Result};
use crate::lognum::LogNum;
use crate::moments::log_binomial;
use crate::simulation::sample_log_counts;
use crate::source::{derive_seed, fill_text, seeded_rng, Pattern, SourceDist, Symbol};

/// Largest input length for the exhaustive computations.
pub const EXACT_MAX_N: usize = 12;

/// Largest `|A|^n 2^n` (inputs times deletion patterns) enumerated.
const ENUMERATION_LIMIT: u64 = 1 << 26;

#[derive(Clone, Debug)]
pub struct ChannelConfig {
    pub dist: SourceDist,
    pub n: usize,
    /// Deletion probability.
    pub d: f64,
}

impl ChannelConfig {
    pub fn new(dist: SourceDist, n: usize, d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::Config(format!(
                "deletion probability must lie in (0, 1), got {d}"
            )));
        }
        if n == 0 {
            return Err(Error::Config("input length must be at least 1".into()));
        }
        Ok(ChannelConfig { dist, n, d })
    }

    fn check_exhaustive(&self) -> Result<()> {
        let k = self.dist.len() as u64;
        let work = k
            .checked_pow(self.n as u32)
            .and_then(|x| x.checked_mul(1u64 << self.n.min(63)));
        if self.n > EXACT_MAX_N || work.is_none_or(|w| w > ENUMERATION_LIMIT) {
            return Err(Error::TooLarge {
                what: "exhaustive channel enumeration (n, |A|^n 2^n)",
                size: format!("n = {}, |A| = {k}", self.n),
                limit: format!("n <= {EXACT_MAX_N} and |A|^n 2^n <= {ENUMERATION_LIMIT}"),
            });
        }
        Ok(())
    }

    /// `ln (d^{n-k} (1-d)^k)`.
    fn ln_survival(&self, k: usize) -> f64 {
        (self.n - k) as f64 * self.d.ln() + k as f64 * (-self.d).ln_1p()
    }
}

/// Every word of length `len` over `k` letters, in base-`k` order, as the
/// `code`-th word: letter `j` is digit `j` (most significant first).
fn decode_word(mut code: usize, len: usize, k: usize, out: &mut Vec<Symbol>) {
    out.clear();
    out.resize(len, 0);
    for slot in out.iter_mut().rev() {
        *slot = (code % k) as Symbol;
        code /= k;
    }
}

/// `ln P(x)` for every input word, indexed by base-`k` code.
fn input_log_probs(dist: &SourceDist, n: usize) -> Vec<f64> {
    let k = dist.len();
    let total = k.pow(n as u32);
    let mut word = Vec::with_capacity(n);
    (0..total)
        .map(|code| {
            decode_word(code, n, k, &mut word);
            dist.log_prob_of(&word)
        })
        .collect()
}

/// Offsets of each output length in a flat table of all words of length
/// `0..=n`.
fn length_offsets(k: usize, n: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(n + 2);
    let mut acc = 0;
    for len in 0..=n {
        offsets.push(acc);
        acc += k.pow(len as u32);
    }
    offsets.push(acc);
    offsets
}

/// Adds `Z_x(z)` for every subsequence `z` of `x` by walking all `2^n`
/// kept-position subsets depth first.
fn tally_subsequences(
    x: &[Symbol],
    k: usize,
    offsets: &[usize],
    counts: &mut [u32],
    touched: &mut Vec<usize>,
) {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        x: &[Symbol],
        pos: usize,
        len: usize,
        code: usize,
        k: usize,
        offsets: &[usize],
        counts: &mut [u32],
        touched: &mut Vec<usize>,
    ) {
        if pos == x.len() {
            let idx = offsets[len] + code;
            if counts[idx] == 0 {
                touched.push(idx);
            }
            counts[idx] += 1;
            return;
        }
        walk(x, pos + 1, len, code, k, offsets, counts, touched);
        let kept = code * k + usize::from(x[pos]);
        walk(x, pos + 1, len + 1, kept, k, offsets, counts, touched);
    }
    walk(x, 0, 0, 0, k, offsets, counts, touched);
}

/// `I` through the subsequence-count identity, with `E[Z]` and `E[Z ln Z]`
/// taken exactly over all `|A|^n` inputs and the sum over all output words
/// of length `0..=n`.
pub fn exact_mutual_information_via_counts(cfg: &ChannelConfig) -> Result<f64> {
    cfg.check_exhaustive()?;
    let (n, k) = (cfg.n, cfg.dist.len());
    let offsets = length_offsets(k, n);
    let words = offsets[n + 1];
    let log_px = input_log_probs(&cfg.dist, n);

    // Per-input tallies are reduced in input order so the sum is
    // reproducible regardless of scheduling.
    let chunk = 64usize;
    let partials: Vec<(Vec<f64>, Vec<f64>)> = log_px
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, lps)| {
            let mut ez = vec![0.0; words];
            let mut ezlnz = vec![0.0; words];
            let mut counts = vec![0u32; words];
            let mut touched = Vec::new();
            let mut x = Vec::with_capacity(n);
            for (i, &lp) in lps.iter().enumerate() {
                decode_word(c * chunk + i, n, k, &mut x);
                tally_subsequences(&x, k, &offsets, &mut counts, &mut touched);
                let px = lp.exp();
                for &idx in &touched {
                    let z = f64::from(counts[idx]);
                    ez[idx] += px * z;
                    ezlnz[idx] += px * z * z.ln();
                    counts[idx] = 0;
                }
                touched.clear();
            }
            (ez, ezlnz)
        })
        .collect();
    let mut ez = vec![0.0; words];
    let mut ezlnz = vec![0.0; words];
    for (a, b) in partials {
        ez.iter_mut().zip(&a).for_each(|(s, x)| *s += x);
        ezlnz.iter_mut().zip(&b).for_each(|(s, x)| *s += x);
    }

    let mut mi = 0.0;
    for len in 0..=n {
        let weight = cfg.ln_survival(len).exp();
        for idx in offsets[len]..offsets[len + 1] {
            let e = ez[idx];
            if e > 0.0 {
                mi += weight * (ezlnz[idx] - e * e.ln());
            }
        }
    }
    Ok(mi)
}

/// All output words of length `0..=n` over `k` letters.
fn all_outputs(k: usize, n: usize) -> Vec<Vec<Symbol>> {
    let mut out = Vec::new();
    let mut word = Vec::new();
    for len in 0..=n {
        for code in 0..k.pow(len as u32) {
            decode_word(code, len, k, &mut word);
            out.push(word.clone());
        }
    }
    out
}

/// Input log-probabilities, the output words, and one row of `P(z | x)` per input.
type ChannelMatrix = (Vec<f64>, Vec<Vec<Symbol>>, Vec<Vec<f64>>);

/// `P(z | x)` for every input `x` (rows, base-`k` order) and output `z`.
fn channel_matrix(cfg: &ChannelConfig) -> Result<ChannelMatrix> {
    cfg.check_exhaustive()?;
    let (n, k) = (cfg.n, cfg.dist.len());
    let log_px = input_log_probs(&cfg.dist, n);
    let outputs = all_outputs(k, n);
    let rows = (0..log_px.len())
        .into_par_iter()
        .map(|code| {
            let mut x = Vec::with_capacity(n);
            decode_word(code, n, k, &mut x);
            outputs
                .iter()
                .map(|z| {
                    let c = count_subsequences(&x, z, CountMode::Float).log_value;
                    if c.is_zero() {
                        0.0
                    } else {
                        (c.ln_abs() + cfg.ln_survival(z.len())).exp()
                    }
                })
                .collect()
        })
        .collect();
    Ok((log_px, outputs, rows))
}

/// `sum_z P(z | x)` for every input `x`; each is 1 up to rounding.
pub fn channel_row_sums(cfg: &ChannelConfig) -> Result<Vec<f64>> {
    let (_, _, rows) = channel_matrix(cfg)?;
    Ok(rows.iter().map(|r| r.iter().sum()).collect())
}

fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `I = H(zeta) - H(zeta | X)` from the full joint law of input and output.
pub fn exact_mutual_information_direct(cfg: &ChannelConfig) -> Result<f64> {
    let (log_px, outputs, rows) = channel_matrix(cfg)?;
    let mut pz = vec![0.0; outputs.len()];
    let mut h_cond = 0.0;
    for (lp, row) in log_px.iter().zip(&rows) {
        let px = lp.exp();
        let mut h_row = 0.0;
        for (acc, &p) in pz.iter_mut().zip(row) {
            *acc += px * p;
            h_row += entropy_term(p);
        }
        h_cond += px * h_row;
    }
    let h_out: f64 = pz.iter().map(|&p| entropy_term(p)).sum();
    Ok(h_out - h_cond)
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub value: LogNum,
    pub stderr: LogNum,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountMoments {
    pub trials: usize,
    /// `E[Z]`.
    pub e_z: Estimate,
    /// `E[Z ln Z]` (with `0 ln 0 = 0`).
    pub e_zlogz: Estimate,
}

/// Mean and standard error of `values * e^{shift}` computed on the rescaled
/// values (all at most about 1 in magnitude).
fn scaled_estimate(values: &[f64], shift: f64) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let attach = |x: f64| {
        let l = LogNum::from_f64(x);
        if l.is_zero() {
            l
        } else {
            LogNum::new(l.sign(), l.ln_abs() + shift)
        }
    };
    Estimate {
        value: attach(mean),
        stderr: attach((var / n).sqrt()),
    }
}

/// Estimates `E[Z]` and `E[Z ln Z]` for `Z = Z_X(w)` from `trials` random
/// texts, with `Z ln Z` formed in log-space.
pub fn mc_count_moment(
    dist: &SourceDist,
    pattern: &Pattern,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<CountMoments> {
    mc_count_moment_with_workers(dist, pattern, n, trials, seed, 1)
}

pub fn mc_count_moment_with_workers(
    dist: &SourceDist,
    pattern: &Pattern,
    n: usize,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<CountMoments> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let zero = Estimate {
        value: LogNum::ZERO,
        stderr: LogNum::ZERO,
    };
    if pattern.len() > n {
        return Ok(CountMoments {
            trials,
            e_z: zero,
            e_zlogz: zero,
        });
    }
    let zs = sample_log_counts(dist, pattern, n, trials, seed, workers)?;
    let shift = zs
        .iter()
        .filter(|z| !z.is_zero())
        .map(|z| z.ln_abs())
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Ok(CountMoments {
            trials,
            e_z: zero,
            e_zlogz: zero,
        });
    }
    let scaled = |z: &LogNum| {
        if z.is_zero() {
            0.0
        } else {
            (z.ln_abs() - shift).exp()
        }
    };
    let z_vals: Vec<f64> = zs.iter().map(scaled).collect();
    let zlnz_vals: Vec<f64> = zs
        .iter()
        .map(|z| {
            if z.is_zero() {
                0.0
            } else {
                scaled(z) * z.ln_abs()
            }
        })
        .collect();
    Ok(CountMoments {
        trials,
        e_z: scaled_estimate(&z_vals, shift),
        e_zlogz: scaled_estimate(&zlnz_vals, shift),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MiEstimate {
    /// Nats.
    pub mi: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Unbiased Monte Carlo estimate of `I = E[ln P(zeta | X) / P(zeta)]`.
///
/// Each trial draws `x` from the source and `z` from the channel; the output
/// law is available in closed form, `P(z) = d^{n-k} (1-d)^k C(n, k) p_z`
/// with `k = |z|`, so only `Z_x(z)` has to be counted.
pub fn mc_mutual_information(
    cfg: &ChannelConfig,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<MiEstimate> {
    use rand::Rng;
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let n = cfg.n;
    let vals: Vec<f64> = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map_init(
                || {
                    (
                        Vec::<Symbol>::with_capacity(n),
                        Vec::<Symbol>::with_capacity(n),
                    )
                },
                |(x, z), t| {
                    let s = derive_seed(seed, t);
                    fill_text(&cfg.dist, n, s, x);
                    let mut rng = seeded_rng(derive_seed(s, 1));
                    z.clear();
                    z.extend(x.iter().copied().filter(|_| !rng.gen_bool(cfg.d)));
                    let zx = SubsequenceCounter::new(z).count_float(x);
                    let k = z.len() as i64;
                    let ln_ez = log_binomial(n as i64, k).ln_abs() + cfg.dist.log_prob_of(z);
                    zx.ln_abs() - ln_ez
                },
            )
            .collect()
    });
    let m = trials as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = if trials > 1 {
        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(MiEstimate {
        mi: mean,
        stderr: (var / m).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(probs: &str, n: usize, d: f64) -> ChannelConfig {
        ChannelConfig::new(SourceDist::parse(None, probs).unwrap(), n, d).unwrap()
    }

    #[test]
    fn single_letter_is_an_erasure_channel() {
        for d in [0.1, 0.5, 0.8] {
            let c = cfg("0.5,0.5", 1, d);
            let want = (1.0 - d) * std::f64::consts::LN_2;
            assert!((exact_mutual_information_via_counts(&c).unwrap() - want).abs() < 1e-14);
            assert!((exact_mutual_information_direct(&c).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn formulas_agree_at_example_points() {
        for (probs, n, d) in [("0.5,0.5", 6, 0.5), ("0.7,0.3", 4, 0.3)] {
            let c = cfg(probs, n, d);
            let a = exact_mutual_information_via_counts(&c).unwrap();
            let b = exact_mutual_information_direct(&c).unwrap();
            assert!((a - b).abs() < 1e-9, "{probs} n={n} d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn rows_are_distributions() {
        let c = cfg("0.7,0.3", 5, 0.35);
        for s in channel_row_sums(&c).unwrap() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let d = SourceDist::parse(None, "0.5,0.5").unwrap();
        assert!(ChannelConfig::new(d.clone(), 3, 0.0).is_err());
        assert!(ChannelConfig::new(d.clone(), 3, 1.0).is_err());
        assert!(ChannelConfig::new(d.clone(), 0, 0.5).is_err());
        let big = ChannelConfig::new(d, 13, 0.5).unwrap();
        assert!(matches!(
            exact_mutual_information_via_counts(&big),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn longer_pattern_has_zero_moments() {
        let d = SourceDist::parse(None, "0.5,0.5").unwrap();
        let w = Pattern::parse("abab", &d).unwrap();
        let r = mc_count_moment(&d, &w, 3, 10, 1).unwrap();
        assert!(r.e_z.value.is_zero() && r.e_zlogz.value.is_zero());
    }

    #[test]
    fn mc_mutual_information_is_close_to_exact() {
        let c = cfg("0.5,0.5", 6, 0.4);
        let exact = exact_mutual_information_direct(&c).unwrap();
        let mc = mc_mutual_information(&c, 40_000, 3, 1).unwrap();
        assert!((mc.mi - exact).abs() < 4.0 * mc.stderr, "{mc:?} vs {exact}");
    }
}
