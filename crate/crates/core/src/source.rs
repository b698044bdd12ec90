//! Alphabets, memoryless sources, patterns, texts and seeded text generation.
//!
//! Symbols are small integer indices into an [`Alphabet`]; characters only
//! appear at the I/O boundary.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use serde::Serialize;

use crate::error::{Error, Result};

/// Index of a letter in its alphabet.
pub type Symbol = u8;

/// Alphabets larger than this use the alias sampler.
const CUMULATIVE_SCAN_MAX: usize = 4;

/// Default denominator bound when probabilities are rationalized.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: &str) -> Result<Self> {
        let symbols: Vec<char> = symbols.chars().collect();
        if symbols.len() < 2 {
            return Err(Error::Alphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > usize::from(Symbol::MAX) + 1 {
            return Err(Error::Alphabet(format!(
                "at most 256 symbols supported, got {}",
                symbols.len()
            )));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(Error::Alphabet(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// `a, b, c, ...` with `size` letters.
    pub fn latin(size: usize) -> Result<Self> {
        if size > 26 {
            return Err(Error::Alphabet(format!(
                "no default alphabet of size {size}"
            )));
        }
        Self::new(&"abcdefghijklmnopqrstuvwxyz"[..size])
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Option<Symbol> {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .map(|i| i as Symbol)
    }

    pub fn symbol(&self, idx: Symbol) -> char {
        self.symbols[usize::from(idx)]
    }

    pub fn encode(&self, s: &str) -> Result<Vec<Symbol>> {
        s.chars()
            .map(|c| self.index_of(c).ok_or(Error::UnknownSymbol(c)))
            .collect()
    }

    pub fn decode(&self, word: &[Symbol]) -> String {
        word.iter().map(|&x| self.symbol(x)).collect()
    }
}

#[derive(Clone, Debug)]
enum Sampler {
    /// Upper thresholds on a uniform `u64` for every symbol but the last.
    Cumulative(Vec<u64>),
    Alias(WeightedAliasIndex<f64>),
}

/// Memoryless source: i.i.d. letters with `P(x = a) = p_a`.
#[derive(Clone, Debug)]
pub struct SourceDist {
    alphabet: Alphabet,
    probs: Vec<f64>,
    b_const: f64,
    sampler: Sampler,
}

impl SourceDist {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.len() {
            return Err(Error::Probabilities(format!(
                "{} probabilities for an alphabet of {} symbols",
                probs.len(),
                alphabet.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Probabilities(format!(
                "every probability must lie in (0, 1), got {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Probabilities(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let p_min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        let sampler = if probs.len() > CUMULATIVE_SCAN_MAX {
            let alias = WeightedAliasIndex::new(probs.clone())
                .map_err(|e| Error::Probabilities(e.to_string()))?;
            Sampler::Alias(alias)
        } else {
            let mut acc = 0.0;
            let thresholds = probs[..probs.len() - 1]
                .iter()
                .map(|p| {
                    acc += p;
                    // 2^64 as f64; the cast saturates at u64::MAX.
                    (acc * 18_446_744_073_709_551_616.0) as u64
                })
                .collect();
            Sampler::Cumulative(thresholds)
        };
        Ok(SourceDist {
            alphabet,
            probs,
            b_const: 1.0 / p_min - 1.0,
            sampler,
        })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        Self::new(alphabet, vec![1.0 / k as f64; k]).expect("uniform source is valid")
    }

    /// Parses `"0.5,0.5"`; the alphabet defaults to `a, b, ...`.
    pub fn parse(alphabet: Option<&str>, probs: &str) -> Result<Self> {
        let probs = probs
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Probabilities(format!("cannot parse {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let alphabet = match alphabet {
            Some(a) => Alphabet::new(a)?,
            None => Alphabet::latin(probs.len())?,
        };
        Self::new(alphabet, probs)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: Symbol) -> f64 {
        self.probs[usize::from(a)]
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `B = 1/min_a p_a - 1`.
    pub fn b_const(&self) -> f64 {
        self.b_const
    }

    /// `ln prod_j p_{w_j}`.
    pub fn log_prob_of(&self, word: &[Symbol]) -> f64 {
        word.iter().map(|&a| self.prob(a).ln()).sum()
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Symbol {
        match &self.sampler {
            Sampler::Cumulative(thresholds) => {
                let u = rng.next_u64();
                thresholds
                    .iter()
                    .position(|&t| u < t)
                    .unwrap_or(thresholds.len()) as Symbol
            }
            Sampler::Alias(alias) => alias.sample(rng) as Symbol,
        }
    }

    /// Exact rational version of this source, with every probability
    /// approximated by the closest fraction with denominator at most
    /// `max_den`.
    pub fn rationalize(&self, max_den: u64) -> Result<ExactDist> {
        let probs = self
            .probs
            .iter()
            .map(|&p| best_rational(p, max_den))
            .collect();
        ExactDist::new(probs)
    }
}

/// Source distribution with exact rational probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDist {
    probs: Vec<BigRational>,
}

impl ExactDist {
    pub fn new(probs: Vec<BigRational>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Probabilities("need at least 2 symbols".into()));
        }
        if probs
            .iter()
            .any(|p| *p <= BigRational::zero() || *p >= BigRational::one())
        {
            return Err(Error::Probabilities(
                "every rational probability must lie in (0, 1)".into(),
            ));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::Probabilities(format!(
                "rationalized probabilities sum to {total}, not exactly 1"
            )));
        }
        Ok(ExactDist { probs })
    }

    pub fn from_fractions(fracs: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            fracs
                .iter()
                .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn prob(&self, a: Symbol) -> &BigRational {
        &self.probs[usize::from(a)]
    }

    /// `prod_j p_{w_j}`.
    pub fn prob_of(&self, word: &[Symbol]) -> BigRational {
        word.iter()
            .fold(BigRational::one(), |acc, &a| acc * self.prob(a))
    }

    /// `B = 1/min_a p_a - 1`.
    pub fn b_const(&self) -> BigRational {
        let p_min = self.probs.iter().min().expect("non-empty");
        p_min.recip() - BigRational::one()
    }

    /// Human-readable `p = n/d` list, echoed back by the CLI.
    pub fn describe(&self) -> Vec<String> {
        self.probs.iter().map(|p| p.to_string()).collect()
    }
}

/// Closest fraction to `x` with denominator at most `max_den`
/// (continued-fraction convergents plus the best semiconvergent).
pub fn best_rational(x: f64, max_den: u64) -> BigRational {
    assert!(x.is_finite() && max_den >= 1);
    let neg = x < 0.0;
    let target = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut frac = target;
    loop {
        let a = frac.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let q2 = match a.checked_mul(q1).and_then(|v| v.checked_add(q0)) {
            Some(q) if q <= max_den => q,
            _ => {
                // Best semiconvergent that still fits.
                let k = (max_den - q0).checked_div(q1).unwrap_or(0);
                let (ps, qs) = (p0 + k * p1, q0 + k * q1);
                let err_semi = (ps as f64 / qs as f64 - target).abs();
                let err_conv = (p1 as f64 / q1 as f64 - target).abs();
                if qs > 0 && err_semi < err_conv {
                    (p1, q1) = (ps, qs);
                }
                break;
            }
        };
        let p2 = a * p1 + p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let rem = frac - a as f64;
        if rem.abs() < 1e-15 || (p1 as f64 / q1 as f64 - target).abs() < 1e-16 * target {
            break;
        }
        frac = 1.0 / rem;
    }
    let r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}

/// The word `w_1 ... w_m` together with its probability under the source it
/// was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    word: Vec<Symbol>,
    alphabet_size: usize,
    counts: Vec<usize>,
    log_pw: f64,
}

impl Pattern {
    pub fn new(word: Vec<Symbol>, dist: &SourceDist) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let k = dist.len();
        let mut counts = vec![0usize; k];
        for &a in &word {
            let slot = counts.get_mut(usize::from(a)).ok_or_else(|| {
                Error::OutOfRange(format!("symbol index {a} for alphabet size {k}"))
            })?;
            *slot += 1;
        }
        Ok(Pattern {
            log_pw: dist.log_prob_of(&word),
            word,
            alphabet_size: k,
            counts,
        })
    }

    pub fn parse(s: &str, dist: &SourceDist) -> Result<Self> {
        Self::new(dist.alphabet().encode(s)?, dist)
    }

    /// `a^m`.
    pub fn constant(symbol: Symbol, m: usize, dist: &SourceDist) -> Result<Self> {
        Self::new(vec![symbol; m], dist)
    }

    /// `0101...` over the first two symbols.
    pub fn alternating(m: usize, dist: &SourceDist) -> Result<Self> {
        Self::new((0..m).map(|j| (j % 2) as Symbol).collect(), dist)
    }

    /// A pattern drawn from the source itself.
    pub fn random(m: usize, dist: &SourceDist, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        Self::new((0..m).map(|_| dist.sample(&mut rng)).collect(), dist)
    }

    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// `ln p_w`.
    pub fn log_pw(&self) -> f64 {
        self.log_pw
    }

    pub fn letter_count(&self, a: Symbol) -> usize {
        self.counts[usize::from(a)]
    }

    /// `q_a = #{j : w_j = a} / m`, exactly.
    pub fn proportions_exact(&self) -> Vec<Ratio<u64>> {
        let m = self.word.len() as u64;
        self.counts
            .iter()
            .map(|&c| Ratio::new(c as u64, m))
            .collect()
    }

    pub fn proportions(&self) -> Vec<f64> {
        let m = self.word.len() as f64;
        self.counts.iter().map(|&c| c as f64 / m).collect()
    }

    /// The repeated symbol if the pattern is `a^m`.
    pub fn constant_symbol(&self) -> Option<Symbol> {
        let first = self.word[0];
        self.word.iter().all(|&a| a == first).then_some(first)
    }

    fn check_dist(&self, dist: &SourceDist) -> Result<()> {
        if self.alphabet_size != dist.len() {
            return Err(Error::AlphabetMismatch {
                pattern: self.alphabet_size,
                dist: dist.len(),
            });
        }
        Ok(())
    }
}

impl AsRef<[Symbol]> for Pattern {
    fn as_ref(&self) -> &[Symbol] {
        &self.word
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Text {
    letters: Vec<Symbol>,
}

impl Text {
    pub fn new(letters: Vec<Symbol>) -> Self {
        Text { letters }
    }

    pub fn parse(s: &str, alphabet: &Alphabet) -> Result<Self> {
        Ok(Text::new(alphabet.encode(s)?))
    }

    pub fn letters(&self) -> &[Symbol] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl AsRef<[Symbol]> for Text {
    fn as_ref(&self) -> &[Symbol] {
        &self.letters
    }
}

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed `hash64(master_seed, index)`; independent of execution
/// order, so parallel runs reproduce sequential ones.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fills `buf` with `n` letters drawn from `dist` using the stream for `seed`.
pub fn fill_text(dist: &SourceDist, n: usize, seed: u64, buf: &mut Vec<Symbol>) {
    let mut rng = seeded_rng(seed);
    buf.clear();
    buf.extend((0..n).map(|_| dist.sample(&mut rng)));
}

/// Draws `n` i.i.d. letters; a pure function of `(dist, n, seed)`.
pub fn generate_text(dist: &SourceDist, n: usize, seed: u64) -> Text {
    let mut letters = Vec::with_capacity(n);
    fill_text(dist, n, seed, &mut letters);
    Text::new(letters)
}

/// Counts only the occurrences of `symbol` in a fresh text, without storing
/// it. Draws the same stream as [`generate_text`].
pub fn count_symbol_in_generated(dist: &SourceDist, n: usize, seed: u64, symbol: Symbol) -> usize {
    let mut rng = seeded_rng(seed);
    (0..n).filter(|_| dist.sample(&mut rng) == symbol).count()
}

/// Euclidean distance `||q - p||` between the letter proportions of the
/// pattern and the source probabilities.
pub fn proportion_distance(pattern: &Pattern, dist: &SourceDist) -> Result<f64> {
    pattern.check_dist(dist)?;
    Ok(pattern
        .proportions()
        .iter()
        .zip(dist.probs())
        .map(|(q, p)| (q - p) * (q - p))
        .sum::<f64>()
        .sqrt())
}

pub(crate) fn ensure_same_alphabet(pattern: &Pattern, dist: &SourceDist) -> Result<()> {
    pattern.check_dist(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(p0: f64) -> SourceDist {
        SourceDist::new(Alphabet::new("ab").unwrap(), vec![p0, 1.0 - p0]).unwrap()
    }

    fn freq0(dist: &SourceDist, n: usize, seed: u64) -> f64 {
        let t = generate_text(dist, n, seed);
        t.letters().iter().filter(|&&a| a == 0).count() as f64 / n as f64
    }

    #[test]
    fn empty_text() {
        let t = generate_text(&binary(0.5), 0, 1);
        assert!(t.is_empty());
    }

    #[test]
    fn uniform_binary_frequency() {
        // 4 sigma band, sigma = 0.5 / sqrt(n).
        let f = freq0(&binary(0.5), 1_000_000, 7);
        assert!((f - 0.5).abs() <= 0.002, "{f}");
    }

    #[test]
    fn skewed_binary_frequency() {
        let f = freq0(&binary(0.9), 100_000, 3);
        assert!((f - 0.9).abs() <= 0.004, "{f}");
    }

    #[test]
    fn generation_is_deterministic() {
        let d = SourceDist::parse(None, "0.1,0.2,0.3,0.15,0.25").unwrap();
        assert_eq!(generate_text(&d, 1000, 42), generate_text(&d, 1000, 42));
        assert_ne!(generate_text(&d, 1000, 42), generate_text(&d, 1000, 43));
    }

    #[test]
    fn symbol_count_shortcut_matches_text() {
        let d = binary(0.3);
        let t = generate_text(&d, 5000, 11);
        let direct = t.letters().iter().filter(|&&a| a == 1).count();
        assert_eq!(count_symbol_in_generated(&d, 5000, 11, 1), direct);
    }

    #[test]
    fn proportion_distance_examples() {
        let d = binary(0.5);
        let ab = Pattern::parse("ab", &d).unwrap();
        assert_eq!(proportion_distance(&ab, &d).unwrap(), 0.0);
        let aa = Pattern::parse("aa", &d).unwrap();
        assert!(
            (proportion_distance(&aa, &d).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15
        );
        let d = binary(1.0 / 3.0);
        let aab = Pattern::parse("aab", &d).unwrap();
        let expected = 2f64.sqrt() / 3.0;
        assert!((proportion_distance(&aab, &d).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn proportion_distance_rejects_mismatched_alphabet() {
        let d3 = SourceDist::parse(None, "0.2,0.3,0.5").unwrap();
        let p = Pattern::parse("abc", &d3).unwrap();
        assert!(matches!(
            proportion_distance(&p, &binary(0.5)),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn pattern_fields() {
        let d = binary(0.3);
        let p = Pattern::parse("aba", &d).unwrap();
        let expected = 0.3f64.ln() * 2.0 + 0.7f64.ln();
        assert!((p.log_pw() - expected).abs() <= 1e-12 * expected.abs());
        let q = p.proportions_exact();
        assert_eq!(q[0] + q[1], Ratio::from_integer(1));
        assert_eq!(q[0], Ratio::new(2, 3));
        assert_eq!(p.constant_symbol(), None);
        assert_eq!(
            Pattern::parse("bbb", &d).unwrap().constant_symbol(),
            Some(1)
        );
        assert!(matches!(Pattern::parse("", &d), Err(Error::EmptyPattern)));
        assert!(matches!(
            Pattern::parse("abz", &d),
            Err(Error::UnknownSymbol('z'))
        ));
    }

    #[test]
    fn invalid_sources_rejected() {
        let ab = Alphabet::new("ab").unwrap();
        assert!(SourceDist::new(ab.clone(), vec![0.5, 0.6]).is_err());
        assert!(SourceDist::new(ab.clone(), vec![1.0, 0.0]).is_err());
        assert!(SourceDist::new(ab, vec![1.0]).is_err());
        assert!(Alphabet::new("a").is_err());
        assert!(Alphabet::new("aba").is_err());
    }

    #[test]
    fn b_constant() {
        let d = SourceDist::parse(None, "0.25,0.75").unwrap();
        assert_eq!(d.b_const(), 3.0);
        let e = d.rationalize(MAX_DENOMINATOR).unwrap();
        assert_eq!(e.b_const(), BigRational::from_integer(3.into()));
    }

    #[test]
    fn rationalization_recovers_decimals() {
        let d = SourceDist::parse(None, "0.7,0.3").unwrap();
        let e = d.rationalize(MAX_DENOMINATOR).unwrap();
        assert_eq!(e.describe(), vec!["7/10", "3/10"]);
        let d = SourceDist::parse(None, "0.3333333333333333,0.6666666666666667").unwrap();
        let e = d.rationalize(MAX_DENOMINATOR).unwrap();
        assert_eq!(e.describe(), vec!["1/3", "2/3"]);
        assert_eq!(
            best_rational(std::f64::consts::PI, 1000).to_string(),
            "355/113"
        );
    }

    #[test]
    fn alias_sampler_frequencies() {
        let d = SourceDist::parse(None, "0.1,0.2,0.3,0.15,0.25").unwrap();
        let n = 200_000;
        let t = generate_text(&d, n, 5);
        for (a, &p) in d.probs().iter().enumerate() {
            let f = t.letters().iter().filter(|&&x| usize::from(x) == a).count() as f64 / n as f64;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() < 5.0 * sd, "symbol {a}: {f} vs {p}");
        }
    }
}
