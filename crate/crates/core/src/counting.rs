//! The number `Z` of occurrences of a pattern as a (not necessarily
//! contiguous) subsequence of a text.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lognum::LogNum;
use crate::moments::binom::{binomial_exact, ln_biguint, log_binomial};
use crate::source::Symbol;

/// Largest `C(n, m)` the subset enumeration accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Float cells are rescaled by `RESCALE` as soon as one exceeds it.
const RESCALE: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountValue {
    /// Present in exact mode.
    #[serde(serialize_with = "serialize_opt_decimal")]
    pub exact: Option<BigUint>,
    pub log_value: LogNum,
}

fn serialize_opt_decimal<S: serde::Serializer>(
    v: &Option<BigUint>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_none(),
    }
}

impl CountValue {
    fn from_exact(x: BigUint) -> Self {
        let log_value = if x.is_zero() {
            LogNum::ZERO
        } else {
            LogNum::from_ln(ln_biguint(&x))
        };
        CountValue {
            exact: Some(x),
            log_value,
        }
    }

    fn from_log(log_value: LogNum) -> Self {
        CountValue {
            exact: None,
            log_value,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_value.is_zero()
    }
}

/// Reusable prefix dynamic program for one fixed pattern.
///
/// For each symbol the pattern positions carrying it are stored in
/// descending order, so a text letter touches only the cells it can update.
#[derive(Clone, Debug)]
pub struct SubsequenceCounter {
    m: usize,
    positions: Vec<Vec<usize>>,
    cells: Vec<f64>,
}

impl SubsequenceCounter {
    pub fn new(word: &[Symbol]) -> Self {
        let alphabet = word.iter().map(|&a| usize::from(a) + 1).max().unwrap_or(0);
        let mut positions = vec![Vec::new(); alphabet];
        for (j, &a) in word.iter().enumerate().rev() {
            positions[usize::from(a)].push(j + 1);
        }
        SubsequenceCounter {
            m: word.len(),
            positions,
            cells: vec![0.0; word.len() + 1],
        }
    }

    /// `Z` in log-space via doubles with the rescaling guard.
    pub fn count_float(&mut self, text: &[Symbol]) -> LogNum {
        let cells = &mut self.cells;
        cells.fill(0.0);
        cells[0] = 1.0;
        let mut shift = 0.0f64;
        for &x in text {
            let Some(js) = self.positions.get(usize::from(x)) else {
                continue;
            };
            for &j in js {
                let v = cells[j] + cells[j - 1];
                cells[j] = v;
                if v > RESCALE {
                    for c in cells.iter_mut() {
                        *c /= RESCALE;
                    }
                    shift += RESCALE.ln();
                }
            }
        }
        let z = cells[self.m];
        if z == 0.0 {
            LogNum::ZERO
        } else {
            LogNum::from_ln(z.ln() + shift)
        }
    }

    /// `Z` exactly with arbitrary-precision cells.
    pub fn count_exact(&self, text: &[Symbol]) -> BigUint {
        let mut cells = vec![BigUint::zero(); self.m + 1];
        cells[0] = BigUint::from(1u32);
        for &x in text {
            let Some(js) = self.positions.get(usize::from(x)) else {
                continue;
            };
            for &j in js {
                let (lo, hi) = cells.split_at_mut(j);
                hi[0] += &lo[j - 1];
            }
        }
        cells.swap_remove(self.m)
    }
}

/// `Z = #{i_1 < ... < i_m : text[i_k] = word[k]}` by the `O(nm)` prefix
/// dynamic program. `m > n` gives zero; the empty pattern occurs once.
pub fn count_subsequences(
    text: impl AsRef<[Symbol]>,
    word: impl AsRef<[Symbol]>,
    mode: CountMode,
) -> CountValue {
    let mut counter = SubsequenceCounter::new(word.as_ref());
    match mode {
        CountMode::Exact => CountValue::from_exact(counter.count_exact(text.as_ref())),
        CountMode::Float => CountValue::from_log(counter.count_float(text.as_ref())),
    }
}

/// `Z` by enumerating every index set of size `m`; a literal oracle for
/// tests, limited to `C(n, m) <= 10^7`.
pub fn brute_force_count(text: impl AsRef<[Symbol]>, word: impl AsRef<[Symbol]>) -> Result<u64> {
    let (text, word) = (text.as_ref(), word.as_ref());
    let (n, m) = (text.len(), word.len());
    if m > n {
        return Ok(0);
    }
    let subsets = binomial_exact(n as u64, m as u64);
    if subsets > BigUint::from(BRUTE_FORCE_LIMIT) {
        return Err(Error::TooLarge {
            what: "C(n, m)",
            size: subsets.to_string(),
            limit: BRUTE_FORCE_LIMIT.to_string(),
        });
    }
    // Lexicographic walk over alpha = (alpha_1 < ... < alpha_m).
    let mut alpha: Vec<usize> = (0..m).collect();
    let mut total = 0u64;
    loop {
        if alpha.iter().zip(word).all(|(&i, &w)| text[i] == w) {
            total += 1;
        }
        let Some(k) = (0..m).rev().find(|&k| alpha[k] < n - m + k) else {
            return Ok(total);
        };
        alpha[k] += 1;
        for t in k + 1..m {
            alpha[t] = alpha[t - 1] + 1;
        }
    }
}

/// `Z` for the constant pattern `a^m`: `C(N_a, m)` where `N_a` counts `a`
/// in the text.
pub fn constant_pattern_count(
    text: impl AsRef<[Symbol]>,
    symbol: Symbol,
    m: usize,
    mode: CountMode,
) -> CountValue {
    let na = text.as_ref().iter().filter(|&&x| x == symbol).count();
    constant_pattern_count_from_occurrences(na, m, mode)
}

/// `C(N_a, m)` given `N_a` directly.
pub fn constant_pattern_count_from_occurrences(na: usize, m: usize, mode: CountMode) -> CountValue {
    match mode {
        CountMode::Exact => CountValue::from_exact(binomial_exact(na as u64, m as u64)),
        CountMode::Float => CountValue::from_log(log_binomial(na as i64, m as i64)),
    }
}
