//! Binomial coefficients: log-space for scale, big integers for oracles.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::lognum::LogNum;

/// Below this `min(k, n - k)` the log binomial is a direct sum of logs.
const DIRECT_SUM_MAX: i64 = 256;

/// `ln C(n, k)` as a [`LogNum`]; zero outside `0 <= k <= n`.
pub fn log_binomial(n: i64, k: i64) -> LogNum {
    if k < 0 || n < 0 || k > n {
        return LogNum::ZERO;
    }
    let kk = k.min(n - k);
    if kk == 0 {
        return LogNum::ONE;
    }
    let ln = if kk <= DIRECT_SUM_MAX {
        let base = (n - kk) as f64;
        (1..=kk)
            .map(|i| ((base + i as f64) / i as f64).ln())
            .sum::<f64>()
    } else {
        ln_binomial_real(n as f64, kk as f64)
    };
    LogNum::from_ln(ln)
}

/// `ln C(x, k) = lnG(x+1) - lnG(x-k+1) - lnG(k+1)` for real `x >= k >= 0`.
pub fn ln_binomial_real(x: f64, k: f64) -> f64 {
    libm::lgamma(x + 1.0) - libm::lgamma(x - k + 1.0) - libm::lgamma(k + 1.0)
}

/// `C(n, k)` exactly; zero outside `0 <= k <= n`.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Signed-index convenience wrapper around [`binomial_exact`].
pub fn binomial_exact_i(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        BigUint::zero()
    } else {
        binomial_exact(n as u64, k as u64)
    }
}

/// `ln x` for arbitrarily large integers (`-inf` for zero).
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit prefix");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn lognum_from_bigint(x: &BigInt) -> LogNum {
    let sign = if x.is_zero() {
        0
    } else if x.is_negative() {
        -1
    } else {
        1
    };
    LogNum::new(sign, ln_biguint(x.magnitude()))
}

pub fn lognum_from_rational(x: &BigRational) -> LogNum {
    if x.is_zero() {
        return LogNum::ZERO;
    }
    let sign = if x.is_negative() { -1 } else { 1 };
    let ln = ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude());
    LogNum::new(sign, ln)
}

/// Pascal triangle of exact binomials `C(r, c)` for `r <= rows`,
/// `c <= cols`.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    cols: usize,
    data: Vec<BigUint>,
}

impl BinomialTable {
    pub fn new(rows: usize, cols: usize) -> Self {
        let width = cols + 1;
        let mut data = vec![BigUint::zero(); (rows + 1) * width];
        for r in 0..=rows {
            data[r * width] = BigUint::one();
            for c in 1..=cols.min(r) {
                let v = &data[(r - 1) * width + c - 1] + &data[(r - 1) * width + c];
                data[r * width + c] = v;
            }
        }
        BinomialTable { cols, data }
    }

    /// `C(r, c)`, zero for negative or out-of-range arguments.
    pub fn get(&self, r: i64, c: i64) -> &BigUint {
        static ZERO: std::sync::OnceLock<BigUint> = std::sync::OnceLock::new();
        let zero = ZERO.get_or_init(BigUint::zero);
        if r < 0 || c < 0 || c > r || c as usize > self.cols {
            return zero;
        }
        let idx = r as usize * (self.cols + 1) + c as usize;
        self.data.get(idx).unwrap_or(zero)
    }
}
