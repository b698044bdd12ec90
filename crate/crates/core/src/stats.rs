//! Sample moments and the one-sample Kolmogorov–Smirnov test against the
//! standard normal law.

use serde::Serialize;

/// Asymptotic 5% critical value coefficient of the one-sample KS statistic.
pub const KS_COEFF_5PCT: f64 = 1.358;

/// `Phi(x)` via the complementary error function (accurate in both tails).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `1.358 / sqrt(N)`.
pub fn ks_critical_5pct(n: usize) -> f64 {
    KS_COEFF_5PCT / (n as f64).sqrt()
}

/// `sup_x |F_N(x) - Phi(x)|` for a sample sorted ascending.
///
/// Ties need no special handling: among equal values only the first index
/// can attain the lower deviation and only the last the upper one.
pub fn ks_statistic_sorted(sorted: &[f64]) -> f64 {
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let below = f - i as f64 / n;
            let above = (i + 1) as f64 / n - f;
            below.max(above)
        })
        .fold(0.0, f64::max)
}

/// [`ks_statistic_sorted`] on an unsorted sample.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_statistic_sorted(&sorted)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (`N - 1`) sample variance; zero for a single value.
    pub variance: f64,
    /// `m_3 / m_2^{3/2}` from central moments.
    pub skewness: f64,
    /// `m_4 / m_2^2 - 3`.
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(sample: &[f64]) -> Self {
        let count = sample.len();
        if count == 0 {
            return Moments::default();
        }
        let n = count as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in sample {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let variance = if count > 1 { m2 / (n - 1.0) } else { 0.0 };
        let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Moments {
            count,
            mean,
            variance,
            skewness,
            excess_kurtosis,
        }
    }
}
