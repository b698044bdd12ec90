//! First and second moments of the subsequence count and the bounds that
//! control them.

pub mod binom;
pub mod hypergeom;
pub mod special;
pub mod variance;

use serde::Serialize;

pub use binom::{binomial_exact, ln_binomial_real, log_binomial, BinomialTable};
pub use hypergeom::{hg_sign_bias, pi_row, HgSignBias};
pub use special::{
    alternating_sigma1_exact, alternating_tau, alternating_tau_exact,
    random_pattern_expected_sigma1, RandomPatternSigma, SignedSum,
};
pub use variance::{
    coeff_c, coeff_c_exact, expected_count, expected_count_exact, lk_lower_bound,
    lk_lower_bound_exact, residual_bound, residual_bound_exact, sigma1_sq, sigma1_sq_exact,
    sigma1_sq_scaled, tau_sq, tau_sq_exact, xi_bound, xi_bound_exact, Arithmetic, ResidualBound,
    EXACT_MAX_N,
};

use crate::error::Result;
use crate::lognum::LogNum;
use crate::source::{proportion_distance, Pattern, SourceDist, MAX_DENOMINATOR};

/// Only `xi_1..xi_{ELL_MAX}` are reported.
pub const ELL_MAX: usize = 64;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReportConfig {
    /// Proxy for "m^3 = o(n)" and "m^2 = o(n ||q - p||^2)": `m^3 <= delta n`
    /// or `m^2 <= delta n ||q - p||^2`.
    pub delta: f64,
    /// Cutoff on `m^2 C(n-1, m-1)^2 / sigma_1^2`.
    pub ratio_threshold: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            delta: 0.01,
            ratio_threshold: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeHint {
    NormalProved,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub m: usize,
    pub b_const: f64,
    pub proportion_distance: f64,
    /// `E[Z]`.
    pub mean_z: LogNum,
    pub sigma1_sq: LogNum,
    /// `p_w^2 sigma_1^2`.
    pub var_z_approx: LogNum,
    /// `xi_l` for `l = 1..=min(m, 64)`.
    pub xi_bounds: Vec<LogNum>,
    pub lk_lower: LogNum,
    pub residual_bound: ResidualBound,
    /// `m^2 C(n-1, m-1)^2 / sigma_1^2`.
    pub ratio_condition: f64,
    pub regime_hint: RegimeHint,
    /// Exact rational companions, present for `n <= 500`.
    pub mean_z_exact: Option<String>,
    pub sigma1_sq_exact: Option<String>,
}

impl MomentReport {
    pub fn compute(
        dist: &SourceDist,
        pattern: &Pattern,
        n: usize,
        cfg: &ReportConfig,
    ) -> Result<Self> {
        let m = pattern.len();
        let mean_z = expected_count(dist, pattern, n)?;
        let sigma1 = sigma1_sq(dist, pattern, n)?;
        let var_z_approx = sigma1 * LogNum::from_ln(2.0 * pattern.log_pw());
        let xi_bounds = (1..=m.min(ELL_MAX))
            .map(|l| xi_bound(l, dist, n, m))
            .collect::<Result<Vec<_>>>()?;
        let lk_lower = lk_lower_bound(dist, pattern, n)?;
        let residual = residual_bound(dist, n, m)?;
        let dist_pq = proportion_distance(pattern, dist)?;

        let c2 = log_binomial(n as i64 - 1, m as i64 - 1).powi(2);
        let mf = m as f64;
        let ratio_condition = if sigma1.is_zero() {
            f64::INFINITY
        } else {
            (LogNum::from_f64(mf * mf) * c2).ratio(sigma1)
        };
        let nf = n as f64;
        let t2a = mf.powi(3) <= cfg.delta * nf;
        let tka = dist_pq > 0.0 && mf * mf <= cfg.delta * nf * dist_pq * dist_pq;
        let regime_hint = if ratio_condition <= cfg.ratio_threshold && (t2a || tka) {
            RegimeHint::NormalProved
        } else {
            RegimeHint::Unknown
        };

        let (mean_z_exact, sigma1_sq_exact) = if n <= EXACT_MAX_N {
            let exact = dist.rationalize(MAX_DENOMINATOR)?;
            (
                Some(expected_count_exact(&exact, pattern, n)?.to_string()),
                Some(sigma1_sq_exact(&exact, pattern, n)?.to_string()),
            )
        } else {
            (None, None)
        };

        Ok(MomentReport {
            n,
            m,
            b_const: dist.b_const(),
            proportion_distance: dist_pq,
            mean_z,
            sigma1_sq: sigma1,
            var_z_approx,
            xi_bounds,
            lk_lower,
            residual_bound: residual,
            ratio_condition,
            regime_hint,
            mean_z_exact,
            sigma1_sq_exact,
        })
    }
}
