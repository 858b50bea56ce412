//! Expected social-network benefit of an active user and its derivatives.
//!
//! With `n` users whose valuations are i.i.d. from `dist` and a common
//! activity threshold `v`, the number of active peers of one user is
//! binomial with n-1 trials and success probability F(v). The expected log
//! benefit is
//!
//! ```text
//! J(v) = sum_{m=0}^{n-1} C(n-1, m) ln(m + omega0) F(v)^m (1 - F(v))^{n-1-m}
//! ```
//!
//! evaluated exactly, with each term assembled in log space so the sum stays
//! stable for large `n`. The first and second derivatives in `v` follow from
//! telescoped forms of the same sum and are exact as well. For `n` beyond
//! 10^4 the expectation switches to a second-order delta-method
//! approximation around the binomial mean; this is documented behavior, not
//! an accuracy guarantee, and everything in this crate's test envelope uses
//! the exact path.

use serde::{Deserialize, Serialize};

use crate::dist::ValuationDistribution;
use crate::error::{ModelError, Result};
use crate::numeric::{draw_u01, purpose};

/// Largest `n` for which the exact binomial summation is used.
pub const EXACT_SUM_LIMIT: u32 = 10_000;

/// Market-side social parameters: population size, intrinsic-benefit offset,
/// and the valuation distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SocialParams {
    pub n: u32,
    pub omega0: f64,
    pub dist: ValuationDistribution,
}

impl SocialParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ModelError::Config(format!(
                "social.n must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.omega0 > 1.0) || !self.omega0.is_finite() {
            return Err(ModelError::Config(format!(
                "social.omega0 must exceed 1, got {}",
                self.omega0
            )));
        }
        self.dist.validate()
    }

    /// ln(n - 1 + omega0): the benefit when every peer is active.
    pub fn ln_top(&self) -> f64 {
        (self.n as f64 - 1.0 + self.omega0).ln()
    }

    /// ln(omega0): the benefit when no peer is active.
    pub fn ln_bottom(&self) -> f64 {
        self.omega0.ln()
    }

    /// Valuation domain accepted by the benefit operations: valuations live
    /// in [0, vbar] even when the distribution's lower truncation point sits
    /// above zero (F is simply 0 below it).
    fn domain(&self) -> (f64, f64) {
        let (lo, hi) = self.dist.support();
        (lo.min(0.0), hi)
    }

    fn check_domain(&self, v: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if v < lo || v > hi || !v.is_finite() {
            return Err(ModelError::OutOfSupport { v, lo, hi });
        }
        Ok(())
    }
}

/// Exact expectation of ln(k + omega0) for k ~ Binomial(n-1, q), computed by
/// direct summation with log-space terms. Exact endpoint values at q = 0
/// and q = 1.
pub fn expected_benefit_prob(params: &SocialParams, q: f64) -> f64 {
    let k = params.n as usize - 1;
    let w0 = params.omega0;
    if q <= 0.0 {
        return w0.ln();
    }
    if q >= 1.0 {
        return (k as f64 + w0).ln();
    }
    if params.n > EXACT_SUM_LIMIT {
        // Delta method: E ln(X + w0) ~ ln(mu + w0) - var / (2 (mu + w0)^2).
        let mu = k as f64 * q;
        let var = k as f64 * q * (1.0 - q);
        return (mu + w0).ln() - var / (2.0 * (mu + w0) * (mu + w0));
    }
    let lq = q.ln();
    let l1q = (-q).ln_1p();
    let mut ln_c = 0.0f64; // ln C(k, m), updated incrementally
    let mut sum = 0.0f64;
    for m in 0..=k {
        sum += (ln_c + m as f64 * lq + (k - m) as f64 * l1q).exp() * (m as f64 + w0).ln();
        if m < k {
            ln_c += ((k - m) as f64 / (m as f64 + 1.0)).ln();
        }
    }
    sum
}

/// First-derivative core in the activity probability: with
/// L_m = ln(m + omega0) - ln(m - 1 + omega0),
///
/// ```text
/// A(q) = sum_{m=1}^{n-1} m C(n-1, m) L_m q^{m-1} (1-q)^{n-1-m}
/// ```
///
/// so that dJ/dv = A(F(v)) f(v). Strictly positive on (0, 1), with finite
/// limits (n-1) L_1 at q = 0 and (n-1) L_{n-1} at q = 1.
pub fn benefit_derivative_core(params: &SocialParams, q: f64) -> f64 {
    let k = params.n as usize - 1;
    let w0 = params.omega0;
    let l_gap = |m: usize| (m as f64 + w0).ln() - (m as f64 - 1.0 + w0).ln();
    if q <= 0.0 {
        return k as f64 * l_gap(1);
    }
    if q >= 1.0 {
        return k as f64 * l_gap(k);
    }
    let lq = q.ln();
    let l1q = (-q).ln_1p();
    let mut ln_c = 0.0f64; // ln C(k, m) tracked incrementally from m = 0
    let mut sum = 0.0f64;
    for m in 1..=k {
        ln_c += ((k - m + 1) as f64 / m as f64).ln();
        let ln_weight = ln_c + (m as f64).ln() + (m as f64 - 1.0) * lq + (k - m) as f64 * l1q;
        sum += ln_weight.exp() * l_gap(m);
    }
    sum
}

/// Second-derivative core: with the same L_m,
///
/// ```text
/// B(q) = sum_{m=2}^{n-1} m (m-1) C(n-1, m) (L_m - L_{m-1}) q^{m-2} (1-q)^{n-1-m}
/// ```
///
/// so that d2J/dv2 = B(F(v)) f(v)^2 + A(F(v)) f'(v). Negative whenever
/// omega0 > 1 because L_m is decreasing in m.
pub fn benefit_second_derivative_core(params: &SocialParams, q: f64) -> f64 {
    let k = params.n as usize - 1;
    let w0 = params.omega0;
    if k < 2 {
        return 0.0;
    }
    let l_gap = |m: usize| (m as f64 + w0).ln() - (m as f64 - 1.0 + w0).ln();
    let q = q.clamp(0.0, 1.0);
    let lq = if q > 0.0 { q.ln() } else { f64::NEG_INFINITY };
    let l1q = if q < 1.0 { (-q).ln_1p() } else { f64::NEG_INFINITY };
    let mut ln_c = 0.0f64; // ln C(k, m) from m = 0
    ln_c += (k as f64).ln(); // now ln C(k, 1)
    let mut sum = 0.0f64;
    for m in 2..=k {
        ln_c += ((k - m + 1) as f64 / m as f64).ln();
        let exponent_q = m as f64 - 2.0;
        let exponent_1q = (k - m) as f64;
        let ln_pow = if exponent_q == 0.0 { 0.0 } else { exponent_q * lq }
            + if exponent_1q == 0.0 { 0.0 } else { exponent_1q * l1q };
        if ln_pow == f64::NEG_INFINITY {
            continue;
        }
        let ln_weight = ln_c + (m as f64).ln() + (m as f64 - 1.0).ln() + ln_pow;
        sum += ln_weight.exp() * (l_gap(m) - l_gap(m - 1));
    }
    sum
}

/// Exact expected social benefit J(v) for an active user when everyone
/// below the threshold `v` is active.
pub fn expected_benefit(params: &SocialParams, v: f64) -> Result<f64> {
    params.check_domain(v)?;
    Ok(expected_benefit_prob(params, params.dist.cdf(v)))
}

/// dJ/dv. Closed form A(F(v)) f(v) on the open support; one-sided finite
/// differences of the exact sum at the support endpoints, where the density
/// of a truncated family may jump.
pub fn benefit_derivative(params: &SocialParams, v: f64) -> Result<f64> {
    params.check_domain(v)?;
    let (lo, hi) = params.dist.support();
    let h = (hi - lo) * 1e-7;
    if v < lo + h || v > hi - h {
        // One-sided second-order difference into the support.
        let (x0, sign) = if v < lo + h { (v, 1.0) } else { (v, -1.0) };
        let f0 = expected_benefit_prob(params, params.dist.cdf(x0));
        let f1 = expected_benefit_prob(params, params.dist.cdf(x0 + sign * h));
        let f2 = expected_benefit_prob(params, params.dist.cdf(x0 + sign * 2.0 * h));
        return Ok(sign * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h));
    }
    Ok(benefit_derivative_core(params, params.dist.cdf(v)) * params.dist.pdf(v))
}

/// d2J/dv2 = B(F) f^2 + A(F) f', using the closed-form density derivative.
pub fn benefit_second_derivative(params: &SocialParams, v: f64) -> Result<f64> {
    params.check_domain(v)?;
    let q = params.dist.cdf(v);
    let f = params.dist.pdf(v);
    let fp = params.dist.pdf_deriv(v);
    Ok(benefit_second_derivative_core(params, q) * f * f
        + benefit_derivative_core(params, q) * fp)
}

/// Monte Carlo estimate of J(v): `draws` independent Binomial(n-1, F(v))
/// samples of the active-peer count, averaged through ln(k + omega0).
/// Returns (mean, standard error). Deterministic in `seed`.
pub fn mc_benefit_oracle(params: &SocialParams, v: f64, seed: u64, draws: usize) -> (f64, f64) {
    let q = params.dist.cdf(v);
    let k = params.n as usize - 1;
    let w0 = params.omega0;
    if q <= 0.0 {
        return (w0.ln(), 0.0);
    }
    if q >= 1.0 {
        return ((k as f64 + w0).ln(), 0.0);
    }
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for d in 0..draws {
        let mut active = 0usize;
        for j in 0..k {
            if draw_u01(seed, d as u64, j as u64, purpose::BINOMIAL, 0) < q {
                active += 1;
            }
        }
        let x = (active as f64 + w0).ln();
        sum += x;
        sum_sq += x * x;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}
