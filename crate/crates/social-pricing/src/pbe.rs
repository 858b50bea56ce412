//! Three-stage equilibrium engine.
//!
//! Timing of the underlying game: users choose social activity, the seller
//! profiles active users with accuracy `delta` and charges profiled users
//! their exact valuation, and every remaining user faces one uniform price.
//! Users polarize to a valuation threshold `v*` (active below, hidden
//! above); the seller's uniform price `p0*` best-responds to that threshold;
//! the equilibrium is the joint fixed point. This module solves that fixed
//! point, prices against a fixed threshold, classifies how `v*` moves with
//! `delta`, and evaluates user welfare at the solution.
//!
//! All scalar roots are found by bisection run to interval exhaustion: every
//! bracketed function below has a single sign change on its stated bracket
//! (concavity of the benefit term), so bisection is unconditionally
//! convergent and derivative-free. `MarketConfig::max_iter` governs the
//! iterative multi-variable solvers elsewhere in the crate, not these
//! bisections.

use serde::{Deserialize, Serialize};

use crate::dist::ValuationDistribution;
use crate::error::{ModelError, Result};
use crate::numeric::bisect;
use crate::social::{self, SocialParams};

const BISECT_ITERS: u32 = 200;

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> u32 {
    500
}

/// Full market description consumed by every solver in the crate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarketConfig {
    pub social: SocialParams,
    /// Profiling accuracy: the probability cap on identifying a fully
    /// active user.
    pub delta: f64,
    /// Profiling exponent on fractional activity levels. Equilibrium
    /// strategies are polarized to {0,1}, so this only matters to the
    /// simulator's off-equilibrium strategies.
    pub alpha: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: u32,
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        self.social.validate()?;
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(ModelError::Config(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ModelError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(ModelError::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(ModelError::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether vbar > 2 ln(n-1+omega0). When this fails the only
    /// equilibrium is the trivial all-active one at every accuracy; it is a
    /// warning condition, not an error.
    pub fn nontrivial(&self) -> bool {
        self.vbar() > 2.0 * self.social.ln_top()
    }

    pub fn vbar(&self) -> f64 {
        self.social.dist.vbar()
    }

    pub(crate) fn benefit(&self, v: f64) -> f64 {
        social::expected_benefit_prob(&self.social, self.social.dist.cdf(v))
    }

    pub(crate) fn benefit_slope(&self, v: f64) -> f64 {
        social::benefit_derivative_core(&self.social, self.social.dist.cdf(v))
            * self.social.dist.pdf(v)
    }
}

/// Which branch of the equilibrium characterization produced an outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumCase {
    /// Every user stays active; the threshold is capped at vbar.
    AllActive,
    /// Interior threshold: users above it hide from the profiler.
    PartiallyActive,
    /// delta = 0 benchmark: plain monopoly pricing.
    NoProfiling,
    /// delta = 1 benchmark: every active user is profiled.
    PerfectProfiling,
}

/// Solved equilibrium of the three-stage game.
///
/// Invariants: `0 <= p0_star <= v_star <= vbar`, with strict
/// `p0_star < v_star` for every `PartiallyActive` output of [`solve_pbe`]
/// (the no-social-network benchmark sits exactly on the boundary
/// `p0 = v*` by construction); `residual < cfg.tol`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub v_star: f64,
    pub p0_star: f64,
    pub case: EquilibriumCase,
    /// Fixed-point defect |v* - p0* - J(v*)/delta| for interior solutions,
    /// zero for capped/benchmark cases.
    pub residual: f64,
    pub expected_revenue_profiled: f64,
    pub expected_revenue_nonprofiled: f64,
    /// F(v*): the equilibrium fraction of active users.
    pub fraction_active: f64,
}

/// How the equilibrium threshold moves with the profiling accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// delta <= delta_hat: all users active, threshold flat at vbar.
    I,
    /// delta_hat < delta <= delta_tilde: threshold strictly decreasing.
    II,
    /// delta > delta_tilde: threshold strictly increasing.
    III,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub delta_hat: f64,
    pub delta_tilde: f64,
    pub regime: Regime,
}

/// Welfare effect of knowing about the profiling stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Awareness {
    Equal,
    WorseAware,
    BetterAware,
}

fn build_outcome(
    cfg: &MarketConfig,
    v_star: f64,
    p0_star: f64,
    case: EquilibriumCase,
    residual: f64,
) -> EquilibriumOutcome {
    let mut out = EquilibriumOutcome {
        v_star,
        p0_star,
        case,
        residual,
        expected_revenue_profiled: 0.0,
        expected_revenue_nonprofiled: 0.0,
        fraction_active: cfg.social.dist.cdf(v_star),
    };
    let (profiled, nonprofiled) = expected_revenue(&out, cfg);
    out.expected_revenue_profiled = profiled;
    out.expected_revenue_nonprofiled = nonprofiled;
    out
}

/// Equilibrium activity threshold induced by an announced uniform price:
/// the fixed point of v = p0 + J(v)/delta, capped at vbar. The cap binds
/// exactly when p0 >= vbar - ln(n-1+omega0)/delta.
pub fn threshold_given_price(cfg: &MarketConfig, p0: f64) -> Result<f64> {
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    if !(p0 >= 0.0) {
        return Err(ModelError::Config(format!(
            "price must be nonnegative, got {p0}"
        )));
    }
    let vbar = cfg.vbar();
    if p0 >= vbar - cfg.social.ln_top() / cfg.delta {
        return Ok(vbar);
    }
    // Phi is concave with Phi(p0) = J(p0)/delta > 0 and Phi(vbar) < 0 in
    // this branch, so the sign change is unique.
    let phi = |v: f64| p0 + cfg.benefit(v) / cfg.delta - v;
    bisect(phi, p0.min(vbar), vbar, BISECT_ITERS).ok_or(ModelError::NonConvergence {
        iterations: BISECT_ITERS,
        residual: f64::NAN,
    })
}

/// Root of the existence condition 1 - F(v) - (1-delta) v f(v): the
/// smallest threshold for which an interior uniform price exists under a
/// non-uniform distribution.
fn existence_threshold(cfg: &MarketConfig) -> Option<f64> {
    let (lo, hi) = cfg.social.dist.support();
    let nudge = (cfg.tol / 10.0).max((hi - lo) * 1e-14);
    let h = |v: f64| {
        1.0 - cfg.social.dist.cdf(v) - (1.0 - cfg.delta) * v * cfg.social.dist.pdf(v)
    };
    bisect(h, lo + nudge, hi - nudge, BISECT_ITERS)
}

/// Interior root of the posterior-revenue first-order condition
/// 1 - a F(p) - a p f(p) with a = (1-delta)/(1-delta F(v_star)), on
/// (0, v_star). Returns NaN when the bracket fails, which callers convert
/// into typed errors.
fn interior_price_root(cfg: &MarketConfig, v_star: f64) -> f64 {
    let dist = &cfg.social.dist;
    let a = (1.0 - cfg.delta) / (1.0 - cfg.delta * dist.cdf(v_star));
    let foc = |p: f64| 1.0 - a * (dist.cdf(p) + p * dist.pdf(p));
    let nudge = (cfg.tol / 10.0).max(v_star * 1e-14);
    bisect(foc, nudge, v_star - nudge, BISECT_ITERS).unwrap_or(f64::NAN)
}

/// Seller's optimal uniform price against a fixed activity threshold.
///
/// Uniform distribution: the exact three-branch rule — vbar/2 when
/// v_star <= vbar/2, v_star itself on (vbar/2, vbar/(2-delta)], and
/// (vbar - delta v_star)/(2 (1-delta)) beyond. Other distributions: the
/// interior first-order-condition root on (0, v_star), which exists iff
/// 1 - F(v_star) - (1-delta) v_star f(v_star) < 0.
pub fn uniform_price_given_threshold(cfg: &MarketConfig, v_star: f64) -> Result<f64> {
    if cfg.delta >= 1.0 {
        return Err(ModelError::PerfectAccuracy);
    }
    let vbar = cfg.vbar();
    if !(0.0..=vbar).contains(&v_star) || !v_star.is_finite() {
        return Err(ModelError::OutOfSupport {
            v: v_star,
            lo: 0.0,
            hi: vbar,
        });
    }
    if let ValuationDistribution::Uniform { .. } = cfg.social.dist {
        let delta = cfg.delta;
        return Ok(if v_star <= vbar / 2.0 {
            vbar / 2.0
        } else if v_star <= vbar / (2.0 - delta) {
            v_star
        } else {
            (vbar - delta * v_star) / (2.0 * (1.0 - delta))
        });
    }
    let dist = &cfg.social.dist;
    let slack = 1.0 - dist.cdf(v_star) - (1.0 - cfg.delta) * v_star * dist.pdf(v_star);
    if slack >= 0.0 {
        let v_check = existence_threshold(cfg).unwrap_or(vbar);
        return Err(ModelError::NoInteriorPrice { v_star, v_check });
    }
    let p = interior_price_root(cfg, v_star);
    if p.is_nan() {
        return Err(ModelError::NonConvergence {
            iterations: BISECT_ITERS,
            residual: f64::NAN,
        });
    }
    Ok(p)
}

/// Posterior expected revenue per user at announced price `p` given
/// activity threshold `v_star`: demand is all inactive users plus the
/// non-profiled active users above the price.
pub fn posterior_expected_revenue(cfg: &MarketConfig, v_star: f64, p: f64) -> f64 {
    let dist = &cfg.social.dist;
    if p <= v_star {
        p * (1.0 - cfg.delta * dist.cdf(v_star) - (1.0 - cfg.delta) * dist.cdf(p))
    } else {
        p * (1.0 - dist.cdf(p))
    }
}

/// Solve the full three-stage equilibrium for 0 < delta < 1.
///
/// Uniform distribution: all-active when vbar/2 <= ln(n-1+omega0)/delta
/// (ties classified all-active), otherwise the unique interior root of
/// 2 delta v - delta^2 v - 2 (1-delta) J(v) = delta vbar on
/// (vbar/(2-delta), vbar). Other distributions: all-active when
/// vbar - p_hat <= ln(n-1+omega0)/delta with p_hat the monopoly price,
/// otherwise the root of K(v) = p0(v) - v + J(v)/delta above the
/// existence threshold; if K has no sign change there the equilibrium
/// construction fails and the defects at both bracket ends are reported.
pub fn solve_pbe(cfg: &MarketConfig) -> Result<EquilibriumOutcome> {
    cfg.validate()?;
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    if cfg.delta == 1.0 {
        return Err(ModelError::PerfectAccuracy);
    }
    let delta = cfg.delta;
    let vbar = cfg.vbar();
    let ln_top = cfg.social.ln_top();

    if let ValuationDistribution::Uniform { .. } = cfg.social.dist {
        if vbar / 2.0 <= ln_top / delta {
            return Ok(build_outcome(
                cfg,
                vbar,
                vbar / 2.0,
                EquilibriumCase::AllActive,
                0.0,
            ));
        }
        let g = |v: f64| {
            2.0 * delta * v - delta * delta * v - 2.0 * (1.0 - delta) * cfg.benefit(v)
                - delta * vbar
        };
        // g(vbar/(2-delta)) = -2 (1-delta) J < 0 and g(vbar) > 0 off the
        // all-active branch; g is strictly increasing minus a concave term,
        // single sign change.
        let v_star = bisect(g, vbar / (2.0 - delta), vbar, BISECT_ITERS).ok_or(
            ModelError::NonConvergence {
                iterations: BISECT_ITERS,
                residual: f64::NAN,
            },
        )?;
        let p0_star = (vbar - delta * v_star) / (2.0 * (1.0 - delta));
        let residual = (v_star - p0_star - cfg.benefit(v_star) / delta).abs();
        return Ok(build_outcome(
            cfg,
            v_star,
            p0_star,
            EquilibriumCase::PartiallyActive,
            residual,
        ));
    }

    let p_hat = cfg.social.dist.monopoly_price()?;
    if vbar - p_hat <= ln_top / delta {
        return Ok(build_outcome(
            cfg,
            vbar,
            p_hat,
            EquilibriumCase::AllActive,
            0.0,
        ));
    }
    let (lo_s, _) = cfg.social.dist.support();
    let nudge = (cfg.tol / 10.0).max((vbar - lo_s) * 1e-14);
    let v_check = existence_threshold(cfg).ok_or(ModelError::NoEquilibriumFound {
        lo: lo_s,
        hi: vbar,
        defect_lo: f64::NAN,
        defect_hi: f64::NAN,
    })?;
    let k_fn = |v: f64| {
        let p = interior_price_root(cfg, v);
        p - v + cfg.benefit(v) / delta
    };
    let k_lo = v_check + nudge;
    let k_hi = vbar - nudge;
    let defect_lo = k_fn(k_lo);
    let defect_hi = k_fn(k_hi);
    if !(defect_lo > 0.0 && defect_hi < 0.0) {
        return Err(ModelError::NoEquilibriumFound {
            lo: k_lo,
            hi: k_hi,
            defect_lo,
            defect_hi,
        });
    }
    let v_star = bisect(k_fn, k_lo, k_hi, BISECT_ITERS).ok_or(ModelError::NonConvergence {
        iterations: BISECT_ITERS,
        residual: f64::NAN,
    })?;
    let p0_star = v_star - cfg.benefit(v_star) / delta;
    let residual = (interior_price_root(cfg, v_star) - p0_star).abs();
    Ok(build_outcome(
        cfg,
        v_star,
        p0_star,
        EquilibriumCase::PartiallyActive,
        residual,
    ))
}

/// delta = 0 benchmark: no profiling ever happens, the seller posts the
/// plain monopoly price, and every user stays active.
pub fn no_profiling_benchmark(cfg: &MarketConfig) -> Result<EquilibriumOutcome> {
    let p0 = cfg.social.dist.monopoly_price()?;
    Ok(build_outcome(
        cfg,
        cfg.vbar(),
        p0,
        EquilibriumCase::NoProfiling,
        0.0,
    ))
}

/// delta = 1 benchmark: every active user is profiled and pays their
/// valuation; staying active is still worthwhile whenever
/// p0 >= vbar - ln(n-1+omega0), and the seller prices exactly there. The
/// uniform price is never transacted.
pub fn perfect_profiling_benchmark(cfg: &MarketConfig) -> EquilibriumOutcome {
    build_outcome(
        cfg,
        cfg.vbar(),
        cfg.vbar() - cfg.social.ln_top(),
        EquilibriumCase::PerfectProfiling,
        0.0,
    )
}

/// [`solve_pbe`] with the accuracy endpoints routed to their benchmark
/// outcomes: delta = 0 to [`no_profiling_benchmark`], delta = 1 to
/// [`perfect_profiling_benchmark`].
pub fn solve_pbe_or_benchmark(cfg: &MarketConfig) -> Result<EquilibriumOutcome> {
    cfg.validate()?;
    if cfg.delta == 0.0 {
        no_profiling_benchmark(cfg)
    } else if cfg.delta == 1.0 {
        Ok(perfect_profiling_benchmark(cfg))
    } else {
        solve_pbe(cfg)
    }
}

/// Classify how the equilibrium threshold responds to the accuracy.
///
/// `delta_hat = 2 ln(n-1+omega0)/vbar` closes the all-active regime;
/// `delta_tilde` is the unique accuracy in (delta_hat, 1) where
/// dv*/ddelta = 0, located by bisection on the implicit-function ratio
/// -(dTheta/ddelta)/(dTheta/dv*) with dTheta/ddelta =
/// vbar - 2v* + 2 delta v* - 2 J(v*). Uniform distribution only.
pub fn classify_regime(cfg: &MarketConfig) -> Result<RegimeClassification> {
    if !matches!(cfg.social.dist, ValuationDistribution::Uniform { .. }) {
        return Err(ModelError::UnsupportedDistribution {
            op: "classify_regime",
            kind: cfg.social.dist.kind_name(),
        });
    }
    let vbar = cfg.vbar();
    let ln_top = cfg.social.ln_top();
    if !cfg.nontrivial() {
        return Err(ModelError::TrivialRegime {
            vbar,
            threshold: 2.0 * ln_top,
        });
    }
    let delta_hat = 2.0 * ln_top / vbar;
    let slope = |d: f64| {
        let mut c = cfg.clone();
        c.delta = d;
        // Case II is guaranteed strictly above delta_hat.
        let out = solve_pbe(&c).expect("interior solve above delta_hat");
        let v = out.v_star;
        let j = cfg.benefit(v);
        let jp = social::benefit_derivative_core(&cfg.social, cfg.social.dist.cdf(v))
            * cfg.social.dist.pdf(v);
        let d_theta_d_delta = vbar - 2.0 * v + 2.0 * d * v - 2.0 * j;
        let d_theta_d_v = 2.0 * (1.0 - d) * jp - d * (2.0 - d);
        -d_theta_d_delta / d_theta_d_v
    };
    let lo = (delta_hat + 1e-12).max(delta_hat * (1.0 + 1e-9));
    let delta_tilde =
        bisect(slope, lo, 1.0 - 1e-9, BISECT_ITERS).ok_or(ModelError::NonConvergence {
            iterations: BISECT_ITERS,
            residual: f64::NAN,
        })?;
    let regime = if cfg.delta <= delta_hat {
        Regime::I
    } else if cfg.delta <= delta_tilde {
        Regime::II
    } else {
        Regime::III
    };
    Ok(RegimeClassification {
        delta_hat,
        delta_tilde,
        regime,
    })
}

/// Expected equilibrium payoff of a user with valuation `v_i`: the social
/// benefit J(v*) below the price, benefit plus the keep-probability share
/// of purchase surplus between price and threshold, and pure purchase
/// surplus above the threshold. Benchmark cases use their effective
/// accuracy (0 or 1) regardless of `cfg.delta`.
pub fn expected_user_payoff(
    outcome: &EquilibriumOutcome,
    cfg: &MarketConfig,
    v_i: f64,
) -> Result<f64> {
    let (lo_s, vbar) = cfg.social.dist.support();
    let lo_dom = lo_s.min(0.0);
    if !(lo_dom..=vbar).contains(&v_i) || !v_i.is_finite() {
        return Err(ModelError::OutOfSupport {
            v: v_i,
            lo: lo_dom,
            hi: vbar,
        });
    }
    let delta_eff = match outcome.case {
        EquilibriumCase::NoProfiling => 0.0,
        EquilibriumCase::PerfectProfiling => 1.0,
        _ => cfg.delta,
    };
    let j_star = cfg.benefit(outcome.v_star);
    Ok(if v_i <= outcome.p0_star {
        j_star
    } else if v_i <= outcome.v_star {
        j_star + (1.0 - delta_eff) * (v_i - outcome.p0_star)
    } else {
        v_i - outcome.p0_star
    })
}

/// Compare the equilibrium payoff of a user who understands the profiling
/// stage against the payoff in a counterfactual where users ignore it and
/// stay fully active (facing price vbar/2 and the full-network benefit).
/// Equal whenever delta <= delta_hat or delta = 1; otherwise the sign flips
/// at v_dagger = (2 ln(n-1+omega0) + 2 p0* - (1-delta) vbar)/(2 delta).
/// Uniform distribution only.
pub fn awareness_comparison(cfg: &MarketConfig, v_i: f64) -> Result<(Awareness, f64)> {
    if !matches!(cfg.social.dist, ValuationDistribution::Uniform { .. }) {
        return Err(ModelError::UnsupportedDistribution {
            op: "awareness_comparison",
            kind: cfg.social.dist.kind_name(),
        });
    }
    let outcome = solve_pbe_or_benchmark(cfg)?;
    let vbar = cfg.vbar();
    let ln_top = cfg.social.ln_top();
    let delta_hat = 2.0 * ln_top / vbar;
    let v_dagger =
        (2.0 * ln_top + 2.0 * outcome.p0_star - (1.0 - cfg.delta) * vbar) / (2.0 * cfg.delta);
    let class = if cfg.delta <= delta_hat || cfg.delta == 1.0 {
        Awareness::Equal
    } else if v_i < v_dagger {
        Awareness::WorseAware
    } else if v_i > v_dagger {
        Awareness::BetterAware
    } else {
        Awareness::Equal
    };
    Ok((class, v_dagger))
}

/// Benchmark without any social network: activity carries no benefit, so
/// users disclose only below the price and the unique user-optimal
/// equilibrium has threshold and price both at vbar/2. The threshold is
/// strictly below the networked v* at every accuracy. Uniform only.
pub fn no_social_network_benchmark(cfg: &MarketConfig) -> Result<EquilibriumOutcome> {
    if !matches!(cfg.social.dist, ValuationDistribution::Uniform { .. }) {
        return Err(ModelError::UnsupportedDistribution {
            op: "no_social_network_benchmark",
            kind: cfg.social.dist.kind_name(),
        });
    }
    let vbar = cfg.vbar();
    let networked = solve_pbe_or_benchmark(cfg)?;
    if networked.v_star <= vbar / 2.0 {
        return Err(ModelError::Config(format!(
            "networked threshold {} fails to dominate the benchmark threshold {}",
            networked.v_star,
            vbar / 2.0
        )));
    }
    Ok(build_outcome(
        cfg,
        vbar / 2.0,
        vbar / 2.0,
        EquilibriumCase::PartiallyActive,
        0.0,
    ))
}

/// Accuracy region on which higher profiling accuracy raises the payoff of
/// a user with valuation `v_i`: returns (v_hat, delta_dagger) with
/// v_hat = vbar - ln(n-1+omega0) the valuation cap and payoffs
/// non-decreasing in delta on (delta_dagger, 1). delta_dagger is
/// delta_tilde when v_i <= p0*(delta_tilde), otherwise the accuracy at
/// which the rising price path crosses v_i (clamped to 1 when v_i sits at
/// numerical resolution of v_hat). Uniform distribution only.
pub fn payoff_increasing_region(cfg: &MarketConfig, v_i: f64) -> Result<(f64, f64)> {
    let classification = classify_regime(cfg)?;
    let vbar = cfg.vbar();
    let v_hat = vbar - cfg.social.ln_top();
    if v_i >= v_hat {
        return Err(ModelError::AboveThreshold { v: v_i, v_hat });
    }
    let p0_at = |d: f64| -> f64 {
        let mut c = cfg.clone();
        c.delta = d;
        solve_pbe(&c).expect("interior solve above delta_hat").p0_star
    };
    let delta_tilde = classification.delta_tilde;
    if v_i <= p0_at(delta_tilde) {
        return Ok((v_hat, delta_tilde));
    }
    let hi = 1.0 - 1e-7;
    if p0_at(hi) <= v_i {
        return Ok((v_hat, 1.0));
    }
    let delta_dagger = bisect(|d| p0_at(d) - v_i, delta_tilde, hi, BISECT_ITERS).ok_or(
        ModelError::NonConvergence {
            iterations: BISECT_ITERS,
            residual: f64::NAN,
        },
    )?;
    Ok((v_hat, delta_dagger))
}

/// Expected revenue components at an outcome: personalized revenue from
/// profiled users (who pay their valuation) and uniform-price revenue from
/// everyone else who buys.
pub fn expected_revenue(outcome: &EquilibriumOutcome, cfg: &MarketConfig) -> (f64, f64) {
    let n = cfg.social.n as f64;
    let dist = &cfg.social.dist;
    let p0 = outcome.p0_star;
    match outcome.case {
        EquilibriumCase::NoProfiling => (0.0, n * p0 * (1.0 - dist.cdf(p0))),
        EquilibriumCase::PerfectProfiling => (n * dist.mean(), 0.0),
        _ => {
            let profiled = n * cfg.delta * dist.partial_expectation(outcome.v_star);
            let nonprofiled = n
                * p0
                * (1.0 - cfg.delta * dist.cdf(outcome.v_star) - (1.0 - cfg.delta) * dist.cdf(p0));
            (profiled, nonprofiled)
        }
    }
}
