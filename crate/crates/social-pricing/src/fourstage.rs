//! Four-stage variant of the game: the seller publicly commits to the
//! uniform price before users choose their activity, then profiles active
//! users and charges profiled ones their valuation anyway.
//!
//! Commitment changes the seller's problem from best-responding to a fixed
//! threshold into maximizing total expected revenue over the announced
//! price, knowing how the activity threshold shifts with it. Under the
//! uniform valuation family the induced objective in the threshold is
//! unimodal, which the solver exploits: golden-section search localizes the
//! interior maximum and a first-order bisection polishes it to tolerance.
//! Only the uniform family is supported here; the objective algebra below
//! is specific to it.

use serde::{Deserialize, Serialize};

use crate::dist::ValuationDistribution;
use crate::error::{ModelError, Result};
use crate::numeric::{bisect, golden_max};
use crate::pbe::{self, MarketConfig};

const BISECT_ITERS: u32 = 200;

/// Which branch of the commitment equilibrium applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FourStageCase {
    /// Low accuracy: all users active at the unconstrained monopoly price.
    #[serde(rename = "I_AllActiveLow")]
    IAllActiveLow,
    /// All users active at the highest price that keeps them active.
    #[serde(rename = "II_AllActiveHigh")]
    IIAllActiveHigh,
    /// Interior threshold at the revenue-maximizing commitment price.
    #[serde(rename = "III_PartiallyActive")]
    IIIPartiallyActive,
}

/// Solved four-stage equilibrium. `v_e >= v*` and `p0_e >= p0*` of the
/// matched three-stage solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourStageOutcome {
    pub v_e: f64,
    pub p0_e: f64,
    pub case: FourStageCase,
    /// Boundary on the mean valuation vbar/2: the commitment equilibrium
    /// is partially active exactly when vbar/2 exceeds this value.
    pub v_tilde: f64,
    pub total_expected_revenue: f64,
}

/// Three-vs-four-stage revenue comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelComparison {
    pub three_stage_total: f64,
    pub four_stage_total: f64,
    /// Relative commitment gain, total four-stage over three-stage minus 1.
    pub ratio_total: f64,
    /// Four-stage minus three-stage profiled revenue (nonnegative).
    pub profiled_delta: f64,
    /// Four-stage minus three-stage uniform-price revenue (nonpositive).
    pub nonprofiled_delta: f64,
    /// Closed-form cap (delta - delta^2)/2 on ratio_total.
    pub bound: f64,
}

fn require_uniform(cfg: &MarketConfig, op: &'static str) -> Result<()> {
    if matches!(cfg.social.dist, ValuationDistribution::Uniform { .. }) {
        Ok(())
    } else {
        Err(ModelError::UnsupportedDistribution {
            op,
            kind: cfg.social.dist.kind_name(),
        })
    }
}

/// Marginal value (per user) of raising the all-active price cap at
/// candidate support width `w`: positive means the all-active corner
/// dominates (Case II), negative means an interior threshold pays
/// (Case III). Uses the exact endpoint constants J(vbar) = ln(n-1+omega0)
/// and J'(vbar) = (n-1)(ln(n-1+omega0) - ln(n-2+omega0))/vbar.
pub fn m_criterion(cfg: &MarketConfig, w: f64) -> f64 {
    let n1 = cfg.social.n as f64 - 1.0;
    let w0 = cfg.social.omega0;
    let jb = (n1 + w0).ln();
    let lp = n1 * ((n1 + w0).ln() - (n1 - 1.0 + w0).ln());
    let d = cfg.delta;
    d - 1.0 + (2.0 - d) * jb / (d * w) + (1.0 - d) * lp / (d * w)
        - 2.0 * (1.0 - d) * jb * lp / (d * d * w * w)
}

/// Threshold induced by a zero price: the root of v = J(v)/delta, i.e. the
/// valuation whose owner is exactly indifferent about activity even when
/// the product is free for non-profiled users.
pub(crate) fn zero_price_threshold(cfg: &MarketConfig) -> Result<f64> {
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    let vbar = cfg.vbar();
    let r = |v: f64| cfg.delta * v - cfg.benefit(v);
    if r(vbar) <= 0.0 {
        return Ok(vbar);
    }
    bisect(r, 0.0, vbar, BISECT_ITERS).ok_or(ModelError::NonConvergence {
        iterations: BISECT_ITERS,
        residual: f64::NAN,
    })
}

/// Per-user commitment revenue as a function of the induced threshold,
/// with the price substituted from the fixed point: psi = v - J(v)/delta.
fn threshold_revenue_per_user(cfg: &MarketConfig, v: f64) -> f64 {
    let d = cfg.delta;
    let w = cfg.vbar();
    let psi = v - cfg.benefit(v) / d;
    d * v * v / (2.0 * w) + (1.0 - d * v / w) * psi - (1.0 - d) / w * psi * psi
}

fn threshold_revenue_slope(cfg: &MarketConfig, v: f64) -> f64 {
    let d = cfg.delta;
    let w = cfg.vbar();
    let psi = v - cfg.benefit(v) / d;
    let psi_p = 1.0 - cfg.benefit_slope(v) / d;
    d * v / w - d * psi / w + (1.0 - d * v / w) * psi_p
        - 2.0 * (1.0 - d) * psi * psi_p / w
}

/// Total expected revenue when the seller commits to price `p0`: the
/// threshold reacts per the activity fixed point, profiled users pay their
/// valuations, and everyone else buys at `p0` if their valuation covers it.
/// Uniform distribution only.
pub fn total_expected_revenue(cfg: &MarketConfig, p0: f64) -> Result<f64> {
    require_uniform(cfg, "total_expected_revenue")?;
    let w = cfg.vbar();
    if !(0.0..=w).contains(&p0) || !p0.is_finite() {
        return Err(ModelError::OutOfSupport {
            v: p0,
            lo: 0.0,
            hi: w,
        });
    }
    let v = pbe::threshold_given_price(cfg, p0)?;
    let d = cfg.delta;
    let per_user = d * v * v / (2.0 * w) + p0 * (1.0 - d * v / w - (1.0 - d) * p0 / w);
    Ok(cfg.social.n as f64 * per_user)
}

/// Boundary value of the mean valuation below which commitment keeps all
/// users active: half the support width at which the marginal criterion
/// changes sign. The criterion is delta/2 > 0 at width 2 ln(n-1+omega0)
/// / delta and strictly decreasing beyond, so doubling then bisection
/// brackets the unique root.
fn mean_boundary(cfg: &MarketConfig) -> Result<f64> {
    let start = 2.0 * cfg.social.ln_top() / cfg.delta;
    let mut hi = start;
    for _ in 0..200 {
        hi *= 2.0;
        if m_criterion(cfg, hi) < 0.0 {
            let root = bisect(|w| m_criterion(cfg, w), start, hi, BISECT_ITERS).ok_or(
                ModelError::NonConvergence {
                    iterations: BISECT_ITERS,
                    residual: f64::NAN,
                },
            )?;
            return Ok(root / 2.0);
        }
    }
    Err(ModelError::NonConvergence {
        iterations: 200,
        residual: m_criterion(cfg, hi),
    })
}

/// Solve the four-stage commitment equilibrium for 0 < delta < 1 under the
/// uniform family.
///
/// All-active at the monopoly price when vbar/2 <= ln(n-1+omega0)/delta;
/// otherwise the marginal criterion at vbar decides between the all-active
/// corner price vbar - ln(n-1+omega0)/delta and an interior threshold,
/// found by golden-section search over (v_zero, vbar) plus a first-order
/// bisection polish.
pub fn solve_four_stage(cfg: &MarketConfig) -> Result<FourStageOutcome> {
    require_uniform(cfg, "solve_four_stage")?;
    cfg.validate()?;
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    if cfg.delta == 1.0 {
        return Err(ModelError::PerfectAccuracy);
    }
    let d = cfg.delta;
    let w = cfg.vbar();
    let ln_top = cfg.social.ln_top();
    let v_tilde = mean_boundary(cfg)?;

    let (v_e, p0_e, case) = if w / 2.0 <= ln_top / d {
        (w, w / 2.0, FourStageCase::IAllActiveLow)
    } else if m_criterion(cfg, w) >= 0.0 {
        (w, w - ln_top / d, FourStageCase::IIAllActiveHigh)
    } else {
        let v_o = zero_price_threshold(cfg)?;
        let span = w - v_o;
        let x = golden_max(
            |v| threshold_revenue_per_user(cfg, v),
            v_o,
            w,
            span * 1e-9,
        );
        // Polish to a stationary point; widen the window if golden-section
        // landed too close to one side for a sign change.
        let mut v_e = x;
        for scale in [1e-4, 1e-3, 1e-2] {
            let lo = (x - span * scale).max(v_o + span * 1e-12);
            let hi = (x + span * scale).min(w - span * 1e-12);
            if let Some(root) = bisect(|v| threshold_revenue_slope(cfg, v), lo, hi, BISECT_ITERS)
            {
                v_e = root;
                break;
            }
        }
        let p0_e = v_e - cfg.benefit(v_e) / d;
        (v_e, p0_e, FourStageCase::IIIPartiallyActive)
    };

    let per_user = d * v_e * v_e / (2.0 * w) + p0_e * (1.0 - d * v_e / w - (1.0 - d) * p0_e / w);
    Ok(FourStageOutcome {
        v_e,
        p0_e,
        case,
        v_tilde,
        total_expected_revenue: cfg.social.n as f64 * per_user,
    })
}

/// Closed-form three-vs-four-stage comparison: commitment weakly raises
/// total revenue, shifts it toward the profiled component, and the relative
/// gain stays below (delta - delta^2)/2 <= 0.125.
pub fn compare_models(cfg: &MarketConfig) -> Result<ModelComparison> {
    let three = pbe::solve_pbe(cfg)?;
    let four = solve_four_stage(cfg)?;
    let three_total = three.expected_revenue_profiled + three.expected_revenue_nonprofiled;
    let n = cfg.social.n as f64;
    let w = cfg.vbar();
    let profiled_four = n * cfg.delta * four.v_e * four.v_e / (2.0 * w);
    let nonprofiled_four = four.total_expected_revenue - profiled_four;
    let ratio_total = four.total_expected_revenue / three_total - 1.0;
    let bound = (cfg.delta - cfg.delta * cfg.delta) / 2.0;
    if !(ratio_total > -1e-9 && ratio_total < bound && ratio_total <= 0.125) {
        return Err(ModelError::Config(format!(
            "commitment-gain bound violated: ratio {ratio_total}, bound {bound}"
        )));
    }
    Ok(ModelComparison {
        three_stage_total: three_total,
        four_stage_total: four.total_expected_revenue,
        ratio_total,
        profiled_delta: profiled_four - three.expected_revenue_profiled,
        nonprofiled_delta: nonprofiled_four - three.expected_revenue_nonprofiled,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{draw_u01, purpose};
    use crate::social::SocialParams;

    fn uniform_cfg(delta: f64) -> MarketConfig {
        MarketConfig {
            social: SocialParams {
                n: 100,
                omega0: 2.0,
                dist: ValuationDistribution::Uniform { vbar: 40.0 },
            },
            delta,
            alpha: 0.5,
            tol: 1e-10,
            max_iter: 500,
        }
    }

    #[test]
    fn criterion_matches_frozen_values() {
        let expect = [
            (0.25, 0.06333316256831872),
            (0.3, -0.032928001404305796),
            (0.7, -0.07865138192350837),
            (0.9, 0.04305232658703754),
        ];
        for (delta, m) in expect {
            let got = m_criterion(&uniform_cfg(delta), 40.0);
            assert!((got - m).abs() < 1e-12, "delta={delta}: {got} want {m}");
        }
    }

    #[test]
    fn criterion_sign_flips_at_frozen_accuracies() {
        // At vbar = 40 the criterion is negative exactly between these two
        // accuracies.
        let root_lo = bisect(
            |d| m_criterion(&uniform_cfg(d), 40.0),
            0.24,
            0.5,
            BISECT_ITERS,
        )
        .unwrap();
        let root_hi = bisect(
            |d| m_criterion(&uniform_cfg(d), 40.0),
            0.5,
            0.99,
            BISECT_ITERS,
        )
        .unwrap();
        assert!((root_lo - 0.27993822077583724).abs() < 1e-9, "{root_lo}");
        assert!((root_hi - 0.8357776836071444).abs() < 1e-9, "{root_hi}");
    }

    #[test]
    fn zero_price_threshold_matches_frozen_value() {
        let v_o = zero_price_threshold(&uniform_cfg(0.7)).unwrap();
        assert!((v_o - 3.23453554078446).abs() < 1e-9, "{v_o}");
        // Defining identity.
        let cfg = uniform_cfg(0.7);
        assert!((0.7 * v_o - cfg.benefit(v_o)).abs() < 1e-10);
    }

    #[test]
    fn case_i_at_low_accuracy() {
        let out = solve_four_stage(&uniform_cfg(0.2)).unwrap();
        assert_eq!(out.case, FourStageCase::IAllActiveLow);
        assert_eq!(out.v_e, 40.0);
        assert_eq!(out.p0_e, 20.0);
    }

    #[test]
    fn solves_match_frozen_oracle_points() {
        // (delta, case II?, v_e, p0_e, per-user total)
        let expect = [
            (0.25, true, 40.0, 21.53951793263496, 12.455560335033038),
            (0.3, false, 39.08482893279343, 23.77707989258513, 12.642129345487131),
            (0.7, false, 37.404550666624495, 30.905881634870866, 15.753848058767726),
            (0.9, true, 40.0, 34.872088314620825, 18.4470524729053),
        ];
        for (delta, all_active, v_exp, p_exp, pi_exp) in expect {
            let out = solve_four_stage(&uniform_cfg(delta)).unwrap();
            if all_active {
                assert_eq!(out.case, FourStageCase::IIAllActiveHigh, "delta={delta}");
                assert_eq!(out.v_e, v_exp);
                assert!((out.p0_e - p_exp).abs() < 1e-12, "delta={delta}");
            } else {
                assert_eq!(out.case, FourStageCase::IIIPartiallyActive, "delta={delta}");
                assert!(
                    (out.v_e - v_exp).abs() < 1e-7,
                    "delta={delta}: v_e={} want {v_exp}",
                    out.v_e
                );
                assert!(
                    (out.p0_e - p_exp).abs() < 1e-7,
                    "delta={delta}: p0_e={} want {p_exp}",
                    out.p0_e
                );
            }
            assert!(
                (out.total_expected_revenue / 100.0 - pi_exp).abs() < 1e-7,
                "delta={delta}: total={}",
                out.total_expected_revenue
            );
        }
    }

    #[test]
    fn mean_boundary_matches_frozen_values() {
        // The boundary agrees with the realized case at the mean 20.
        let out = solve_four_stage(&uniform_cfg(0.7)).unwrap();
        assert!((out.v_tilde - 14.672350582846281).abs() < 1e-8, "{}", out.v_tilde);
        assert!(out.v_tilde < 20.0); // delta=0.7 -> Case III
        let out = solve_four_stage(&uniform_cfg(0.25)).unwrap();
        assert!((out.v_tilde - 21.842264834597707).abs() < 1e-8, "{}", out.v_tilde);
        assert!(out.v_tilde > 20.0); // delta=0.25 -> Case II
    }

    #[test]
    fn case_iii_is_stationary_and_matches_grid_argmax() {
        let cfg = uniform_cfg(0.7);
        let out = solve_four_stage(&cfg).unwrap();
        assert!(threshold_revenue_slope(&cfg, out.v_e).abs() < 1e-10);
        // 10^4-point grid over announced prices.
        let cells = 10_000usize;
        let width = 40.0 / cells as f64;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=cells {
            let p0 = i as f64 * width;
            let total = total_expected_revenue(&cfg, p0).unwrap();
            if total > best.0 {
                best = (total, p0);
            }
        }
        assert!(
            (out.p0_e - best.1).abs() <= width + 1e-12,
            "p0_e={} grid={}",
            out.p0_e,
            best.1
        );
        assert!(out.total_expected_revenue >= best.0 - 1e-9);
    }

    #[test]
    fn objective_is_unimodal_on_grid() {
        for delta in [0.3, 0.5, 0.7] {
            let cfg = uniform_cfg(delta);
            let v_o = zero_price_threshold(&cfg).unwrap();
            let mut values = Vec::new();
            for i in 0..=500 {
                let v = v_o + (40.0 - v_o) * i as f64 / 500.0;
                values.push(threshold_revenue_per_user(&cfg, v));
            }
            let mut sign_changes = 0;
            let mut prev_sign = 0i8;
            for pair in values.windows(2) {
                let s = if pair[1] > pair[0] { 1i8 } else { -1i8 };
                if prev_sign != 0 && s != prev_sign {
                    sign_changes += 1;
                    assert!(s == -1, "upturn after downturn at delta={delta}");
                }
                prev_sign = s;
            }
            assert!(sign_changes <= 1, "delta={delta}: {sign_changes} changes");
        }
    }

    #[test]
    fn revenue_at_zero_price_is_profiled_only() {
        let cfg = uniform_cfg(0.7);
        let v_o = zero_price_threshold(&cfg).unwrap();
        let want = 100.0 * 0.7 * v_o * v_o / 80.0;
        let got = total_expected_revenue(&cfg, 0.0).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} want {want}");
    }

    #[test]
    fn revenue_rejects_nonuniform_and_bad_price() {
        let mut cfg = uniform_cfg(0.7);
        cfg.social.dist = ValuationDistribution::Beta {
            a: 1.0,
            b: 1.5,
            vbar: 40.0,
        };
        assert!(matches!(
            total_expected_revenue(&cfg, 10.0),
            Err(ModelError::UnsupportedDistribution { .. })
        ));
        assert!(matches!(
            solve_four_stage(&cfg),
            Err(ModelError::UnsupportedDistribution { .. })
        ));
        let cfg = uniform_cfg(0.7);
        assert!(matches!(
            total_expected_revenue(&cfg, 41.0),
            Err(ModelError::OutOfSupport { .. })
        ));
    }

    #[test]
    fn comparison_matches_frozen_ratios() {
        let expect = [
            (0.25, 0.010418048019406934, 0.09375),
            (0.3, 0.01442993950515481, 0.105),
            (0.7, 0.013267525111442025, 0.105),
            (0.9, 0.011684260951495107, 0.045),
        ];
        for (delta, ratio, bound) in expect {
            let cmp = compare_models(&uniform_cfg(delta)).unwrap();
            assert!(
                (cmp.ratio_total - ratio).abs() < 1e-9,
                "delta={delta}: {} want {ratio}",
                cmp.ratio_total
            );
            assert!((cmp.bound - bound).abs() < 1e-12);
            assert!(cmp.ratio_total < cmp.bound);
            assert!(cmp.profiled_delta >= -1e-9, "delta={delta}");
            assert!(cmp.nonprofiled_delta <= 1e-9, "delta={delta}");
        }
        assert_eq!(compare_models(&uniform_cfg(0.5)).unwrap().bound, 0.125);
    }

    #[test]
    fn case_i_comparison_is_exactly_neutral() {
        let cmp = compare_models(&uniform_cfg(0.2)).unwrap();
        assert!(cmp.ratio_total.abs() < 1e-12);
        assert!(cmp.profiled_delta.abs() < 1e-9);
        assert!(cmp.nonprofiled_delta.abs() < 1e-9);
    }

    #[test]
    fn commitment_dominates_on_random_configs() {
        for trial in 0..50u64 {
            let u = |k: u64| draw_u01(7, trial, k, purpose::SCENARIO, 0);
            let n = 20 + (u(0) * 480.0) as u32;
            let omega0 = 1.5 + 3.5 * u(1);
            let ln_top = (n as f64 - 1.0 + omega0).ln();
            let vbar = 2.0 * ln_top * (1.1 + u(2));
            let delta = 0.02 + 0.96 * u(3);
            let cfg = MarketConfig {
                social: SocialParams {
                    n,
                    omega0,
                    dist: ValuationDistribution::Uniform { vbar },
                },
                delta,
                alpha: 0.5,
                tol: 1e-10,
                max_iter: 500,
            };
            let three = pbe::solve_pbe(&cfg).unwrap();
            let four = solve_four_stage(&cfg).unwrap();
            assert!(
                four.v_e >= three.v_star - 1e-8,
                "trial {trial}: v_e={} v*={}",
                four.v_e,
                three.v_star
            );
            assert!(
                four.p0_e >= three.p0_star - 1e-8,
                "trial {trial}: p0_e={} p0*={}",
                four.p0_e,
                three.p0_star
            );
            compare_models(&cfg).unwrap();
        }
    }

    #[test]
    fn rejects_accuracy_endpoints() {
        assert!(matches!(
            solve_four_stage(&uniform_cfg(0.0)),
            Err(ModelError::ZeroAccuracy)
        ));
        assert!(matches!(
            solve_four_stage(&uniform_cfg(1.0)),
            Err(ModelError::PerfectAccuracy)
        ));
    }
}
