//! Monte Carlo market simulation, a brute-force best-response oracle, and
//! the PIP/TPP/SPP mechanism comparison.
//!
//! Every random draw comes from a counter-based stream keyed by
//! (seed, run, user, purpose), so a report is a pure function of its
//! arguments: runs execute in parallel yet reproduce the serial result
//! bit-for-bit, and two simulations sharing a seed share their valuation
//! and profiling draws, which is what makes paired mechanism comparisons
//! low-variance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ValuationDistribution;
use crate::error::{ModelError, Result};
use crate::fourstage;
use crate::numeric::{draw_u01, purpose, sample_variance};
use crate::pbe::{self, MarketConfig};

/// Aggregate of a batch of simulated markets. Variances are sample
/// variances over runs; the per-run series supports custom downstream
/// statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationReport {
    pub runs: u32,
    pub mean_revenue: f64,
    pub var_revenue: f64,
    pub min_revenue: f64,
    pub max_revenue: f64,
    pub mean_profiled_revenue: f64,
    pub var_profiled_revenue: f64,
    pub mean_nonprofiled_revenue: f64,
    pub var_nonprofiled_revenue: f64,
    pub mean_user_payoff: f64,
    pub per_run_revenue: Vec<f64>,
}

/// Social activity prescription for the simulated users.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum StrategyProfile {
    /// Active exactly when the valuation is at most the threshold.
    ThresholdRule(f64),
    /// Arbitrary per-user activity levels in [0, 1].
    ExplicitLevels(Vec<f64>),
}

struct RunStats {
    profiled: f64,
    nonprofiled: f64,
    payoff_sum: f64,
}

fn run_once(
    cfg: &MarketConfig,
    price: f64,
    strategy: &StrategyProfile,
    seed: u64,
    run: u64,
) -> RunStats {
    let n = cfg.social.n as usize;
    let mut values = Vec::with_capacity(n);
    let mut levels = Vec::with_capacity(n);
    for i in 0..n {
        let v = cfg
            .social
            .dist
            .quantile(draw_u01(seed, run, i as u64, purpose::VALUATION, 0));
        let x = match strategy {
            StrategyProfile::ThresholdRule(t) => {
                if v <= *t {
                    1.0
                } else {
                    0.0
                }
            }
            StrategyProfile::ExplicitLevels(xs) => xs[i],
        };
        values.push(v);
        levels.push(x);
    }
    let total_level: f64 = levels.iter().sum();
    let mut stats = RunStats {
        profiled: 0.0,
        nonprofiled: 0.0,
        payoff_sum: 0.0,
    };
    for i in 0..n {
        let (v, x) = (values[i], levels[i]);
        let p_profile = cfg.delta * x.powf(cfg.alpha);
        let profiled = draw_u01(seed, run, i as u64, purpose::PROFILING, 0) < p_profile;
        let mut payoff = x * (total_level - x + cfg.social.omega0).ln();
        if profiled {
            // Personalized price extracts the whole surplus.
            stats.profiled += v;
        } else if v >= price {
            stats.nonprofiled += price;
            payoff += v - price;
        }
        stats.payoff_sum += payoff;
    }
    stats
}

/// Simulate `runs` independent markets: sample valuations, apply the
/// activity strategy, profile active users with probability
/// delta x^alpha, charge profiled users their valuation and everyone else
/// the posted price. Deterministic in (config, price, strategy, seed).
pub fn simulate_market(
    cfg: &MarketConfig,
    price: f64,
    strategy: &StrategyProfile,
    seed: u64,
    runs: u32,
) -> Result<SimulationReport> {
    cfg.validate()?;
    if runs == 0 {
        return Err(ModelError::Config("runs must be at least 1".into()));
    }
    if !price.is_finite() || price < 0.0 {
        return Err(ModelError::Config(format!("price {price} must be finite and non-negative")));
    }
    match strategy {
        StrategyProfile::ThresholdRule(t) => {
            if !t.is_finite() {
                return Err(ModelError::Config("threshold must be finite".into()));
            }
        }
        StrategyProfile::ExplicitLevels(xs) => {
            if xs.len() != cfg.social.n as usize {
                return Err(ModelError::Config(format!(
                    "{} activity levels for {} users",
                    xs.len(),
                    cfg.social.n
                )));
            }
            if xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(ModelError::Config(
                    "activity levels must lie in [0, 1]".into(),
                ));
            }
        }
    }
    let per_run: Vec<RunStats> = (0..runs as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, price, strategy, seed, r))
        .collect();

    let n = cfg.social.n as f64;
    let totals: Vec<f64> = per_run.iter().map(|s| s.profiled + s.nonprofiled).collect();
    let profiled: Vec<f64> = per_run.iter().map(|s| s.profiled).collect();
    let nonprofiled: Vec<f64> = per_run.iter().map(|s| s.nonprofiled).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(SimulationReport {
        runs,
        mean_revenue: mean(&totals),
        var_revenue: sample_variance(&totals),
        min_revenue: totals.iter().copied().fold(f64::INFINITY, f64::min),
        max_revenue: totals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_profiled_revenue: mean(&profiled),
        var_profiled_revenue: sample_variance(&profiled),
        mean_nonprofiled_revenue: mean(&nonprofiled),
        var_nonprofiled_revenue: sample_variance(&nonprofiled),
        mean_user_payoff: per_run.iter().map(|s| s.payoff_sum).sum::<f64>()
            / (runs as f64 * n),
        per_run_revenue: totals,
    })
}

/// Brute-force equilibrium threshold: iterate the best-response map on a
/// discretized valuation grid over [p0, vbar]. Given the current
/// threshold, a type is active exactly when the social benefit outweighs
/// the expected surplus loss, so the new threshold is
/// p0 + J(F(v)) / delta capped at vbar. The iteration runs from both grid
/// ends with outward rounding, so the two limits bracket every fixed
/// point; they must land within one grid cell of each other.
pub fn best_response_oracle(cfg: &MarketConfig, p0: f64, grid: usize) -> Result<f64> {
    cfg.validate()?;
    if grid < 101 {
        return Err(ModelError::Config(format!(
            "grid must have at least 101 points, got {grid}"
        )));
    }
    let vbar = cfg.vbar();
    if p0 >= vbar {
        return Ok(vbar);
    }
    let width = (vbar - p0) / (grid - 1) as f64;
    let point = |i: usize| p0 + i as f64 * width;
    let target_index = |v: f64, round_up: bool| -> usize {
        let t = p0 + cfg.benefit(v) / cfg.delta;
        let raw = ((t - p0) / width).min((grid - 1) as f64).max(0.0);
        let idx = if round_up { raw.ceil() } else { raw.floor() };
        idx as usize
    };
    let mut lower = 0usize;
    for _ in 0..grid {
        let next = target_index(point(lower), false).max(lower);
        if next == lower {
            break;
        }
        lower = next;
    }
    let mut upper = grid - 1;
    for _ in 0..grid {
        let next = target_index(point(upper), true).min(upper);
        if next == upper {
            break;
        }
        upper = next;
    }
    if upper - lower <= 1 {
        return Ok(0.5 * (point(lower) + point(upper)));
    }
    // Both sides stall within width/(1 - slope) of a crossing, so a gap
    // of a few cells is a rounding artifact, not multiplicity. The
    // bracketed cells contain every crossing of the best-response map
    // with the identity; exactly one means a unique threshold.
    let defect: Vec<f64> = (lower..=upper)
        .map(|i| cfg.benefit(point(i)) / cfg.delta + p0 - point(i))
        .collect();
    let mut crossings = Vec::new();
    for (k, pair) in defect.windows(2).enumerate() {
        if pair[0] >= 0.0 && pair[1] < 0.0 {
            crossings.push(lower + k);
        }
    }
    match crossings.len() {
        0 => Ok(if defect[0] < 0.0 {
            point(lower)
        } else {
            point(upper)
        }),
        1 => Ok(point(crossings[0]) + 0.5 * width),
        _ => Err(ModelError::LimitsDisagree {
            lower: point(crossings[0]),
            upper: point(*crossings.last().unwrap()) + width,
        }),
    }
}

/// Means and improvements of the three pricing mechanisms, simulated on
/// shared draws, next to their closed-form expectations: PIP posts the
/// monopoly price with profiling disabled, TPP profiles only the
/// low-valuation disclosers at the monopoly price, SPP plays the solved
/// equilibrium.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkComparison {
    pub pip: SimulationReport,
    pub tpp: SimulationReport,
    pub spp: SimulationReport,
    pub closed_pip: f64,
    pub closed_tpp: f64,
    pub closed_spp: f64,
    /// Simulated mean-revenue lift of TPP over PIP.
    pub tpp_improvement: f64,
    /// Simulated mean-revenue lift of SPP over PIP.
    pub spp_improvement: f64,
}

/// Compare PIP, TPP, and SPP revenue on paired draws. Uniform family
/// only: the TPP equilibrium and the closed forms are its algebra.
pub fn benchmark_comparison(cfg: &MarketConfig, seed: u64, runs: u32) -> Result<BenchmarkComparison> {
    if !matches!(cfg.social.dist, ValuationDistribution::Uniform { .. }) {
        return Err(ModelError::UnsupportedDistribution {
            op: "benchmark_comparison",
            kind: cfg.social.dist.kind_name(),
        });
    }
    cfg.validate()?;
    let vbar = cfg.vbar();
    let n = cfg.social.n as f64;
    let mut pip_cfg = cfg.clone();
    pip_cfg.delta = 0.0;
    let pip = simulate_market(
        &pip_cfg,
        vbar / 2.0,
        &StrategyProfile::ThresholdRule(vbar),
        seed,
        runs,
    )?;
    // Disclosers are the valuations at or below the monopoly price; they
    // are the only profiling targets.
    let tpp = simulate_market(
        cfg,
        vbar / 2.0,
        &StrategyProfile::ThresholdRule(vbar / 2.0),
        seed,
        runs,
    )?;
    let eq = pbe::solve_pbe_or_benchmark(cfg)?;
    let spp = simulate_market(
        cfg,
        eq.p0_star,
        &StrategyProfile::ThresholdRule(eq.v_star),
        seed,
        runs,
    )?;
    Ok(BenchmarkComparison {
        closed_pip: n * vbar / 4.0,
        closed_tpp: n * (cfg.delta * vbar / 8.0 + vbar / 4.0),
        closed_spp: eq.expected_revenue_profiled + eq.expected_revenue_nonprofiled,
        tpp_improvement: tpp.mean_revenue / pip.mean_revenue - 1.0,
        spp_improvement: spp.mean_revenue / pip.mean_revenue - 1.0,
        pip,
        tpp,
        spp,
    })
}

/// Paired-draw comparison of the committed (four-stage) against the
/// uncommitted (three-stage) equilibrium: returns the mean-revenue lift
/// and the variance increment, both as ratios minus one.
pub fn variance_comparison(cfg: &MarketConfig, seed: u64, runs: u32) -> Result<(f64, f64)> {
    if !matches!(cfg.social.dist, ValuationDistribution::Uniform { .. }) {
        return Err(ModelError::UnsupportedDistribution {
            op: "variance_comparison",
            kind: cfg.social.dist.kind_name(),
        });
    }
    let three = pbe::solve_pbe(cfg)?;
    let four = fourstage::solve_four_stage(cfg)?;
    let r3 = simulate_market(
        cfg,
        three.p0_star,
        &StrategyProfile::ThresholdRule(three.v_star),
        seed,
        runs,
    )?;
    let r4 = simulate_market(
        cfg,
        four.p0_e,
        &StrategyProfile::ThresholdRule(four.v_e),
        seed,
        runs,
    )?;
    Ok((
        r4.mean_revenue / r3.mean_revenue - 1.0,
        r4.var_revenue / r3.var_revenue - 1.0,
    ))
}

/// Analytic expected-payoff matrix: one row per accuracy, one column per
/// valuation, using each accuracy's solved (or benchmark) equilibrium.
pub fn payoff_sweep(
    cfg: &MarketConfig,
    deltas: &[f64],
    v_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut c = cfg.clone();
        c.delta = delta;
        let eq = pbe::solve_pbe_or_benchmark(&c)?;
        let row: Result<Vec<f64>> = v_grid
            .iter()
            .map(|&v| pbe::expected_user_payoff(&eq, &c, v))
            .collect();
        rows.push(row?);
    }
    Ok(rows)
}
