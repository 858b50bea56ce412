//! Heterogeneous preference types and partially connected social networks.
//!
//! Two extensions of the homogeneous model live here. The first attaches a
//! preference weight to each user type, scaling how much that type values
//! the social benefit; thresholds become type-specific and step-wise
//! monotone in the weight. The second replaces the complete interaction
//! graph with an arbitrary one: each user's benefit counts active
//! neighbors only, prices become position-dependent, and the expectation
//! over a node's neighborhood is a Poisson-binomial mean of ln(count +
//! omega0) computed exactly by dynamic programming.
//!
//! Neither extension has a closed-form equilibrium, so both solvers run a
//! monotone fixed-point iteration from a lower and an upper start and
//! require the two limits to coincide; diverging limits are reported as
//! multiplicity rather than silently picking one.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ValuationDistribution;
use crate::error::{ModelError, Result};
use crate::pbe::MarketConfig;
use crate::social;

/// Two-sided limits may differ by this multiple of `tol` before the
/// instance is reported as having multiple fixed points.
const LIMIT_AGREE_FACTOR: f64 = 10.0;
/// Node count at which per-node expectation work moves onto the thread
/// pool; below it the sequential sweep is faster.
const PAR_THRESHOLD: usize = 64;

/// Discrete distribution over preference types: weight `alphas[k]` with
/// probability `gammas[k]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypeProfile {
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl TypeProfile {
    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(ModelError::Config("no preference types given".into()));
        }
        if self.alphas.len() != self.gammas.len() {
            return Err(ModelError::Config(format!(
                "{} weights but {} probabilities",
                self.alphas.len(),
                self.gammas.len()
            )));
        }
        if self.alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(ModelError::Config(
                "preference weights must be finite and non-negative".into(),
            ));
        }
        if self.gammas.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(ModelError::Config(
                "type probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = self.gammas.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::Config(format!(
                "type probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Undirected simple graph with nodes re-indexed densely; original ids are
/// kept for reporting.
#[derive(Clone, Debug)]
pub struct SocialGraph {
    pub n: usize,
    pub adj: Vec<Vec<usize>>,
    pub node_ids: Vec<u64>,
    pub dropped_self_loops: usize,
    pub dropped_duplicates: usize,
}

impl SocialGraph {
    /// Build from explicit dense edges; nodes without edges stay isolated.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(ModelError::EmptyGraph);
        }
        let mut dense = Vec::with_capacity(edges.len());
        let mut self_loops = 0;
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::Config(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                self_loops += 1;
                continue;
            }
            dense.push((a.min(b), a.max(b)));
        }
        dense.sort_unstable();
        let before = dense.len();
        dense.dedup();
        let duplicates = before - dense.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in dense {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(SocialGraph {
            n,
            adj,
            node_ids: (0..n as u64).collect(),
            dropped_self_loops: self_loops,
            dropped_duplicates: duplicates,
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Per-node equilibrium of the network model. `p0s[i]` always equals
/// (vbar - delta v_stars[i]) / (2 (1 - delta)).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkEquilibrium {
    pub v_stars: Vec<f64>,
    pub p0s: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: u32,
}

/// Joint outcome of the alternating type-threshold / price solver. The
/// `converged` flag is the contract: callers must not trust `v_stars` and
/// `p0` beyond `residual` when it is false.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeteroSolution {
    pub v_stars: Vec<f64>,
    pub p0: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: u32,
}

/// One row of the degree/threshold alignment report, keyed by the node's
/// original id.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeRow {
    pub node: u64,
    pub degree: usize,
    pub v_star: f64,
    pub p0: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeReport {
    /// Sorted by descending degree, ties by ascending node id.
    pub rows: Vec<DegreeRow>,
    /// Spearman rank correlation (tie-averaged ranks) between degree and
    /// threshold.
    pub spearman: f64,
    /// True when either ranking is constant, which leaves the correlation
    /// undefined; `spearman` is then 1.0 by convention.
    pub degenerate_ranks: bool,
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

/// One sweep target for a type: cap the indifference point at vbar.
fn type_map(cfg: &MarketConfig, types: &TypeProfile, p0: f64, s: f64, k: usize) -> f64 {
    (p0 + types.alphas[k] / cfg.delta * s).min(cfg.vbar())
}

fn iterate_type_thresholds(
    cfg: &MarketConfig,
    types: &TypeProfile,
    p0: f64,
    mut v: Vec<f64>,
) -> Result<(Vec<f64>, u32)> {
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let q: f64 = types
            .gammas
            .iter()
            .zip(&v)
            .map(|(g, vk)| g * cfg.social.dist.cdf(*vk))
            .sum();
        let s = social::expected_benefit_prob(&cfg.social, q);
        change = 0.0;
        for (k, vk) in v.iter_mut().enumerate() {
            let next = type_map(cfg, types, p0, s, k);
            change = change.max((next - *vk).abs());
            *vk = next;
        }
        if change < cfg.tol {
            return Ok((v, it));
        }
    }
    Err(ModelError::NonConvergence {
        iterations: cfg.max_iter,
        residual: change,
    })
}

/// Type-specific activity thresholds best-responding to the announced
/// price: each type's indifference point solves
/// v_k = p0 + (alpha_k / delta) S(q) with the shared activity mass
/// q = sum_k gamma_k F(v_k), capped at vbar.
///
/// The map is monotone, so iterating from the all-`p0` and all-`vbar`
/// starts brackets every fixed point; the two limits must agree or the
/// instance is reported as having several.
pub fn solve_type_thresholds(
    cfg: &MarketConfig,
    types: &TypeProfile,
    p0: f64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    types.validate()?;
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    let vbar = cfg.vbar();
    let k = types.k();
    let (lower, _) = iterate_type_thresholds(cfg, types, p0, vec![p0.min(vbar); k])?;
    let (upper, _) = iterate_type_thresholds(cfg, types, p0, vec![vbar; k])?;
    for i in 0..k {
        if (upper[i] - lower[i]).abs() > LIMIT_AGREE_FACTOR * cfg.tol {
            return Err(ModelError::MultipleFixedPoints {
                lower: lower[i],
                upper: upper[i],
            });
        }
    }
    Ok(lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .collect())
}

fn harmonic_price(cfg: &MarketConfig, types: &TypeProfile, v_stars: &[f64]) -> f64 {
    let vbar = cfg.vbar();
    let inv: f64 = types
        .gammas
        .iter()
        .zip(v_stars)
        .map(|(g, v)| 2.0 * g * (1.0 - cfg.delta) / (vbar - cfg.delta * v))
        .sum();
    1.0 / inv
}

/// Uniform price for non-profiled users given type thresholds: the
/// probability-weighted harmonic mean of the per-type prices
/// (vbar - delta v_k*) / (2 (1 - delta)). Collapses to that single price
/// when all thresholds are equal, and to vbar / 2 as delta -> 0. The
/// returned price must undercut every threshold, otherwise the profile is
/// inconsistent and the violation is reported.
pub fn hetero_uniform_price(
    cfg: &MarketConfig,
    types: &TypeProfile,
    v_stars: &[f64],
) -> Result<f64> {
    require_uniform(cfg, "hetero_uniform_price")?;
    cfg.validate()?;
    types.validate()?;
    if cfg.delta >= 1.0 {
        return Err(ModelError::PerfectAccuracy);
    }
    if v_stars.len() != types.k() {
        return Err(ModelError::Config(format!(
            "{} thresholds for {} types",
            v_stars.len(),
            types.k()
        )));
    }
    let p = harmonic_price(cfg, types, v_stars);
    let min_v = v_stars.iter().copied().fold(f64::INFINITY, f64::min);
    if p >= min_v {
        return Err(ModelError::PriceExceedsThreshold {
            price: p,
            min_threshold: min_v,
        });
    }
    Ok(p)
}

/// Alternate threshold and price updates until the price stops moving.
///
/// No closed form or uniqueness proof exists for this model, so the
/// solver is best-effort by contract: it reports the final residual and
/// an honest `converged` flag instead of failing outright when the
/// iteration budget runs out. Oscillating price updates are damped by
/// half to avoid two-cycles near degenerate profiles.
pub fn solve_hetero_pbe(cfg: &MarketConfig, types: &TypeProfile) -> Result<HeteroSolution> {
    require_uniform(cfg, "solve_hetero_pbe")?;
    cfg.validate()?;
    types.validate()?;
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    if cfg.delta == 1.0 {
        return Err(ModelError::PerfectAccuracy);
    }
    let mut p = cfg.vbar() / 2.0;
    let mut v_stars = Vec::new();
    let mut prev_step = 0.0f64;
    let mut damping = 1.0f64;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        v_stars = solve_type_thresholds(cfg, types, p)?;
        let step = harmonic_price(cfg, types, &v_stars) - p;
        residual = step.abs();
        if residual < cfg.tol {
            converged = true;
            break;
        }
        // Plain alternation oscillates whenever the composite map is
        // steeper than -1 (always near delta = 1); halve the step factor
        // on every sign flip until the iteration turns monotone.
        if step * prev_step < 0.0 {
            damping *= 0.5;
        }
        p += damping * step;
        prev_step = step;
    }
    if converged {
        v_stars = solve_type_thresholds(cfg, types, p)?;
        let checked = hetero_uniform_price(cfg, types, &v_stars)?;
        residual = residual.max((checked - p).abs());
        let q: f64 = types
            .gammas
            .iter()
            .zip(&v_stars)
            .map(|(g, vk)| g * cfg.social.dist.cdf(*vk))
            .sum();
        let s = social::expected_benefit_prob(&cfg.social, q);
        for (k, vk) in v_stars.iter().enumerate() {
            let defect = (vk - type_map(cfg, types, p, s, k)).abs();
            if defect > LIMIT_AGREE_FACTOR * cfg.tol {
                converged = false;
                residual = residual.max(defect);
            }
        }
    }
    Ok(HeteroSolution {
        v_stars,
        p0: p,
        converged,
        residual,
        iterations,
    })
}

/// Parse a whitespace edge list: two node ids per line, `#` starts a
/// comment, blank lines skipped. Node ids may be arbitrary non-negative
/// integers; they are re-indexed densely in ascending order.
pub fn parse_graph(text: &str) -> Result<SocialGraph> {
    let mut pairs = Vec::new();
    let mut self_loops = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(ModelError::ParseError {
                line: idx + 1,
                message: format!("expected two node ids, found {}", tokens.len()),
            });
        }
        let mut ids = [0u64; 2];
        for (slot, tok) in ids.iter_mut().zip(&tokens) {
            *slot = tok.parse().map_err(|_| ModelError::ParseError {
                line: idx + 1,
                message: format!("invalid node id `{tok}`"),
            })?;
        }
        if ids[0] == ids[1] {
            self_loops += 1;
            continue;
        }
        pairs.push((ids[0].min(ids[1]), ids[0].max(ids[1])));
    }
    if pairs.is_empty() {
        return Err(ModelError::EmptyGraph);
    }
    let mut node_ids: Vec<u64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    node_ids.sort_unstable();
    node_ids.dedup();
    let index: HashMap<u64, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let mut dense: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| (index[&a], index[&b]))
        .collect();
    dense.sort_unstable();
    let before = dense.len();
    dense.dedup();
    let duplicates = before - dense.len();
    let n = node_ids.len();
    let mut adj = vec![Vec::new(); n];
    for (a, b) in dense {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    Ok(SocialGraph {
        n,
        adj,
        node_ids,
        dropped_self_loops: self_loops,
        dropped_duplicates: duplicates,
    })
}

/// Read an edge-list file; see `parse_graph` for the format.
pub fn load_graph<P: AsRef<Path>>(path: P) -> Result<SocialGraph> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Exact Poisson-binomial expectation of ln(successes + omega0): DP over
/// the count distribution, O(d^2) in the number of trials. Public so
/// callers can re-verify per-node network thresholds independently.
pub fn neighborhood_ln_expectation(probs: &[f64], omega0: f64) -> f64 {
    let mut dist = vec![0.0f64; probs.len() + 1];
    dist[0] = 1.0;
    for (used, &p) in probs.iter().enumerate() {
        for k in (1..=used + 1).rev() {
            dist[k] = dist[k] * (1.0 - p) + dist[k - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    dist.iter()
        .enumerate()
        .map(|(count, w)| w * (count as f64 + omega0).ln())
        .sum()
}

fn network_sweep(cfg: &MarketConfig, graph: &SocialGraph, v: &[f64]) -> Vec<f64> {
    let d = cfg.delta;
    let vbar = cfg.vbar();
    let probs: Vec<f64> = v.iter().map(|vi| cfg.social.dist.cdf(*vi)).collect();
    let per_node = |i: usize| {
        let neighbor_probs: Vec<f64> = graph.adj[i].iter().map(|&j| probs[j]).collect();
        let e = neighborhood_ln_expectation(&neighbor_probs, cfg.social.omega0);
        ((vbar + 2.0 * (1.0 - d) * e / d) / (2.0 - d)).min(vbar)
    };
    if graph.n >= PAR_THRESHOLD {
        (0..graph.n).into_par_iter().map(per_node).collect()
    } else {
        (0..graph.n).map(per_node).collect()
    }
}

fn iterate_network(
    cfg: &MarketConfig,
    graph: &SocialGraph,
    mut v: Vec<f64>,
) -> Result<(Vec<f64>, u32)> {
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = network_sweep(cfg, graph, &v);
        change = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < cfg.tol {
            return Ok((v, it));
        }
    }
    Err(ModelError::NonConvergence {
        iterations: cfg.max_iter,
        residual: change,
    })
}

/// Per-node thresholds and prices on an arbitrary graph. Substituting the
/// position-dependent price rule p0_i = (vbar - delta v_i) / (2 (1 -
/// delta)) into the activity condition leaves one equation per node,
///
///   v_i = (vbar + 2 (1 - delta) E_i / delta) / (2 - delta),  capped at vbar,
///
/// where E_i is the Poisson-binomial expectation of ln(active neighbors +
/// omega0) under neighbor activity probabilities F(v_j). The population is
/// `graph.n`; the homogeneous `cfg.social.n` plays no role here.
pub fn solve_network_pbe(cfg: &MarketConfig, graph: &SocialGraph) -> Result<NetworkEquilibrium> {
    require_uniform(cfg, "solve_network_pbe")?;
    cfg.validate()?;
    if cfg.delta == 0.0 {
        return Err(ModelError::ZeroAccuracy);
    }
    if cfg.delta == 1.0 {
        return Err(ModelError::PerfectAccuracy);
    }
    let vbar = cfg.vbar();
    let (lower, it_lo) = iterate_network(cfg, graph, vec![0.0; graph.n])?;
    let (upper, it_hi) = iterate_network(cfg, graph, vec![vbar; graph.n])?;
    for i in 0..graph.n {
        if (upper[i] - lower[i]).abs() > LIMIT_AGREE_FACTOR * cfg.tol {
            return Err(ModelError::MultipleFixedPoints {
                lower: lower[i],
                upper: upper[i],
            });
        }
    }
    let v_stars: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .collect();
    let target = network_sweep(cfg, graph, &v_stars);
    let residuals: Vec<f64> = v_stars
        .iter()
        .zip(&target)
        .map(|(v, t)| (v - t).abs())
        .collect();
    let p0s: Vec<f64> = v_stars
        .iter()
        .map(|v| (vbar - cfg.delta * v) / (2.0 * (1.0 - cfg.delta)))
        .collect();
    for (v, p) in v_stars.iter().zip(&p0s) {
        if p >= v {
            return Err(ModelError::PriceExceedsThreshold {
                price: *p,
                min_threshold: *v,
            });
        }
    }
    Ok(NetworkEquilibrium {
        v_stars,
        p0s,
        residuals,
        iterations: it_lo.max(it_hi),
    })
}

fn tie_average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Degree/threshold alignment table: rows sorted by descending degree
/// (ties by node id) plus the Spearman rank correlation between degree
/// and threshold. A constant ranking on either side leaves the
/// correlation undefined; it is reported as 1.0 with the degenerate flag
/// set.
pub fn degree_threshold_report(eq: &NetworkEquilibrium, graph: &SocialGraph) -> DegreeReport {
    let mut rows: Vec<DegreeRow> = (0..graph.n)
        .map(|i| DegreeRow {
            node: graph.node_ids[i],
            degree: graph.degree(i),
            v_star: eq.v_stars[i],
            p0: eq.p0s[i],
        })
        .collect();
    rows.sort_by(|a, b| b.degree.cmp(&a.degree).then(a.node.cmp(&b.node)));
    let degrees: Vec<f64> = (0..graph.n).map(|i| graph.degree(i) as f64).collect();
    let r_deg = tie_average_ranks(&degrees);
    let r_thr = tie_average_ranks(&eq.v_stars);
    let n = graph.n as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_d = 0.0;
    let mut var_t = 0.0;
    for i in 0..graph.n {
        cov += (r_deg[i] - mean) * (r_thr[i] - mean);
        var_d += (r_deg[i] - mean).powi(2);
        var_t += (r_thr[i] - mean).powi(2);
    }
    let (spearman, degenerate) = if var_d == 0.0 || var_t == 0.0 {
        (1.0, true)
    } else {
        (cov / (var_d * var_t).sqrt(), false)
    };
    DegreeReport {
        rows,
        spearman,
        degenerate_ranks: degenerate,
    }
}
