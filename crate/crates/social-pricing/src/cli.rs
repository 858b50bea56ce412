//! Command-line front end: scenario configs in JSON, tables out in CSV or
//! JSON. All solver and simulation work lives in the library modules; this
//! module only parses, dispatches, and formats.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dist::{self, ValuationDistribution};
use crate::error::{ModelError, Result};
use crate::fourstage::{self, FourStageCase};
use crate::hetero::{self, TypeProfile};
use crate::pbe::{self, EquilibriumCase, MarketConfig, Regime};
use crate::sim::{self, StrategyProfile};

/// Top-level scenario file. The `market` block is required; the remaining
/// blocks are consumed by the subcommands that need them.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub market: MarketConfig,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub sim: Option<SimSpec>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub types: Option<TypeProfile>,
    #[serde(default)]
    pub graph: Option<PathBuf>,
    #[serde(default)]
    pub samples: Option<PathBuf>,
    #[serde(default)]
    pub fit: Option<FitSpec>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    ThreeStage,
    FourStage,
    Network,
    Hetero,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Delta,
    Vbar,
    N,
    Omega0,
}

/// Simulation block. `seed` is optional in the schema so that omitting it
/// produces a targeted message instead of a generic missing-field error;
/// there is no silent clock seed.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default = "default_paired")]
    pub paired: bool,
}

fn default_runs() -> u32 {
    10_000
}

fn default_paired() -> bool {
    true
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub prefix: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn ext(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Truncation bounds for the `fit` subcommand.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Parser)]
#[command(
    name = "social-pricing",
    version,
    about = "Equilibrium solver and market simulator for profiling-based pricing"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the configured model and write the equilibrium table
    Solve(Common),
    /// Re-solve across a parameter grid and write one row per point
    Sweep(Common),
    /// Monte Carlo simulation at the solved equilibrium
    Simulate(Common),
    /// Commitment and mechanism comparisons (three- vs four-stage, PIP/TPP/SPP)
    Compare(Common),
    /// Per-node equilibrium on an explicit edge-list graph
    Network(Common),
    /// Equilibrium with heterogeneous user types
    Hetero(Common),
    /// Fit a truncated normal to a sample file
    Fit(Common),
    /// Print distribution and parameter diagnostics
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Path to the scenario JSON file
    config: PathBuf,
    /// Output path prefix (overrides the config's output block)
    #[arg(long)]
    out: Option<String>,
    /// Output format (overrides the config's output block)
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

struct Target {
    prefix: String,
    format: OutputFormat,
}

impl Target {
    fn path(&self, suffix: &str) -> String {
        format!("{}_{}.{}", self.prefix, suffix, self.format.ext())
    }
}

/// Parse arguments, run the requested subcommand, and return the process
/// exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (common, handler): (&Common, CommandFn) = match &cli.command {
        Cmd::Solve(c) => (c, cmd_solve),
        Cmd::Sweep(c) => (c, cmd_sweep),
        Cmd::Simulate(c) => (c, cmd_simulate),
        Cmd::Compare(c) => (c, cmd_compare),
        Cmd::Network(c) => (c, cmd_network),
        Cmd::Hetero(c) => (c, cmd_hetero),
        Cmd::Fit(c) => (c, cmd_fit),
        Cmd::Check(c) => (c, cmd_check),
    };
    match load_scenario(&common.config).and_then(|scn| {
        let target = resolve_target(&scn, common);
        handler(&scn, &target)
    }) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

type CommandFn = fn(&ScenarioConfig, &Target) -> Result<()>;

/// Exit-code contract: configuration and input-shape problems are 1, I/O is
/// 3, everything a solver can report is 2.
fn exit_code(e: &ModelError) -> i32 {
    i32::from(e.class())
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    let scn: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))?;
    scn.market.validate()?;
    Ok(scn)
}

fn resolve_target(scn: &ScenarioConfig, common: &Common) -> Target {
    let output = scn.output.clone().unwrap_or_default();
    Target {
        prefix: common
            .out
            .clone()
            .or(output.prefix)
            .unwrap_or_else(|| "out".to_string()),
        format: common.format.or(output.format).unwrap_or_default(),
    }
}

fn write_file(path: &str, content: &str) -> Result<()> {
    fs::write(path, content)?;
    println!("wrote {path}");
    Ok(())
}

fn write_json(path: &str, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| ModelError::Config(format!("serialization: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

/// Quote a CSV field only when it needs quoting.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn case_label(case: EquilibriumCase) -> &'static str {
    match case {
        EquilibriumCase::AllActive => "AllActive",
        EquilibriumCase::PartiallyActive => "PartiallyActive",
        EquilibriumCase::NoProfiling => "NoProfiling",
        EquilibriumCase::PerfectProfiling => "PerfectProfiling",
    }
}

fn four_stage_case_label(case: FourStageCase) -> &'static str {
    match case {
        FourStageCase::IAllActiveLow => "I_AllActiveLow",
        FourStageCase::IIAllActiveHigh => "II_AllActiveHigh",
        FourStageCase::IIIPartiallyActive => "III_PartiallyActive",
    }
}

fn regime_label(regime: Regime) -> &'static str {
    match regime {
        Regime::I => "I",
        Regime::II => "II",
        Regime::III => "III",
    }
}

/// Regime column value; "-" when classification is not defined for the
/// configuration (non-uniform distribution, trivial parameters).
fn regime_column(cfg: &MarketConfig) -> &'static str {
    pbe::classify_regime(cfg)
        .map(|c| regime_label(c.regime))
        .unwrap_or("-")
}

fn as_object(value: Value) -> serde_json::Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => unreachable!("struct serializes to an object"),
    }
}

// ---------------------------------------------------------------- solve --

fn cmd_solve(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    match scn.model {
        Model::ThreeStage => solve_three_stage(scn, target),
        Model::FourStage => solve_four_stage_cmd(scn, target),
        Model::Network => cmd_network(scn, target),
        Model::Hetero => cmd_hetero(scn, target),
    }
}

fn solve_three_stage(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let eq = pbe::solve_pbe_or_benchmark(&scn.market)?;
    let regime = regime_column(&scn.market);
    let path = target.path("equilibrium");
    match target.format {
        OutputFormat::Csv => {
            let mut out = String::from(
                "v_star,p0_star,case,regime,residual,expected_revenue_profiled,expected_revenue_nonprofiled,fraction_active\n",
            );
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                eq.v_star,
                eq.p0_star,
                case_label(eq.case),
                regime,
                eq.residual,
                eq.expected_revenue_profiled,
                eq.expected_revenue_nonprofiled,
                eq.fraction_active,
            );
            write_file(&path, &out)
        }
        OutputFormat::Json => {
            let mut map = as_object(to_value(&eq)?);
            map.insert("regime".into(), Value::String(regime.into()));
            write_json(&path, &Value::Object(map))
        }
    }
}

fn solve_four_stage_cmd(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let out4 = fourstage::solve_four_stage(&scn.market)?;
    let path = target.path("equilibrium");
    match target.format {
        OutputFormat::Csv => {
            let mut out =
                String::from("v_e,p0_e,case,v_tilde,total_expected_revenue\n");
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                out4.v_e,
                out4.p0_e,
                four_stage_case_label(out4.case),
                out4.v_tilde,
                out4.total_expected_revenue,
            );
            write_file(&path, &out)
        }
        OutputFormat::Json => write_json(&path, &to_value(&out4)?),
    }
}

fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| ModelError::Config(format!("serialization: {e}")))
}

// ---------------------------------------------------------------- sweep --

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p0_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fraction_active: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Delta => "delta",
        SweepParameter::Vbar => "vbar",
        SweepParameter::N => "n",
        SweepParameter::Omega0 => "omega0",
    }
}

/// Copy the base configuration with one parameter replaced.
fn apply_parameter(base: &MarketConfig, p: SweepParameter, x: f64) -> Result<MarketConfig> {
    let mut cfg = base.clone();
    match p {
        SweepParameter::Delta => cfg.delta = x,
        SweepParameter::Omega0 => cfg.social.omega0 = x,
        SweepParameter::N => {
            if !(2.0..=1e9).contains(&x) {
                return Err(ModelError::Config(format!(
                    "sweep value {x} is not a valid population size"
                )));
            }
            cfg.social.n = x.round() as u32;
        }
        SweepParameter::Vbar => match &mut cfg.social.dist {
            ValuationDistribution::Uniform { vbar }
            | ValuationDistribution::Exponential { vbar, .. }
            | ValuationDistribution::Beta { vbar, .. } => *vbar = x,
            ValuationDistribution::TruncNormal { .. } => {
                return Err(ModelError::Config(
                    "vbar sweep is undefined for trunc_normal; sweep is only \
                     supported for families with an explicit vbar"
                        .into(),
                ));
            }
        },
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep_point(cfg: &MarketConfig, model: Model) -> Result<(f64, f64, &'static str, &'static str, f64)> {
    match model {
        Model::ThreeStage => {
            let eq = pbe::solve_pbe_or_benchmark(cfg)?;
            Ok((
                eq.v_star,
                eq.p0_star,
                case_label(eq.case),
                regime_column(cfg),
                eq.fraction_active,
            ))
        }
        Model::FourStage => {
            let out4 = fourstage::solve_four_stage(cfg)?;
            Ok((
                out4.v_e,
                out4.p0_e,
                four_stage_case_label(out4.case),
                "-",
                cfg.social.dist.cdf(out4.v_e),
            ))
        }
        Model::Network | Model::Hetero => Err(ModelError::Config(
            "sweep supports the three_stage and four_stage models".into(),
        )),
    }
}

fn cmd_sweep(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let sweep = scn
        .sweep
        .as_ref()
        .ok_or_else(|| ModelError::Config("sweep command requires a sweep block".into()))?;
    if sweep.points < 2 {
        return Err(ModelError::Config(format!(
            "sweep.points is {}; at least 2 grid points are required",
            sweep.points
        )));
    }
    if !sweep.from.is_finite() || !sweep.to.is_finite() {
        return Err(ModelError::Config("sweep bounds must be finite".into()));
    }

    let mut rows = Vec::with_capacity(sweep.points);
    let mut first_err: Option<ModelError> = None;
    let mut successes = 0usize;
    for i in 0..sweep.points {
        let t = i as f64 / (sweep.points - 1) as f64;
        let x = sweep.from + (sweep.to - sweep.from) * t;
        let solved = apply_parameter(&scn.market, sweep.parameter, x)
            .and_then(|cfg| sweep_point(&cfg, scn.model));
        match solved {
            Ok((v_star, p0_star, case, regime, fraction)) => {
                successes += 1;
                rows.push(SweepRow {
                    value: x,
                    v_star: Some(v_star),
                    p0_star: Some(p0_star),
                    case: Some(case),
                    regime: Some(regime),
                    fraction_active: Some(fraction),
                    error: None,
                });
            }
            Err(e) => {
                rows.push(SweepRow {
                    value: x,
                    v_star: None,
                    p0_star: None,
                    case: None,
                    regime: None,
                    fraction_active: None,
                    error: Some(e.to_string()),
                });
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }

    let path = target.path("sweep");
    match target.format {
        OutputFormat::Csv => {
            let mut out = String::from(
                "parameter,value,v_star,p0_star,case,regime,fraction_active,error\n",
            );
            let name = parameter_name(sweep.parameter);
            for row in &rows {
                let fmt_opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    name,
                    row.value,
                    fmt_opt(row.v_star),
                    fmt_opt(row.p0_star),
                    row.case.unwrap_or(""),
                    row.regime.unwrap_or(""),
                    fmt_opt(row.fraction_active),
                    csv_field(row.error.as_deref().unwrap_or("")),
                );
            }
            write_file(&path, &out)?;
        }
        OutputFormat::Json => {
            let value = serde_json::json!({
                "parameter": parameter_name(sweep.parameter),
                "rows": to_value(&rows)?,
            });
            write_json(&path, &value)?;
        }
    }

    // Partial failure is tolerated; an all-failed sweep reports its first
    // error so the exit code reflects the cause.
    if successes == 0 {
        return Err(first_err.expect("points >= 2 and none succeeded"));
    }
    Ok(())
}

// ------------------------------------------------------------- simulate --

fn sim_spec(scn: &ScenarioConfig) -> Result<(&SimSpec, u64)> {
    let spec = scn
        .sim
        .as_ref()
        .ok_or_else(|| ModelError::Config("this command requires a sim block".into()))?;
    let seed = spec.seed.ok_or_else(|| {
        ModelError::Config("sim.seed is required; randomness is never clock-seeded".into())
    })?;
    Ok((spec, seed))
}

fn cmd_simulate(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let (spec, seed) = sim_spec(scn)?;
    let (price, threshold) = match scn.model {
        Model::ThreeStage => {
            let eq = pbe::solve_pbe_or_benchmark(&scn.market)?;
            (eq.p0_star, eq.v_star)
        }
        Model::FourStage => {
            let out4 = fourstage::solve_four_stage(&scn.market)?;
            (out4.p0_e, out4.v_e)
        }
        Model::Network | Model::Hetero => {
            return Err(ModelError::Config(
                "simulate supports the three_stage and four_stage models".into(),
            ));
        }
    };
    let report = sim::simulate_market(
        &scn.market,
        price,
        &StrategyProfile::ThresholdRule(threshold),
        seed,
        spec.runs,
    )?;

    let path = target.path("simulation");
    match target.format {
        OutputFormat::Csv => {
            let mut out = String::from("metric,value\n");
            let rows: [(&str, f64); 12] = [
                ("price", price),
                ("threshold", threshold),
                ("runs", report.runs as f64),
                ("mean_revenue", report.mean_revenue),
                ("var_revenue", report.var_revenue),
                ("min_revenue", report.min_revenue),
                ("max_revenue", report.max_revenue),
                ("mean_profiled_revenue", report.mean_profiled_revenue),
                ("var_profiled_revenue", report.var_profiled_revenue),
                ("mean_nonprofiled_revenue", report.mean_nonprofiled_revenue),
                ("var_nonprofiled_revenue", report.var_nonprofiled_revenue),
                ("mean_user_payoff", report.mean_user_payoff),
            ];
            for (name, value) in rows {
                let _ = writeln!(out, "{name},{value}");
            }
            write_file(&path, &out)?;
            // Per-run series in a side file so the metric table stays flat.
            let runs_path = format!("{}_runs.csv", target.prefix);
            let mut series = String::from("run,revenue\n");
            for (i, r) in report.per_run_revenue.iter().enumerate() {
                let _ = writeln!(series, "{i},{r}");
            }
            write_file(&runs_path, &series)
        }
        OutputFormat::Json => {
            let mut map = as_object(to_value(&report)?);
            map.insert("price".into(), to_value(&price)?);
            map.insert("threshold".into(), to_value(&threshold)?);
            write_json(&path, &Value::Object(map))
        }
    }
}

// -------------------------------------------------------------- compare --

fn cmd_compare(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let (spec, seed) = sim_spec(scn)?;
    let closed = fourstage::compare_models(&scn.market)?;
    let bench = sim::benchmark_comparison(&scn.market, seed, spec.runs)?;
    let (sim_mean_ratio, sim_var_ratio) =
        sim::variance_comparison(&scn.market, seed, spec.runs)?;

    match target.format {
        OutputFormat::Csv => {
            let mut mech = String::from("mechanism,mean_revenue,closed_form,improvement_vs_pip\n");
            let _ = writeln!(
                mech,
                "pip,{},{},0",
                bench.pip.mean_revenue, bench.closed_pip
            );
            let _ = writeln!(
                mech,
                "tpp,{},{},{}",
                bench.tpp.mean_revenue, bench.closed_tpp, bench.tpp_improvement
            );
            let _ = writeln!(
                mech,
                "spp,{},{},{}",
                bench.spp.mean_revenue, bench.closed_spp, bench.spp_improvement
            );
            write_file(&format!("{}_mechanisms.csv", target.prefix), &mech)?;

            let mut cmp = String::from("metric,value\n");
            let rows: [(&str, f64); 8] = [
                ("three_stage_total", closed.three_stage_total),
                ("four_stage_total", closed.four_stage_total),
                ("ratio_total", closed.ratio_total),
                ("bound", closed.bound),
                ("profiled_delta", closed.profiled_delta),
                ("nonprofiled_delta", closed.nonprofiled_delta),
                ("sim_mean_ratio", sim_mean_ratio),
                ("sim_var_ratio", sim_var_ratio),
            ];
            for (name, value) in rows {
                let _ = writeln!(cmp, "{name},{value}");
            }
            write_file(&format!("{}_commitment.csv", target.prefix), &cmp)
        }
        OutputFormat::Json => {
            let mut commitment = as_object(to_value(&closed)?);
            commitment.insert("sim_mean_ratio".into(), to_value(&sim_mean_ratio)?);
            commitment.insert("sim_var_ratio".into(), to_value(&sim_var_ratio)?);
            let value = serde_json::json!({
                "mechanisms": to_value(&bench)?,
                "commitment": Value::Object(commitment),
            });
            write_json(&format!("{}_compare.json", target.prefix), &value)
        }
    }
}

// -------------------------------------------------------------- network --

fn cmd_network(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let graph_path = scn
        .graph
        .as_ref()
        .ok_or_else(|| ModelError::Config("network command requires a graph path".into()))?;
    let graph = hetero::load_graph(graph_path)?;
    if graph.dropped_self_loops > 0 || graph.dropped_duplicates > 0 {
        eprintln!(
            "note: dropped {} self-loop(s) and {} duplicate edge(s)",
            graph.dropped_self_loops, graph.dropped_duplicates
        );
    }
    let eq = hetero::solve_network_pbe(&scn.market, &graph)?;
    let report = hetero::degree_threshold_report(&eq, &graph);
    let max_residual = eq.residuals.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "network: {} nodes, {} edges, spearman(degree, v_star) = {}{}",
        graph.n,
        graph.edge_count(),
        report.spearman,
        if report.degenerate_ranks { " (degenerate ranks)" } else { "" },
    );

    let path = target.path("network");
    match target.format {
        OutputFormat::Csv => {
            let mut out = String::from("node,degree,v_star,p0\n");
            for row in &report.rows {
                let _ = writeln!(out, "{},{},{},{}", row.node, row.degree, row.v_star, row.p0);
            }
            write_file(&path, &out)
        }
        OutputFormat::Json => {
            let mut map = as_object(to_value(&report)?);
            map.insert("iterations".into(), to_value(&eq.iterations)?);
            map.insert("max_residual".into(), to_value(&max_residual)?);
            write_json(&path, &Value::Object(map))
        }
    }
}

// --------------------------------------------------------------- hetero --

fn cmd_hetero(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let types = scn
        .types
        .as_ref()
        .ok_or_else(|| ModelError::Config("hetero command requires a types block".into()))?;
    let sol = hetero::solve_hetero_pbe(&scn.market, types)?;
    if !sol.converged {
        eprintln!(
            "note: alternation stopped at residual {} after {} iterations; \
             treat the reported point as approximate",
            sol.residual, sol.iterations
        );
    }

    let path = target.path("hetero");
    match target.format {
        OutputFormat::Csv => {
            let mut out =
                String::from("type,alpha,gamma,v_star,p0,converged,residual,iterations\n");
            for (k, v_star) in sol.v_stars.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    k,
                    types.alphas[k],
                    types.gammas[k],
                    v_star,
                    sol.p0,
                    sol.converged,
                    sol.residual,
                    sol.iterations,
                );
            }
            write_file(&path, &out)
        }
        OutputFormat::Json => {
            let mut map = as_object(to_value(&sol)?);
            map.insert("alphas".into(), to_value(&types.alphas)?);
            map.insert("gammas".into(), to_value(&types.gammas)?);
            write_json(&path, &Value::Object(map))
        }
    }
}

// ------------------------------------------------------------------ fit --

/// Whitespace-separated floats, one or more per line; `#` starts a comment.
fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            let value: f64 = token.parse().map_err(|_| ModelError::ParseError {
                line: idx + 1,
                message: format!("expected a number, found {token:?}"),
            })?;
            samples.push(value);
        }
    }
    Ok(samples)
}

fn cmd_fit(scn: &ScenarioConfig, target: &Target) -> Result<()> {
    let samples_path = scn
        .samples
        .as_ref()
        .ok_or_else(|| ModelError::Config("fit command requires a samples path".into()))?;
    let bounds = scn.fit.ok_or_else(|| {
        ModelError::Config("fit command requires a fit block with lo and hi bounds".into())
    })?;
    let samples = parse_samples(&fs::read_to_string(samples_path)?)?;
    let result = dist::fit_truncated_normal(&samples, bounds.lo, bounds.hi)?;
    let (mu, sigma) = match result.dist {
        ValuationDistribution::TruncNormal { mu, sigma, .. } => (mu, sigma),
        _ => unreachable!("fit returns a truncated normal"),
    };
    let ks_critical = dist::ks_critical_value(samples.len(), 0.05);
    let accepted = result.ks_statistic < ks_critical;

    let path = target.path("fit");
    match target.format {
        OutputFormat::Csv => {
            let mut out = String::from("metric,value\n");
            let rows: [(&str, f64); 8] = [
                ("mu", mu),
                ("sigma", sigma),
                ("lo", bounds.lo),
                ("hi", bounds.hi),
                ("n_samples", samples.len() as f64),
                ("ks_statistic", result.ks_statistic),
                ("ks_critical_05", ks_critical),
                ("log_likelihood", result.log_likelihood),
            ];
            for (name, value) in rows {
                let _ = writeln!(out, "{name},{value}");
            }
            let _ = writeln!(out, "accepted,{}", accepted);
            write_file(&path, &out)
        }
        OutputFormat::Json => {
            let mut map = as_object(to_value(&result)?);
            map.insert("n_samples".into(), to_value(&samples.len())?);
            map.insert("ks_critical_05".into(), to_value(&ks_critical)?);
            map.insert("accepted".into(), Value::Bool(accepted));
            write_json(&path, &Value::Object(map))
        }
    }
}

// ---------------------------------------------------------------- check --

fn cmd_check(scn: &ScenarioConfig, _target: &Target) -> Result<()> {
    let cfg = &scn.market;
    let report = cfg.social.dist.check_assumptions(2001)?;
    let (lo, hi) = cfg.social.dist.support();
    println!("{:<22} {}", "distribution", cfg.social.dist.kind_name());
    println!("{:<22} [{}, {}]", "support", lo, hi);
    println!("{:<22} {}", "n", cfg.social.n);
    println!("{:<22} {}", "omega0", cfg.social.omega0);
    println!("{:<22} {}", "delta", cfg.delta);
    println!("{:<22} {}", "monopoly_price", report.monopoly_price);
    println!(
        "{:<22} {} (largest violation {})",
        "cdf_concave", report.cdf_concave, report.cdf_violation
    );
    println!(
        "{:<22} {} (largest violation {})",
        "revenue_concave", report.revenue_concave, report.revenue_violation
    );
    println!("{:<22} {}", "ln_top", cfg.social.ln_top());
    println!("{:<22} {}", "nontrivial", cfg.nontrivial());
    match pbe::classify_regime(cfg) {
        Ok(cls) => {
            println!(
                "{:<22} {} (delta_hat {}, delta_tilde {})",
                "regime", regime_label(cls.regime), cls.delta_hat, cls.delta_tilde
            );
        }
        Err(e) => println!("{:<22} - ({e})", "regime"),
    }
    if !report.notes.is_empty() {
        println!("{:<22} {}", "notes", report.notes);
    }
    if !cfg.nontrivial() {
        println!(
            "warning: vbar <= 2 ln(n-1+omega0), so the threshold stays capped \
             at vbar for every accuracy level"
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> ScenarioConfig {
        serde_json::from_str(text).expect("valid scenario")
    }

    const MARKET: &str = r#""market": {
        "social": {"n": 100, "omega0": 2.0, "dist": {"kind": "uniform", "vbar": 40.0}},
        "delta": 0.7,
        "alpha": 0.5
    }"#;

    #[test]
    fn minimal_scenario_defaults() {
        let scn = scenario(&format!("{{ {MARKET} }}"));
        assert_eq!(scn.model, Model::ThreeStage);
        assert!(scn.sweep.is_none());
        assert!(scn.sim.is_none());
        assert!(scn.output.is_none());
    }

    #[test]
    fn unknown_field_names_offender() {
        let err = serde_json::from_str::<ScenarioConfig>(&format!(
            "{{ {MARKET}, \"modle\": \"three_stage\" }}"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("modle"), "{err}");
    }

    #[test]
    fn model_and_format_parse_snake_case() {
        let scn = scenario(&format!(
            "{{ {MARKET}, \"model\": \"four_stage\", \"output\": {{\"format\": \"json\"}} }}"
        ));
        assert_eq!(scn.model, Model::FourStage);
        assert_eq!(scn.output.unwrap().format, Some(OutputFormat::Json));
    }

    #[test]
    fn sim_defaults() {
        let scn = scenario(&format!("{{ {MARKET}, \"sim\": {{\"seed\": 7}} }}"));
        let spec = scn.sim.unwrap();
        assert_eq!(spec.seed, Some(7));
        assert_eq!(spec.runs, 10_000);
        assert!(spec.paired);
    }

    #[test]
    fn seed_omission_is_flagged() {
        let scn = scenario(&format!("{{ {MARKET}, \"sim\": {{\"runs\": 100}} }}"));
        let err = sim_spec(&scn).unwrap_err();
        assert!(matches!(err, ModelError::Config(ref m) if m.contains("seed")));
    }

    #[test]
    fn apply_parameter_delta_and_n() {
        let scn = scenario(&format!("{{ {MARKET} }}"));
        let c = apply_parameter(&scn.market, SweepParameter::Delta, 0.25).unwrap();
        assert_eq!(c.delta, 0.25);
        let c = apply_parameter(&scn.market, SweepParameter::N, 49.6).unwrap();
        assert_eq!(c.social.n, 50);
        assert!(apply_parameter(&scn.market, SweepParameter::N, 1.0).is_err());
    }

    #[test]
    fn apply_parameter_vbar_uniform_only() {
        let scn = scenario(&format!("{{ {MARKET} }}"));
        let c = apply_parameter(&scn.market, SweepParameter::Vbar, 55.0).unwrap();
        assert_eq!(c.vbar(), 55.0);

        let tn = scenario(
            r#"{ "market": {
                "social": {"n": 100, "omega0": 2.0,
                           "dist": {"kind": "trunc_normal", "mu": 60.0, "sigma": 20.0, "lo": 20.0, "hi": 100.0}},
                "delta": 0.5,
                "alpha": 0.5
            } }"#,
        );
        let err = apply_parameter(&tn.market, SweepParameter::Vbar, 55.0).unwrap_err();
        assert!(matches!(err, ModelError::Config(_)));
    }

    #[test]
    fn invalid_parameter_value_reports_config_error() {
        let scn = scenario(&format!("{{ {MARKET} }}"));
        let err = apply_parameter(&scn.market, SweepParameter::Delta, 1.5).unwrap_err();
        assert_eq!(exit_code(&err), 1);
    }

    #[test]
    fn csv_field_escapes() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(exit_code(&ModelError::Config("x".into())), 1);
        assert_eq!(
            exit_code(&ModelError::ParseError { line: 3, message: "bad".into() }),
            1
        );
        assert_eq!(exit_code(&ModelError::EmptyGraph), 1);
        assert_eq!(
            exit_code(&ModelError::NoEquilibriumFound {
                lo: 0.0,
                hi: 1.0,
                defect_lo: -1.0,
                defect_hi: -0.5
            }),
            2
        );
        assert_eq!(exit_code(&ModelError::ZeroAccuracy), 2);
        assert_eq!(
            exit_code(&ModelError::Io(std::io::Error::other("disk"))),
            3
        );
    }

    #[test]
    fn parse_samples_handles_comments_and_errors() {
        let samples = parse_samples("1.0 2.5 # tail\n# full comment\n3.5\n").unwrap();
        assert_eq!(samples, vec![1.0, 2.5, 3.5]);
        let err = parse_samples("1.0\nnot_a_number\n").unwrap_err();
        assert!(matches!(err, ModelError::ParseError { line: 2, .. }));
    }

    #[test]
    fn target_paths() {
        let t = Target { prefix: "run1".into(), format: OutputFormat::Json };
        assert_eq!(t.path("equilibrium"), "run1_equilibrium.json");
        let t = Target { prefix: "out".into(), format: OutputFormat::Csv };
        assert_eq!(t.path("sweep"), "out_sweep.csv");
    }

    #[test]
    fn labels_are_stable() {
        assert_eq!(case_label(EquilibriumCase::PartiallyActive), "PartiallyActive");
        assert_eq!(
            four_stage_case_label(FourStageCase::IIIPartiallyActive),
            "III_PartiallyActive"
        );
        assert_eq!(regime_label(Regime::II), "II");
    }
}
