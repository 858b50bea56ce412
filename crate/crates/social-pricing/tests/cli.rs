//! End-to-end tests of the command-line binary: exit codes, pinned CSV
//! headers, JSON round-trips, and determinism across invocations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use social_pricing::dist::ValuationDistribution;
use social_pricing::fourstage;
use social_pricing::pbe::{self, EquilibriumOutcome, MarketConfig};

const BIN: &str = env!("CARGO_BIN_EXE_social-pricing");

/// Scratch directory removed on drop; one per test so runs never collide.
struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("sp-cli-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).expect("create scratch dir");
        Workspace { dir }
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let path = self.dir.join(name);
        fs::write(&path, content).expect("write input");
        path
    }

    fn prefix(&self, name: &str) -> String {
        self.dir.join(name).to_string_lossy().into_owned()
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.dir.join(name)).expect("read output")
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary starts")
}

fn exit(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn uniform_config(delta: f64) -> String {
    format!(
        r#"{{
  "market": {{
    "social": {{"n": 100, "omega0": 2.0, "dist": {{"kind": "uniform", "vbar": 40.0}}}},
    "delta": {delta},
    "alpha": 0.5
  }}
}}"#
    )
}

fn market(delta: f64) -> MarketConfig {
    serde_json::from_value(
        serde_json::from_str::<serde_json::Value>(&uniform_config(delta)).unwrap()["market"]
            .clone(),
    )
    .unwrap()
}

#[test]
fn solve_writes_pinned_csv_header_and_benchmark_row() {
    let ws = Workspace::new("solve-csv");
    let cfg = ws.write("cfg.json", &uniform_config(0.2));
    let out = run(
        &["solve", cfg.to_str().unwrap(), "--out", &ws.prefix("r")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("r_equilibrium.csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "v_star,p0_star,case,regime,residual,expected_revenue_profiled,expected_revenue_nonprofiled,fraction_active"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), 40.0);
    assert_eq!(row[1].parse::<f64>().unwrap(), 20.0);
    assert_eq!(row[2], "AllActive");
    assert_eq!(row[3], "I");
}

#[test]
fn solve_json_round_trips_and_matches_fresh_solve() {
    let ws = Workspace::new("solve-json");
    let cfg = ws.write("cfg.json", &uniform_config(0.7));
    let out = run(
        &[
            "solve",
            cfg.to_str().unwrap(),
            "--out",
            &ws.prefix("r"),
            "--format",
            "json",
        ],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("r_equilibrium.json");
    // The extra "regime" key must not break deserialization into the
    // library's outcome type.
    let parsed: EquilibriumOutcome = serde_json::from_str(&text).unwrap();
    let fresh = pbe::solve_pbe_or_benchmark(&market(0.7)).unwrap();
    assert_eq!(parsed.v_star, fresh.v_star, "serialized floats round-trip");
    assert_eq!(parsed.p0_star, fresh.p0_star);
    assert!(parsed.residual.abs() < 1e-8);
    // Re-solve check: the stored point satisfies the fixed-point equation.
    let recheck = pbe::threshold_given_price(&market(0.7), parsed.p0_star).unwrap();
    assert!((recheck - parsed.v_star).abs() < 1e-8);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["regime"], "III");
}

#[test]
fn solve_delta_zero_routes_to_no_profiling() {
    let ws = Workspace::new("solve-d0");
    let cfg = ws.write("cfg.json", &uniform_config(0.0));
    let out = run(
        &["solve", cfg.to_str().unwrap(), "--out", &ws.prefix("r")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0);
    assert!(ws.read("r_equilibrium.csv").contains("NoProfiling"));
}

#[test]
fn four_stage_solve_matches_library() {
    let ws = Workspace::new("solve-4s");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.7).replace("\"market\"", "\"model\": \"four_stage\", \"market\""),
    );
    let out = run(
        &["solve", cfg.to_str().unwrap(), "--out", &ws.prefix("r")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("r_equilibrium.csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "v_e,p0_e,case,v_tilde,total_expected_revenue"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let expected = fourstage::solve_four_stage(&market(0.7)).unwrap();
    assert_eq!(row[0].parse::<f64>().unwrap(), expected.v_e);
    assert_eq!(row[1].parse::<f64>().unwrap(), expected.p0_e);
    assert_eq!(row[2], "III_PartiallyActive");
}

#[test]
fn malformed_config_exits_one_and_names_field() {
    let ws = Workspace::new("badcfg");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.5).replacen('{', "{\"modle\": \"three_stage\",", 1),
    );
    let out = run(&["solve", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 1);
    assert!(stderr(&out).contains("modle"), "stderr: {}", stderr(&out));

    let cfg = ws.write("type.json", &uniform_config(0.5).replace("0.5,", "\"high\","));
    let out = run(&["solve", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 1);
    assert!(stderr(&out).contains("line"), "stderr: {}", stderr(&out));
}

#[test]
fn out_of_range_delta_exits_one() {
    let ws = Workspace::new("range");
    let cfg = ws.write("cfg.json", &uniform_config(1.5));
    let out = run(&["solve", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 1);
    assert!(stderr(&out).contains("delta"));
}

#[test]
fn missing_config_file_exits_three() {
    let ws = Workspace::new("missing");
    let out = run(&["solve", "no_such_file.json"], &ws.dir);
    assert_eq!(exit(&out), 3);
}

#[test]
fn solver_failure_exits_two() {
    let ws = Workspace::new("solver-fail");
    let cfg = ws.write(
        "cfg.json",
        r#"{
  "market": {
    "social": {"n": 100, "omega0": 2.0,
               "dist": {"kind": "trunc_normal", "mu": 57.84, "sigma": 20.25, "lo": 20.0, "hi": 100.0}},
    "delta": 0.9,
    "alpha": 0.5
  }
}"#,
    );
    let out = run(&["solve", cfg.to_str().unwrap(), "--out", &ws.prefix("r")], &ws.dir);
    assert_eq!(exit(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("no equilibrium"));
}

#[test]
fn unknown_arguments_exit_one_and_help_exits_zero() {
    let ws = Workspace::new("usage");
    let out = run(&["frobnicate", "x.json"], &ws.dir);
    assert_eq!(exit(&out), 1);
    let out = run(&["--help"], &ws.dir);
    assert_eq!(exit(&out), 0);
    assert!(stdout(&out).contains("solve"));
    assert!(stdout(&out).contains("sweep"));
}

#[test]
fn sweep_two_points_writes_exactly_two_rows() {
    let ws = Workspace::new("sweep2");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.5).replace(
            "\n}",
            ",\n  \"sweep\": {\"parameter\": \"delta\", \"from\": 0.3, \"to\": 0.6, \"points\": 2}\n}",
        ),
    );
    let out = run(
        &["sweep", cfg.to_str().unwrap(), "--out", &ws.prefix("r")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("r_sweep.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "parameter,value,v_star,p0_star,case,regime,fraction_active,error"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("delta,0.3,"));
    assert!(lines[2].starts_with("delta,0.6,"));
}

#[test]
fn sweep_partial_failure_keeps_exit_zero_with_error_rows() {
    let ws = Workspace::new("sweep-partial");
    let cfg = ws.write(
        "cfg.json",
        r#"{
  "market": {
    "social": {"n": 100, "omega0": 2.0,
               "dist": {"kind": "trunc_normal", "mu": 57.84, "sigma": 20.25, "lo": 20.0, "hi": 100.0}},
    "delta": 0.5,
    "alpha": 0.5
  },
  "sweep": {"parameter": "delta", "from": 0.3, "to": 0.9, "points": 4}
}"#,
    );
    let out = run(
        &["sweep", cfg.to_str().unwrap(), "--out", &ws.prefix("r")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("r_sweep.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    // delta = 0.9 has no equilibrium for this truncated normal; its row
    // records the failure while earlier points still report values.
    assert!(lines[1].ends_with(','), "first point clean: {}", lines[1]);
    let last = lines[4];
    assert!(last.contains("no equilibrium"), "last row records error: {last}");
    let fields: Vec<&str> = last.splitn(3, ',').collect();
    assert!(fields[2].starts_with(','), "value columns empty on failure");
}

#[test]
fn sweep_all_failed_returns_first_error_code() {
    let ws = Workspace::new("sweep-allfail");
    let cfg = ws.write(
        "cfg.json",
        r#"{
  "market": {
    "social": {"n": 100, "omega0": 2.0,
               "dist": {"kind": "trunc_normal", "mu": 57.84, "sigma": 20.25, "lo": 20.0, "hi": 100.0}},
    "delta": 0.5,
    "alpha": 0.5
  },
  "sweep": {"parameter": "vbar", "from": 30.0, "to": 50.0, "points": 3}
}"#,
    );
    let out = run(
        &["sweep", cfg.to_str().unwrap(), "--out", &ws.prefix("r")],
        &ws.dir,
    );
    // vbar is undefined for trunc_normal: every point fails with a config
    // error, and the file still documents all three failures.
    assert_eq!(exit(&out), 1, "stderr: {}", stderr(&out));
    assert_eq!(ws.read("r_sweep.csv").lines().count(), 4);
}

#[test]
fn simulate_requires_seed() {
    let ws = Workspace::new("sim-seed");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.7).replace("\n}", ",\n  \"sim\": {\"runs\": 50}\n}"),
    );
    let out = run(&["simulate", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 1);
    assert!(stderr(&out).contains("seed"), "stderr: {}", stderr(&out));
}

#[test]
fn simulate_is_deterministic_across_invocations() {
    let ws = Workspace::new("sim-det");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.7).replace(
            "\n}",
            ",\n  \"sim\": {\"seed\": 11, \"runs\": 400}\n}",
        ),
    );
    let a = run(
        &["simulate", cfg.to_str().unwrap(), "--out", &ws.prefix("a")],
        &ws.dir,
    );
    let b = run(
        &["simulate", cfg.to_str().unwrap(), "--out", &ws.prefix("b")],
        &ws.dir,
    );
    assert_eq!(exit(&a), 0, "stderr: {}", stderr(&a));
    assert_eq!(exit(&b), 0);
    assert_eq!(ws.read("a_simulation.csv"), ws.read("b_simulation.csv"));
    assert_eq!(ws.read("a_runs.csv"), ws.read("b_runs.csv"));
    let text = ws.read("a_simulation.csv");
    assert!(text.starts_with("metric,value\n"));
    assert!(text.contains("mean_revenue,"));
    assert_eq!(ws.read("a_runs.csv").lines().count(), 401);
}

#[test]
fn compare_emits_mechanism_and_commitment_tables() {
    let ws = Workspace::new("compare");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.7).replace(
            "\n}",
            ",\n  \"sim\": {\"seed\": 42, \"runs\": 500}\n}",
        ),
    );
    let out = run(
        &["compare", cfg.to_str().unwrap(), "--out", &ws.prefix("c")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let mech = ws.read("c_mechanisms.csv");
    assert!(mech.starts_with("mechanism,mean_revenue,closed_form,improvement_vs_pip\n"));
    assert_eq!(mech.lines().count(), 4);
    let cmp = ws.read("c_commitment.csv");
    assert!(cmp.contains("ratio_total,"));
    assert!(cmp.contains("sim_var_ratio,"));
}

#[test]
fn network_triangle_gives_identical_thresholds() {
    let ws = Workspace::new("net-triangle");
    ws.write("graph.txt", "0 1\n1 2\n0 2\n");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.7).replace(
            "\n}",
            ",\n  \"model\": \"network\",\n  \"graph\": \"graph.txt\"\n}",
        ),
    );
    let out = run(
        &["network", cfg.to_str().unwrap(), "--out", &ws.prefix("n")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("spearman"));
    let text = ws.read("n_network.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "node,degree,v_star,p0");
    assert_eq!(lines.len(), 4);
    let v: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!((v[0] - v[1]).abs() < 1e-12 && (v[1] - v[2]).abs() < 1e-12);
}

#[test]
fn hetero_preserves_alpha_ordering() {
    let ws = Workspace::new("hetero");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.7).replace(
            "\n}",
            ",\n  \"types\": {\"alphas\": [0.5, 2.0], \"gammas\": [0.5, 0.5]}\n}",
        ),
    );
    let out = run(
        &["hetero", cfg.to_str().unwrap(), "--out", &ws.prefix("h")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("h_hetero.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "type,alpha,gamma,v_star,p0,converged,residual,iterations"
    );
    let v0: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    let v1: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
    assert!(v0 <= v1, "lower alpha keeps the lower threshold");
    assert!(lines[1].contains("true"), "converged column");
}

#[test]
fn fit_recovers_generating_parameters() {
    let ws = Workspace::new("fit");
    let dist = ValuationDistribution::TruncNormal {
        mu: 57.84,
        sigma: 20.25,
        lo: 20.0,
        hi: 100.0,
    };
    let samples = dist.sample(123, 2000);
    let mut text = String::from("# synthetic draws\n");
    for chunk in samples.chunks(5) {
        let row: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    ws.write("samples.txt", &text);
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.5).replace(
            "\n}",
            ",\n  \"samples\": \"samples.txt\",\n  \"fit\": {\"lo\": 20.0, \"hi\": 100.0}\n}",
        ),
    );
    let out = run(
        &["fit", cfg.to_str().unwrap(), "--out", &ws.prefix("f")],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = ws.read("f_fit.csv");
    let field = |name: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("mu") - 57.84).abs() < 2.0, "mu = {}", field("mu"));
    assert!((field("sigma") - 20.25).abs() < 2.0, "sigma = {}", field("sigma"));
    assert!(text.contains("accepted,true"));
}

#[test]
fn fit_rejects_bad_sample_line_with_location() {
    let ws = Workspace::new("fit-bad");
    ws.write("samples.txt", "1.0 2.0\noops\n");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.5).replace(
            "\n}",
            ",\n  \"samples\": \"samples.txt\",\n  \"fit\": {\"lo\": 0.0, \"hi\": 10.0}\n}",
        ),
    );
    let out = run(&["fit", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 1);
    assert!(stderr(&out).contains("line 2"), "stderr: {}", stderr(&out));
}

#[test]
fn check_prints_diagnostics() {
    let ws = Workspace::new("check");
    let cfg = ws.write("cfg.json", &uniform_config(0.5));
    let out = run(&["check", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("monopoly_price"));
    assert!(text.contains("nontrivial"));
    assert!(text.contains("cdf_concave"));
    assert!(text.contains("regime"));
}

#[test]
fn config_output_block_sets_prefix_and_flag_overrides_it() {
    let ws = Workspace::new("prefix");
    let via_config = ws.prefix("fromcfg").replace('\\', "/");
    let cfg = ws.write(
        "cfg.json",
        &uniform_config(0.2).replace(
            "\n}",
            &format!(
                ",\n  \"output\": {{\"prefix\": \"{via_config}\", \"format\": \"json\"}}\n}}"
            ),
        ),
    );
    let out = run(&["solve", cfg.to_str().unwrap()], &ws.dir);
    assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
    assert!(ws.dir.join("fromcfg_equilibrium.json").exists());

    let out = run(
        &["solve", cfg.to_str().unwrap(), "--out", &ws.prefix("cli"), "--format", "csv"],
        &ws.dir,
    );
    assert_eq!(exit(&out), 0);
    assert!(ws.dir.join("cli_equilibrium.csv").exists());
}
