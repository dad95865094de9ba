//! Command-line front end: scenario ingestion, episode simulation,
//! paradigm comparison, bound tables, and the planning demo.
//!
//! Exit codes are a stable contract for scripting: 0 on success, 2 for
//! input or validation errors, 3 when a resource cap is exceeded.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairalloc::allocator::{OptimizeOptions, TieBreak};
use fairalloc::fairness::Paradigm;
use fairalloc::simulator::{
    compare_with, cycle_phases, run_episode_with, validate_scenario, write_compare_csv,
    write_trace_csv, CompareConfig, Scenario, ScenarioDoc,
};
use fairalloc::state_space::{
    build_augmented_mdp, discounted_bound, rollout_myopic, rollout_plan, state_count_discounted,
    state_count_perfect, value_iteration, DiscretizationSpec, DEFAULT_STATE_CAP,
};
use fairalloc::welfare::WelfareSpec;
use fairalloc::AgentId;

#[derive(Parser)]
#[command(
    name = "fairalloc",
    version,
    about = "Sequential resource allocation under temporal fairness",
    long_about = "Deterministic engine for sequential multi-agent resource allocation.\n\
                  Each round allocates indivisible items to agents by maximizing a social\n\
                  welfare function over perceived utilities, which evolve under an\n\
                  instantaneous, perfect-recall, or past-discounted fairness paradigm."
)]
struct Cli {
    /// Plain output without color. Output is plain text already; the flag is
    /// accepted for script compatibility (NO_COLOR is honored the same way).
    #[arg(long, global = true)]
    no_color: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under a single paradigm and welfare; write the trace CSV.
    Simulate(SimulateArgs),
    /// Run several configurations on one scenario; write the metric-series CSV.
    Compare(CompareArgs),
    /// Print the discounted bound and discretized state counts for a gamma grid.
    Bounds(BoundsArgs),
    /// Enumerate the augmented MDP of a cycle scenario and compare exact
    /// lookahead against the myopic policy; write a summary CSV.
    Plan(PlanArgs),
}

#[derive(Args)]
struct TieBreakArgs {
    /// Tie-breaking among welfare-equal allocations.
    #[arg(long, default_value = "lex", value_parser = ["lex", "random"])]
    tiebreak: String,
    /// Seed for `--tiebreak random`; ignored otherwise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TieBreakArgs {
    fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            tie_break: match self.tiebreak.as_str() {
                "random" => TieBreak::Random { seed: self.seed },
                _ => TieBreak::Lexicographic,
            },
            ..OptimizeOptions::default()
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Paradigm: instantaneous, perfect_additive, perfect_averaged,
    /// discounted_additive, discounted_averaged.
    #[arg(long)]
    mode: String,
    /// Decay factor in [0, 1] for the discounted modes.
    #[arg(long)]
    gamma: Option<f64>,
    /// Welfare: utilitarian, egalitarian (alias mmf), nash, or gini:w1,w2,...
    #[arg(long)]
    welfare: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tiebreak: TieBreakArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated paradigm list, e.g.
    /// instantaneous,perfect_additive,discounted_additive.
    #[arg(long, value_delimiter = ',', required = true)]
    mode: Vec<String>,
    /// Comma-separated decay factors; each discounted mode is run once per
    /// gamma.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Welfare applied to every configuration.
    #[arg(long)]
    welfare: String,
    /// Agent pair for the difference series, as `A,B`. Defaults to the
    /// scenario's first two agents.
    #[arg(long, value_delimiter = ',')]
    agents: Vec<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tiebreak: TieBreakArgs,
}

#[derive(Args)]
struct BoundsArgs {
    /// Comma-separated decay factors.
    #[arg(long, value_delimiter = ',', required = true)]
    gamma: Vec<f64>,
    /// Per-step utility ceiling.
    #[arg(long)]
    umax: f64,
    /// Discretization bin width.
    #[arg(long)]
    delta: f64,
    /// Comma-separated horizons for the perfect-recall state-count columns.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    t: Vec<u64>,
}

#[derive(Args)]
struct PlanArgs {
    /// Cycle scenario JSON file; each `rounds` entry becomes one phase of the
    /// repeating cycle, and all agents must be present throughout.
    #[arg(long)]
    scenario: PathBuf,
    /// Paradigm; the augmented MDP requires discounted_additive.
    #[arg(long, default_value = "discounted_additive")]
    mode: String,
    /// Decay factor in [0, 1).
    #[arg(long)]
    gamma: f64,
    /// Welfare used as the per-step reward.
    #[arg(long)]
    welfare: String,
    /// Discretization bin width.
    #[arg(long)]
    delta: f64,
    /// Planning horizon in rounds.
    #[arg(long)]
    horizon: u64,
    /// Cap on enumerated reachable states.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: u64,
    /// Output summary CSV path.
    #[arg(long)]
    out: PathBuf,
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<fairalloc::Error> for CliError {
    fn from(e: fairalloc::Error) -> Self {
        let code = if e.is_resource_cap() { 3 } else { 2 };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            message: e.to_string(),
            code: 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Compare(args) => compare_cmd(args),
        Command::Bounds(args) => bounds(args),
        Command::Plan(args) => plan(args),
    }
}

fn read_scenario_file(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::input(format!(
            "scenario not found: {}",
            path.display()
        )));
    }
    Ok(fs::read_to_string(path)?)
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let json = read_scenario_file(path)?;
    let (scenario, warnings) = Scenario::from_json(&json)?;
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
    Ok(scenario)
}

/// Writes via a temp file in the target directory plus rename, so readers
/// never observe a half-written CSV.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| CliError::input(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let paradigm = Paradigm::from_mode(&args.mode, args.gamma)?;
    let welfare = WelfareSpec::parse(&args.welfare)?;
    let options = args.tiebreak.options();
    let trace = run_episode_with(&scenario, paradigm, &welfare, &options)?;
    let label = format!("{}+{}", paradigm.label(), welfare.label());
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &[(label, trace)])?;
    write_atomic(&args.out, &buf)
}

fn compare_cmd(args: CompareArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let welfare = WelfareSpec::parse(&args.welfare)?;

    let mut configs = Vec::new();
    for mode in &args.mode {
        let is_discounted = mode.starts_with("discounted");
        if is_discounted {
            if args.gamma.is_empty() {
                return Err(CliError::input(format!("mode \"{mode}\" requires --gamma")));
            }
            for &gamma in &args.gamma {
                let paradigm = Paradigm::from_mode(mode, Some(gamma))?;
                configs.push(CompareConfig::auto(paradigm, welfare.clone()));
            }
        } else {
            let paradigm = Paradigm::from_mode(mode, None)?;
            configs.push(CompareConfig::auto(paradigm, welfare.clone()));
        }
    }

    let (agent_a, agent_b) = difference_pair(&scenario, &args.agents)?;
    let options = args.tiebreak.options();
    let traces = compare_with(&scenario, &configs, &options)?;
    let mut buf = Vec::new();
    write_compare_csv(&mut buf, &traces, &agent_a, &agent_b)?;
    write_atomic(&args.out, &buf)
}

fn difference_pair(
    scenario: &Scenario,
    requested: &[String],
) -> Result<(AgentId, AgentId), CliError> {
    match requested {
        [] => {
            let ids = scenario.agent_ids();
            let a = ids[0].clone();
            let b = ids.get(1).cloned().unwrap_or_else(|| a.clone());
            Ok((a, b))
        }
        [a, b] => Ok((AgentId::new(a.clone()), AgentId::new(b.clone()))),
        other => Err(CliError::input(format!(
            "--agents takes exactly two ids, got {}",
            other.len()
        ))),
    }
}

fn bounds(args: BoundsArgs) -> Result<(), CliError> {
    let mut header = vec![
        "gamma".to_owned(),
        "u_max".to_owned(),
        "delta".to_owned(),
        "bound".to_owned(),
        "states_discounted".to_owned(),
    ];
    for t in &args.t {
        header.push(format!("states_perfect@t={t}"));
    }

    let mut rows = Vec::new();
    for &gamma in &args.gamma {
        let bound = discounted_bound(gamma, args.umax)?;
        let spec = DiscretizationSpec::new(gamma, args.umax, args.delta)?;
        let mut row = vec![
            gamma.to_string(),
            args.umax.to_string(),
            args.delta.to_string(),
            format!("{bound:.6}"),
            state_count_discounted(&spec).to_string(),
        ];
        for &t in &args.t {
            row.push(state_count_perfect(t, args.umax, args.delta)?.to_string());
        }
        rows.push(row);
    }

    print!("{}", render_table(&header, &rows));
    Ok(())
}

fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: &[String], out: &mut String| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{:<width$}", cell, width = widths[i]);
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    render_row(header, &mut out);
    for row in rows {
        render_row(row, &mut out);
    }
    out
}

fn plan(args: PlanArgs) -> Result<(), CliError> {
    let json = read_scenario_file(&args.scenario)?;
    let doc: ScenarioDoc = serde_json::from_str(&json).map_err(fairalloc::Error::from)?;
    // full validation for error messages and warnings
    let (_, warnings) = validate_scenario(doc.clone())?;
    for warning in warnings {
        eprintln!("warning: {warning}");
    }

    let (agents, phases) = cycle_phases(&doc)?;
    let paradigm = Paradigm::from_mode(&args.mode, Some(args.gamma))?;
    let welfare = WelfareSpec::parse(&args.welfare)?;
    let spec = DiscretizationSpec::new(args.gamma, doc.u_max, args.delta)?;
    let mdp = build_augmented_mdp(
        &phases,
        &agents,
        paradigm,
        &welfare,
        &spec,
        args.horizon as usize,
        args.cap,
    )?;
    let plan = value_iteration(&mdp);
    let dp_value = plan.values[0][mdp.initial()];
    let dp_rollout = rollout_plan(&mdp, &plan);
    let myopic_rollout = rollout_myopic(&mdp);

    let mut buf = String::new();
    let _ = writeln!(buf, "metric,value");
    let _ = writeln!(buf, "phases,{}", mdp.num_phases());
    let _ = writeln!(buf, "horizon,{}", mdp.horizon());
    let _ = writeln!(buf, "gamma,{}", mdp.gamma());
    let _ = writeln!(buf, "delta,{}", spec.delta());
    let _ = writeln!(buf, "bound,{}", spec.bound());
    let _ = writeln!(
        buf,
        "bins_per_agent_analytic,{}",
        state_count_discounted(&spec)
    );
    let _ = writeln!(buf, "reachable_states,{}", mdp.num_states());
    for (agent, bins) in agents.iter().zip(mdp.reachable_bins_per_agent()) {
        let _ = writeln!(buf, "reachable_bins@{agent},{bins}");
    }
    let _ = writeln!(buf, "dp_value,{dp_value}");
    let _ = writeln!(buf, "dp_rollout_welfare,{dp_rollout}");
    let _ = writeln!(buf, "myopic_rollout_welfare,{myopic_rollout}");
    let _ = writeln!(buf, "max_binning_error,{}", mdp.max_binning_error());
    write_atomic(&args.out, buf.as_bytes())
}
