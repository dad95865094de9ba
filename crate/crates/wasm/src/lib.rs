//! Browser bindings for the temporal-fairness engine.
//!
//! Three interactive operations back the static demo page in `www/`:
//!
//! * [`compare_series`] — run a scenario under several paradigms and return
//!   the per-round difference series for plotting;
//! * [`bounds_report`] — the discounted bound and the discounted-vs-perfect
//!   discretized state counts;
//! * [`plan_summary`] — enumerate the reachable augmented MDP and compare
//!   exact lookahead against the myopic policy.
//!
//! All results cross the boundary as JSON strings; the logic lives in plain
//! Rust functions so it is unit-testable on the host.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fairalloc::fairness::Paradigm;
use fairalloc::simulator::{compare, cycle_phases, metrics, CompareConfig, Scenario, ScenarioDoc};
use fairalloc::state_space::{
    build_augmented_mdp, discounted_bound, rollout_myopic, rollout_plan, state_count_discounted,
    state_count_perfect, value_iteration, DiscretizationSpec, DEFAULT_STATE_CAP,
};
use fairalloc::welfare::WelfareSpec;
use fairalloc::{AgentId, Error, Result};

const EX1_JSON: &str = include_str!("../../../scenarios/ex1.json");
const EX2_JSON: &str = include_str!("../../../scenarios/ex2.json");

#[derive(Serialize)]
struct SeriesBlock {
    label: String,
    t: Vec<u64>,
    cumulative_diff: Vec<f64>,
    perceived_diff: Vec<f64>,
    welfare: Vec<f64>,
}

fn parse_configs(modes: &str, gammas: &str, welfare: &WelfareSpec) -> Result<Vec<CompareConfig>> {
    let gammas: Vec<f64> = gammas
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidScenario(format!("bad gamma value {s:?}")))
        })
        .collect::<Result<_>>()?;
    let mut configs = Vec::new();
    for mode in modes.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        if mode.starts_with("discounted") {
            for &gamma in &gammas {
                let paradigm = Paradigm::from_mode(mode, Some(gamma))?;
                configs.push(CompareConfig::auto(paradigm, welfare.clone()));
            }
        } else {
            let paradigm = Paradigm::from_mode(mode, None)?;
            configs.push(CompareConfig::auto(paradigm, welfare.clone()));
        }
    }
    Ok(configs)
}

fn compare_series_impl(
    scenario_json: &str,
    modes: &str,
    gammas: &str,
    welfare: &str,
    agent_a: &str,
    agent_b: &str,
) -> Result<String> {
    let (scenario, _warnings) = Scenario::from_json(scenario_json)?;
    let welfare = WelfareSpec::parse(welfare)?;
    let configs = parse_configs(modes, gammas, &welfare)?;

    let ids = scenario.agent_ids();
    let a = if agent_a.is_empty() {
        ids[0].clone()
    } else {
        AgentId::from(agent_a)
    };
    let b = if agent_b.is_empty() {
        ids.get(1).cloned().unwrap_or_else(|| ids[0].clone())
    } else {
        AgentId::from(agent_b)
    };

    let traces = compare(&scenario, &configs)?;
    let mut blocks = Vec::with_capacity(traces.len());
    for (label, trace) in &traces {
        let series = metrics(trace, &a, &b)?;
        blocks.push(SeriesBlock {
            label: label.clone(),
            t: series.t,
            cumulative_diff: series.cumulative_diff,
            perceived_diff: series.perceived_diff,
            welfare: series.welfare,
        });
    }
    Ok(serde_json::to_string(&blocks).expect("series serialize"))
}

#[derive(Serialize)]
struct PerfectCount {
    t: u64,
    states: u64,
}

#[derive(Serialize)]
struct BoundsReport {
    gamma: f64,
    u_max: f64,
    delta: f64,
    bound: f64,
    states_discounted: u64,
    states_perfect: Vec<PerfectCount>,
}

fn bounds_report_impl(gamma: f64, u_max: f64, delta: f64, t_values: &str) -> Result<String> {
    let bound = discounted_bound(gamma, u_max)?;
    let spec = DiscretizationSpec::new(gamma, u_max, delta)?;
    let mut states_perfect = Vec::new();
    for t in t_values.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let t: u64 = t
            .parse()
            .map_err(|_| Error::InvalidScenario(format!("bad horizon value {t:?}")))?;
        states_perfect.push(PerfectCount {
            t,
            states: state_count_perfect(t, u_max, delta)?,
        });
    }
    let report = BoundsReport {
        gamma,
        u_max,
        delta,
        bound,
        states_discounted: state_count_discounted(&spec),
        states_perfect,
    };
    Ok(serde_json::to_string(&report).expect("report serialize"))
}

#[derive(Serialize)]
struct ReachableBins {
    agent: String,
    bins: u64,
}

#[derive(Serialize)]
struct PlanSummary {
    phases: usize,
    horizon: usize,
    gamma: f64,
    delta: f64,
    bound: f64,
    bins_per_agent_analytic: u64,
    reachable_states: usize,
    reachable_bins: Vec<ReachableBins>,
    dp_value: f64,
    dp_rollout_welfare: f64,
    myopic_rollout_welfare: f64,
    max_binning_error: f64,
}

fn plan_summary_impl(
    scenario_json: &str,
    gamma: f64,
    delta: f64,
    welfare: &str,
    horizon: usize,
) -> Result<String> {
    let doc: ScenarioDoc = serde_json::from_str(scenario_json)?;
    let (agents, phases) = cycle_phases(&doc)?;
    let welfare = WelfareSpec::parse(welfare)?;
    let spec = DiscretizationSpec::new(gamma, doc.u_max, delta)?;
    let mdp = build_augmented_mdp(
        &phases,
        &agents,
        Paradigm::discounted_additive(gamma)?,
        &welfare,
        &spec,
        horizon,
        DEFAULT_STATE_CAP,
    )?;
    let plan = value_iteration(&mdp);
    let summary = PlanSummary {
        phases: mdp.num_phases(),
        horizon: mdp.horizon(),
        gamma,
        delta,
        bound: spec.bound(),
        bins_per_agent_analytic: state_count_discounted(&spec),
        reachable_states: mdp.num_states(),
        reachable_bins: agents
            .iter()
            .zip(mdp.reachable_bins_per_agent())
            .map(|(agent, bins)| ReachableBins {
                agent: agent.to_string(),
                bins,
            })
            .collect(),
        dp_value: plan.values[0][mdp.initial()],
        dp_rollout_welfare: rollout_plan(&mdp, &plan),
        myopic_rollout_welfare: rollout_myopic(&mdp),
        max_binning_error: mdp.max_binning_error(),
    };
    Ok(serde_json::to_string(&summary).expect("summary serialize"))
}

fn builtin_scenario_impl(name: &str) -> Result<&'static str> {
    match name {
        "ex1" => Ok(EX1_JSON),
        "ex2" => Ok(EX2_JSON),
        other => Err(Error::InvalidScenario(format!(
            "unknown builtin scenario {other:?} (try \"ex1\" or \"ex2\")"
        ))),
    }
}

fn to_js(err: Error) -> JsError {
    JsError::new(&err.to_string())
}

/// Runs the scenario under every (mode, gamma) combination and returns the
/// difference series per configuration as JSON.
#[wasm_bindgen]
pub fn compare_series(
    scenario_json: &str,
    modes: &str,
    gammas: &str,
    welfare: &str,
    agent_a: &str,
    agent_b: &str,
) -> std::result::Result<String, JsError> {
    compare_series_impl(scenario_json, modes, gammas, welfare, agent_a, agent_b).map_err(to_js)
}

/// Discounted bound plus discretized state counts, discounted vs perfect
/// recall at the given horizons (comma separated), as JSON.
#[wasm_bindgen]
pub fn bounds_report(
    gamma: f64,
    u_max: f64,
    delta: f64,
    t_values: &str,
) -> std::result::Result<String, JsError> {
    bounds_report_impl(gamma, u_max, delta, t_values).map_err(to_js)
}

/// Enumerates the reachable augmented MDP of a cycle scenario and compares
/// exact finite-horizon planning against the myopic policy, as JSON.
#[wasm_bindgen]
pub fn plan_summary(
    scenario_json: &str,
    gamma: f64,
    delta: f64,
    welfare: &str,
    horizon: usize,
) -> std::result::Result<String, JsError> {
    plan_summary_impl(scenario_json, gamma, delta, welfare, horizon).map_err(to_js)
}

/// Bundled scenario JSON: `ex1` (cake & donut) or `ex2` (late arrival).
#[wasm_bindgen]
pub fn builtin_scenario(name: &str) -> std::result::Result<String, JsError> {
    builtin_scenario_impl(name)
        .map(str::to_owned)
        .map_err(to_js)
}
