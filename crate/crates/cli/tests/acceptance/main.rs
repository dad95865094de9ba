//! Acceptance suite: one test per criterion, each printing a PASS line when
//! it holds (run with `--nocapture` to see them). Expected values marked as
//! oracle-derived were computed with the independent reference
//! implementation in [`oracle`] before being frozen here.

mod oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use fairalloc::allocator::{optimize, Allocation, Item};
use fairalloc::fairness::{FairnessState, Paradigm};
use fairalloc::simulator::{metrics, run_episode, EpisodeTrace, Round, Scenario};
use fairalloc::state_space::{
    build_augmented_mdp, rollout_myopic, rollout_plan, state_count_discounted, state_count_perfect,
    value_iteration, DiscretizationSpec, DEFAULT_STATE_CAP,
};
use fairalloc::welfare::{
    egalitarian, evaluate, generalized_gini, nash, utilitarian, UtilityVector, WelfareSpec,
};
use fairalloc::{AgentId, ItemId};

use oracle::{
    best_assignment, catch_up_run, ex1_rounds, ex2_arrivals, ex2_rounds, oracle_welfare,
    rand_stream, run_oracle_episode, OracleMode, OracleWelfare,
};

fn agent_ids(n: usize) -> Vec<AgentId> {
    ["Alice", "Bob", "Carol", "Dave"][..n]
        .iter()
        .map(|s| AgentId::from(*s))
        .collect()
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load_scenario(name: &str) -> Scenario {
    let json = std::fs::read_to_string(scenario_path(name)).unwrap();
    Scenario::from_json(&json).unwrap().0
}

/// The cake/donut scenario, repeated for an arbitrary horizon.
fn ex1_scenario(rounds: u64) -> Scenario {
    let items = vec![
        Item::new(
            "cake",
            BTreeMap::from([(AgentId::from("Alice"), 0.2), (AgentId::from("Bob"), 0.3)]),
        ),
        Item::new(
            "donut",
            BTreeMap::from([(AgentId::from("Alice"), 0.5), (AgentId::from("Bob"), 0.5)]),
        ),
    ];
    let mut base = load_scenario("ex1.json");
    base.rounds = (0..rounds)
        .map(|index| Round {
            index,
            items: items.clone(),
        })
        .collect();
    base
}

/// Chosen assignment of a trace round as active-agent indices per item, for
/// comparison against the oracle.
fn assignment_indices(trace: &EpisodeTrace, round: usize, items: &[ItemId]) -> Vec<usize> {
    let record = &trace.rounds[round];
    items
        .iter()
        .map(|item| {
            let agent = record.allocation.agent_for(item).unwrap();
            record.active.iter().position(|a| a == agent).unwrap()
        })
        .collect()
}

#[test]
fn criterion_01_degeneracy() {
    let agents = agent_ids(3);
    let mut rand = rand_stream(0x5eed_0001);
    for _ in 0..100 {
        let mut instantaneous =
            FairnessState::init(Paradigm::Instantaneous, agents.clone()).unwrap();
        let mut perfect = FairnessState::init(Paradigm::PerfectAdditive, agents.clone()).unwrap();
        let mut disc0 =
            FairnessState::init(Paradigm::discounted_additive(0.0).unwrap(), agents.clone())
                .unwrap();
        let mut disc1 =
            FairnessState::init(Paradigm::discounted_additive(1.0).unwrap(), agents.clone())
                .unwrap();
        let mut avg1 =
            FairnessState::init(Paradigm::discounted_averaged(1.0).unwrap(), agents.clone())
                .unwrap();
        let mut sums = [0.0f64; 3];
        for k in 0..200u64 {
            let u: Vec<f64> = (0..3).map(|_| rand()).collect();
            let uv = UtilityVector::new(agents.clone(), u.clone()).unwrap();
            instantaneous = instantaneous.commit(&uv).unwrap();
            perfect = perfect.commit(&uv).unwrap();
            disc0 = disc0.commit(&uv).unwrap();
            disc1 = disc1.commit(&uv).unwrap();
            avg1 = avg1.commit(&uv).unwrap();
            assert_eq!(disc0.z().values(), instantaneous.z().values());
            assert_eq!(disc1.z().values(), perfect.z().values());
            for i in 0..3 {
                sums[i] += u[i];
                let mean = sums[i] / (k + 1) as f64;
                assert!(
                    (avg1.z().values()[i] - mean).abs() <= 1e-12,
                    "running mean deviates: {} vs {mean}",
                    avg1.z().values()[i]
                );
            }
        }
    }
    println!("acceptance criterion 1 (degeneracy suite): PASS");
}

#[test]
fn criterion_02_boundedness() {
    let agents = agent_ids(2);
    for gamma in [0.1, 0.5, 0.9, 0.99] {
        let bound = 1.0 / (1.0 - gamma);
        let mut rand = rand_stream(0x5eed_0002 ^ (gamma * 1e6) as u64);
        for _ in 0..1000 {
            let mut state = FairnessState::init(
                Paradigm::discounted_additive(gamma).unwrap(),
                agents.clone(),
            )
            .unwrap();
            for _ in 0..200 {
                let u: Vec<f64> = (0..2).map(|_| rand()).collect();
                let uv = UtilityVector::new(agents.clone(), u).unwrap();
                state = state.commit(&uv).unwrap();
                for &z in state.z().values() {
                    assert!(z <= bound + 1e-9, "gamma {gamma}: {z} > {bound}");
                }
            }
        }
    }
    println!("acceptance criterion 2 (boundedness): PASS");
}

#[test]
fn criterion_03_example1_golden() {
    let scenario = load_scenario("ex1.json");
    assert_eq!(scenario.rounds.len(), 100);
    let trace = run_episode(
        &scenario,
        Paradigm::Instantaneous,
        &WelfareSpec::Egalitarian,
    )
    .unwrap();

    let reference = run_oracle_episode(
        OracleMode::Instantaneous,
        &OracleWelfare::Egalitarian,
        &[0, 0],
        &ex1_rounds(100),
    );

    let items = [ItemId::from("cake"), ItemId::from("donut")];
    let alice = AgentId::from("Alice");
    let bob = AgentId::from("Bob");
    for (t, record) in trace.rounds.iter().enumerate() {
        assert_eq!(record.allocation.agent_for(&items[1]), Some(&alice));
        assert_eq!(record.allocation.agent_for(&items[0]), Some(&bob));
        assert_eq!(
            assignment_indices(&trace, t, &items),
            reference.assignments[t]
        );
        for g in 0..2 {
            assert!((record.cumulative[g] - reference.cumulative[t][g]).abs() <= 1e-12);
        }
    }
    let series = metrics(&trace, &alice, &bob).unwrap();
    assert!((series.cumulative_diff[99] - 20.0).abs() <= 1e-9);
    for (k, diff) in series.cumulative_diff.iter().enumerate() {
        assert!(
            (diff - 0.2 * (k + 1) as f64).abs() <= 1e-9,
            "not linear at {k}"
        );
    }
    println!("acceptance criterion 3 (example 1 golden run): PASS");
}

#[test]
fn criterion_04_example1_bounded_difference() {
    // Band constants computed by the oracle over 1000 rounds and frozen:
    // perfect recall stays within 0.3; the discounted modes drift more
    // slowly than the instantaneous 0.2-per-round growth but are not flat.
    let cases = [
        (Paradigm::PerfectAdditive, OracleMode::PerfectAdditive, 0.3),
        (
            Paradigm::discounted_additive(0.9).unwrap(),
            OracleMode::DiscountedAdditive(0.9),
            4.6,
        ),
        (
            Paradigm::discounted_additive(0.5).unwrap(),
            OracleMode::DiscountedAdditive(0.5),
            33.5,
        ),
    ];
    let scenario = ex1_scenario(1000);
    let alice = AgentId::from("Alice");
    let bob = AgentId::from("Bob");
    let mut max_diffs = Vec::new();
    for (paradigm, oracle_mode, band) in cases {
        let trace = run_episode(&scenario, paradigm, &WelfareSpec::Egalitarian).unwrap();
        let series = metrics(&trace, &alice, &bob).unwrap();
        let reference = run_oracle_episode(
            oracle_mode,
            &OracleWelfare::Egalitarian,
            &[0, 0],
            &ex1_rounds(1000),
        );
        let mut max_diff = 0.0f64;
        for t in 0..1000 {
            let oracle_diff = reference.cumulative[t][0] - reference.cumulative[t][1];
            assert!(
                (series.cumulative_diff[t] - oracle_diff).abs() <= 1e-9,
                "{} deviates from oracle at t={t}",
                paradigm.label()
            );
            assert!(
                series.cumulative_diff[t].abs() <= band + 1e-9,
                "{} escapes band {band} at t={t}: {}",
                paradigm.label(),
                series.cumulative_diff[t]
            );
            max_diff = max_diff.max(series.cumulative_diff[t].abs());
        }
        max_diffs.push(max_diff);
    }

    // instantaneous: strictly increasing and far beyond every band above
    let trace = run_episode(
        &scenario,
        Paradigm::Instantaneous,
        &WelfareSpec::Egalitarian,
    )
    .unwrap();
    let series = metrics(&trace, &alice, &bob).unwrap();
    for t in 1..1000 {
        assert!(series.cumulative_diff[t] > series.cumulative_diff[t - 1]);
    }
    let unbounded = series.cumulative_diff[999];
    assert!((unbounded - 200.0).abs() <= 1e-6);
    // interpolation: perfect < gamma 0.9 < gamma 0.5 < instantaneous
    assert!(max_diffs[0] < max_diffs[1] && max_diffs[1] < max_diffs[2]);
    assert!(max_diffs[2] < unbounded);
    println!("acceptance criterion 4 (example 1 bounded difference): PASS");
}

#[test]
fn criterion_05_example2_catch_up() {
    let scenario = load_scenario("ex2.json");
    let slot = ItemId::from("slot");
    let bob = AgentId::from("Bob");

    let engine_run = |paradigm: Paradigm| -> usize {
        let trace = run_episode(&scenario, paradigm, &WelfareSpec::Egalitarian).unwrap();
        trace
            .rounds
            .iter()
            .filter(|r| r.t >= 10)
            .take_while(|r| r.allocation.agent_for(&slot) == Some(&bob))
            .count()
    };

    // oracle-derived and frozen: 10 consecutive rounds for Bob under
    // perfect recall, 5 under gamma = 0.9
    assert_eq!(engine_run(Paradigm::PerfectAdditive), 10);
    assert_eq!(engine_run(Paradigm::discounted_additive(0.9).unwrap()), 5);

    // under perfect recall the exclusive run ends once Bob's cumulative
    // utility reaches Alice's to within one item's value
    let trace = run_episode(
        &scenario,
        Paradigm::PerfectAdditive,
        &WelfareSpec::Egalitarian,
    )
    .unwrap();
    let series = metrics(&trace, &AgentId::from("Alice"), &bob).unwrap();
    let run_end = 10 + 10 - 1;
    assert!(series.cumulative_diff[run_end].abs() <= 0.5 + 1e-9);
    for t in 10..run_end {
        assert!(
            series.cumulative_diff[t] > 0.5 - 1e-9,
            "run ended early at {t}"
        );
    }

    let grid = [1.0, 0.99, 0.95, 0.9, 0.7, 0.5, 0.3, 0.1, 0.0];
    let mut previous = usize::MAX;
    for gamma in grid {
        let run = engine_run(Paradigm::discounted_additive(gamma).unwrap());
        let reference = run_oracle_episode(
            OracleMode::DiscountedAdditive(gamma),
            &OracleWelfare::Egalitarian,
            &ex2_arrivals(),
            &ex2_rounds(40),
        );
        assert_eq!(run, catch_up_run(&reference, 10), "gamma {gamma}");
        assert!(run <= previous, "run length increased at gamma {gamma}");
        previous = run;
    }
    println!("acceptance criterion 5 (example 2 catch-up): PASS");
}

#[test]
fn criterion_06_allocator_oracle_equivalence() {
    let mut rand = rand_stream(0x5eed_0006);
    let mut instances = 0;
    while instances < 500 {
        let n = 1 + (rand() * 3.0) as usize;
        let m = 1 + (rand() * 3.0) as usize;
        let agents = agent_ids(n.min(3));
        let n = agents.len();

        // item utilities; sometimes duplicate a row to force exact ties
        let mut item_utils: Vec<Vec<f64>> = (0..m.min(3))
            .map(|_| (0..n).map(|_| (rand() * 100.0).round() / 100.0).collect())
            .collect();
        if item_utils.len() >= 2 && rand() < 0.3 {
            item_utils[1] = item_utils[0].clone();
        }
        let items: Vec<Item> = item_utils
            .iter()
            .enumerate()
            .map(|(i, row)| {
                Item::new(
                    format!("i{i}"),
                    agents
                        .iter()
                        .cloned()
                        .zip(row.iter().copied())
                        .collect::<BTreeMap<_, _>>(),
                )
            })
            .collect();

        let z: Vec<f64> = (0..n).map(|_| rand() * 3.0).collect();
        let d = rand() * 3.0;
        let t = (rand() * 5.0) as u64;
        let gamma = (rand() * 100.0).round() / 100.0;

        let modes = [
            (Paradigm::Instantaneous, OracleMode::Instantaneous),
            (Paradigm::PerfectAdditive, OracleMode::PerfectAdditive),
            (Paradigm::PerfectAveraged, OracleMode::PerfectAveraged),
            (
                Paradigm::discounted_additive(gamma).unwrap(),
                OracleMode::DiscountedAdditive(gamma),
            ),
            (
                Paradigm::discounted_averaged(gamma).unwrap(),
                OracleMode::DiscountedAveraged(gamma),
            ),
        ];
        let mut gini: Vec<f64> = (0..n).map(|_| 0.05 + rand()).collect();
        gini.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let welfares = [
            (WelfareSpec::Utilitarian, OracleWelfare::Utilitarian),
            (WelfareSpec::Egalitarian, OracleWelfare::Egalitarian),
            (WelfareSpec::nash(), OracleWelfare::Nash),
            (
                WelfareSpec::generalized_gini(gini.clone()).unwrap(),
                OracleWelfare::Gini(gini.clone()),
            ),
        ];

        for (paradigm, oracle_mode) in &modes {
            for (spec, oracle_spec) in &welfares {
                let state = FairnessState::from_parts(
                    *paradigm,
                    UtilityVector::new(agents.clone(), z.clone()).unwrap(),
                    d,
                    t,
                )
                .unwrap();
                let outcome = optimize(&state, &items, spec, &agents).unwrap();
                let (expected, _, expected_w) =
                    best_assignment(*oracle_mode, oracle_spec, &z, t, d, &item_utils);
                let got: Vec<usize> = items
                    .iter()
                    .map(|item| {
                        let agent = outcome.allocation.agent_for(&item.id).unwrap();
                        agents.iter().position(|a| a == agent).unwrap()
                    })
                    .collect();
                assert_eq!(got, expected, "mode {paradigm:?} welfare {spec:?}");
                assert!((outcome.welfare - expected_w).abs() <= 1e-12);
            }
        }
        instances += 1;
    }
    println!("acceptance criterion 6 (allocator oracle equivalence): PASS");
}

#[test]
fn criterion_07_state_count_contrast() {
    let spec = DiscretizationSpec::new(0.9, 1.0, 0.1).unwrap();
    assert_eq!(state_count_discounted(&spec), 101);
    assert_eq!(state_count_perfect(100, 1.0, 0.1).unwrap(), 1011);

    let cycle = vec![vec![
        Item::new(
            "cake",
            BTreeMap::from([(AgentId::from("Alice"), 0.2), (AgentId::from("Bob"), 0.3)]),
        ),
        Item::new(
            "donut",
            BTreeMap::from([(AgentId::from("Alice"), 0.5), (AgentId::from("Bob"), 0.5)]),
        ),
    ]];
    let agents = agent_ids(2);
    for gamma in [0.5, 0.9] {
        for delta in [0.5, 0.25, 0.1] {
            let disc = DiscretizationSpec::new(gamma, 1.0, delta).unwrap();
            let mdp = build_augmented_mdp(
                &cycle,
                &agents,
                Paradigm::discounted_additive(gamma).unwrap(),
                &WelfareSpec::Egalitarian,
                &disc,
                30,
                DEFAULT_STATE_CAP,
            )
            .unwrap();
            let analytic = state_count_discounted(&disc);
            for reachable in mdp.reachable_bins_per_agent() {
                assert!(
                    reachable <= analytic,
                    "gamma {gamma} delta {delta}: {reachable} > {analytic}"
                );
            }
        }
    }
    println!("acceptance criterion 7 (state-count contrast): PASS");
}

#[test]
fn criterion_08_planning_consistency() {
    let cycle = vec![vec![
        Item::new(
            "cake",
            BTreeMap::from([(AgentId::from("Alice"), 0.2), (AgentId::from("Bob"), 0.3)]),
        ),
        Item::new(
            "donut",
            BTreeMap::from([(AgentId::from("Alice"), 0.5), (AgentId::from("Bob"), 0.5)]),
        ),
    ]];
    let agents = agent_ids(2);
    let disc = DiscretizationSpec::new(0.5, 1.0, 0.5).unwrap();
    let paradigm = Paradigm::discounted_additive(0.5).unwrap();

    // one-step planning must reproduce the welfare-argmax allocator in every
    // enumerated state; the last stage of a deeper horizon is the same
    // one-step problem, so check it across the full reachable set too
    for horizon in [1usize, 8] {
        let mdp = build_augmented_mdp(
            &cycle,
            &agents,
            paradigm,
            &WelfareSpec::Egalitarian,
            &disc,
            horizon,
            DEFAULT_STATE_CAP,
        )
        .unwrap();
        let plan = value_iteration(&mdp);
        let stage = horizon - 1;
        let mut checked = 0;
        for s in 0..mdp.num_states() {
            if mdp.actions(s).is_empty() {
                continue;
            }
            let state = FairnessState::from_parts(
                paradigm,
                UtilityVector::new(agents.clone(), mdp.representative(s)).unwrap(),
                0.0,
                0,
            )
            .unwrap();
            let items = mdp.phase_items(mdp.states()[s].phase);
            let outcome = optimize(&state, items, &WelfareSpec::Egalitarian, &agents).unwrap();
            let chosen = &mdp.actions(s)[plan.policy[stage][s]];
            let chosen_allocation = Allocation::new(
                items
                    .iter()
                    .zip(&chosen.assignment)
                    .map(|(item, &j)| (item.id.clone(), agents[j].clone()))
                    .collect(),
            );
            assert_eq!(outcome.allocation, chosen_allocation, "state {s}");
            checked += 1;
        }
        assert!(checked >= 1);
    }

    // ten-step lookahead never loses to the myopic argmax on the same MDP
    let mdp = build_augmented_mdp(
        &cycle,
        &agents,
        paradigm,
        &WelfareSpec::Egalitarian,
        &disc,
        10,
        DEFAULT_STATE_CAP,
    )
    .unwrap();
    let plan = value_iteration(&mdp);
    let dp = rollout_plan(&mdp, &plan);
    let myopic = rollout_myopic(&mdp);
    assert!(dp >= myopic - 1e-12, "dp {dp} < myopic {myopic}");
    assert!((dp - plan.values[0][mdp.initial()]).abs() <= 1e-12);
    println!("acceptance criterion 8 (planning consistency): PASS");
}

#[test]
fn criterion_09_welfare_properties() {
    let mut rand = rand_stream(0x5eed_0009);
    for _ in 0..1000 {
        let n = 2 + (rand() * 5.0) as usize;
        let values: Vec<f64> = (0..n).map(|_| rand() * 10.0).collect();
        let ids: Vec<AgentId> = (0..n).map(|i| AgentId::new(format!("a{i}"))).collect();
        let z = UtilityVector::new(ids.clone(), values.clone()).unwrap();
        let mut weights: Vec<f64> = (0..n).map(|i| 1.0 + (n - i) as f64 + rand()).collect();
        weights.sort_by(|a, b| b.partial_cmp(a).unwrap());

        // symmetry under a rotation
        let mut rotated = values.clone();
        rotated.rotate_left(1);
        let zr = UtilityVector::new(ids.clone(), rotated).unwrap();
        assert_eq!(egalitarian(&z).unwrap(), egalitarian(&zr).unwrap());
        assert!((utilitarian(&z).unwrap() - utilitarian(&zr).unwrap()).abs() <= 1e-9);
        assert!((nash(&z).unwrap() - nash(&zr).unwrap()).abs() <= 1e-6);
        assert!(
            (generalized_gini(&z, &weights).unwrap() - generalized_gini(&zr, &weights).unwrap())
                .abs()
                <= 1e-9
        );

        // monotonicity in a random coordinate
        let idx = (rand() * n as f64) as usize % n;
        let mut raised = values.clone();
        raised[idx] += 0.5 + rand();
        let zm = UtilityVector::new(ids.clone(), raised).unwrap();
        assert!(utilitarian(&zm).unwrap() >= utilitarian(&z).unwrap());
        assert!(egalitarian(&zm).unwrap() >= egalitarian(&z).unwrap());
        assert!(
            generalized_gini(&zm, &weights).unwrap()
                >= generalized_gini(&z, &weights).unwrap() - 1e-12
        );
        if values.iter().all(|v| *v > 0.0) {
            assert!(nash(&zm).unwrap() >= nash(&z).unwrap());
        }

        // Schur-concavity: a mean-preserving transfer from rich to poor
        let (lo, hi) = {
            let mut lo = 0;
            let mut hi = 0;
            for (i, v) in values.iter().enumerate() {
                if *v < values[lo] {
                    lo = i;
                }
                if *v > values[hi] {
                    hi = i;
                }
            }
            (lo, hi)
        };
        if values[lo] < values[hi] {
            let eps = (values[hi] - values[lo]) / 2.0 * rand().max(0.01);
            let mut transferred = values.clone();
            transferred[lo] += eps;
            transferred[hi] -= eps;
            let zt = UtilityVector::new(ids.clone(), transferred).unwrap();
            assert!(
                generalized_gini(&zt, &weights).unwrap()
                    >= generalized_gini(&z, &weights).unwrap() - 1e-9
            );
        }

        // weight degeneracies: (1, 0, ...) is the minimum, all-ones the sum
        let mut min_weights = vec![0.0; n];
        min_weights[0] = 1.0;
        assert_eq!(
            generalized_gini(&z, &min_weights).unwrap(),
            egalitarian(&z).unwrap()
        );
        let ones = vec![1.0; n];
        assert!((generalized_gini(&z, &ones).unwrap() - utilitarian(&z).unwrap()).abs() <= 1e-9);

        // evaluate() dispatch agrees with the oracle formulas
        assert!(
            (evaluate(&WelfareSpec::Egalitarian, &z).unwrap()
                - oracle_welfare(&OracleWelfare::Egalitarian, &values))
            .abs()
                <= 1e-12
        );
    }
    println!("acceptance criterion 9 (welfare properties): PASS");
}

#[test]
fn criterion_10_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["ex1.json", "ex2.json"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{name}.{run}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_fairalloc"))
                .args([
                    "compare",
                    "--scenario",
                    scenario_path(name).to_str().unwrap(),
                    "--mode",
                    "instantaneous,perfect_additive,discounted_additive",
                    "--gamma",
                    "0.5,0.9",
                    "--welfare",
                    "mmf",
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .unwrap();
            assert!(status.success());
            outputs.push(std::fs::read(out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name} runs differ");
        assert!(!outputs[0].is_empty());
    }
    println!("acceptance criterion 10 (reproducibility): PASS");
}
