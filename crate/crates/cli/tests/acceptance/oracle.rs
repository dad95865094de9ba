//! Independent reference implementation used to derive and pin expected
//! values. Deliberately written from scratch against the plain update
//! formulas — recursive assignment enumeration instead of the engine's
//! odometer, direct welfare formulas, an explicit episode loop — so that
//! agreement with the main crate is meaningful evidence, not tautology.

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleMode {
    Instantaneous,
    PerfectAdditive,
    PerfectAveraged,
    DiscountedAdditive(f64),
    DiscountedAveraged(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleWelfare {
    Utilitarian,
    Egalitarian,
    Nash,
    Gini(Vec<f64>),
}

pub fn oracle_welfare(welfare: &OracleWelfare, z: &[f64]) -> f64 {
    match welfare {
        OracleWelfare::Utilitarian => z.iter().sum(),
        OracleWelfare::Egalitarian => z.iter().copied().fold(f64::INFINITY, f64::min),
        OracleWelfare::Nash => z.iter().product(),
        OracleWelfare::Gini(weights) => {
            let mut sorted = z.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted.iter().zip(weights).map(|(v, w)| v * w).sum()
        }
    }
}

/// Post-allocation perceived utilities.
pub fn oracle_update(mode: OracleMode, z: &[f64], u: &[f64], t: u64, d: f64) -> Vec<f64> {
    z.iter()
        .zip(u)
        .map(|(&z, &u)| match mode {
            OracleMode::Instantaneous => u,
            OracleMode::PerfectAdditive => z + u,
            OracleMode::PerfectAveraged => (z * t as f64 + u) / (t as f64 + 1.0),
            OracleMode::DiscountedAdditive(g) => g * z + u,
            OracleMode::DiscountedAveraged(g) => (g * z * d + u) / (g * d + 1.0),
        })
        .collect()
}

pub fn oracle_next_d(mode: OracleMode, d: f64) -> f64 {
    match mode {
        OracleMode::PerfectAveraged => d + 1.0,
        OracleMode::DiscountedAveraged(g) => g * d + 1.0,
        _ => d,
    }
}

/// All assignments of `items` items to `agents` agents by recursion, in
/// lexicographic order with the first item as the most significant digit.
pub fn all_assignments(items: usize, agents: usize) -> Vec<Vec<usize>> {
    if items == 0 {
        return vec![Vec::new()];
    }
    let tails = all_assignments(items - 1, agents);
    let mut out = Vec::with_capacity(agents * tails.len());
    for j in 0..agents {
        for tail in &tails {
            let mut a = Vec::with_capacity(items);
            a.push(j);
            a.extend_from_slice(tail);
            out.push(a);
        }
    }
    out
}

/// Welfare-argmax over every assignment; ties resolved by keeping the first
/// maximum in enumeration order. `item_utils[i][j]` is item `i`'s utility
/// for agent `j`. Returns (assignment, step utilities, welfare).
pub fn best_assignment(
    mode: OracleMode,
    welfare: &OracleWelfare,
    z: &[f64],
    t: u64,
    d: f64,
    item_utils: &[Vec<f64>],
) -> (Vec<usize>, Vec<f64>, f64) {
    let n = z.len();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for assignment in all_assignments(item_utils.len(), n) {
        let mut step = vec![0.0; n];
        for (i, &j) in assignment.iter().enumerate() {
            step[j] += item_utils[i][j];
        }
        let updated = oracle_update(mode, z, &step, t, d);
        let w = oracle_welfare(welfare, &updated);
        if best.as_ref().is_none_or(|(bw, _, _)| w > *bw) {
            best = Some((w, assignment, step));
        }
    }
    let (w, assignment, step) = best.unwrap();
    (assignment, step, w)
}

/// A round of the oracle scenario: per-item utility rows over the *global*
/// agent list.
pub type OracleRound = Vec<Vec<f64>>;

pub struct OracleEpisode {
    /// Chosen assignment per round, as global agent indices per item.
    pub assignments: Vec<Vec<usize>>,
    /// Step utilities per round, per global agent (0 when absent).
    pub step: Vec<Vec<f64>>,
    /// Committed perceived utilities per round, per global agent.
    pub z: Vec<Vec<f64>>,
    /// Prefix sums of step utilities, per global agent.
    pub cumulative: Vec<Vec<f64>>,
    /// Welfare of the committed state over the round's active agents.
    pub welfare: Vec<f64>,
}

/// Explicit episode loop: agents become active at their arrival round, the
/// argmax runs over the active agents only, and everyone shares the global
/// clock and averaged denominator.
pub fn run_oracle_episode(
    mode: OracleMode,
    welfare: &OracleWelfare,
    arrivals: &[u64],
    rounds: &[OracleRound],
) -> OracleEpisode {
    let n = arrivals.len();
    let mut z = vec![0.0; n];
    let mut d = 0.0;
    let mut cumulative = vec![0.0; n];
    let mut episode = OracleEpisode {
        assignments: Vec::new(),
        step: Vec::new(),
        z: Vec::new(),
        cumulative: Vec::new(),
        welfare: Vec::new(),
    };

    for (t, items) in rounds.iter().enumerate() {
        let commits = t as u64;
        let active: Vec<usize> = (0..n).filter(|&g| arrivals[g] <= commits).collect();
        assert!(!active.is_empty(), "oracle round {t} has no active agents");
        let local_utils: Vec<Vec<f64>> = items
            .iter()
            .map(|row| active.iter().map(|&g| row[g]).collect())
            .collect();
        let z_active: Vec<f64> = active.iter().map(|&g| z[g]).collect();
        let (local_assignment, local_step, _) =
            best_assignment(mode, welfare, &z_active, commits, d, &local_utils);

        let mut step = vec![0.0; n];
        for (k, &g) in active.iter().enumerate() {
            step[g] = local_step[k];
        }
        z = oracle_update(mode, &z, &step, commits, d);
        d = oracle_next_d(mode, d);
        for g in 0..n {
            cumulative[g] += step[g];
        }

        let z_active_after: Vec<f64> = active.iter().map(|&g| z[g]).collect();
        episode
            .assignments
            .push(local_assignment.iter().map(|&k| active[k]).collect());
        episode.step.push(step.clone());
        episode.z.push(z.clone());
        episode.cumulative.push(cumulative.clone());
        episode
            .welfare
            .push(oracle_welfare(welfare, &z_active_after));
    }
    episode
}

/// The cake/donut round over (Alice, Bob): Alice values them (0.2, 0.5),
/// Bob (0.3, 0.5).
pub fn ex1_round() -> OracleRound {
    vec![vec![0.2, 0.3], vec![0.5, 0.5]]
}

pub fn ex1_rounds(count: usize) -> Vec<OracleRound> {
    vec![ex1_round(); count]
}

/// Alice alone for 10 rounds with one 0.5-utility item, then a shared
/// 0.5/0.5 item once Bob arrives.
pub fn ex2_rounds(count: usize) -> Vec<OracleRound> {
    (0..count)
        .map(|t| {
            if t < 10 {
                vec![vec![0.5, 0.0]]
            } else {
                vec![vec![0.5, 0.5]]
            }
        })
        .collect()
}

pub fn ex2_arrivals() -> Vec<u64> {
    vec![0, 10]
}

/// Consecutive rounds from `from` in which the single item goes to agent 1.
pub fn catch_up_run(episode: &OracleEpisode, from: usize) -> usize {
    episode.assignments[from..]
        .iter()
        .take_while(|a| a == &&vec![1usize])
        .count()
}

/// Deterministic xorshift stream of f64 in [0, 1).
pub fn rand_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut s = seed.max(1);
    move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    }
}
