//! Episode, replication, and sweep orchestration.
//!
//! An experiment is a grid of cells `(policy, delta, replication)`. Each
//! cell runs one full episode: the policy emits a bias, the biased chain
//! advances, the policy observes the visit, and both realized and pseudo
//! cumulative regret accumulate. Cells are embarrassingly parallel; every
//! replication derives its own random stream from the root seed, and all
//! `(policy, delta)` cells of one replication share that stream so policy
//! comparisons run on common random numbers.
//!
//! Aggregation sorts traces into a canonical order before summing, so the
//! resulting curves are bit-identical no matter how (or in what order) the
//! cells were executed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::env::{init_env, step, RewardModel, StartRule};
use crate::markov::{perturb_toward, Perturbation, PerturbationError, SolveError, TransitionMatrix};
use crate::policy::{Policy, PolicyError, PolicyKind};

/// Invalid experiment description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("replications must be at least 1")]
    Replications,
    #[error("at least one delta is required")]
    NoDeltas,
    #[error("a delta sweep needs at least two delta values")]
    SweepNeedsTwoDeltas,
    #[error("delta {0} must lie in [0, 1]")]
    DeltaRange(f64),
    #[error("duplicate policy `{0}`: policy names must be unique within an experiment")]
    DuplicatePolicy(&'static str),
    #[error("chain has {chain_k} states but the reward model has {reward_k} arms")]
    KMismatch { chain_k: usize, reward_k: usize },
    #[error("fixed start state {state} out of range for {k} states")]
    StartRange { state: usize, k: usize },
    #[error("p2ee alpha {0} must lie in [0, 1]")]
    AlphaRange(f64),
}

/// Episode-level failure (policy or solver).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
}

/// Full description of one experiment. Construct via [`ExperimentConfig::new`],
/// which checks every cross-field invariant.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub matrix: TransitionMatrix,
    pub rewards: RewardModel,
    pub horizon: u64,
    pub deltas: Vec<f64>,
    pub replications: u32,
    pub seed: u64,
    pub start: StartRule,
    pub policies: Vec<PolicyKind>,
}

impl ExperimentConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        matrix: TransitionMatrix,
        rewards: RewardModel,
        horizon: u64,
        deltas: Vec<f64>,
        replications: u32,
        seed: u64,
        start: StartRule,
        policies: Vec<PolicyKind>,
    ) -> Result<Self, ExperimentError> {
        if matrix.k() != rewards.k() {
            return Err(ExperimentError::KMismatch {
                chain_k: matrix.k(),
                reward_k: rewards.k(),
            });
        }
        if horizon < 1 {
            return Err(ExperimentError::Horizon);
        }
        if replications < 1 {
            return Err(ExperimentError::Replications);
        }
        if deltas.is_empty() {
            return Err(ExperimentError::NoDeltas);
        }
        for &d in &deltas {
            if !d.is_finite() || !(0.0..=1.0).contains(&d) {
                return Err(ExperimentError::DeltaRange(d));
            }
        }
        let mut seen = Vec::new();
        for pk in &policies {
            if seen.contains(&pk.name()) {
                return Err(ExperimentError::DuplicatePolicy(pk.name()));
            }
            seen.push(pk.name());
            if let PolicyKind::P2ee { alpha } = pk {
                if !alpha.is_finite() || !(0.0..=1.0).contains(alpha) {
                    return Err(ExperimentError::AlphaRange(*alpha));
                }
            }
        }
        if let StartRule::Fixed(state) = start {
            if state >= matrix.k() {
                return Err(ExperimentError::StartRange {
                    state,
                    k: matrix.k(),
                });
            }
        }
        Ok(Self {
            matrix,
            rewards,
            horizon,
            deltas,
            replications,
            seed,
            start,
            policies,
        })
    }
}

/// Per-step cumulative regret for one replication of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub policy: String,
    pub delta: f64,
    pub replication: u32,
    /// `C_t = t μ* − Σ_{j≤t} r_j` for t = 1..=T.
    pub cum_realized: Vec<f64>,
    /// `Σ_{j≤t} (μ* − μ_{arm_j})` for t = 1..=T; nondecreasing.
    pub cum_pseudo: Vec<f64>,
}

/// Mean and standard error of cumulative regret per step, over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub policy: String,
    pub delta: f64,
    pub replications: u32,
    pub mean_realized: Vec<f64>,
    pub se_realized: Vec<f64>,
    pub mean_pseudo: Vec<f64>,
    pub se_pseudo: Vec<f64>,
}

impl AggregateCurve {
    pub fn final_mean_realized(&self) -> f64 {
        *self.mean_realized.last().expect("horizon >= 1")
    }

    pub fn final_se_realized(&self) -> f64 {
        *self.se_realized.last().expect("horizon >= 1")
    }

    pub fn final_mean_pseudo(&self) -> f64 {
        *self.mean_pseudo.last().expect("horizon >= 1")
    }

    pub fn final_se_pseudo(&self) -> f64 {
        *self.se_pseudo.last().expect("horizon >= 1")
    }
}

/// A cell that could not complete, with the cells that did left intact.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub policy: String,
    pub delta: f64,
    pub replication: u32,
    pub error: String,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub curves: Vec<AggregateCurve>,
    pub traces: Vec<RegretTrace>,
    pub failures: Vec<CellFailure>,
}

/// One row of a delta sweep: a policy's final mean regret at one delta.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub policy: String,
    pub delta: f64,
    pub replications: u32,
    pub final_mean_realized: f64,
    pub final_se_realized: f64,
    pub final_mean_pseudo: f64,
    pub final_se_pseudo: f64,
}

/// Derives the random stream for one replication from the root seed
/// (SplitMix64 sequence step + finalizer). Every `(policy, delta)` cell of
/// the replication reuses this stream, so cells can run in any order and
/// policy comparisons share common random numbers.
pub fn replication_seed(root: u64, replication: u32) -> u64 {
    let mut z = root.wrapping_add((replication as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one episode: `horizon` ticks of decide → bias → step → observe,
/// accumulating realized and pseudo regret. Deterministic in `seed`.
pub fn run_episode(
    config: &ExperimentConfig,
    kind: PolicyKind,
    delta: f64,
    seed: u64,
) -> Result<RegretTrace, EpisodeError> {
    let k = config.matrix.k();
    let mut policy = Policy::new(kind, k, config.horizon, &config.rewards);
    let mut env = init_env(&config.matrix, &config.rewards, seed, config.start)?;
    let mu_star = config.rewards.best_mean();
    // each episode sees at most K distinct targets; bias matrices are cached per target
    let mut biased: Vec<Option<TransitionMatrix>> = vec![None; k];
    let horizon = config.horizon as usize;
    let mut cum_realized = Vec::with_capacity(horizon);
    let mut cum_pseudo = Vec::with_capacity(horizon);
    let (mut total_realized, mut total_pseudo) = (0.0f64, 0.0f64);
    for _ in 0..config.horizon {
        let decision = policy.decide(delta)?;
        let p_effective = match decision {
            None => &config.matrix,
            Some(d) => {
                if biased[d.target].is_none() {
                    let pert = Perturbation::new(d.delta, d.target, k)?;
                    biased[d.target] = Some(perturb_toward(&config.matrix, pert));
                }
                biased[d.target].as_ref().expect("just cached")
            }
        };
        let obs = step(&mut env, p_effective, &config.rewards);
        policy.observe(&obs)?;
        total_realized += mu_star - obs.reward;
        total_pseudo += mu_star - config.rewards.true_mean(obs.arm);
        cum_realized.push(total_realized);
        cum_pseudo.push(total_pseudo);
    }
    Ok(RegretTrace {
        policy: kind.name().to_string(),
        delta,
        replication: 0,
        cum_realized,
        cum_pseudo,
    })
}

/// Aggregates traces into per-`(policy, delta)` curves.
///
/// Traces are sorted into canonical order (policy name, delta, replication)
/// before any floating-point sum, so the output is bit-identical for any
/// permutation of the input.
pub fn aggregate(traces: &[RegretTrace]) -> Vec<AggregateCurve> {
    let mut groups: BTreeMap<(String, u64), Vec<&RegretTrace>> = BTreeMap::new();
    for trace in traces {
        groups
            .entry((trace.policy.clone(), trace.delta.to_bits()))
            .or_default()
            .push(trace);
    }
    let mut curves = Vec::with_capacity(groups.len());
    for ((policy, delta_bits), mut group) in groups {
        group.sort_by_key(|t| t.replication);
        let n = group.len();
        let horizon = group[0].cum_realized.len();
        let nf = n as f64;
        let mut mean_realized = vec![0.0f64; horizon];
        let mut mean_pseudo = vec![0.0f64; horizon];
        for trace in &group {
            for t in 0..horizon {
                mean_realized[t] += trace.cum_realized[t];
                mean_pseudo[t] += trace.cum_pseudo[t];
            }
        }
        for t in 0..horizon {
            mean_realized[t] /= nf;
            mean_pseudo[t] /= nf;
        }
        let mut se_realized = vec![0.0f64; horizon];
        let mut se_pseudo = vec![0.0f64; horizon];
        if n > 1 {
            for trace in &group {
                for t in 0..horizon {
                    let dr = trace.cum_realized[t] - mean_realized[t];
                    let dp = trace.cum_pseudo[t] - mean_pseudo[t];
                    se_realized[t] += dr * dr;
                    se_pseudo[t] += dp * dp;
                }
            }
            for t in 0..horizon {
                se_realized[t] = (se_realized[t] / (nf - 1.0)).sqrt() / nf.sqrt();
                se_pseudo[t] = (se_pseudo[t] / (nf - 1.0)).sqrt() / nf.sqrt();
            }
        }
        curves.push(AggregateCurve {
            policy,
            delta: f64::from_bits(delta_bits),
            replications: n as u32,
            mean_realized,
            se_realized,
            mean_pseudo,
            se_pseudo,
        });
    }
    curves
}

/// Runs the full `(policy, delta, replication)` grid in parallel and
/// aggregates. Failed cells are reported alongside the completed ones.
pub fn run_experiment(config: &ExperimentConfig) -> ExperimentResult {
    let mut cells = Vec::new();
    for &kind in &config.policies {
        for &delta in &config.deltas {
            for rep in 0..config.replications {
                cells.push((kind, delta, rep));
            }
        }
    }
    let outcomes: Vec<(PolicyKind, f64, u32, Result<RegretTrace, EpisodeError>)> = cells
        .into_par_iter()
        .map(|(kind, delta, rep)| {
            let seed = replication_seed(config.seed, rep);
            let result = run_episode(config, kind, delta, seed).map(|mut trace| {
                trace.replication = rep;
                trace
            });
            (kind, delta, rep, result)
        })
        .collect();

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (kind, delta, rep, outcome) in outcomes {
        match outcome {
            Ok(trace) => traces.push(trace),
            Err(e) => failures.push(CellFailure {
                policy: kind.name().to_string(),
                delta,
                replication: rep,
                error: e.to_string(),
            }),
        }
    }
    let curves = aggregate(&traces);
    ExperimentResult {
        curves,
        traces,
        failures,
    }
}

/// Runs the experiment grid across its delta list (which must have at
/// least two entries) and condenses each curve to its final-step summary.
/// All deltas share the chain, arms, and replication seed ladder.
pub fn sweep_delta(config: &ExperimentConfig) -> Result<(Vec<SweepRow>, Vec<CellFailure>), ExperimentError> {
    if config.deltas.len() < 2 {
        return Err(ExperimentError::SweepNeedsTwoDeltas);
    }
    let result = run_experiment(config);
    let rows = result
        .curves
        .iter()
        .map(|c| SweepRow {
            policy: c.policy.clone(),
            delta: c.delta,
            replications: c.replications,
            final_mean_realized: c.final_mean_realized(),
            final_se_realized: c.final_se_realized(),
            final_mean_pseudo: c.final_mean_pseudo(),
            final_se_pseudo: c.final_se_pseudo(),
        })
        .collect();
    Ok((rows, result.failures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Arm;
    use crate::markov::stationary_distribution;

    fn small_config(policies: Vec<PolicyKind>, deltas: Vec<f64>) -> ExperimentConfig {
        let matrix = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        let rewards = RewardModel::new(vec![
            Arm::Bernoulli { mean: 0.9 },
            Arm::Bernoulli { mean: 0.1 },
        ])
        .unwrap();
        ExperimentConfig::new(
            matrix,
            rewards,
            200,
            deltas,
            10,
            42,
            StartRule::Stationary,
            policies,
        )
        .unwrap()
    }

    #[test]
    fn config_rejects_bad_fields() {
        let matrix = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        let rewards = RewardModel::new(vec![
            Arm::Bernoulli { mean: 0.9 },
            Arm::Bernoulli { mean: 0.1 },
        ])
        .unwrap();
        let base = |horizon, deltas: Vec<f64>, reps, policies: Vec<PolicyKind>| {
            ExperimentConfig::new(
                matrix.clone(),
                rewards.clone(),
                horizon,
                deltas,
                reps,
                0,
                StartRule::Stationary,
                policies,
            )
        };
        assert_eq!(
            base(0, vec![0.1], 1, vec![PolicyKind::Genie]).unwrap_err(),
            ExperimentError::Horizon
        );
        assert_eq!(
            base(10, vec![], 1, vec![PolicyKind::Genie]).unwrap_err(),
            ExperimentError::NoDeltas
        );
        assert_eq!(
            base(10, vec![1.5], 1, vec![PolicyKind::Genie]).unwrap_err(),
            ExperimentError::DeltaRange(1.5)
        );
        assert_eq!(
            base(10, vec![0.1], 0, vec![PolicyKind::Genie]).unwrap_err(),
            ExperimentError::Replications
        );
        assert_eq!(
            base(10, vec![0.1], 1, vec![PolicyKind::Genie, PolicyKind::Genie]).unwrap_err(),
            ExperimentError::DuplicatePolicy("genie")
        );
        assert_eq!(
            base(
                10,
                vec![0.1],
                1,
                vec![PolicyKind::P2ee { alpha: 1.5 }]
            )
            .unwrap_err(),
            ExperimentError::AlphaRange(1.5)
        );
    }

    #[test]
    fn episode_is_deterministic() {
        let config = small_config(vec![PolicyKind::Ucb], vec![0.2]);
        let a = run_episode(&config, PolicyKind::Ucb, 0.2, 1234).unwrap();
        let b = run_episode(&config, PolicyKind::Ucb, 0.2, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pseudo_regret_is_nondecreasing() {
        let config = small_config(vec![PolicyKind::Greedy], vec![0.3]);
        let trace = run_episode(&config, PolicyKind::Greedy, 0.3, 7).unwrap();
        assert_eq!(trace.cum_pseudo.len(), 200);
        for w in trace.cum_pseudo.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn experiment_bookkeeping_counts_cells() {
        let config = small_config(vec![PolicyKind::Genie, PolicyKind::Noop], vec![0.2]);
        let result = run_experiment(&config);
        assert_eq!(result.curves.len(), 2);
        assert_eq!(result.traces.len(), 20);
        assert!(result.failures.is_empty());
        for curve in &result.curves {
            assert_eq!(curve.replications, 10);
            assert_eq!(curve.mean_realized.len(), 200);
        }
    }

    #[test]
    fn aggregates_are_permutation_invariant() {
        let config = small_config(vec![PolicyKind::Genie, PolicyKind::Ucb], vec![0.2, 0.4]);
        let forward = run_experiment(&config);
        // run the same cells by hand, in reverse order
        let mut reversed_traces = Vec::new();
        for &kind in config.policies.iter().rev() {
            for &delta in config.deltas.iter().rev() {
                for rep in (0..config.replications).rev() {
                    let seed = replication_seed(config.seed, rep);
                    let mut trace = run_episode(&config, kind, delta, seed).unwrap();
                    trace.replication = rep;
                    reversed_traces.push(trace);
                }
            }
        }
        let reversed = aggregate(&reversed_traces);
        assert_eq!(forward.curves.len(), reversed.len());
        for (a, b) in forward.curves.iter().zip(&reversed) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn genie_pseudo_rate_matches_bound_gap() {
        // identical-rows chain: biased visits are iid, per-step gap is exact
        let matrix = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let rewards = RewardModel::new(vec![
            Arm::Bernoulli { mean: 1.0 },
            Arm::Bernoulli { mean: 0.0 },
        ])
        .unwrap();
        let config = ExperimentConfig::new(
            matrix,
            rewards,
            2000,
            vec![0.3],
            200,
            99,
            StartRule::Stationary,
            vec![PolicyKind::Genie],
        )
        .unwrap();
        let result = run_experiment(&config);
        let curve = &result.curves[0];
        let rate = curve.final_mean_pseudo() / 2000.0;
        let se = curve.final_se_pseudo() / 2000.0;
        assert!(
            (rate - 0.2).abs() <= 3.0 * se,
            "rate {rate} outside 3 se ({se}) of 0.2"
        );
    }

    #[test]
    fn noop_pseudo_rate_matches_stationary_average() {
        let matrix = TransitionMatrix::new(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.4, 0.4, 0.2],
            vec![0.25, 0.5, 0.25],
        ])
        .unwrap();
        let rewards = RewardModel::new(vec![
            Arm::Bernoulli { mean: 0.9 },
            Arm::Bernoulli { mean: 0.5 },
            Arm::Bernoulli { mean: 0.1 },
        ])
        .unwrap();
        let nu = stationary_distribution(&matrix).unwrap();
        let expected_rate = 0.9 - nu.expectation(&rewards.true_means());
        let config = ExperimentConfig::new(
            matrix,
            rewards,
            2000,
            vec![0.7], // irrelevant to noop
            200,
            5,
            StartRule::Stationary,
            vec![PolicyKind::Noop],
        )
        .unwrap();
        let result = run_experiment(&config);
        let curve = &result.curves[0];
        let rate = curve.final_mean_pseudo() / 2000.0;
        let se = curve.final_se_pseudo() / 2000.0;
        assert!(
            (rate - expected_rate).abs() <= 3.0 * se,
            "rate {rate} outside 3 se ({se}) of {expected_rate}"
        );
    }

    #[test]
    fn failed_cells_do_not_discard_completed_ones() {
        // alpha = 0 commits at t = 0 with no data: every p2ee cell fails
        let config = small_config(
            vec![PolicyKind::Genie, PolicyKind::P2ee { alpha: 0.0 }],
            vec![0.2],
        );
        let result = run_experiment(&config);
        assert_eq!(result.failures.len(), 10);
        assert!(result.failures.iter().all(|f| f.policy == "p2ee"));
        assert_eq!(result.curves.len(), 1);
        assert_eq!(result.curves[0].policy, "genie");
    }

    #[test]
    fn sweep_requires_two_deltas() {
        let config = small_config(vec![PolicyKind::Genie], vec![0.2]);
        assert!(sweep_delta(&config).is_err());
        let config = small_config(vec![PolicyKind::Genie], vec![0.2, 0.4]);
        let (rows, failures) = sweep_delta(&config).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(failures.is_empty());
    }

    #[test]
    fn sweep_run_twice_gives_identical_rows() {
        let config = small_config(vec![PolicyKind::Genie], vec![0.2, 0.4]);
        let (a, _) = sweep_delta(&config).unwrap();
        let (b, _) = sweep_delta(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replication_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for rep in 0..10_000 {
            assert!(seen.insert(replication_seed(123, rep)));
        }
    }
}
