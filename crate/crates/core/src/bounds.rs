//! Closed-form regret floor and the exhaustive single-target optimality
//! check.
//!
//! Even a bandit that knows every true mean cannot steer the walker at
//! will: it can only bias the chain toward the best arm. In the long run
//! the walker still spends a `ν^δ`-fraction of its time on each arm, where
//! `ν^δ` is the stationary distribution of the chain biased toward the
//! best arm. The expected per-step reward is therefore capped at
//! `μ̃ = Σ_j ν^δ_j μ_j ≤ μ*`, and expected cumulative regret over a horizon
//! `T` is at least `T (μ* − μ̃)` for every bias policy.
//!
//! The optimality check enumerates all `K` single-target policies, scores
//! each by its stationary mean reward `ν^(l) · μ`, and confirms the best
//! score belongs to the best-mean arm.

use thiserror::Error;

use crate::env::RewardModel;
use crate::markov::{
    perturb_toward, stationary_distribution, Perturbation, PerturbationError, SolveError,
    StationaryDistribution, TransitionMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BoundError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoremError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error(
        "single-target optimality does not hold on this instance: best stationary \
         reward at target {found}, but the best-mean arm is {expected}"
    )]
    Violation {
        expected: usize,
        found: usize,
        /// The full `ν^(l) · μ` table, so the violating instance can be
        /// inspected without recomputing it.
        stationary_rewards: Vec<f64>,
    },
}

/// The per-step reward ceiling and the regret floor it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Best true mean `μ*`.
    pub mu_star: f64,
    /// Stationary mean reward under the best-arm bias, `ν^δ · μ`.
    pub mu_tilde: f64,
    /// `μ* − μ̃`; the unavoidable expected regret per step.
    pub per_step_gap: f64,
    /// `T · (μ* − μ̃)`.
    pub bound_at_horizon: f64,
    /// The biased chain's stationary distribution `ν^δ`.
    pub nu_delta: StationaryDistribution,
    /// The arm the bias targets (the best-mean arm).
    pub target: usize,
}

/// Computes the regret floor for biasing magnitude `delta` over `horizon`
/// steps: perturbs the chain toward the best-mean arm, solves for its
/// stationary distribution, and evaluates `T (μ* − ν^δ · μ)`.
///
/// ```
/// use chainbandit::{regret_lower_bound, Arm, RewardModel, TransitionMatrix};
///
/// // identical rows: the biased chain's stationary distribution is the row
/// let chain = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
/// let arms = RewardModel::new(vec![
///     Arm::Bernoulli { mean: 1.0 },
///     Arm::Bernoulli { mean: 0.0 },
/// ])
/// .unwrap();
/// let report = regret_lower_bound(&chain, &arms, 0.3, 1000).unwrap();
/// assert!((report.per_step_gap - 0.2).abs() < 1e-12);
/// assert!((report.bound_at_horizon - 200.0).abs() < 1e-9);
/// ```
pub fn regret_lower_bound(
    p: &TransitionMatrix,
    rewards: &RewardModel,
    delta: f64,
    horizon: u64,
) -> Result<BoundReport, BoundError> {
    assert_eq!(p.k(), rewards.k(), "chain and reward model disagree on K");
    let target = rewards.best_arm();
    let biased = perturb_toward(p, Perturbation::new(delta, target, p.k())?);
    let nu_delta = stationary_distribution(&biased)?;
    let mu_star = rewards.best_mean();
    let mu_tilde = nu_delta.expectation(&rewards.true_means());
    // mathematically μ̃ ≤ μ*; clamp the few-ulp case so the gap is never negative
    let per_step_gap = (mu_star - mu_tilde).max(0.0);
    Ok(BoundReport {
        mu_star,
        mu_tilde,
        per_step_gap,
        bound_at_horizon: horizon as f64 * per_step_gap,
        nu_delta,
        target,
    })
}

/// Stationary mean reward of every single-target policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTable {
    /// `v_l = ν^(l) · μ` for each target `l`.
    pub stationary_rewards: Vec<f64>,
    /// Argmax of the table; ties (within `1e-12`, absorbing solver noise)
    /// go to the lowest index.
    pub best_target: usize,
}

/// Scores all `K` single-target biases and checks that the best one
/// targets the best-mean arm; a mismatch is reported as
/// [`TheoremError::Violation`].
///
/// For `K = 2` the check always passes: biasing toward the higher-mean
/// state raises its stationary share while the denominator
/// `p_12 + p_21` is unchanged, so the value is monotone in the bias.
/// For `K ≥ 3` the property is a heuristic, not a law. A "sticky"
/// runner-up arm (large self-loop, mean close to the best) can capture
/// more stationary value when targeted than the best arm does; with
/// enough bias the runner-up becomes absorbing and collects its full
/// mean, while the best arm, if the chain reaches it rarely, cannot.
/// See the counterexample pinned in this module's tests.
pub fn verify_theorem1(
    p: &TransitionMatrix,
    rewards: &RewardModel,
    delta: f64,
) -> Result<TargetTable, TheoremError> {
    assert_eq!(p.k(), rewards.k(), "chain and reward model disagree on K");
    let means = rewards.true_means();
    let mut stationary_rewards = Vec::with_capacity(p.k());
    for target in 0..p.k() {
        let biased = perturb_toward(p, Perturbation::new(delta, target, p.k())?);
        let nu = stationary_distribution(&biased)?;
        stationary_rewards.push(nu.expectation(&means));
    }
    let mut best_target = 0;
    for (l, &v) in stationary_rewards.iter().enumerate().skip(1) {
        if v > stationary_rewards[best_target] + 1e-12 {
            best_target = l;
        }
    }
    let expected = rewards.best_arm();
    if best_target != expected {
        return Err(TheoremError::Violation {
            expected,
            found: best_target,
            stationary_rewards,
        });
    }
    Ok(TargetTable {
        stationary_rewards,
        best_target,
    })
}
