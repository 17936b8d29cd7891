//! Bias policies: which state should the chain be nudged toward this tick.
//!
//! A policy maps its observed history to a [`BiasDecision`] (or to no bias
//! at all for the do-nothing baseline). All decisions are deterministic
//! functions of `(PolicyState, parameters)`; ties break toward the lowest
//! arm index throughout.
//!
//! The explore-commit policy biases toward the least-visited arm until the
//! exploration budget runs out, then freezes on the arm with the best
//! empirical mean and biases toward it for the rest of the horizon.

use thiserror::Error;

use crate::env::{Observation, RewardModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("cannot commit: no arm has been visited yet")]
    NoData,
    #[error("arm index {arm} out of range for {k} arms")]
    IndexOutOfRange { arm: usize, k: usize },
}

/// Explore-commit phase marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Explore,
    Commit,
}

/// A policy's observed history: visit counts and reward sums per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pulls: Vec<u64>,
    reward_sums: Vec<f64>,
    t: u64,
    phase: Phase,
    committed_arm: Option<usize>,
}

impl PolicyState {
    pub fn new(k: usize) -> Self {
        Self {
            pulls: vec![0; k],
            reward_sums: vec![0.0; k],
            t: 0,
            phase: Phase::Explore,
            committed_arm: None,
        }
    }

    pub fn k(&self) -> usize {
        self.pulls.len()
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    /// Steps observed so far; always equals the sum of `pulls`.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn committed_arm(&self) -> Option<usize> {
        self.committed_arm
    }

    /// Empirical mean of an arm, defined only once it has been visited.
    pub fn empirical_mean(&self, arm: usize) -> Option<f64> {
        (self.pulls[arm] > 0).then(|| self.reward_sums[arm] / self.pulls[arm] as f64)
    }

    #[cfg(test)]
    pub(crate) fn with_history(pulls: Vec<u64>, reward_sums: Vec<f64>) -> Self {
        let t = pulls.iter().sum();
        Self {
            pulls,
            reward_sums,
            t,
            phase: Phase::Explore,
            committed_arm: None,
        }
    }
}

/// This tick's bias: the target state and the (configured) magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasDecision {
    pub target: usize,
    pub delta: f64,
}

fn argmax_f64(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Best empirical mean among visited arms; `None` when nothing was visited.
fn empirical_best(state: &PolicyState) -> Option<usize> {
    argmax_f64((0..state.k()).map(|i| state.empirical_mean(i).unwrap_or(f64::NEG_INFINITY)))
        .filter(|&i| state.pulls[i] > 0)
}

/// Oracle policy: bias toward the arm with the highest true mean, forever.
pub fn genie_target(rewards: &RewardModel, delta: f64) -> BiasDecision {
    BiasDecision {
        target: rewards.best_arm(),
        delta,
    }
}

/// Explore-commit policy.
///
/// While `t < explore_len`: bias toward the least-pulled arm. At the
/// boundary the empirical argmax over visited arms is computed once, stored
/// in the state, and returned for every remaining tick. Arms never visited
/// are excluded from the commit argmax; if no arm was visited at all the
/// commit fails with [`PolicyError::NoData`].
pub fn p2ee_target(
    state: &mut PolicyState,
    explore_len: u64,
    delta: f64,
) -> Result<BiasDecision, PolicyError> {
    if state.t < explore_len {
        let target = state
            .pulls
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.cmp(b))
            .map(|(i, _)| i)
            .expect("at least one arm");
        return Ok(BiasDecision { target, delta });
    }
    if state.phase == Phase::Explore {
        let arm = empirical_best(state).ok_or(PolicyError::NoData)?;
        state.committed_arm = Some(arm);
        state.phase = Phase::Commit;
    }
    Ok(BiasDecision {
        target: state.committed_arm.expect("set at commit"),
        delta,
    })
}

fn ucb_index(mean: f64, pulls: u64, t: u64) -> f64 {
    mean + (2.0 * (t as f64).ln() / pulls as f64).sqrt()
}

/// Confidence-bound policy: bias toward the arm with the largest index
/// `mean + sqrt(2 ln t / pulls)`; unvisited arms rank above everything.
pub fn ucb_target(state: &PolicyState, delta: f64) -> BiasDecision {
    if let Some(unvisited) = state.pulls.iter().position(|&n| n == 0) {
        return BiasDecision {
            target: unvisited,
            delta,
        };
    }
    let t = state.t;
    let target = argmax_f64(
        (0..state.k()).map(|i| ucb_index(state.empirical_mean(i).unwrap(), state.pulls[i], t)),
    )
    .expect("at least one arm");
    BiasDecision { target, delta }
}

/// Greedy policy: bias toward the best empirical mean among visited arms.
/// The chain's own randomness supplies the exploration, so there is no
/// explicit random arm choice; before anything is visited, arm 0 is used.
pub fn greedy_target(state: &PolicyState, delta: f64) -> BiasDecision {
    BiasDecision {
        target: empirical_best(state).unwrap_or(0),
        delta,
    }
}

/// Records one observation: increments the visit count, accumulates the
/// reward, advances `t`.
pub fn update(state: &mut PolicyState, obs: &Observation) -> Result<(), PolicyError> {
    if obs.arm >= state.k() {
        return Err(PolicyError::IndexOutOfRange {
            arm: obs.arm,
            k: state.k(),
        });
    }
    debug_assert_eq!(obs.t, state.t, "observation index out of order");
    state.pulls[obs.arm] += 1;
    state.reward_sums[obs.arm] += obs.reward;
    state.t += 1;
    Ok(())
}

/// The policies the simulator knows how to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// True-means oracle; constant target.
    Genie,
    /// Explore-commit with exploration budget `ceil(alpha * horizon)`.
    P2ee { alpha: f64 },
    /// Confidence-bound index policy.
    Ucb,
    /// Empirical-best chaser with no explicit exploration.
    Greedy,
    /// Leaves the chain unbiased; the do-nothing baseline.
    Noop,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Genie => "genie",
            PolicyKind::P2ee { .. } => "p2ee",
            PolicyKind::Ucb => "ucb",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Noop => "noop",
        }
    }
}

/// A policy instance bound to one episode: kind, parameters, history.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    state: PolicyState,
    explore_len: u64,
    genie_arm: Option<usize>,
}

impl Policy {
    /// `rewards` is read only to fix the oracle's target; learning kinds
    /// never see true means.
    pub fn new(kind: PolicyKind, k: usize, horizon: u64, rewards: &RewardModel) -> Self {
        let explore_len = match kind {
            PolicyKind::P2ee { alpha } => (alpha * horizon as f64).ceil() as u64,
            _ => 0,
        };
        let genie_arm = match kind {
            PolicyKind::Genie => Some(rewards.best_arm()),
            _ => None,
        };
        Self {
            kind,
            state: PolicyState::new(k),
            explore_len,
            genie_arm,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    /// The bias for this tick; `None` means run the chain unperturbed.
    pub fn decide(&mut self, delta: f64) -> Result<Option<BiasDecision>, PolicyError> {
        match self.kind {
            PolicyKind::Genie => Ok(Some(BiasDecision {
                target: self.genie_arm.expect("set at construction"),
                delta,
            })),
            PolicyKind::P2ee { .. } => {
                p2ee_target(&mut self.state, self.explore_len, delta).map(Some)
            }
            PolicyKind::Ucb => Ok(Some(ucb_target(&self.state, delta))),
            PolicyKind::Greedy => Ok(Some(greedy_target(&self.state, delta))),
            PolicyKind::Noop => Ok(None),
        }
    }

    pub fn observe(&mut self, obs: &Observation) -> Result<(), PolicyError> {
        update(&mut self.state, obs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Arm;
    use proptest::prelude::*;

    fn rewards(means: &[f64]) -> RewardModel {
        RewardModel::new(means.iter().map(|&m| Arm::Bernoulli { mean: m }).collect()).unwrap()
    }

    #[test]
    fn genie_picks_unique_max() {
        let d = genie_target(&rewards(&[0.9, 0.5, 0.1]), 0.3);
        assert_eq!(d.target, 0);
        assert_eq!(d.delta, 0.3);
    }

    #[test]
    fn genie_breaks_ties_low() {
        assert_eq!(genie_target(&rewards(&[0.5, 0.5]), 0.1).target, 0);
    }

    #[test]
    fn p2ee_explores_least_pulled() {
        let mut s = PolicyState::with_history(vec![5, 2, 7], vec![0.0, 0.0, 0.0]);
        let d = p2ee_target(&mut s, 100, 0.2).unwrap();
        assert_eq!(d.target, 1);
        assert_eq!(s.phase(), Phase::Explore);
    }

    #[test]
    fn p2ee_explore_ties_go_low() {
        let mut s = PolicyState::with_history(vec![3, 3, 3], vec![0.0, 0.0, 0.0]);
        assert_eq!(p2ee_target(&mut s, 100, 0.2).unwrap().target, 0);
    }

    #[test]
    fn p2ee_commits_to_empirical_best_and_freezes() {
        let mut s = PolicyState::with_history(vec![5, 5, 5], vec![2.0, 4.0, 3.0]);
        let d = p2ee_target(&mut s, 10, 0.2).unwrap();
        assert_eq!(d.target, 1);
        assert_eq!(s.phase(), Phase::Commit);
        assert_eq!(s.committed_arm(), Some(1));
        // later history must not change the committed arm
        s.reward_sums[2] = 100.0;
        assert_eq!(p2ee_target(&mut s, 10, 0.2).unwrap().target, 1);
    }

    #[test]
    fn p2ee_commit_without_data_is_an_error() {
        let mut s = PolicyState::new(3);
        assert_eq!(p2ee_target(&mut s, 0, 0.2), Err(PolicyError::NoData));
    }

    #[test]
    fn p2ee_commit_skips_unvisited_arms() {
        let mut s = PolicyState::with_history(vec![4, 0, 4], vec![2.8, 0.0, 2.0]);
        assert_eq!(p2ee_target(&mut s, 8, 0.2).unwrap().target, 0);
    }

    #[test]
    fn ucb_prefers_unvisited() {
        let s = PolicyState::with_history(vec![0, 5], vec![0.0, 4.0]);
        assert_eq!(ucb_target(&s, 0.1).target, 0);
    }

    #[test]
    fn ucb_equal_widths_pick_higher_mean() {
        let s = PolicyState::with_history(vec![4, 4], vec![2.0, 1.0]);
        assert_eq!(ucb_target(&s, 0.1).target, 0);
    }

    #[test]
    fn ucb_wide_interval_beats_higher_mean() {
        // index₀ = 0.6 + sqrt(2 ln 104 / 100), index₁ = 0.55 + sqrt(2 ln 104 / 4)
        let s = PolicyState::with_history(vec![100, 4], vec![60.0, 2.2]);
        let i0 = ucb_index(0.6, 100, 104);
        let i1 = ucb_index(0.55, 4, 104);
        assert!((i0 - 0.9047).abs() < 1e-3);
        assert!((i1 - 2.0737).abs() < 1e-3);
        assert!(i1 > i0);
        assert_eq!(ucb_target(&s, 0.1).target, 1);
    }

    #[test]
    fn ucb_index_nonincreasing_in_pulls() {
        let t = 1000;
        let mut last = f64::INFINITY;
        for pulls in 1..200 {
            let idx = ucb_index(0.5, pulls, t);
            assert!(idx <= last);
            last = idx;
        }
    }

    #[test]
    fn greedy_picks_best_visited_mean() {
        let s = PolicyState::with_history(vec![10, 10, 10], vec![2.0, 9.0, 5.0]);
        assert_eq!(greedy_target(&s, 0.1).target, 1);
    }

    #[test]
    fn greedy_defaults_to_first_arm() {
        let s = PolicyState::new(3);
        assert_eq!(greedy_target(&s, 0.1).target, 0);
    }

    #[test]
    fn greedy_ignores_unvisited_arms() {
        let s = PolicyState::with_history(vec![3, 0], vec![2.1, 0.0]);
        assert_eq!(greedy_target(&s, 0.1).target, 0);
    }

    #[test]
    fn update_accumulates() {
        let mut s = PolicyState::new(2);
        update(
            &mut s,
            &Observation {
                arm: 0,
                reward: 0.5,
                t: 0,
            },
        )
        .unwrap();
        assert_eq!(s.pulls(), &[1, 0]);
        assert_eq!(s.reward_sums(), &[0.5, 0.0]);
        update(
            &mut s,
            &Observation {
                arm: 0,
                reward: 1.0,
                t: 1,
            },
        )
        .unwrap();
        assert_eq!(s.pulls(), &[2, 0]);
        assert_eq!(s.t(), 2);
    }

    #[test]
    fn update_rejects_bad_arm() {
        let mut s = PolicyState::new(2);
        let err = update(
            &mut s,
            &Observation {
                arm: 2,
                reward: 0.0,
                t: 0,
            },
        )
        .unwrap_err();
        assert_eq!(err, PolicyError::IndexOutOfRange { arm: 2, k: 2 });
    }

    #[test]
    fn noop_never_biases() {
        let r = rewards(&[0.9, 0.1]);
        let mut p = Policy::new(PolicyKind::Noop, 2, 100, &r);
        assert_eq!(p.decide(0.5).unwrap(), None);
        assert_eq!(p.decide(0.0).unwrap(), None);
    }

    #[test]
    fn p2ee_phase_flips_exactly_once() {
        let r = rewards(&[0.2, 0.8]);
        let mut p = Policy::new(PolicyKind::P2ee { alpha: 0.25 }, 2, 20, &r);
        let mut commits = 0;
        for t in 0..20u64 {
            let before = p.state().phase();
            let d = p.decide(0.3).unwrap().unwrap();
            if before == Phase::Explore && p.state().phase() == Phase::Commit {
                commits += 1;
                assert_eq!(t, 5); // ceil(0.25 * 20)
            }
            if p.state().phase() == Phase::Commit {
                assert_eq!(Some(d.target), p.state().committed_arm());
            }
            let reward = if d.target == 1 { 1.0 } else { 0.0 };
            p.observe(&Observation {
                arm: d.target,
                reward,
                t,
            })
            .unwrap();
        }
        assert_eq!(commits, 1);
    }

    proptest! {
        #[test]
        fn pull_counts_always_sum_to_t(arms in proptest::collection::vec(0usize..4, 1..60)) {
            let mut s = PolicyState::new(4);
            for (t, &arm) in arms.iter().enumerate() {
                update(&mut s, &Observation { arm, reward: 0.25, t: t as u64 }).unwrap();
            }
            prop_assert_eq!(s.t(), arms.len() as u64);
            prop_assert_eq!(s.pulls().iter().sum::<u64>(), s.t());
        }

        #[test]
        fn greedy_target_is_scale_invariant(
            sums in proptest::collection::vec(0.0..10.0f64, 4),
            scale in 0.1..50.0f64,
        ) {
            let pulls = vec![3u64, 5, 2, 7];
            let base = PolicyState::with_history(pulls.clone(), sums.clone());
            let scaled = PolicyState::with_history(
                pulls,
                sums.iter().map(|&v| v * scale).collect(),
            );
            prop_assert_eq!(greedy_target(&base, 0.2).target, greedy_target(&scaled, 0.2).target);
        }
    }
}
