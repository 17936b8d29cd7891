//! Arms with reward distributions and the stepped environment.
//!
//! The environment hosts an autonomous walker: at each tick it transitions
//! under whatever (possibly biased) matrix the caller supplies for that
//! tick, and the arm it lands on emits a reward. Learning code observes
//! `(arm, reward)` pairs; the true means stay on this side of the fence and
//! are read only by the oracle policy, the bound computation, and
//! pseudo-regret accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::{stationary_distribution, SolveError, TransitionMatrix};

/// Rejected reward-model input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("reward model needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("arm {arm}: Bernoulli mean {mean} must lie in [0, 1]")]
    BernoulliMean { arm: usize, mean: f64 },
    #[error("arm {arm}: Gaussian sd {sd} must be finite and >= 0")]
    GaussianScale { arm: usize, sd: f64 },
    #[error("arm {arm}: mean {mean} must be finite")]
    NonFiniteMean { arm: usize, mean: f64 },
}

/// One arm's reward distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Arm {
    Bernoulli { mean: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl Arm {
    pub fn mean(&self) -> f64 {
        match *self {
            Arm::Bernoulli { mean } => mean,
            Arm::Gaussian { mean, .. } => mean,
        }
    }
}

/// The K arms, indexed like the chain's states.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    arms: Vec<Arm>,
}

impl RewardModel {
    pub fn new(arms: Vec<Arm>) -> Result<Self, RewardError> {
        if arms.len() < 2 {
            return Err(RewardError::TooFewArms(arms.len()));
        }
        for (i, arm) in arms.iter().enumerate() {
            match *arm {
                Arm::Bernoulli { mean } => {
                    if !mean.is_finite() || !(0.0..=1.0).contains(&mean) {
                        return Err(RewardError::BernoulliMean { arm: i, mean });
                    }
                }
                Arm::Gaussian { mean, sd } => {
                    if !mean.is_finite() {
                        return Err(RewardError::NonFiniteMean { arm: i, mean });
                    }
                    if !sd.is_finite() || sd < 0.0 {
                        return Err(RewardError::GaussianScale { arm: i, sd });
                    }
                }
            }
        }
        Ok(Self { arms })
    }

    /// Bernoulli arms with means evenly spaced from `top` (arm 0) down to
    /// `bottom` (arm K−1).
    pub fn linear_bernoulli(k: usize, top: f64, bottom: f64) -> Result<Self, RewardError> {
        if k < 2 {
            return Err(RewardError::TooFewArms(k));
        }
        let arms = (0..k)
            .map(|i| Arm::Bernoulli {
                mean: top + (bottom - top) * i as f64 / (k - 1) as f64,
            })
            .collect();
        Self::new(arms)
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    /// True mean of one arm. Oracle-side information.
    pub fn true_mean(&self, arm: usize) -> f64 {
        self.arms[arm].mean()
    }

    /// All true means in arm order. Oracle-side information.
    pub fn true_means(&self) -> Vec<f64> {
        self.arms.iter().map(Arm::mean).collect()
    }

    /// Largest true mean.
    pub fn best_mean(&self) -> f64 {
        self.arms
            .iter()
            .map(Arm::mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest true mean; ties go to the lowest index.
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (i, arm) in self.arms.iter().enumerate().skip(1) {
            if arm.mean() > self.arms[best].mean() {
                best = i;
            }
        }
        best
    }
}

/// How the walker's initial state is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartRule {
    /// Draw from the unbiased chain's stationary distribution, matching a
    /// walker that has been wandering long before observations begin.
    Stationary,
    /// Start at a fixed state (0-based).
    Fixed(usize),
}

/// One visit: which arm the walker landed on and what it paid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub arm: usize,
    pub reward: f64,
    /// 0-based index of the play that produced this observation.
    pub t: u64,
}

/// The walker's position plus its private random stream.
///
/// Owned by exactly one replication; all randomness for that replication
/// flows through this stream, so a `(seed, config)` pair fully determines
/// the trajectory.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub current_state: usize,
    /// Number of completed steps.
    pub t: u64,
    rng: ChaCha8Rng,
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Creates a walker on `p` with a deterministic stream derived from `seed`.
pub fn init_env(
    p: &TransitionMatrix,
    rewards: &RewardModel,
    seed: u64,
    start: StartRule,
) -> Result<EnvState, SolveError> {
    assert_eq!(p.k(), rewards.k(), "chain and reward model disagree on K");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let current_state = match start {
        StartRule::Fixed(i) => {
            assert!(i < p.k(), "fixed start state out of range");
            i
        }
        StartRule::Stationary => {
            let nu = stationary_distribution(p)?;
            sample_index(nu.probs(), &mut rng)
        }
    };
    Ok(EnvState {
        current_state,
        t: 0,
        rng,
    })
}

/// Advances the walker one tick under `p_effective` and samples the reward
/// of the arm it lands on.
pub fn step(
    env: &mut EnvState,
    p_effective: &TransitionMatrix,
    rewards: &RewardModel,
) -> Observation {
    let next = sample_index(p_effective.row(env.current_state), &mut env.rng);
    let reward = sample_reward(rewards, next, &mut env.rng);
    let obs = Observation {
        arm: next,
        reward,
        t: env.t,
    };
    env.current_state = next;
    env.t += 1;
    obs
}

/// One independent draw from an arm's distribution.
pub fn sample_reward(rewards: &RewardModel, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
    match rewards.arms[arm] {
        Arm::Bernoulli { mean } => {
            if rng.gen::<f64>() < mean {
                1.0
            } else {
                0.0
            }
        }
        Arm::Gaussian { mean, sd } => {
            if sd == 0.0 {
                mean
            } else {
                Normal::new(mean, sd)
                    .expect("validated at construction")
                    .sample(rng)
            }
        }
    }
}
