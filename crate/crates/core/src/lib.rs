//! Bandits that pull arms through an autonomous Markov walker.
//!
//! The decision maker never picks an arm directly. An intermediate walks a
//! Markov chain over the arms, and the only lever available is a bounded
//! bias: raise the chance of transitioning into one chosen state by up to
//! `delta`, with the mass taken proportionally from the other entries.
//! Rewards come from whatever arm the walker lands on.
//!
//! The crate provides:
//!
//! - [`markov`]: validated row-stochastic matrices, the bias operator, and
//!   two independent stationary-distribution solvers.
//! - [`mod@env`]: reward models and the seeded, fully deterministic stepped
//!   environment.
//! - [`policy`]: the bias policies (true-means oracle, explore-commit,
//!   a confidence-bound index, greedy, and the unbiased baseline).
//! - [`bounds`]: the closed-form per-step reward ceiling `μ̃` and regret
//!   floor `T (μ* − μ̃)`, plus the exhaustive single-target optimality
//!   check.
//! - [`sim`]: parallel replication/sweep orchestration with bit-stable
//!   aggregation.
//! - [`config`], [`results`], [`chart`]: JSON configs, CSV output, and
//!   dependency-free SVG plots for the CLI.

pub mod bounds;
pub mod chart;
pub mod config;
pub mod env;
pub mod markov;
pub mod policy;
pub mod results;
pub mod sim;

pub use bounds::{regret_lower_bound, verify_theorem1, BoundReport, TargetTable};
pub use env::{init_env, sample_reward, step, Arm, EnvState, Observation, RewardModel, StartRule};
pub use markov::{
    perturb_toward, stationary_distribution, stationary_power_iteration, Perturbation,
    StationaryDistribution, TransitionMatrix,
};
pub use policy::{BiasDecision, Policy, PolicyKind, PolicyState};
pub use sim::{
    aggregate, replication_seed, run_episode, run_experiment, sweep_delta, AggregateCurve,
    ExperimentConfig, ExperimentResult, RegretTrace,
};
