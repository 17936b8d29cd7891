//! Row-stochastic transition matrices, stationary distributions, and the
//! bias operator that shifts transition mass toward a target state.
//!
//! The bias operator models an outside influence (a recommender nudging an
//! autonomous user) that can raise the probability of entering one chosen
//! state by up to `delta` per row. For each row `i` with target `l`:
//!
//! ```text
//! m_i = Σ_{j≠l} p_ij            off-target mass
//! d_i = min(delta, m_i)         effective shift, truncated at the cap
//! p'_il = p_il + d_i
//! p'_ij = p_ij - d_i * (p_ij / m_i)    for j ≠ l, when m_i > 0
//! ```
//!
//! The shift is removed from off-target entries in proportion to their
//! current mass, so the walker's relative preferences among non-target
//! states are preserved. When `d_i = m_i` the row truncates to the unit
//! vector on the target. For a 2-state chain this reduces to adding
//! `delta` to the target column and subtracting it from the other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Absolute tolerance on row sums accepted at construction time.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Maximum allowed `‖νP − ν‖∞` for a solved stationary distribution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Successive-iterate tolerance for the power-iteration route.
pub const POWER_TOLERANCE: f64 = 1e-12;

/// Iteration cap for the power-iteration route.
pub const POWER_MAX_ITERATIONS: u64 = 1_000_000;

/// Rejected matrix input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix must be square with at least 2 states; row {row} has {cols} columns for {rows} rows")]
    Shape { rows: usize, cols: usize, row: usize },
    #[error("row {row} sums to {sum:.17} but must sum to 1 within {ROW_SUM_TOLERANCE:e}")]
    RowSum { row: usize, sum: f64 },
    #[error("entry ({row},{col}) = {value} lies outside [0, 1]")]
    Range { row: usize, col: usize, value: f64 },
}

/// Rejected perturbation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PerturbationError {
    #[error("perturbation magnitude {0} must lie in [0, 1]")]
    DeltaRange(f64),
    #[error("perturbation target {target} out of range for {k} states")]
    TargetRange { target: usize, k: usize },
}

/// Stationary-distribution solver failure.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SolveError {
    #[error("power iteration did not converge within {max_iterations} iterations")]
    Convergence { max_iterations: u64 },
    #[error("linear system is degenerate: no unique normalized stationary distribution")]
    Degenerate,
}

/// A validated K×K row-stochastic matrix. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    k: usize,
    rows: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates and wraps raw row-major probabilities.
    ///
    /// Rejects non-square input, entries outside `[0, 1]`, and rows whose
    /// sum deviates from 1 by more than [`ROW_SUM_TOLERANCE`]. Never
    /// renormalizes silently.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        let k = rows.len();
        if k < 2 {
            return Err(MatrixError::Shape {
                rows: k,
                cols: rows.first().map_or(0, Vec::len),
                row: 0,
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(MatrixError::Shape {
                    rows: k,
                    cols: row.len(),
                    row: i,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(MatrixError::Range {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MatrixError::RowSum { row: i, sum });
            }
        }
        Ok(Self {
            k,
            rows: rows.into_iter().flatten().collect(),
        })
    }

    /// Draws a K×K matrix with each row sampled uniformly from the
    /// probability simplex (normalized unit-rate exponentials).
    ///
    /// All entries are strictly positive with probability one, so the chain
    /// is irreducible and aperiodic.
    pub fn random(k: usize, seed: u64) -> Result<Self, MatrixError> {
        if k < 2 {
            return Err(MatrixError::Shape {
                rows: k,
                cols: k,
                row: 0,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            let mut row: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                // astronomically unlikely (every draw exactly zero)
                row = vec![1.0 / k as f64; k];
            } else {
                for v in &mut row {
                    *v /= sum;
                }
            }
            rows.push(row);
        }
        Self::new(rows)
    }

    fn from_flat_unchecked(k: usize, rows: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), k * k);
        Self { k, rows }
    }

    /// Number of states.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Row `i` as a probability vector over next states.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.k..(i + 1) * self.k]
    }

    /// Entry `p_ij`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.k + j]
    }
}

/// A solved stationary distribution `ν` with `νP = ν` and `Σν = 1`.
///
/// Only produced by the solvers in this module, which enforce a residual
/// of at most [`RESIDUAL_TOLERANCE`] before returning.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probs: Vec<f64>,
}

impl StationaryDistribution {
    /// Probability of each state under the long-run distribution.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expected value of `values` weighted by the distribution.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.probs.len());
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

/// A bias of magnitude `delta` toward one target state (0-based index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    delta: f64,
    target: usize,
}

impl Perturbation {
    pub fn new(delta: f64, target: usize, k: usize) -> Result<Self, PerturbationError> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(PerturbationError::DeltaRange(delta));
        }
        if target >= k {
            return Err(PerturbationError::TargetRange { target, k });
        }
        Ok(Self { delta, target })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn target(&self) -> usize {
        self.target
    }
}

/// Applies the bias operator described in the module docs.
///
/// Total on valid inputs: the result is row-stochastic with the target
/// column pointwise no smaller than the input's, and the target is
/// reachable from every state whenever `delta > 0`.
pub fn perturb_toward(p: &TransitionMatrix, pert: Perturbation) -> TransitionMatrix {
    let k = p.k();
    let l = pert.target;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        let row = p.row(i);
        let mass: f64 = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != l)
            .map(|(_, v)| v)
            .sum();
        let shift = pert.delta.min(mass);
        if mass == 0.0 {
            // target already holds the whole row
            out.extend_from_slice(row);
        } else if shift >= mass {
            // truncation binds: off-target entries floor at 0, target caps at 1
            for j in 0..k {
                out.push(if j == l { 1.0 } else { 0.0 });
            }
        } else {
            for (j, &v) in row.iter().enumerate() {
                if j == l {
                    out.push((v + shift).min(1.0));
                } else {
                    out.push((v - shift * (v / mass)).max(0.0));
                }
            }
        }
    }
    TransitionMatrix::from_flat_unchecked(k, out)
}

/// `‖νP − ν‖∞`
fn residual_inf(p: &TransitionMatrix, nu: &[f64]) -> f64 {
    let k = p.k();
    let mut worst = 0.0f64;
    for j in 0..k {
        let mut acc = 0.0;
        for (i, &v) in nu.iter().enumerate() {
            acc += v * p.get(i, j);
        }
        worst = worst.max((acc - nu[j]).abs());
    }
    worst
}

/// Clamps solver dust, normalizes, and enforces the residual contract.
fn finalize(p: &TransitionMatrix, mut nu: Vec<f64>) -> Result<StationaryDistribution, SolveError> {
    for v in &mut nu {
        if *v < 0.0 {
            if *v < -1e-9 {
                return Err(SolveError::Degenerate);
            }
            *v = 0.0;
        }
    }
    let sum: f64 = nu.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(SolveError::Degenerate);
    }
    for v in &mut nu {
        *v = (*v / sum).min(1.0);
    }
    if residual_inf(p, &nu) > RESIDUAL_TOLERANCE {
        return Err(SolveError::Convergence {
            max_iterations: POWER_MAX_ITERATIONS,
        });
    }
    Ok(StationaryDistribution { probs: nu })
}

/// Direct route: solve `(Pᵀ − I)ν = 0` with the normalization `Σν = 1`
/// replacing the last equation, via Gaussian elimination with partial
/// pivoting.
fn solve_linear(p: &TransitionMatrix) -> Result<Vec<f64>, SolveError> {
    let k = p.k();
    // augmented system [A | b], A = Pᵀ − I with last row replaced by ones
    let w = k + 1;
    let mut a = vec![0.0f64; k * w];
    for i in 0..k {
        for j in 0..k {
            a[i * w + j] = p.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1) * w + j] = 1.0;
    }
    a[(k - 1) * w + k] = 1.0;

    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&r, &s| a[r * w + col].abs().total_cmp(&a[s * w + col].abs()))
            .expect("non-empty pivot range");
        if a[pivot_row * w + col].abs() < 1e-12 {
            return Err(SolveError::Degenerate);
        }
        if pivot_row != col {
            for j in 0..w {
                a.swap(col * w + j, pivot_row * w + j);
            }
        }
        let pivot = a[col * w + col];
        for r in (col + 1)..k {
            let factor = a[r * w + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..w {
                a[r * w + j] -= factor * a[col * w + j];
            }
        }
    }
    let mut nu = vec![0.0f64; k];
    for row in (0..k).rev() {
        let mut acc = a[row * w + k];
        for j in (row + 1)..k {
            acc -= a[row * w + j] * nu[j];
        }
        nu[row] = acc / a[row * w + row];
    }
    Ok(nu)
}

/// Solves `νP = ν`, `Σν = 1`.
///
/// Uses the direct linear solve; if that produces a numerically unusable
/// vector, falls back to [`stationary_power_iteration`]. A structurally
/// degenerate system (more than one recurrent class, e.g. the identity
/// matrix) is reported as [`SolveError::Degenerate`]. For a chain with a
/// single recurrent class the solution is unique even when the chain is
/// reducible; transient states receive probability `0`.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<StationaryDistribution, SolveError> {
    match solve_linear(p) {
        Ok(nu) => finalize(p, nu)
            .or_else(|_| stationary_power_iteration(p, POWER_TOLERANCE, POWER_MAX_ITERATIONS)),
        Err(e) => Err(e),
    }
}

/// Iterative route: repeated application of the half-lazy kernel
/// `ν ← (ν + νP) / 2` from the uniform start.
///
/// The half-lazy kernel has the same stationary distribution as `P` and is
/// aperiodic by construction, so the iteration converges for every chain
/// with a single recurrent class.
pub fn stationary_power_iteration(
    p: &TransitionMatrix,
    tolerance: f64,
    max_iterations: u64,
) -> Result<StationaryDistribution, SolveError> {
    let k = p.k();
    let mut nu = vec![1.0 / k as f64; k];
    let mut next = vec![0.0f64; k];
    for _ in 0..max_iterations {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (i, &vi) in nu.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (j, &pij) in p.row(i).iter().enumerate() {
                next[j] += vi * pij;
            }
        }
        let mut diff = 0.0f64;
        for (nj, &vj) in next.iter_mut().zip(nu.iter()) {
            *nj = 0.5 * (*nj + vj);
            diff = diff.max((*nj - vj).abs());
        }
        std::mem::swap(&mut nu, &mut next);
        if diff <= tolerance {
            return finalize(p, nu);
        }
    }
    Err(SolveError::Convergence { max_iterations })
}
