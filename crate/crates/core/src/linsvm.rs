//! L2-regularized linear SVM trained by dual coordinate descent.
//!
//! The primal problem is
//!
//! ```text
//! min_w  ½‖w‖² + Σ_i C_i ξ(1 − y_i w·x_i)
//! ```
//!
//! with ξ the hinge (`L1Hinge`) or squared hinge (`L2Hinge`). Each row is
//! augmented with a constant bias feature of 1. The dual is
//!
//! ```text
//! max_α  Σα_i − ½ αᵀ Q̄ α,   Q̄_ij = y_i y_j x_i·x_j + D_ii δ_ij
//! ```
//!
//! where `D_ii = 0` and `0 ≤ α_i ≤ C_i` for the hinge, and
//! `D_ii = 1 / (2 C_i)` with `α_i ≥ 0` for the squared hinge. One sweep visits
//! every instance once in a seeded random order and performs the exact
//! clipped Newton step on α_i while keeping `w = Σ α_i y_i x_i` up to date.
//! There is no shrinking, so every step is visible to the audit hooks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EmotionLabel;
use crate::sparse::SparseVector;

/// Value of the constant feature appended to every row.
pub const BIAS: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("training data must contain both classes")]
    DegenerateClass,
    #[error("non-finite value in {0}")]
    NumericError(String),
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionError { expected: usize, found: usize },
    #[error("invalid training problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    L1Hinge,
    #[default]
    L2Hinge,
}

impl std::str::FromStr for Loss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "l1" | "l1_hinge" | "hinge" => Ok(Loss::L1Hinge),
            "l2" | "l2_hinge" | "squared_hinge" => Ok(Loss::L2Hinge),
            other => Err(format!(
                "unknown loss {other:?} (expected l1_hinge or l2_hinge)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingProblem {
    rows: Vec<SparseVector>,
    y: Vec<f64>,
    cost: f64,
    loss: Loss,
    positive_weight: f64,
    negative_weight: f64,
    dimension: usize,
}

impl TrainingProblem {
    /// `rows` are the raw feature vectors (the bias feature is added
    /// internally) and `y` holds ±1 labels.
    pub fn new(
        rows: Vec<SparseVector>,
        y: Vec<f64>,
        cost: f64,
        loss: Loss,
    ) -> Result<Self, SvmError> {
        if rows.len() != y.len() {
            return Err(SvmError::InvalidProblem(format!(
                "{} rows but {} labels",
                rows.len(),
                y.len()
            )));
        }
        if rows.len() < 2 {
            return Err(SvmError::InvalidProblem(
                "need at least two instances".into(),
            ));
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(SvmError::InvalidProblem(format!(
                "cost must be positive, got {cost}"
            )));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(SvmError::InvalidProblem(format!(
                "labels must be ±1, found {bad}"
            )));
        }
        if !(y.contains(&1.0) && y.contains(&-1.0)) {
            return Err(SvmError::DegenerateClass);
        }
        let dimension = rows[0].dimension();
        for row in &rows {
            if row.dimension() != dimension {
                return Err(SvmError::DimensionError {
                    expected: dimension,
                    found: row.dimension(),
                });
            }
        }
        if let Some(i) = rows.iter().position(SparseVector::has_non_finite) {
            return Err(SvmError::NumericError(format!("feature values of row {i}")));
        }
        Ok(TrainingProblem {
            rows,
            y,
            cost,
            loss,
            positive_weight: 1.0,
            negative_weight: 1.0,
            dimension,
        })
    }

    /// Multiplies the cost of positive / negative instances.
    pub fn with_class_weights(mut self, positive: f64, negative: f64) -> Result<Self, SvmError> {
        if !(positive.is_finite() && positive > 0.0 && negative.is_finite() && negative > 0.0) {
            return Err(SvmError::InvalidProblem(
                "class weights must be positive".into(),
            ));
        }
        self.positive_weight = positive;
        self.negative_weight = negative;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    /// Feature dimension without the bias slot.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Per-instance cost C_i.
    pub fn instance_cost(&self, i: usize) -> f64 {
        let weight = if self.y[i] > 0.0 {
            self.positive_weight
        } else {
            self.negative_weight
        };
        self.cost * weight
    }

    /// Upper bound on α_i.
    pub fn upper_bound(&self, i: usize) -> f64 {
        match self.loss {
            Loss::L1Hinge => self.instance_cost(i),
            Loss::L2Hinge => f64::INFINITY,
        }
    }

    /// D_ii, the diagonal added to Q̄.
    pub fn diagonal(&self, i: usize) -> f64 {
        match self.loss {
            Loss::L1Hinge => 0.0,
            Loss::L2Hinge => 0.5 / self.instance_cost(i),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Stop once the largest projected-gradient magnitude seen during a sweep
    /// drops below this.
    pub eps: f64,
    pub max_outer_iters: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            eps: 0.1,
            max_outer_iters: 1000,
            seed: 0,
        }
    }
}

impl SolverParams {
    fn check(&self) -> Result<(), SvmError> {
        if !(self.eps.is_finite() && self.eps > 0.0) || self.max_outer_iters == 0 {
            return Err(SvmError::InvalidProblem(
                "solver needs eps > 0 and max_outer_iters >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One coordinate update, handed to step observers after it is applied.
#[derive(Debug)]
pub struct CoordinateStep<'a> {
    pub sweep: usize,
    pub index: usize,
    pub old_alpha: f64,
    pub new_alpha: f64,
    /// Increase of the dual objective caused by this step.
    pub gain: f64,
    pub alpha: &'a [f64],
}

/// Step counts collected during a solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveTrace {
    pub sweeps: usize,
    pub steps: u64,
    /// Steps whose dual objective change was negative. Always zero for a
    /// correct solver.
    pub decreases: u64,
    pub min_gain: f64,
    pub converged: bool,
    pub final_violation: f64,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    /// Weights including the trailing bias weight.
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    pub trace: SolveTrace,
}

pub fn solve_dual(
    problem: &TrainingProblem,
    params: &SolverParams,
) -> Result<DualSolution, SvmError> {
    solve_dual_observed(problem, params, |_| {})
}

/// Runs dual coordinate descent, calling `observer` after every coordinate
/// update that changes α.
pub fn solve_dual_observed<F>(
    problem: &TrainingProblem,
    params: &SolverParams,
    mut observer: F,
) -> Result<DualSolution, SvmError>
where
    F: FnMut(&CoordinateStep<'_>),
{
    params.check()?;
    let n = problem.len();
    let d = problem.dimension();
    let mut w = vec![0.0; d + 1];
    let mut alpha = vec![0.0; n];
    let upper: Vec<f64> = (0..n).map(|i| problem.upper_bound(i)).collect();
    let diag: Vec<f64> = (0..n).map(|i| problem.diagonal(i)).collect();
    let qd: Vec<f64> = problem
        .rows
        .iter()
        .zip(&diag)
        .map(|(x, &dii)| x.norm_squared() + BIAS * BIAS + dii)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = SolveTrace {
        min_gain: f64::INFINITY,
        ..SolveTrace::default()
    };

    for sweep in 0..params.max_outer_iters {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let x = &problem.rows[i];
            let yi = problem.y[i];
            let g = yi * (x.dot_dense(&w) + w[d] * BIAS) - 1.0 + diag[i] * alpha[i];
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper[i] {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() <= 1e-12 {
                continue;
            }
            let old = alpha[i];
            let new = (old - g / qd[i]).clamp(0.0, upper[i]);
            let delta = new - old;
            if delta == 0.0 {
                continue;
            }
            // change of Σα − ½αᵀQ̄α along coordinate i
            let gain = delta * (-g - 0.5 * qd[i] * delta);
            debug_assert!(
                gain >= 0.0,
                "dual objective decreased by {gain} at step on {i}"
            );
            alpha[i] = new;
            x.axpy_into(delta * yi, &mut w);
            w[d] += delta * yi * BIAS;

            trace.steps += 1;
            if gain < 0.0 {
                trace.decreases += 1;
            }
            trace.min_gain = trace.min_gain.min(gain);
            observer(&CoordinateStep {
                sweep,
                index: i,
                old_alpha: old,
                new_alpha: new,
                gain,
                alpha: &alpha,
            });
        }
        trace.sweeps = sweep + 1;
        trace.final_violation = max_violation;
        if max_violation < params.eps {
            trace.converged = true;
            break;
        }
    }
    if trace.steps == 0 {
        trace.min_gain = 0.0;
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(SvmError::NumericError("trained weights".into()));
    }
    Ok(DualSolution {
        weights: w,
        alpha,
        trace,
    })
}

/// `Σ α_i y_i [x_i; 1]`, recomputed from scratch.
pub fn primal_from_dual(alpha: &[f64], problem: &TrainingProblem) -> Vec<f64> {
    assert_eq!(alpha.len(), problem.len(), "one alpha per instance");
    let d = problem.dimension();
    let mut w = vec![0.0; d + 1];
    for ((x, &y), &a) in problem.rows.iter().zip(&problem.y).zip(alpha) {
        if a != 0.0 {
            x.axpy_into(a * y, &mut w);
            w[d] += a * y * BIAS;
        }
    }
    w
}

/// Dual objective `Σα_i − ½ αᵀ Q̄ α`.
pub fn dual_objective(alpha: &[f64], problem: &TrainingProblem) -> f64 {
    let w = primal_from_dual(alpha, problem);
    let quad: f64 = w.iter().map(|v| v * v).sum::<f64>()
        + alpha
            .iter()
            .enumerate()
            .map(|(i, &a)| problem.diagonal(i) * a * a)
            .sum::<f64>();
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Primal objective `½‖w‖² + Σ C_i ξ(1 − y_i w·x_i)` for bias-augmented `w`.
pub fn primal_objective(weights: &[f64], problem: &TrainingProblem) -> f64 {
    let d = problem.dimension();
    let reg = 0.5 * weights.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = (0..problem.len())
        .map(|i| {
            let margin = problem.y[i] * (problem.rows[i].dot_dense(weights) + weights[d] * BIAS);
            let slack = (1.0 - margin).max(0.0);
            problem.instance_cost(i)
                * match problem.loss {
                    Loss::L1Hinge => slack,
                    Loss::L2Hinge => slack * slack,
                }
        })
        .sum();
    reg + loss
}

/// A trained binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Feature weights followed by the bias weight.
    pub weights: Vec<f64>,
    pub cost: f64,
    pub loss: Loss,
    pub seed: u64,
    pub emotion: Option<EmotionLabel>,
    pub extractor_version: Option<String>,
}

pub fn train_dual_cd(
    problem: &TrainingProblem,
    params: &SolverParams,
) -> Result<LinearModel, SvmError> {
    let solution = solve_dual(problem, params)?;
    Ok(LinearModel::from_solution(solution, problem, params))
}

impl LinearModel {
    pub fn from_solution(
        solution: DualSolution,
        problem: &TrainingProblem,
        params: &SolverParams,
    ) -> Self {
        LinearModel {
            weights: solution.weights,
            cost: problem.cost(),
            loss: problem.loss(),
            seed: params.seed,
            emotion: None,
            extractor_version: None,
        }
    }

    /// Number of features the model expects, without the bias slot.
    pub fn dimension(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    pub fn bias(&self) -> f64 {
        self.weights.last().copied().unwrap_or(0.0)
    }

    pub fn decision_value(&self, x: &SparseVector) -> Result<f64, SvmError> {
        if x.dimension() != self.dimension() {
            return Err(SvmError::DimensionError {
                expected: self.dimension(),
                found: x.dimension(),
            });
        }
        Ok(x.dot_dense(&self.weights) + self.bias() * BIAS)
    }

    /// Emotion present iff the decision value is strictly positive.
    pub fn predict(&self, x: &SparseVector) -> Result<bool, SvmError> {
        Ok(self.decision_value(x)? > 0.0)
    }
}
