//! Estimators for the corrupted regression model.
//!
//! The workhorses are the operator-splitting L1 solvers in [`splitting`]:
//! [`l1_regress`] minimizes `||y - Xw||_1` outright and
//! [`l1_regress_constrained`] adds the ball constraint `||w||_1 <= lambda`.
//! [`lp_regress`] chases the nonconvex `sum |r_i|^p` objective for
//! `0 < p < 1` with smoothed IRLS. [`least_squares`], [`torrent_iht`], and
//! [`filter_regress_1d`] are the comparison baselines, and
//! [`oracle_l1_enum`] / [`weighted_median`] are exhaustive small-instance
//! oracles used to validate everything else.
//!
//! Every solve is single-threaded and deterministic given its inputs and
//! options; distinct solves can run concurrently.

mod baselines;
mod irls;
mod oracle;
mod splitting;

pub use baselines::{filter_regress_1d, least_squares, torrent_iht};
pub use irls::lp_regress;
pub use oracle::oracle_l1_enum;
pub use splitting::{l1_regress, l1_regress_constrained};

use thiserror::Error;

use crate::numerics::{compensated_sum, NumericsError, Vector};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("solver requires m >= n, got m = {m}, n = {n}")]
    Underdetermined { m: usize, n: usize },
    #[error("design is rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid option {name}: {value}")]
    BadOption { name: &'static str, value: f64 },
    #[error("all row subsets were singular; no interpolating candidate exists")]
    AllSubsetsSingular,
    #[error("filtering removed every sample")]
    EmptySurvivorSet,
    #[error("weighted median needs nonempty values with some positive weight")]
    DegenerateWeights,
    #[error("instance too large for exhaustive enumeration: m = {m}, n = {n}")]
    OracleTooLarge { m: usize, n: usize },
}

/// Tuning knobs shared by the iterative solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Absolute primal feasibility tolerance.
    pub primal_tolerance: f64,
    /// Absolute dual feasibility tolerance.
    pub dual_tolerance: f64,
    /// Relative part added to both feasibility tolerances.
    pub relative_tolerance: f64,
    /// Step weight of the splitting method.
    pub penalty: f64,
    /// Initial smoothing for the IRLS lp solver, as a multiple of the RMS
    /// residual at the starting point.
    pub irls_smoothing: f64,
    /// Seed for any randomized initialization (none of the current solvers
    /// randomize, but the knob is part of the options contract).
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            primal_tolerance: 1e-8,
            dual_tolerance: 1e-8,
            relative_tolerance: 1e-6,
            penalty: 1.0,
            irls_smoothing: 1e-2,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        if self.max_iterations == 0 {
            return Err(SolverError::BadOption {
                name: "max_iterations",
                value: 0.0,
            });
        }
        for (name, v) in [
            ("primal_tolerance", self.primal_tolerance),
            ("dual_tolerance", self.dual_tolerance),
            ("relative_tolerance", self.relative_tolerance),
            ("penalty", self.penalty),
            ("irls_smoothing", self.irls_smoothing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::BadOption { name, value: v });
            }
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Reached a state that can no longer change (exact fixed point).
    FixedPoint,
}

/// Estimate plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub estimate: Vector,
    pub iterations: usize,
    pub final_primal_residual: f64,
    pub final_dual_residual: f64,
    /// Achieved `||y - X w||_1`, or the `sum |r|^p` analogue for the lp
    /// solver.
    pub objective: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Objective value per iteration, for monotonicity diagnostics.
    pub objective_history: Vec<f64>,
}

/// `sign(v_i) * max(|v_i| - theta, 0)` componentwise.
pub fn soft_threshold(v: &Vector, theta: f64) -> Vector {
    assert!(theta >= 0.0, "threshold must be nonnegative");
    Vector::from(
        v.as_slice()
            .iter()
            .map(|&x| {
                let mag = x.abs() - theta;
                if mag > 0.0 {
                    mag * x.signum()
                } else {
                    0.0
                }
            })
            .collect::<Vec<_>>(),
    )
}

/// Euclidean projection onto the L1 ball of radius `lambda`, by the sorted
/// cumulative-threshold rule.
pub fn project_l1_ball(v: &Vector, lambda: f64) -> Vector {
    assert!(lambda >= 0.0, "radius must be nonnegative");
    if v.norm1() <= lambda {
        return v.clone();
    }
    if lambda == 0.0 {
        return Vector::zeros(v.len());
    }
    let mut mags: Vec<f64> = v.as_slice().iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &mag) in mags.iter().enumerate() {
        cumulative += mag;
        let candidate = (cumulative - lambda) / (i + 1) as f64;
        if i + 1 == mags.len() || mags[i + 1] <= candidate {
            theta = candidate;
            break;
        }
    }
    soft_threshold(v, theta.max(0.0))
}

/// Smallest `v` in `values` whose cumulative weight reaches half the total;
/// the exact minimizer of `sum_i weight_i |values_i - v|`. Ties in value
/// order break toward the lower index.
pub fn weighted_median(values: &Vector, weights: &Vector) -> Result<f64, SolverError> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(SolverError::DegenerateWeights);
    }
    if weights.as_slice().iter().any(|&w| w < 0.0) {
        return Err(SolverError::DegenerateWeights);
    }
    let total: f64 = compensated_sum(weights.as_slice().iter().copied());
    if total <= 0.0 {
        return Err(SolverError::DegenerateWeights);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite entries")
            .then(a.cmp(&b))
    });
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if 2.0 * acc >= total {
            return Ok(values[i]);
        }
    }
    Ok(values[*order.last().expect("nonempty")])
}

/// `||y - Xw||_1` with compensated accumulation.
pub(crate) fn l1_objective(residual: &[f64]) -> f64 {
    compensated_sum(residual.iter().map(|r| r.abs()))
}
