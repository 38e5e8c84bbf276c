//! The stretchy estimator and its shrinkage-space measures.
//!
//! Both solver forms raise the transposed design matrix to the elementwise
//! power `e = 1/(q-1)` and solve a dense linear system on the resulting
//! stretched gram:
//!
//! - dual:   `alpha = Q (P Q + lambda I_M)^-1 y` with `Q = (P^T)^e` (D x M)
//! - primal: `alpha = (Q P + lambda I_D)^-1 Q y`
//!
//! At `q = 2` these collapse to minimum-norm least squares and the ridge
//! normal equations. For `q != 2` the gram is not symmetric, and fractional
//! exponents require strictly positive design entries, which is what the
//! first-quadrant transform guarantees.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Solves with |q - 1| below this limit are rejected as singular.
pub const MIN_Q_SEPARATION: f64 = 1e-6;

/// Condition estimates above this deserve a warning in reports.
pub const CONDITION_WARN_THRESHOLD: f64 = 1e12;

/// Condition estimates at or above this abort an unregularized solve.
pub const CONDITION_ERROR_THRESHOLD: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// Dual when M < D, primal otherwise.
    Auto,
    Primal,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stretch parameter; must stay at least 1e-6 away from 1.
    pub q: f64,
    /// Regularization weight added to the gram diagonal; must be >= 0.
    pub lambda: f64,
    pub mode: SolveMode,
}

impl SolverConfig {
    pub fn new(q: f64, lambda: f64, mode: SolveMode) -> Result<Self> {
        let cfg = SolverConfig { q, lambda, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        stretch_exponent(self.q)?;
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidArgument {
                detail: format!("lambda must be finite and >= 0, got {}", self.lambda),
            });
        }
        Ok(())
    }
}

/// Solver output: the coefficient vector plus solve diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub coefficients: DVector<f64>,
    /// The branch actually taken (never `Auto`).
    pub mode: SolveMode,
    /// Condition estimate of the equilibrated system matrix.
    pub condition: f64,
}

/// The stretch exponent `e = 1/(q-1)`.
pub fn stretch_exponent(q: f64) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::InvalidArgument {
            detail: format!("q must be finite, got {q}"),
        });
    }
    if (q - 1.0).abs() < MIN_Q_SEPARATION {
        return Err(Error::SingularExponent { q });
    }
    Ok(1.0 / (q - 1.0))
}

/// One entry of an elementwise power, with domain and overflow checks.
/// Integer exponents permit negative bases; fractional exponents require
/// non-negative entries; negative exponents require nonzero entries.
fn pow_entry(value: f64, exponent: f64, row: usize, col: usize) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NumericOverflow {
            context: "elementwise power input",
            row,
            col,
        });
    }
    let integral = exponent.fract() == 0.0;
    if !integral && value < 0.0 {
        return Err(Error::PowerDomain {
            row,
            col,
            value,
            exponent,
        });
    }
    if exponent < 0.0 && value == 0.0 {
        return Err(Error::PowerDomain {
            row,
            col,
            value,
            exponent,
        });
    }
    let out = value.powf(exponent);
    if !out.is_finite() {
        return Err(Error::NumericOverflow {
            context: "elementwise power",
            row,
            col,
        });
    }
    Ok(out)
}

/// Entrywise `A^e`.
pub fn elementwise_power(a: &DMatrix<f64>, exponent: f64) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(i, j)] = pow_entry(a[(i, j)], exponent, i, j)?;
        }
    }
    Ok(out)
}

/// `(P^T)^e` computed directly from `P`; errors report positions in `P`.
fn stretched_transpose(p: &DMatrix<f64>, exponent: f64) -> Result<DMatrix<f64>> {
    let mut q = DMatrix::zeros(p.ncols(), p.nrows());
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            q[(j, i)] = pow_entry(p[(i, j)], exponent, i, j)?;
        }
    }
    Ok(q)
}

fn check_solver_inputs(p: &DMatrix<f64>, y: &DVector<f64>, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if p.nrows() == 0 || p.ncols() == 0 {
        return Err(Error::EmptyData {
            context: "solver design matrix",
        });
    }
    if y.len() != p.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solver: target length vs design rows",
            expected: p.nrows(),
            actual: y.len(),
        });
    }
    Ok(())
}

fn finite_coefficients(alpha: DVector<f64>, mode: SolveMode, condition: f64) -> Result<Solution> {
    if let Some(row) = alpha.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow {
            context: "solver coefficients",
            row,
            col: 0,
        });
    }
    Ok(Solution {
        coefficients: alpha,
        mode,
        condition,
    })
}

/// Dual-form solve: `alpha = Q (P Q + lambda I_M)^-1 y`. With `lambda = 0`
/// and an invertible gram the result interpolates (`P alpha = y`) for every
/// valid q.
pub fn solve_dual(p: &DMatrix<f64>, y: &DVector<f64>, cfg: &SolverConfig) -> Result<Solution> {
    check_solver_inputs(p, y, cfg)?;
    let exponent = stretch_exponent(cfg.q)?;
    let q = stretched_transpose(p, exponent)?;
    let mut gram = p * &q;
    for i in 0..gram.nrows() {
        gram[(i, i)] += cfg.lambda;
    }
    let limit = (cfg.lambda == 0.0).then_some(CONDITION_ERROR_THRESHOLD);
    let sol = linalg::solve_equilibrated(gram, y, limit)?;
    finite_coefficients(&q * sol.x, SolveMode::Dual, sol.condition)
}

/// Primal-form solve: `alpha = (Q P + lambda I_D)^-1 Q y`.
pub fn solve_primal(p: &DMatrix<f64>, y: &DVector<f64>, cfg: &SolverConfig) -> Result<Solution> {
    check_solver_inputs(p, y, cfg)?;
    let exponent = stretch_exponent(cfg.q)?;
    let q = stretched_transpose(p, exponent)?;
    let mut gram = &q * p;
    for i in 0..gram.nrows() {
        gram[(i, i)] += cfg.lambda;
    }
    let rhs = &q * y;
    let limit = (cfg.lambda == 0.0).then_some(CONDITION_ERROR_THRESHOLD);
    let sol = linalg::solve_equilibrated(gram, &rhs, limit)?;
    finite_coefficients(sol.x, SolveMode::Primal, sol.condition)
}

/// Mode dispatch: `Auto` takes the dual branch for under-determined systems
/// (M < D) and the primal branch otherwise; explicit modes override.
pub fn solve(p: &DMatrix<f64>, y: &DVector<f64>, cfg: &SolverConfig) -> Result<Solution> {
    match cfg.mode {
        SolveMode::Primal => solve_primal(p, y, cfg),
        SolveMode::Dual => solve_dual(p, y, cfg),
        SolveMode::Auto => {
            if p.nrows() < p.ncols() {
                solve_dual(p, y, cfg)
            } else {
                solve_primal(p, y, cfg)
            }
        }
    }
}

/// `(sum |v_i|^p)^(1/p)` for `p >= 1`.
pub fn lp_norm(v: &[f64], p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidArgument {
            detail: format!("p-norm requires finite p >= 1, got {p}; use the q-measures below 1"),
        });
    }
    let sum: f64 = v.iter().map(|x| x.abs().powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// `(sum |v_i|^q)^(1/2)`; defined for any finite inputs.
pub fn qtilde_measure(v: &[f64], q: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(q)).sum::<f64>().sqrt()
}

/// `(sum v_i^q)^(1/2)` without absolute values. This is the quantity the
/// stretchy solution minimizes subject to interpolation; it is not a norm.
/// Negative components with fractional `q`, or a negative powered sum, are
/// domain errors.
pub fn qspace_measure(v: &[f64], q: f64) -> Result<f64> {
    let integral = q.fract() == 0.0;
    let mut sum = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if !integral && x < 0.0 {
            return Err(Error::MeasureDomain {
                detail: format!("component {i} = {x} is negative; fractional exponent q = {q}"),
            });
        }
        sum += x.powf(q);
    }
    if sum < 0.0 {
        return Err(Error::MeasureDomain {
            detail: format!("powered sum {sum} is negative; square root undefined"),
        });
    }
    Ok(sum.sqrt())
}

/// Which measure a contour grid evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureSpace {
    Lp,
    QTilde,
    QSpace,
}

#[derive(Debug, Clone, Copy)]
pub struct ContourPoint {
    pub x1: f64,
    pub x2: f64,
    /// NaN marks a point where the measure is undefined.
    pub value: f64,
}

/// Evaluates the chosen measure over a square 2-D grid for external plotting.
/// Rows are emitted with x1 varying slowest. Domain errors of the q-space
/// measure become NaN markers rather than failures.
pub fn contour_grid(
    space: MeasureSpace,
    exponent: f64,
    min: f64,
    max: f64,
    steps: usize,
) -> Result<Vec<ContourPoint>> {
    if steps < 2 {
        return Err(Error::InvalidArgument {
            detail: format!("contour grid needs at least 2 steps per axis, got {steps}"),
        });
    }
    if !(min < max) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidArgument {
            detail: format!("contour grid needs finite min < max, got [{min}, {max}]"),
        });
    }
    if space == MeasureSpace::Lp {
        // validate the exponent once up front
        lp_norm(&[0.0], exponent)?;
    }
    let step = (max - min) / (steps - 1) as f64;
    let mut points = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        let x1 = min + step * i as f64;
        for j in 0..steps {
            let x2 = min + step * j as f64;
            let v = [x1, x2];
            let value = match space {
                MeasureSpace::Lp => lp_norm(&v, exponent)?,
                MeasureSpace::QTilde => qtilde_measure(&v, exponent),
                MeasureSpace::QSpace => qspace_measure(&v, exponent).unwrap_or(f64::NAN),
            };
            points.push(ContourPoint { x1, x2, value });
        }
    }
    Ok(points)
}
