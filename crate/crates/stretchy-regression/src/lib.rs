//! Stretchy polynomial regression.
//!
//! Full multivariate polynomial expansion combined with closed-form primal
//! and dual estimators whose gram computation raises the transposed design
//! matrix to the elementwise power `1/(q-1)`. Driving `q` toward 1
//! compresses most coefficients toward zero while preserving exact
//! interpolation in the unregularized dual form; `q = 2` recovers ordinary
//! ridge / minimum-norm least squares.
//!
//! Because fractional elementwise powers are only real-valued on positive
//! entries, inputs are standardized and mapped into the first quadrant by
//! `exp(a * z + b)` before expansion (the [`transform`] module).
//!
//! Module map:
//! - [`polybasis`]: monomial enumeration and design-matrix expansion
//! - [`transform`]: z-scoring and the exponential first-quadrant map
//! - [`stretchy`]: the primal/dual solvers and shrinkage-space measures
//! - [`model`]: fitted models, prediction, metrics, JSON serialization
//! - [`datasets`]: delimited loading, the synthetic set, train/test splits

pub mod datasets;
pub mod error;
mod linalg;
pub mod model;
pub mod polybasis;
pub mod stretchy;
pub mod transform;

pub use error::{Error, Result};

pub use datasets::{Dataset, LoadOptions, SplitFlag};
pub use model::{
    fit, load_model, save_model, ClassifierConfig, EvalReport, FitConfig, FitSummary, Provenance,
    StretchyModel, TransformSpec, DEFAULT_SPARSITY_EPSILON,
};
pub use polybasis::{count_terms, enumerate_basis, expand, DesignMatrix, MonomialBasis};
pub use stretchy::{
    contour_grid, elementwise_power, lp_norm, qspace_measure, qtilde_measure, solve, solve_dual,
    solve_primal, stretch_exponent, ContourPoint, MeasureSpace, Solution, SolveMode, SolverConfig,
    CONDITION_ERROR_THRESHOLD, CONDITION_WARN_THRESHOLD,
};
pub use transform::{
    fit_standardizer, quadrant_map, resolve_b, standardize, BMode, TransformParams,
};
