//! End-to-end predictor: transform + basis + coefficients, with evaluation
//! metrics and a JSON model document.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polybasis::{self, MonomialBasis};
use crate::stretchy::{self, SolveMode, SolverConfig};
use crate::transform::{BMode, TransformParams};

/// Coefficients at or below this magnitude count as zero in sparsity reports.
pub const DEFAULT_SPARSITY_EPSILON: f64 = 1e-3;

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const BASIS_ORDERING: &str = "graded_lex";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_id: String,
    pub m_train: usize,
    pub timestamp: String,
}

/// A fitted model. Immutable after construction.
#[derive(Debug, Clone)]
pub struct StretchyModel {
    /// Absent when inputs are already strictly positive and used raw.
    pub transform: Option<TransformParams>,
    pub basis: MonomialBasis,
    pub solver: SolverConfig,
    pub alpha: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean squared residual.
    pub mse: f64,
    /// Sample standard deviation of the squared residuals divided by sqrt(n);
    /// 0 when n < 2.
    pub std_err: f64,
    pub n: usize,
    /// Per-sample `prediction - target`.
    pub residuals: Vec<f64>,
    /// Count of coefficients with |alpha_i| > sparsity epsilon.
    pub nnz: usize,
}

/// Threshold classifier labels: `at_or_above` for scores >= tau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub tau: f64,
    pub below: f64,
    pub at_or_above: f64,
}

impl ClassifierConfig {
    /// Labels must be a distinct pair from {-1, +1} or {0, 1}.
    pub fn new(tau: f64, below: f64, at_or_above: f64) -> Result<Self> {
        let pair_ok = |a: f64, b: f64, set: [f64; 2]| {
            a != b && set.contains(&a) && set.contains(&b)
        };
        if !pair_ok(below, at_or_above, [-1.0, 1.0]) && !pair_ok(below, at_or_above, [0.0, 1.0]) {
            return Err(Error::InvalidArgument {
                detail: format!(
                    "classifier labels must be a distinct pair from {{-1, +1}} or {{0, 1}}, \
                     got ({below}, {at_or_above})"
                ),
            });
        }
        Ok(ClassifierConfig {
            tau,
            below,
            at_or_above,
        })
    }

    pub fn plus_minus(tau: f64) -> Self {
        ClassifierConfig {
            tau,
            below: -1.0,
            at_or_above: 1.0,
        }
    }

    pub fn zero_one(tau: f64) -> Self {
        ClassifierConfig {
            tau,
            below: 0.0,
            at_or_above: 1.0,
        }
    }
}

/// Applies the decision threshold: score >= tau maps to the positive label.
pub fn classify(scores: &[f64], cfg: &ClassifierConfig) -> Vec<f64> {
    scores
        .iter()
        .map(|&s| if s >= cfg.tau { cfg.at_or_above } else { cfg.below })
        .collect()
}

/// Sample standard deviation of the raw residuals; 0 when n < 2.
pub fn residual_std(residuals: &[f64]) -> f64 {
    sample_std(residuals)
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (ss / (n as f64 - 1.0)).sqrt()
}

impl StretchyModel {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.alpha.len() != self.basis.len() {
            return Err(Error::DimensionMismatch {
                context: "model: coefficient count vs basis term count",
                expected: self.basis.len(),
                actual: self.alpha.len(),
            });
        }
        if let Some(i) = self.alpha.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                context: "model coefficients",
                row: i,
                col: 0,
            });
        }
        if let Some(t) = &self.transform {
            t.validate()?;
            if t.dim() != self.basis.input_dim() {
                return Err(Error::DimensionMismatch {
                    context: "model: transform dimension vs basis input dimension",
                    expected: self.basis.input_dim(),
                    actual: t.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.basis.input_dim()
    }

    /// Applies the transform (when present), expands, and returns `P alpha`.
    pub fn predict(&self, x_raw: &DMatrix<f64>) -> Result<DVector<f64>> {
        let features = match &self.transform {
            Some(t) => t.apply(x_raw)?,
            None => x_raw.clone_owned(),
        };
        let design = polybasis::expand(&features, &self.basis)?;
        let alpha = DVector::from_column_slice(&self.alpha);
        Ok(design.matrix() * alpha)
    }

    /// Count of coefficients with magnitude above `epsilon`.
    pub fn nnz(&self, epsilon: f64) -> usize {
        self.alpha.iter().filter(|v| v.abs() > epsilon).count()
    }

    /// Prediction metrics against targets `y`.
    pub fn evaluate(
        &self,
        x_raw: &DMatrix<f64>,
        y: &DVector<f64>,
        sparsity_epsilon: f64,
    ) -> Result<EvalReport> {
        if x_raw.nrows() == 0 {
            return Err(Error::EmptyData {
                context: "evaluate",
            });
        }
        if y.len() != x_raw.nrows() {
            return Err(Error::DimensionMismatch {
                context: "evaluate: target length vs input rows",
                expected: x_raw.nrows(),
                actual: y.len(),
            });
        }
        let predictions = self.predict(x_raw)?;
        let n = y.len();
        let residuals: Vec<f64> = (0..n).map(|i| predictions[i] - y[i]).collect();
        let squares: Vec<f64> = residuals.iter().map(|r| r * r).collect();
        let mse = squares.iter().sum::<f64>() / n as f64;
        let std_err = sample_std(&squares) / (n as f64).sqrt();
        Ok(EvalReport {
            mse,
            std_err,
            n,
            residuals,
            nnz: self.nnz(sparsity_epsilon),
        })
    }
}

/// Transform settings for a fit; `custom_b` only with `BMode::Custom`.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    pub a: f64,
    pub b_mode: BMode,
    pub custom_b: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub order: usize,
    pub solver: SolverConfig,
    /// `None` feeds the raw inputs straight into the expansion.
    pub transform: Option<TransformSpec>,
}

/// Fit diagnostics for reports.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub m: usize,
    pub terms: usize,
    pub mode: SolveMode,
    pub condition: f64,
}

/// Fits the transform on the given rows, expands, and solves.
pub fn fit(
    x_raw: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &FitConfig,
    dataset_id: impl Into<String>,
    timestamp: impl Into<String>,
) -> Result<(StretchyModel, FitSummary)> {
    cfg.solver.validate()?;
    if x_raw.nrows() == 0 {
        return Err(Error::EmptyData {
            context: "fit inputs",
        });
    }
    if y.len() != x_raw.nrows() {
        return Err(Error::DimensionMismatch {
            context: "fit: target length vs input rows",
            expected: x_raw.nrows(),
            actual: y.len(),
        });
    }
    let (transform, features) = match &cfg.transform {
        Some(spec) => {
            let params = TransformParams::fit(x_raw, spec.a, spec.b_mode, spec.custom_b.clone())?;
            let mapped = params.apply(x_raw)?;
            (Some(params), mapped)
        }
        None => (None, x_raw.clone_owned()),
    };
    let basis = polybasis::enumerate_basis(x_raw.ncols(), cfg.order)?;
    let design = polybasis::expand(&features, &basis)?;
    let solution = stretchy::solve(design.matrix(), y, &cfg.solver)?;
    let summary = FitSummary {
        m: design.rows(),
        terms: design.terms(),
        mode: solution.mode,
        condition: solution.condition,
    };
    let model = StretchyModel {
        transform,
        basis,
        solver: cfg.solver,
        alpha: solution.coefficients.iter().copied().collect(),
        provenance: Provenance {
            dataset_id: dataset_id.into(),
            m_train: x_raw.nrows(),
            timestamp: timestamp.into(),
        },
    };
    Ok((model, summary))
}

#[derive(Serialize, Deserialize)]
struct BasisDoc {
    d: usize,
    r: usize,
    ordering: String,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    transform: Option<TransformParams>,
    basis: BasisDoc,
    solver: SolverConfig,
    alpha: Vec<f64>,
    provenance: Provenance,
}

/// Writes the model as a pretty-printed JSON document. Numbers round-trip
/// bitwise through the shortest-representation encoding.
pub fn save_model(model: &StretchyModel, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    let doc = ModelDocument {
        schema_version: MODEL_SCHEMA_VERSION,
        transform: model.transform.clone(),
        basis: BasisDoc {
            d: model.basis.input_dim(),
            r: model.basis.order(),
            ordering: BASIS_ORDERING.to_string(),
        },
        solver: model.solver,
        alpha: model.alpha.clone(),
        provenance: model.provenance.clone(),
    };
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, &doc).map_err(|e| Error::ModelFormat {
        detail: e.to_string(),
    })?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Reads and validates a model document; the basis is regenerated from its
/// recorded dimensions.
pub fn load_model(path: impl AsRef<Path>) -> Result<StretchyModel> {
    let text = fs::read_to_string(path)?;
    let doc: ModelDocument = serde_json::from_str(&text).map_err(|e| Error::ModelFormat {
        detail: e.to_string(),
    })?;
    if doc.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::ModelFormat {
            detail: format!(
                "unsupported schema version {}, expected {MODEL_SCHEMA_VERSION}",
                doc.schema_version
            ),
        });
    }
    if doc.basis.ordering != BASIS_ORDERING {
        return Err(Error::ModelFormat {
            detail: format!(
                "unsupported basis ordering {:?}, expected {BASIS_ORDERING:?}",
                doc.basis.ordering
            ),
        });
    }
    let basis = polybasis::enumerate_basis(doc.basis.d, doc.basis.r)?;
    let model = StretchyModel {
        transform: doc.transform,
        basis,
        solver: doc.solver,
        alpha: doc.alpha,
        provenance: doc.provenance,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stretchy::SolveMode;
    use approx::assert_relative_eq;

    fn provenance() -> Provenance {
        Provenance {
            dataset_id: "test".into(),
            m_train: 3,
            timestamp: "2015-01-01T00:00:00Z".into(),
        }
    }

    fn constant_model(c: f64, d: usize, r: usize) -> StretchyModel {
        let basis = polybasis::enumerate_basis(d, r).unwrap();
        let mut alpha = vec![0.0; basis.len()];
        alpha[0] = c;
        StretchyModel {
            transform: None,
            basis,
            solver: SolverConfig::new(2.0, 0.0, SolveMode::Auto).unwrap(),
            alpha,
            provenance: provenance(),
        }
    }

    #[test]
    fn predict_constant_model() {
        let model = constant_model(4.25, 2, 2);
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, -5.0, 2.0, 7.0, 7.0]);
        let preds = model.predict(&x).unwrap();
        assert!(preds.iter().all(|&v| v == 4.25));
    }

    #[test]
    fn predict_identity_path() {
        let basis = polybasis::enumerate_basis(1, 1).unwrap();
        let model = StretchyModel {
            transform: None,
            basis,
            solver: SolverConfig::new(2.0, 0.0, SolveMode::Auto).unwrap(),
            alpha: vec![0.0, 1.0],
            provenance: provenance(),
        };
        let preds = model.predict(&DMatrix::from_element(1, 1, 5.0)).unwrap();
        assert_eq!(preds[0], 5.0);
    }

    #[test]
    fn predict_is_affine_in_coefficients() {
        let mut a = constant_model(0.0, 2, 3);
        let mut b = constant_model(0.0, 2, 3);
        let mut c = constant_model(0.0, 2, 3);
        for i in 0..a.alpha.len() {
            a.alpha[i] = (i as f64) * 0.25 - 1.0;
            b.alpha[i] = 2.0 - (i as f64) * 0.125;
            c.alpha[i] = a.alpha[i] + b.alpha[i];
        }
        let x = DMatrix::from_row_slice(2, 2, &[0.3, 0.9, 1.7, 0.2]);
        let pa = a.predict(&x).unwrap();
        let pb = b.predict(&x).unwrap();
        let pc = c.predict(&x).unwrap();
        for i in 0..2 {
            assert_relative_eq!(pc[i], pa[i] + pb[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn classify_examples() {
        let cfg = ClassifierConfig::plus_minus(0.0);
        assert_eq!(classify(&[-0.2, 0.0, 0.3], &cfg), vec![-1.0, 1.0, 1.0]);

        let far = ClassifierConfig::plus_minus(1e300);
        assert_eq!(classify(&[-0.2, 0.0, 0.3], &far), vec![-1.0, -1.0, -1.0]);

        let zero_one = ClassifierConfig::zero_one(0.5);
        assert_eq!(classify(&[0.4, 0.5, 0.6], &zero_one), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn classify_invariant_under_monotone_transform() {
        let scores = [-1.5, -0.1, 0.0, 0.4, 2.0];
        let tau = 0.2;
        let cfg = ClassifierConfig::plus_minus(tau);
        let base = classify(&scores, &cfg);
        // strictly increasing map x -> 3x + 1
        let mapped: Vec<f64> = scores.iter().map(|&s| 3.0 * s + 1.0).collect();
        let mapped_cfg = ClassifierConfig::plus_minus(3.0 * tau + 1.0);
        assert_eq!(base, classify(&mapped, &mapped_cfg));
        // strictly increasing map x -> exp(x)
        let mapped: Vec<f64> = scores.iter().map(|&s| s.exp()).collect();
        let mapped_cfg = ClassifierConfig::plus_minus(tau.exp());
        assert_eq!(base, classify(&mapped, &mapped_cfg));
    }

    #[test]
    fn classifier_labels_validated() {
        assert!(ClassifierConfig::new(0.0, -1.0, 1.0).is_ok());
        assert!(ClassifierConfig::new(0.0, 0.0, 1.0).is_ok());
        assert!(ClassifierConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(ClassifierConfig::new(0.0, -1.0, 0.0).is_err());
        assert!(ClassifierConfig::new(0.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn evaluate_exact_predictions() {
        let model = constant_model(3.0, 1, 0);
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let y = DVector::from_element(4, 3.0);
        let report = model.evaluate(&x, &y, DEFAULT_SPARSITY_EPSILON).unwrap();
        assert_eq!(report.mse, 0.0);
        assert_eq!(report.std_err, 0.0);
        assert_eq!(report.n, 4);
        assert_eq!(report.nnz, 1);
    }

    #[test]
    fn evaluate_symmetric_residuals() {
        // predictions 5, targets 4 and 6: residuals +1 and -1
        let model = constant_model(5.0, 1, 0);
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 0.0]);
        let y = DVector::from_column_slice(&[4.0, 6.0]);
        let report = model.evaluate(&x, &y, DEFAULT_SPARSITY_EPSILON).unwrap();
        assert_eq!(report.mse, 1.0);
        assert_eq!(report.std_err, 0.0);
        assert_eq!(report.residuals, vec![1.0, -1.0]);
    }

    #[test]
    fn evaluate_hand_computed_standard_error() {
        // residuals 0 and 2: squared residuals {0, 4}, mse 2,
        // sample std of squares = 2*sqrt(2), divided by sqrt(2) gives 2
        let model = constant_model(2.0, 1, 0);
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 0.0]);
        let y = DVector::from_column_slice(&[2.0, 0.0]);
        let report = model.evaluate(&x, &y, DEFAULT_SPARSITY_EPSILON).unwrap();
        assert_relative_eq!(report.mse, 2.0, max_relative = 1e-15);
        assert_relative_eq!(report.std_err, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn evaluate_zero_predictor_mse_is_mean_square_target() {
        let model = constant_model(0.0, 1, 1);
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_column_slice(&[1.0, -2.0, 3.0]);
        let report = model.evaluate(&x, &y, DEFAULT_SPARSITY_EPSILON).unwrap();
        let mean_sq = y.iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert_relative_eq!(report.mse, mean_sq, max_relative = 1e-15);
        assert_eq!(report.nnz, 0);
    }

    #[test]
    fn evaluate_rejects_empty_input() {
        let model = constant_model(0.0, 1, 1);
        let x = DMatrix::<f64>::zeros(0, 1);
        let y = DVector::<f64>::zeros(0);
        assert!(matches!(
            model.evaluate(&x, &y, 1e-3),
            Err(Error::EmptyData { .. })
        ));
    }

    #[test]
    fn fit_interpolates_training_data_when_under_determined() {
        let x = DMatrix::from_row_slice(3, 2, &[0.1, 0.1, 0.1, 0.2, 0.2, 0.1]);
        let y = DVector::from_column_slice(&[-1.0, 1.0, 1.0]);
        let cfg = FitConfig {
            order: 3,
            solver: SolverConfig::new(2.0, 0.0, SolveMode::Auto).unwrap(),
            transform: None,
        };
        let (model, summary) = fit(&x, &y, &cfg, "synthetic", "t0").unwrap();
        assert_eq!(summary.m, 3);
        assert_eq!(summary.terms, 10);
        assert_eq!(summary.mode, SolveMode::Dual);
        let preds = model.predict(&x).unwrap();
        for i in 0..3 {
            assert!((preds[i] - y[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn save_load_round_trip_is_bitwise() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 7.0, 2.0, 5.5, 3.0, 9.1, 4.0, 6.2]);
        let y = DVector::from_column_slice(&[0.1, 0.4, -0.2, 0.9]);
        let cfg = FitConfig {
            order: 2,
            solver: SolverConfig::new(1.5, 1e-6, SolveMode::Auto).unwrap(),
            transform: Some(TransformSpec {
                a: 0.7,
                b_mode: BMode::RawMean,
                custom_b: None,
            }),
        };
        let (model, _) = fit(&x, &y, &cfg, "toy", "t0").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        let probe = DMatrix::from_row_slice(2, 2, &[1.3, 6.1, 3.9, 8.0]);
        let a = model.predict(&probe).unwrap();
        let b = loaded.predict(&probe).unwrap();
        for i in 0..2 {
            assert_eq!(a[i].to_bits(), b[i].to_bits());
        }
    }

    #[test]
    fn load_rejects_truncated_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = constant_model(1.0, 2, 1);
        save_model(&model, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::ModelFormat { .. })
        ));
    }

    #[test]
    fn load_rejects_alpha_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = constant_model(1.0, 2, 1);
        save_model(&model, &path).unwrap();
        let mut doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        doc["alpha"].as_array_mut().unwrap().push(serde_json::json!(0.5));
        fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn load_rejects_unknown_schema_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = constant_model(1.0, 2, 1);
        save_model(&model, &path).unwrap();
        let mut doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        doc["schema_version"] = serde_json::json!(99);
        fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert!(matches!(load_model(&path), Err(Error::ModelFormat { .. })));
    }

    #[test]
    fn residual_std_matches_hand_value() {
        assert_relative_eq!(
            residual_std(&[0.0, 2.0]),
            2.0f64.sqrt(),
            max_relative = 1e-15
        );
        assert_eq!(residual_std(&[1.0]), 0.0);
    }
}
