//! Per-column standardization and the exponential first-quadrant map.
//!
//! Raw inputs are z-scored column by column with statistics fitted on the
//! training rows only, then mapped to strictly positive values by
//! `exp(a * z + b_k)`. The warp offset `b` can be zero, the raw training
//! column means, `a` times those means, or a caller-supplied vector.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the warp offset vector `b` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BMode {
    /// `b_k = 0`
    Zero,
    /// `b_k` = raw training mean of column k
    RawMean,
    /// `b_k = a *` raw training mean of column k
    ATimesRawMean,
    /// caller-supplied vector
    Custom,
}

/// Fitted transform: per-column mean and sample standard deviation plus the
/// warp parameters. Immutable after fit; reused verbatim on held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub a: f64,
    pub b: Vec<f64>,
    pub b_mode: BMode,
}

impl TransformParams {
    /// Fits standardization statistics on the training rows and resolves the
    /// warp offset. `custom_b` is required (and only allowed) with
    /// [`BMode::Custom`].
    pub fn fit(
        x_train: &DMatrix<f64>,
        a: f64,
        b_mode: BMode,
        custom_b: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument {
                detail: format!("warp scale a must be finite, got {a}"),
            });
        }
        let (mu, sigma) = fit_standardizer(x_train)?;
        let b = resolve_b(b_mode, a, &mu, custom_b.as_deref())?;
        Ok(TransformParams {
            mu,
            sigma,
            a,
            b,
            b_mode,
        })
    }

    /// Number of input columns the transform was fitted on.
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Standardizes and warps `x` using the fitted parameters only.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let z = standardize(x, &self.mu, &self.sigma)?;
        quadrant_map(&z, self.a, &self.b)
    }

    /// Consistency checks used when deserializing a model document.
    pub fn validate(&self) -> Result<()> {
        let d = self.mu.len();
        if self.sigma.len() != d {
            return Err(Error::DimensionMismatch {
                context: "transform: sigma length vs mu length",
                expected: d,
                actual: self.sigma.len(),
            });
        }
        if self.b.len() != d {
            return Err(Error::DimensionMismatch {
                context: "transform: b length vs mu length",
                expected: d,
                actual: self.b.len(),
            });
        }
        if !self.a.is_finite() {
            return Err(Error::InvalidArgument {
                detail: format!("warp scale a must be finite, got {}", self.a),
            });
        }
        for (k, &s) in self.sigma.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::DegenerateColumn { index: k });
            }
        }
        Ok(())
    }
}

/// Column means and sample standard deviations (denominator M-1) of the
/// training matrix. Constant columns are rejected.
pub fn fit_standardizer(x_train: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = x_train.nrows();
    if m < 2 {
        return Err(Error::InvalidArgument {
            detail: format!("standardizer needs at least 2 training rows, got {m}"),
        });
    }
    for i in 0..m {
        for j in 0..x_train.ncols() {
            if !x_train[(i, j)].is_finite() {
                return Err(Error::NumericOverflow {
                    context: "standardizer input",
                    row: i,
                    col: j,
                });
            }
        }
    }
    let mut mu = Vec::with_capacity(x_train.ncols());
    let mut sigma = Vec::with_capacity(x_train.ncols());
    for k in 0..x_train.ncols() {
        let col = x_train.column(k);
        let mean = col.iter().sum::<f64>() / m as f64;
        let ss: f64 = col.iter().map(|&v| (v - mean) * (v - mean)).sum();
        let var = ss / (m as f64 - 1.0);
        if var == 0.0 {
            return Err(Error::DegenerateColumn { index: k });
        }
        mu.push(mean);
        sigma.push(var.sqrt());
    }
    Ok((mu, sigma))
}

/// Elementwise `(x - mu_k) / sigma_k`.
pub fn standardize(x: &DMatrix<f64>, mu: &[f64], sigma: &[f64]) -> Result<DMatrix<f64>> {
    if x.ncols() != mu.len() {
        return Err(Error::DimensionMismatch {
            context: "standardize: input columns vs fitted statistics",
            expected: mu.len(),
            actual: x.ncols(),
        });
    }
    if sigma.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            context: "standardize: sigma length vs mu length",
            expected: mu.len(),
            actual: sigma.len(),
        });
    }
    let mut z = x.clone_owned();
    for k in 0..z.ncols() {
        let (m, s) = (mu[k], sigma[k]);
        for i in 0..z.nrows() {
            z[(i, k)] = (z[(i, k)] - m) / s;
        }
    }
    Ok(z)
}

/// Elementwise `exp(a * z + b_k)`; strictly positive wherever finite.
/// Overflow is an error, never clamped.
pub fn quadrant_map(z: &DMatrix<f64>, a: f64, b: &[f64]) -> Result<DMatrix<f64>> {
    if z.ncols() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "quadrant map: input columns vs offset vector",
            expected: b.len(),
            actual: z.ncols(),
        });
    }
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    for k in 0..z.ncols() {
        for i in 0..z.nrows() {
            let v = (a * z[(i, k)] + b[k]).exp();
            if !v.is_finite() {
                return Err(Error::NumericOverflow {
                    context: "quadrant map",
                    row: i,
                    col: k,
                });
            }
            out[(i, k)] = v;
        }
    }
    Ok(out)
}

/// Resolves the warp offset vector for the given mode.
pub fn resolve_b(
    b_mode: BMode,
    a: f64,
    raw_means: &[f64],
    custom: Option<&[f64]>,
) -> Result<Vec<f64>> {
    match b_mode {
        BMode::Zero => Ok(vec![0.0; raw_means.len()]),
        BMode::RawMean => Ok(raw_means.to_vec()),
        BMode::ATimesRawMean => Ok(raw_means.iter().map(|&m| a * m).collect()),
        BMode::Custom => {
            let custom = custom.ok_or_else(|| Error::InvalidArgument {
                detail: "b_mode=custom requires an explicit b vector".into(),
            })?;
            if custom.len() != raw_means.len() {
                return Err(Error::DimensionMismatch {
                    context: "custom b vector length vs input dimension",
                    expected: raw_means.len(),
                    actual: custom.len(),
                });
            }
            Ok(custom.to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_standardizer_simple_column() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let (mu, sigma) = fit_standardizer(&x).unwrap();
        assert_eq!(mu, vec![2.0]);
        assert_eq!(sigma, vec![1.0]);
    }

    #[test]
    fn fit_standardizer_rejects_constant_column() {
        let x = DMatrix::from_column_slice(3, 1, &[5.0, 5.0, 5.0]);
        match fit_standardizer(&x) {
            Err(Error::DegenerateColumn { index }) => assert_eq!(index, 0),
            other => panic!("expected degenerate column error, got {other:?}"),
        }
    }

    #[test]
    fn fit_standardizer_sample_std_uses_m_minus_1() {
        // sample std of [0, 0, 4, 4] is sqrt(16/3)
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 4.0, 4.0]);
        let (mu, sigma) = fit_standardizer(&x).unwrap();
        assert_eq!(mu, vec![2.0]);
        assert_relative_eq!(sigma[0], (16.0f64 / 3.0).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn fit_standardizer_needs_two_rows() {
        let x = DMatrix::from_column_slice(1, 1, &[1.0]);
        assert!(matches!(
            fit_standardizer(&x),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn standardize_training_data_has_zero_mean_unit_std() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 10.0, 2.0, 14.0, 3.0, 9.0, 4.0, 30.0, 5.0, 2.0]);
        let (mu, sigma) = fit_standardizer(&x).unwrap();
        let z = standardize(&x, &mu, &sigma).unwrap();
        let (zmu, zsigma) = fit_standardizer(&z).unwrap();
        for k in 0..2 {
            assert_relative_eq!(zmu[k], 0.0, epsilon = 1e-12);
            assert_relative_eq!(zsigma[k], 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn standardize_known_values() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let z = standardize(&x, &[2.0], &[1.0]).unwrap();
        assert_eq!(z.as_slice(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_round_trip() {
        let x = DMatrix::from_row_slice(4, 2, &[3.1, -2.0, 4.7, 8.8, -1.3, 0.5, 2.2, 7.1]);
        let (mu, sigma) = fit_standardizer(&x).unwrap();
        let z = standardize(&x, &mu, &sigma).unwrap();
        for i in 0..4 {
            for k in 0..2 {
                let back = z[(i, k)] * sigma[k] + mu[k];
                assert_relative_eq!(back, x[(i, k)], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn quadrant_map_identity_offsets() {
        let z = DMatrix::from_row_slice(2, 2, &[0.3, -4.0, 1.5, 0.0]);
        let out = quadrant_map(&z, 0.0, &[0.0, 0.0]).unwrap();
        assert!(out.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn quadrant_map_exponential_values() {
        let z = DMatrix::from_column_slice(3, 1, &[-1.0, 0.0, 1.0]);
        let out = quadrant_map(&z, 1.0, &[0.0]).unwrap();
        assert_relative_eq!(out[(0, 0)], (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(out[(1, 0)], 1.0);
        assert_relative_eq!(out[(2, 0)], 1.0f64.exp(), max_relative = 1e-15);
    }

    #[test]
    fn quadrant_map_overflow_names_column() {
        let z = DMatrix::from_row_slice(1, 2, &[1.0, 800.0]);
        match quadrant_map(&z, 1.0, &[0.0, 0.0]) {
            Err(Error::NumericOverflow { col, .. }) => assert_eq!(col, 1),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn quadrant_map_output_strictly_positive() {
        let z = DMatrix::from_row_slice(2, 2, &[-30.0, 5.0, 0.0, -2.5]);
        let out = quadrant_map(&z, 2.0, &[1.0, -1.0]).unwrap();
        assert!(out.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn resolve_b_modes() {
        assert_eq!(resolve_b(BMode::Zero, 3.0, &[2.0, 5.0], None).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            resolve_b(BMode::RawMean, 3.0, &[2.0, 5.0], None).unwrap(),
            vec![2.0, 5.0]
        );
        assert_eq!(
            resolve_b(BMode::ATimesRawMean, 1e-5, &[2.0, 5.0], None).unwrap(),
            vec![2e-5, 5e-5]
        );
        assert_eq!(
            resolve_b(BMode::Custom, 1.0, &[2.0, 5.0], Some(&[7.0, 8.0])).unwrap(),
            vec![7.0, 8.0]
        );
    }

    #[test]
    fn resolve_b_custom_wrong_length() {
        assert!(matches!(
            resolve_b(BMode::Custom, 1.0, &[2.0, 5.0], Some(&[7.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            resolve_b(BMode::Custom, 1.0, &[2.0], None),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn apply_uses_fitted_params_only() {
        let train = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let params = TransformParams::fit(&train, 1.0, BMode::Zero, None).unwrap();
        // A held-out row transforms with the training statistics, not its own.
        let test = DMatrix::from_column_slice(1, 1, &[10.0]);
        let out = params.apply(&test).unwrap();
        assert_relative_eq!(out[(0, 0)], ((10.0 - 2.0) / 1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn params_serialize_round_trip() {
        let train = DMatrix::from_row_slice(3, 2, &[1.0, 4.0, 2.0, 6.0, 3.0, 11.0]);
        let params = TransformParams::fit(&train, 0.5, BMode::RawMean, None).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        let back: TransformParams = serde_json::from_str(&json).unwrap();
        assert_eq!(params, back);
    }
}
