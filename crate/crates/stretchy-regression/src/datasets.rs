//! Delimited dataset loading, the three-point synthetic set, and train/test
//! splitting.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFlag {
    Train,
    Test,
}

/// An in-memory dataset. Immutable after load.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub split: Option<Vec<SplitFlag>>,
}

impl Dataset {
    pub fn sample_count(&self) -> usize {
        self.x.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    /// Partitions into (train, test) by the split flags, preserving row
    /// order within each part.
    pub fn split(&self) -> Result<(Dataset, Dataset)> {
        let flags = self.split.as_ref().ok_or(Error::MissingSplit)?;
        if self.sample_count() == 0 {
            return Err(Error::EmptyData { context: "split" });
        }
        let train_rows: Vec<usize> = flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == SplitFlag::Train)
            .map(|(i, _)| i)
            .collect();
        let test_rows: Vec<usize> = flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == SplitFlag::Test)
            .map(|(i, _)| i)
            .collect();
        Ok((self.subset(&train_rows), self.subset(&test_rows)))
    }

    /// Copies the given rows into a new dataset without split flags.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let d = self.input_dim();
        let mut x = DMatrix::zeros(rows.len(), d);
        let mut y = DVector::zeros(rows.len());
        for (out, &src) in rows.iter().enumerate() {
            for k in 0..d {
                x[(out, k)] = self.x[(src, k)];
            }
            y[out] = self.y[src];
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            x,
            y,
            split: None,
        }
    }
}

/// Parsing options for [`load_delimited`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub target_column: String,
    pub split_column: Option<String>,
    /// Rows whose split cell equals this string are training rows; all
    /// others are test rows.
    pub split_train_value: String,
}

impl LoadOptions {
    pub fn new(target_column: impl Into<String>) -> Self {
        LoadOptions {
            delimiter: b'\t',
            target_column: target_column.into(),
            split_column: None,
            split_train_value: "T".into(),
        }
    }
}

fn parse_error(path: &str, row: usize, column: &str, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        row,
        column: column.to_string(),
        detail: detail.into(),
    }
}

/// Loads a UTF-8 delimited text file with a header row. Every column other
/// than the target and split columns is a numeric feature. A leading
/// unnamed column (empty header cell) is treated as a row index and skipped.
pub fn load_delimited(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_error(&path_str, 0, "", format!("{other:?}")),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(&path_str, 0, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let skip_index_column = headers.first().is_some_and(|h| h.is_empty());

    let mut target_idx = None;
    let mut split_idx = None;
    let mut feature_idx = Vec::new();
    let mut feature_names = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        if skip_index_column && idx == 0 {
            continue;
        }
        if *name == options.target_column && target_idx.is_none() {
            target_idx = Some(idx);
            continue;
        }
        if options.split_column.as_deref() == Some(name.as_str()) && split_idx.is_none() {
            split_idx = Some(idx);
            continue;
        }
        feature_idx.push(idx);
        feature_names.push(name.clone());
    }
    let target_idx = target_idx.ok_or_else(|| Error::MissingColumn {
        path: path_str.clone(),
        name: options.target_column.clone(),
    })?;
    if let Some(split_name) = &options.split_column {
        if split_idx.is_none() {
            return Err(Error::MissingColumn {
                path: path_str,
                name: split_name.clone(),
            });
        }
    }
    if feature_idx.is_empty() {
        return Err(Error::EmptyData {
            context: "no feature columns in header",
        });
    }

    let parse_cell = |cell: &str, row: usize, column: &str| -> Result<f64> {
        let value: f64 = cell
            .parse()
            .map_err(|_| parse_error(&path_str, row, column, format!("not a number: {cell:?}")))?;
        if !value.is_finite() {
            return Err(parse_error(
                &path_str,
                row,
                column,
                format!("non-finite value: {cell:?}"),
            ));
        }
        Ok(value)
    };

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut flags = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let row = row_no + 1;
        let record = record.map_err(|e| parse_error(&path_str, row, "", e.to_string()))?;
        for (&idx, name) in feature_idx.iter().zip(&feature_names) {
            features.push(parse_cell(&record[idx], row, name)?);
        }
        targets.push(parse_cell(&record[target_idx], row, &options.target_column)?);
        if let Some(idx) = split_idx {
            flags.push(if record[idx] == options.split_train_value {
                SplitFlag::Train
            } else {
                SplitFlag::Test
            });
        }
    }
    if targets.is_empty() {
        return Err(Error::EmptyData {
            context: "file has a header but no data rows",
        });
    }

    let m = targets.len();
    let d = feature_idx.len();
    Ok(Dataset {
        feature_names,
        x: DMatrix::from_row_iterator(m, d, features),
        y: DVector::from_vec(targets),
        split: split_idx.map(|_| flags),
    })
}

/// The reconstructed three-sample configuration: one negative point at
/// (0.1, 0.1) and two positive points at (0.1, 0.2) and (0.2, 0.1). All
/// coordinates are strictly positive, so no transform is needed.
pub fn synthetic_three_points() -> Dataset {
    Dataset {
        feature_names: vec!["x1".into(), "x2".into()],
        x: DMatrix::from_row_slice(3, 2, &[0.1, 0.1, 0.1, 0.2, 0.2, 0.1]),
        y: DVector::from_column_slice(&[-1.0, 1.0, 1.0]),
        split: None,
    }
}

/// SHA-256 of a file's raw bytes, as lowercase hex.
pub fn sha256_hex_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// The prostate-cancer benchmark file: tab-separated, 97 rows, a leading
/// unnamed index column, eight clinical covariates, the `lpsa` response,
/// and a T/F `train` flag. The file is not bundled; fetch it from
/// [`prostate::SOURCE_URL`] into `data/prostate.data` (or point
/// `STRETCHY_PROSTATE_DATA` at a copy).
pub mod prostate {
    use super::*;

    pub const SOURCE_URL: &str = "https://hastie.su.domains/ElemStatLearn/datasets/prostate.data";
    pub const FEATURE_NAMES: [&str; 8] = [
        "lcavol", "lweight", "age", "lbph", "svi", "lcp", "gleason", "pgg45",
    ];
    pub const TARGET_COLUMN: &str = "lpsa";
    pub const SPLIT_COLUMN: &str = "train";
    pub const TRAIN_VALUE: &str = "T";
    pub const ROWS: usize = 97;
    pub const TRAIN_ROWS: usize = 67;
    pub const TEST_ROWS: usize = 30;

    /// SHA-256 of the canonical parsed content (see [`content_fingerprint`]);
    /// invariant to incidental whitespace or float formatting in the file.
    pub const CONTENT_SHA256: &str =
        "357796d4a8becff00765e046adac18622531a77402b0bd376c3d5420dee259ac";

    pub fn load_options() -> LoadOptions {
        LoadOptions {
            delimiter: b'\t',
            target_column: TARGET_COLUMN.into(),
            split_column: Some(SPLIT_COLUMN.into()),
            split_train_value: TRAIN_VALUE.into(),
        }
    }

    /// Loads and verifies the prostate file.
    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let dataset = load_delimited(path, &load_options())?;
        verify(&dataset)?;
        Ok(dataset)
    }

    /// Structural and content checks against the documented source.
    pub fn verify(dataset: &Dataset) -> Result<()> {
        if dataset.feature_names != FEATURE_NAMES {
            return Err(Error::DataIntegrity {
                detail: format!(
                    "feature columns {:?} do not match the documented file ({:?})",
                    dataset.feature_names, FEATURE_NAMES
                ),
            });
        }
        if dataset.sample_count() != ROWS {
            return Err(Error::DataIntegrity {
                detail: format!("expected {ROWS} rows, got {}", dataset.sample_count()),
            });
        }
        let flags = dataset.split.as_ref().ok_or(Error::MissingSplit)?;
        let train = flags.iter().filter(|f| **f == SplitFlag::Train).count();
        if train != TRAIN_ROWS {
            return Err(Error::DataIntegrity {
                detail: format!("expected {TRAIN_ROWS} training rows, got {train}"),
            });
        }
        let fingerprint = content_fingerprint(dataset);
        if fingerprint != CONTENT_SHA256 {
            return Err(Error::DataIntegrity {
                detail: format!(
                    "content fingerprint {fingerprint} does not match the documented source \
                     {CONTENT_SHA256}; the file differs from {SOURCE_URL}"
                ),
            });
        }
        Ok(())
    }

    /// SHA-256 over a canonical serialization of the parsed values, so the
    /// check is independent of the file's whitespace and digit formatting.
    pub fn content_fingerprint(dataset: &Dataset) -> String {
        let mut text = String::new();
        text.push_str(&dataset.feature_names.join("\t"));
        text.push('\n');
        for i in 0..dataset.sample_count() {
            for k in 0..dataset.input_dim() {
                text.push_str(&dataset.x[(i, k)].to_string());
                text.push('\t');
            }
            text.push_str(&dataset.y[i].to_string());
            if let Some(flags) = &dataset.split {
                text.push('\t');
                text.push_str(match flags[i] {
                    SplitFlag::Train => "T",
                    SplitFlag::Test => "F",
                });
            }
            text.push('\n');
        }
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `STRETCHY_PROSTATE_DATA` when set, else `data/prostate.data`.
    pub fn default_path() -> PathBuf {
        std::env::var_os("STRETCHY_PROSTATE_DATA")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("data/prostate.data"))
    }
}
