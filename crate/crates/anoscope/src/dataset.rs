//! Datasets: row-major feature matrices with optional per-row labels.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Per-row annotation. `Normal` and `Anomaly` carry the usual +1/-1 semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Anomaly,
    Unlabeled,
}

impl Label {
    /// Signed value: +1 normal, -1 anomaly; `None` when unlabeled.
    pub fn sign(self) -> Option<f64> {
        match self {
            Label::Normal => Some(1.0),
            Label::Anomaly => Some(-1.0),
            Label::Unlabeled => None,
        }
    }
}

/// An n x D matrix of finite reals with one label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    rows: DMatrix<f64>,
    labels: Vec<Label>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(rows: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if labels.len() != rows.nrows() {
            return Err(Error::DimensionMismatch {
                expected: rows.nrows(),
                got: labels.len(),
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite feature value".into()));
        }
        Ok(Self {
            rows,
            labels,
            feature_names: None,
        })
    }

    /// All rows unlabeled.
    pub fn unlabeled(rows: DMatrix<f64>) -> Result<Self> {
        let n = rows.nrows();
        Self::new(rows, vec![Label::Unlabeled; n])
    }

    pub fn from_rows(points: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let d = points[0].len();
        let rows = DMatrix::from_fn(n, d, |i, j| points[i][j]);
        Self::new(rows, labels)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.rows.row(i).transpose()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        (0..self.n()).map(|i| self.row(i))
    }

    /// Subset by row indices, keeping labels aligned.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let d = self.dim();
        let rows = DMatrix::from_fn(indices.len(), d, |i, j| self.rows[(indices[i], j)]);
        Dataset {
            rows,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn set_label(&mut self, i: usize, label: Label) {
        self.labels[i] = label;
    }

    pub fn set_row(&mut self, i: usize, values: &DVector<f64>) {
        self.rows.row_mut(i).copy_from(&values.transpose());
    }

    /// Stack two datasets with the same dimensionality.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let n = self.n() + other.n();
        let rows = DMatrix::from_fn(n, self.dim(), |i, j| {
            if i < self.n() {
                self.rows[(i, j)]
            } else {
                other.rows[(i - self.n(), j)]
            }
        });
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Dataset {
            rows,
            labels,
            feature_names: self.feature_names.clone(),
        })
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Anomaly).count()
    }

    /// Load a CSV file of decimal-point reals, comma separated, UTF-8.
    /// `label_column` values map {+1 -> Normal, -1 -> Anomaly, "" -> Unlabeled}.
    pub fn load_csv(
        path: impl AsRef<Path>,
        has_header: bool,
        label_column: Option<usize>,
    ) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::MissingFile {
            path: path.display().to_string(),
            source: e,
        })?;
        let reader = BufReader::new(file);
        let mut header: Option<Vec<String>> = None;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<Label> = Vec::new();
        for (line_idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if has_header && header.is_none() {
                header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            let mut row = Vec::with_capacity(cells.len());
            let mut label = Label::Unlabeled;
            for (col, cell) in cells.iter().enumerate() {
                let cell = cell.trim();
                if Some(col) == label_column {
                    label = match cell {
                        "" => Label::Unlabeled,
                        "1" | "+1" => Label::Normal,
                        "-1" => Label::Anomaly,
                        other => {
                            return Err(Error::ParseError {
                                row: line_idx,
                                col,
                                msg: format!("label {other:?} not in {{+1, -1, \"\"}}"),
                            })
                        }
                    };
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| Error::ParseError {
                    row: line_idx,
                    col,
                    msg: format!("{cell:?} is not a number"),
                })?;
                row.push(v);
            }
            points.push(row);
            labels.push(label);
        }
        let mut ds = Dataset::from_rows(&points, labels)?;
        if let Some(mut names) = header {
            if let Some(c) = label_column {
                if c < names.len() {
                    names.remove(c);
                }
            }
            ds.feature_names = Some(names);
        }
        Ok(ds)
    }

    /// Write rows as CSV; labels emitted as a trailing column (+1/-1/blank)
    /// when any row is labeled.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        let labeled = self.labels.iter().any(|l| *l != Label::Unlabeled);
        for i in 0..self.n() {
            let cells: Vec<String> = (0..self.dim()).map(|j| self.rows[(i, j)].to_string()).collect();
            if labeled {
                let lab = match self.labels[i] {
                    Label::Normal => "+1",
                    Label::Anomaly => "-1",
                    Label::Unlabeled => "",
                };
                writeln!(out, "{},{}", cells.join(","), lab)?;
            } else {
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Ok(())
    }
}
