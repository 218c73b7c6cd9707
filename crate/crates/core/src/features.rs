//! Statistical feature extraction from raw layer signals.
//!
//! Three progressively refined feature sets summarize a layer:
//!
//! * MSMM — mean, standard deviation, median, maximum (4 features),
//! * MSQ — MSMM plus the lower and upper quartiles (6),
//! * MSD — mean, standard deviation, the nine interior deciles, maximum (12).
//!
//! Standard deviation is the population form (n denominator). Quantiles use
//! linear interpolation on `(n - 1) * p`, the dominant convention in
//! scientific tooling. Shared entries are numerically identical across sets:
//! everything is computed from one sorted copy of the samples.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, LayerRecord};
use crate::error::{Error, Result};
use crate::par;

/// Which of the three feature sets to extract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSetKind {
    Msmm,
    Msq,
    Msd,
}

impl FeatureSetKind {
    pub const ALL: [FeatureSetKind; 3] =
        [FeatureSetKind::Msmm, FeatureSetKind::Msq, FeatureSetKind::Msd];

    pub fn dimension(self) -> usize {
        match self {
            FeatureSetKind::Msmm => 4,
            FeatureSetKind::Msq => 6,
            FeatureSetKind::Msd => 12,
        }
    }

    /// Quantile levels between std and max, in order.
    pub fn quantile_levels(self) -> Vec<f64> {
        match self {
            FeatureSetKind::Msmm => vec![0.5],
            FeatureSetKind::Msq => vec![0.25, 0.5, 0.75],
            FeatureSetKind::Msd => (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }

    /// Column names for CSV export, e.g. `mean,std,p50,max`.
    pub fn feature_names(self) -> Vec<String> {
        let mut names = vec!["mean".to_string(), "std".to_string()];
        for p in self.quantile_levels() {
            names.push(format!("p{:.0}", p * 100.0));
        }
        names.push("max".to_string());
        names
    }
}

impl fmt::Display for FeatureSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSetKind::Msmm => write!(f, "msmm"),
            FeatureSetKind::Msq => write!(f, "msq"),
            FeatureSetKind::Msd => write!(f, "msd"),
        }
    }
}

impl std::str::FromStr for FeatureSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msmm" => Ok(FeatureSetKind::Msmm),
            "msq" => Ok(FeatureSetKind::Msq),
            "msd" => Ok(FeatureSetKind::Msd),
            other => Err(Error::Config(format!("unknown feature set {other:?}"))),
        }
    }
}

/// Linear-interpolation quantile of an unsorted sample set.
///
/// With sorted samples `x[0..n]` and `h = (n - 1) * p`, the result is
/// `x[⌊h⌋] + (h - ⌊h⌋) * (x[⌊h⌋ + 1] - x[⌊h⌋])`; `p = 0` gives the minimum
/// and `p = 1` the maximum.
pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("quantile of empty sample set"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("quantile input"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("quantile level {p} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= n {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Fixed-width statistical summary of one layer's signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureSetKind,
}

/// Extract one feature vector from a layer record.
pub fn extract_features(record: &LayerRecord, kind: FeatureSetKind) -> Result<FeatureVector> {
    features_from_samples(&record.samples, kind)
}

pub(crate) fn features_from_samples(samples: &[f64], kind: FeatureSetKind) -> Result<FeatureVector> {
    if samples.is_empty() {
        return Err(Error::Empty("feature extraction on empty signal"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("feature extraction input"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut values = Vec::with_capacity(kind.dimension());
    values.push(mean);
    values.push(std);
    for p in kind.quantile_levels() {
        values.push(quantile_sorted(&sorted, p));
    }
    values.push(sorted[sorted.len() - 1]);
    Ok(FeatureVector { values, kind })
}

/// Dense row-major feature matrix with one class label per row.
///
/// `kind` is present when the rows came from one of the named feature sets;
/// matrices built directly from raw rows (synthetic classifier inputs) carry
/// `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    kind: Option<FeatureSetKind>,
    dim: usize,
    data: Vec<f64>,
    labels: Vec<ClassLabel>,
}

impl FeatureMatrix {
    /// Build from raw rows; all rows must share one dimension.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<ClassLabel>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("feature matrix with no rows"));
        }
        if rows.len() != labels.len() {
            return Err(Error::Length {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::Empty("zero-dimensional feature rows"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            kind: None,
            dim,
            data,
            labels,
        })
    }

    pub fn kind(&self) -> Option<FeatureSetKind> {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    /// Copy of the selected rows (and their labels), in index order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            kind: self.kind,
            dim: self.dim,
            data,
            labels,
        }
    }

    /// Column names for export: the feature-set names when known, otherwise
    /// `f0..f{d-1}`.
    pub fn feature_names(&self) -> Vec<String> {
        match self.kind {
            Some(kind) => kind.feature_names(),
            None => (0..self.dim).map(|i| format!("f{i}")).collect(),
        }
    }
}

/// Extract a feature matrix from records, one row per record in input order.
pub fn build_matrix(records: &[LayerRecord], kind: FeatureSetKind) -> Result<FeatureMatrix> {
    if records.is_empty() {
        return Err(Error::Empty("no records to extract features from"));
    }
    let extracted = par::map_slice(records, |r| extract_features(r, kind));
    let mut data = Vec::with_capacity(records.len() * kind.dimension());
    let mut labels = Vec::with_capacity(records.len());
    for (r, fv) in records.iter().zip(extracted) {
        let fv = fv.map_err(|e| Error::Record {
            layer: r.layer_index,
            reason: e.to_string(),
        })?;
        data.extend_from_slice(&fv.values);
        labels.push(r.class_label);
    }
    Ok(FeatureMatrix {
        kind: Some(kind),
        dim: kind.dimension(),
        data,
        labels,
    })
}

/// Per-dimension z-scoring fitted on training rows.
///
/// Constant columns (population std below `CONST_EPS` relative to the mean
/// magnitude) are flagged and passed through unchanged, keeping the
/// dimensionality stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant: Vec<bool>,
}

const CONST_EPS: f64 = 1e-12;

impl Standardizer {
    pub fn fit(matrix: &FeatureMatrix) -> Result<Self> {
        let n = matrix.n_rows() as f64;
        if matrix.n_rows() == 0 {
            return Err(Error::Empty("standardizer fit on empty matrix"));
        }
        let d = matrix.dim();
        let mut means = vec![0.0; d];
        for row in matrix.rows() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; d];
        for row in matrix.rows() {
            for ((v, &x), &m) in vars.iter_mut().zip(row).zip(&means) {
                let c = x - m;
                *v += c * c;
            }
        }
        let mut stds = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for (var, &m) in vars.iter().zip(&means) {
            let std = (var / n).sqrt();
            let is_const = std < CONST_EPS * (1.0 + m.abs());
            constant.push(is_const);
            stds.push(std);
        }
        Ok(Self {
            means,
            stds,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: row.len(),
            });
        }
        out.clear();
        for (j, &x) in row.iter().enumerate() {
            if self.constant[j] {
                out.push(x);
            } else {
                out.push((x - self.means[j]) / self.stds[j]);
            }
        }
        Ok(())
    }

    /// Standardized copy of a matrix using these (training) statistics.
    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: matrix.dim(),
            });
        }
        let mut data = Vec::with_capacity(matrix.data.len());
        let mut buf = Vec::with_capacity(matrix.dim());
        for row in matrix.rows() {
            self.transform_row(row, &mut buf)?;
            data.extend_from_slice(&buf);
        }
        Ok(FeatureMatrix {
            kind: matrix.kind,
            dim: matrix.dim,
            data,
            labels: matrix.labels.clone(),
        })
    }
}

/// Write a feature matrix as CSV: feature columns plus a `label` column.
pub fn write_feature_csv<W: Write>(matrix: &FeatureMatrix, mut w: W) -> Result<()> {
    let mut header = matrix.feature_names().join(",");
    header.push_str(",label");
    writeln!(w, "{header}")?;
    for (row, label) in matrix.rows().zip(matrix.labels()) {
        for v in row {
            write!(w, "{v},")?;
        }
        writeln!(w, "{label}")?;
    }
    Ok(())
}
