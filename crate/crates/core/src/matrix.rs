//! Feature-matrix data model: CSV ingestion and emission, synthetic
//! spectrum generation and per-sample summary statistics.
//!
//! The on-disk format is UTF-8 comma-separated text with a header row.
//! The first column is `id`, optionally followed by `group` and `batch`
//! columns (recognized by name); every remaining column is a numeric
//! feature in file order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label_tag, stream};
use crate::stats;

/// Dense n x p matrix of spectral intensities with sample ids, feature
/// labels and optional group/batch annotations.
///
/// Values are immutable after construction; transforms produce new
/// matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>, // row-major, n * p
    n: usize,
    p: usize,
    sample_ids: Vec<String>,
    feature_labels: Vec<String>,
    group: Option<Vec<String>>,
    batch: Option<Vec<String>>,
}

impl FeatureMatrix {
    /// Build a validated matrix from row-major values.
    pub fn new(
        values: Vec<f64>,
        sample_ids: Vec<String>,
        feature_labels: Vec<String>,
        group: Option<Vec<String>>,
        batch: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = sample_ids.len();
        let p = feature_labels.len();
        if n == 0 {
            return Err(Error::Invalid("matrix needs at least one sample".into()));
        }
        if p == 0 {
            return Err(Error::Invalid("matrix needs at least one feature".into()));
        }
        if values.len() != n * p {
            return Err(Error::Invalid(format!(
                "expected {} values for a {}x{} matrix, got {}",
                n * p,
                n,
                p,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value at sample '{}', feature '{}'",
                sample_ids[idx / p],
                feature_labels[idx % p]
            )));
        }
        check_unique("sample id", &sample_ids)?;
        check_unique("feature label", &feature_labels)?;
        check_label_chars(&sample_ids)?;
        check_label_chars(&feature_labels)?;
        if let Some(g) = &group {
            if g.len() != n {
                return Err(Error::Invalid(format!(
                    "group has {} entries for {} samples",
                    g.len(),
                    n
                )));
            }
            check_label_chars(g)?;
        }
        if let Some(b) = &batch {
            if b.len() != n {
                return Err(Error::Invalid(format!(
                    "batch has {} entries for {} samples",
                    b.len(),
                    n
                )));
            }
            check_label_chars(b)?;
        }
        Ok(Self {
            values,
            n,
            p,
            sample_ids,
            feature_labels,
            group,
            batch,
        })
    }

    /// Convenience constructor from per-sample rows without annotations.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        sample_ids: Vec<String>,
        feature_labels: Vec<String>,
    ) -> Result<Self> {
        let p = feature_labels.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Invalid(format!(
                    "row {} has {} values, expected {}",
                    i,
                    row.len(),
                    p
                )));
            }
        }
        let values = rows.into_iter().flatten().collect();
        Self::new(values, sample_ids, feature_labels, None, None)
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.p
    }

    pub fn get(&self, sample: usize, feature: usize) -> f64 {
        self.values[sample * self.p + feature]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.values[sample * self.p..(sample + 1) * self.p]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, feature)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_labels(&self) -> &[String] {
        &self.feature_labels
    }

    pub fn group(&self) -> Option<&[String]> {
        self.group.as_deref()
    }

    pub fn batch(&self) -> Option<&[String]> {
        self.batch.as_deref()
    }

    /// Same shape and annotations, new values.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.n * self.p);
        Self {
            values,
            ..self.clone()
        }
    }

    /// New values under a new feature axis, keeping sample annotations.
    pub(crate) fn with_features(&self, values: Vec<f64>, feature_labels: Vec<String>) -> Self {
        debug_assert_eq!(values.len(), self.n * feature_labels.len());
        Self {
            p: feature_labels.len(),
            values,
            feature_labels,
            ..self.clone()
        }
    }
}

fn check_unique(what: &str, labels: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::Invalid(format!("duplicate {what} '{l}'")));
        }
    }
    Ok(())
}

fn check_label_chars(labels: &[String]) -> Result<()> {
    for l in labels {
        if l.is_empty() {
            return Err(Error::Invalid("empty label".into()));
        }
        if l.contains(',') || l.contains('\n') || l.contains('\r') {
            return Err(Error::Invalid(format!(
                "label '{l}' contains a comma or line break"
            )));
        }
    }
    Ok(())
}

/// Flags for [`load_csv`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Fail when the file has no `group` column.
    pub require_group: bool,
    /// Fail when the file has no `batch` column.
    pub require_batch: bool,
}

/// Read a feature matrix from CSV. Row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(rec)) => rec,
        Some(Err(e)) => {
            return Err(Error::Parse {
                row: 0,
                message: e.to_string(),
            })
        }
        None => {
            return Err(Error::Parse {
                row: 0,
                message: "empty file".into(),
            })
        }
    };
    if header.get(0) != Some("id") {
        return Err(Error::Parse {
            row: 0,
            message: "first header column must be 'id'".into(),
        });
    }
    let mut col = 1;
    let has_group = header.get(col) == Some("group");
    if has_group {
        col += 1;
    }
    let has_batch = header.get(col) == Some("batch");
    if has_batch {
        col += 1;
    }
    if options.require_group && !has_group {
        return Err(Error::Invalid(format!(
            "'{}' has no group column",
            path.display()
        )));
    }
    if options.require_batch && !has_batch {
        return Err(Error::Invalid(format!(
            "'{}' has no batch column",
            path.display()
        )));
    }
    let feature_labels: Vec<String> = (col..header.len())
        .map(|j| header.get(j).unwrap_or("").to_string())
        .collect();
    let width = header.len();

    let mut sample_ids = Vec::new();
    let mut group = if has_group { Some(Vec::new()) } else { None };
    let mut batch = if has_batch { Some(Vec::new()) } else { None };
    let mut values = Vec::new();

    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != width {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", width, rec.len()),
            });
        }
        let id = rec.get(0).unwrap_or("").to_string();
        let mut c = 1;
        if let Some(g) = group.as_mut() {
            g.push(rec.get(c).unwrap_or("").to_string());
            c += 1;
        }
        if let Some(b) = batch.as_mut() {
            b.push(rec.get(c).unwrap_or("").to_string());
            c += 1;
        }
        for (k, label) in feature_labels.iter().enumerate() {
            let field = rec.get(c + k).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric value '{field}' at row '{id}', column '{label}'"),
            })?;
            values.push(v);
        }
        sample_ids.push(id);
    }
    if sample_ids.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "no data rows".into(),
        });
    }
    FeatureMatrix::new(values, sample_ids, feature_labels, group, batch)
}

/// Write a matrix as CSV.
///
/// Values are printed with the shortest representation that parses back
/// to the same `f64`, so a save/load round trip is exact.
pub fn save_csv(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.as_os_str().is_empty() {
        return Err(Error::Invalid("empty output path".into()));
    }
    let mut out = String::new();
    out.push_str("id");
    if matrix.group.is_some() {
        out.push_str(",group");
    }
    if matrix.batch.is_some() {
        out.push_str(",batch");
    }
    for label in &matrix.feature_labels {
        let _ = write!(out, ",{label}");
    }
    out.push('\n');
    for i in 0..matrix.n {
        out.push_str(&matrix.sample_ids[i]);
        if let Some(g) = &matrix.group {
            let _ = write!(out, ",{}", g[i]);
        }
        if let Some(b) = &matrix.batch {
            let _ = write!(out, ",{}", b[i]);
        }
        for j in 0..matrix.p {
            let _ = write!(out, ",{}", matrix.get(i, j));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Configuration for [`synthesize`].
///
/// Intensities are log-normal: `exp(baseline + peak + batch shift +
/// noise)`, with Gaussian noise on the log scale. This reproduces the
/// multiplicative, strongly right-skewed character of raw spectral data
/// while keeping the log transform exactly variance-stabilizing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: usize,
    /// Feature indices carrying peaks; parallel to `peak_log_means`.
    pub peak_locations: Vec<usize>,
    pub peak_log_means: Vec<f64>,
    pub baseline_log_mean: f64,
    /// Noise standard deviation on the log scale.
    pub multiplicative_noise_sd: f64,
    /// Additive log-scale offset per batch label; absent batches shift 0.
    pub batch_shifts: Option<BTreeMap<String, f64>>,
    /// Batch label per sample.
    pub batch_of: Option<Vec<String>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 1,
            n_features: 1,
            peak_locations: Vec::new(),
            peak_log_means: Vec::new(),
            baseline_log_mean: 0.0,
            multiplicative_noise_sd: 0.0,
            batch_shifts: None,
            batch_of: None,
            seed: 0,
        }
    }
}

/// Generate a synthetic matrix. Deterministic given `config.seed`; all
/// raw-scale values are strictly positive.
pub fn synthesize(config: &SynthConfig) -> Result<FeatureMatrix> {
    let n = config.n_samples;
    let p = config.n_features;
    if n == 0 || p == 0 {
        return Err(Error::Invalid(
            "synthesize needs at least one sample and one feature".into(),
        ));
    }
    if !(config.multiplicative_noise_sd >= 0.0) || !config.multiplicative_noise_sd.is_finite() {
        return Err(Error::Invalid(
            "multiplicative_noise_sd must be finite and non-negative".into(),
        ));
    }
    if config.peak_locations.len() != config.peak_log_means.len() {
        return Err(Error::Invalid(format!(
            "{} peak locations but {} peak log-means",
            config.peak_locations.len(),
            config.peak_log_means.len()
        )));
    }
    let mut peaks = BTreeMap::new();
    for (loc, lm) in config.peak_locations.iter().zip(&config.peak_log_means) {
        if *loc >= p {
            return Err(Error::Invalid(format!(
                "peak location {loc} out of range for {p} features"
            )));
        }
        if peaks.insert(*loc, *lm).is_some() {
            return Err(Error::Invalid(format!("duplicate peak location {loc}")));
        }
    }
    if config.batch_shifts.is_some() && config.batch_of.is_none() {
        return Err(Error::Invalid(
            "batch_shifts given without batch_of".into(),
        ));
    }
    let shifts: Vec<f64> = match &config.batch_of {
        Some(batch_of) => {
            if batch_of.len() != n {
                return Err(Error::Invalid(format!(
                    "batch_of has {} entries for {} samples",
                    batch_of.len(),
                    n
                )));
            }
            let table = config.batch_shifts.clone().unwrap_or_default();
            batch_of
                .iter()
                .map(|b| table.get(b).copied().unwrap_or(0.0))
                .collect()
        }
        None => vec![0.0; n],
    };

    let mut rng = stream(config.seed, [label_tag("synthesize"), 0, 0]);
    let sd = config.multiplicative_noise_sd;
    let mut values = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            let mut log_mean = config.baseline_log_mean + shifts[i];
            if let Some(lm) = peaks.get(&j) {
                log_mean += lm;
            }
            if sd > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                log_mean += sd * z;
            }
            values.push(log_mean.exp());
        }
    }
    let sample_ids = (1..=n).map(|i| format!("s{i}")).collect();
    let feature_labels = (1..=p).map(|j| format!("f{j}")).collect();
    FeatureMatrix::new(
        values,
        sample_ids,
        feature_labels,
        None,
        config.batch_of.clone(),
    )
}

/// Median and interquartile range of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub sample_id: String,
    pub median: f64,
    pub iqr: f64,
}

/// Per-sample medians and interquartile ranges (type-7 percentiles).
pub fn sample_summaries(matrix: &FeatureMatrix) -> Vec<SampleSummary> {
    (0..matrix.n_samples())
        .map(|i| {
            let mut row = matrix.row(i).to_vec();
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            SampleSummary {
                sample_id: matrix.sample_ids()[i].clone(),
                median: stats::median_sorted(&row),
                iqr: stats::quantile_sorted(&row, 0.75) - stats::quantile_sorted(&row, 0.25),
            }
        })
        .collect()
}
