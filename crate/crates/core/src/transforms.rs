//! Transforms, scalings and normalizations as composable pipeline steps,
//! plus the closure-bias demonstration.
//!
//! Every operation is a pure function from one [`FeatureMatrix`] to a new
//! one. [`apply_pipeline`] runs an ordered step list and records the
//! statistics each step fitted (column SDs, medians, quantile reference,
//! max locations) in an audit trail. Scaling before log-transforming is
//! reported as a warning, not an error.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::rng::{label_tag, stream};
use crate::stats;

/// Divisor choice for max-peak normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxPeakMode {
    /// Divide each spectrum by its own maximum.
    PerSpectrum,
    /// Divide every spectrum by its value at the feature where the mean
    /// spectrum peaks.
    MeanSpectrumLocation,
}

/// One named transform with its parameters.
///
/// Serializes as `{"kind": ..., "params": ...}`; parameterless steps
/// carry no `params` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TransformStep {
    LogShift { a: f64 },
    UnitSdScale { center: bool },
    ParetoScale,
    MedianIqrScale,
    Closure,
    MaxPeak { mode: MaxPeakMode },
    LagDiff,
    Quantile,
    Binarize { thresholds: Vec<f64> },
}

impl TransformStep {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TransformStep::LogShift { .. } => "log_shift",
            TransformStep::UnitSdScale { .. } => "unit_sd_scale",
            TransformStep::ParetoScale => "pareto_scale",
            TransformStep::MedianIqrScale => "median_iqr_scale",
            TransformStep::Closure => "closure",
            TransformStep::MaxPeak { .. } => "max_peak",
            TransformStep::LagDiff => "lag_diff",
            TransformStep::Quantile => "quantile",
            TransformStep::Binarize { .. } => "binarize",
        }
    }

    fn is_scaling(&self) -> bool {
        matches!(
            self,
            TransformStep::UnitSdScale { .. }
                | TransformStep::ParetoScale
                | TransformStep::MedianIqrScale
        )
    }
}

/// Statistics fitted by one applied step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum AuditRecord {
    LogShift {
        a: f64,
    },
    UnitSdScale {
        center: bool,
        means: Option<Vec<f64>>,
        sds: Vec<f64>,
    },
    ParetoScale {
        sds: Vec<f64>,
    },
    MedianIqrScale {
        medians: Vec<f64>,
        iqrs: Vec<f64>,
    },
    Closure {
        row_sums: Vec<f64>,
    },
    MaxPeak {
        mode: MaxPeakMode,
        location: Option<usize>,
        divisors: Vec<f64>,
    },
    LagDiff,
    Quantile {
        reference: Vec<f64>,
    },
    Binarize {
        thresholds: Vec<f64>,
    },
}

/// An ordered step list with the audit trail of an application.
///
/// `audit` has one record per applied step; it is empty until the
/// pipeline has been run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pipeline {
    pub steps: Vec<TransformStep>,
    pub audit: Vec<AuditRecord>,
    pub warnings: Vec<String>,
}

impl Pipeline {
    pub fn new(steps: Vec<TransformStep>) -> Self {
        Self {
            steps,
            audit: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Parse the external representation: a JSON array of steps.
    pub fn from_json(text: &str) -> Result<Self> {
        let steps: Vec<TransformStep> = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("pipeline JSON: {e}")))?;
        Ok(Self::new(steps))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.steps).expect("steps serialize")
    }
}

/// Elementwise natural log of `value + a`.
pub fn log_shift(matrix: &FeatureMatrix, a: f64) -> Result<FeatureMatrix> {
    Ok(log_shift_impl(matrix, a)?.0)
}

fn log_shift_impl(matrix: &FeatureMatrix, a: f64) -> Result<(FeatureMatrix, AuditRecord)> {
    let p = matrix.n_features();
    for (idx, v) in matrix.values().iter().enumerate() {
        if *v + a <= 0.0 {
            return Err(Error::Transform(format!(
                "log_shift: value {} plus shift {} is not positive at sample '{}', feature '{}'",
                v,
                a,
                matrix.sample_ids()[idx / p],
                matrix.feature_labels()[idx % p]
            )));
        }
    }
    let values = matrix.values().iter().map(|v| (v + a).ln()).collect();
    Ok((matrix.with_values(values), AuditRecord::LogShift { a }))
}

fn column_sds(matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    if matrix.n_samples() < 2 {
        return Err(Error::Transform(
            "column scaling requires at least 2 samples".into(),
        ));
    }
    Ok((0..matrix.n_features())
        .map(|j| stats::sample_sd(&matrix.column(j)))
        .collect())
}

fn reject_zero(sds: &[f64], op: &str, matrix: &FeatureMatrix) -> Result<()> {
    let bad: Vec<&str> = sds
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= 0.0)
        .map(|(j, _)| matrix.feature_labels()[j].as_str())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Transform(format!(
            "{op}: zero spread in column(s) {}",
            bad.join(", ")
        )))
    }
}

/// Divide each column by its sample standard deviation (n-1 denominator),
/// optionally subtracting the column mean first.
pub fn unit_sd_scale(matrix: &FeatureMatrix, center: bool) -> Result<FeatureMatrix> {
    Ok(unit_sd_impl(matrix, center)?.0)
}

fn unit_sd_impl(matrix: &FeatureMatrix, center: bool) -> Result<(FeatureMatrix, AuditRecord)> {
    let sds = column_sds(matrix)?;
    reject_zero(&sds, "unit_sd_scale", matrix)?;
    let means: Option<Vec<f64>> = center.then(|| {
        (0..matrix.n_features())
            .map(|j| stats::mean(&matrix.column(j)))
            .collect()
    });
    let p = matrix.n_features();
    let values = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let j = idx % p;
            let centered = v - means.as_ref().map_or(0.0, |m| m[j]);
            centered / sds[j]
        })
        .collect();
    Ok((
        matrix.with_values(values),
        AuditRecord::UnitSdScale { center, means, sds },
    ))
}

/// Divide each column by the square root of its standard deviation.
pub fn pareto_scale(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(pareto_impl(matrix)?.0)
}

fn pareto_impl(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, AuditRecord)> {
    let sds = column_sds(matrix)?;
    reject_zero(&sds, "pareto_scale", matrix)?;
    let p = matrix.n_features();
    let values = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| v / sds[idx % p].sqrt())
        .collect();
    Ok((matrix.with_values(values), AuditRecord::ParetoScale { sds }))
}

/// Subtract the column median and divide by the column IQR.
pub fn median_iqr_scale(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(median_iqr_impl(matrix)?.0)
}

fn median_iqr_impl(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, AuditRecord)> {
    let p = matrix.n_features();
    let mut medians = Vec::with_capacity(p);
    let mut iqrs = Vec::with_capacity(p);
    for j in 0..p {
        let mut col = matrix.column(j);
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(stats::median_sorted(&col));
        iqrs.push(stats::quantile_sorted(&col, 0.75) - stats::quantile_sorted(&col, 0.25));
    }
    reject_zero(&iqrs, "median_iqr_scale", matrix)?;
    let values = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let j = idx % p;
            (v - medians[j]) / iqrs[j]
        })
        .collect();
    Ok((
        matrix.with_values(values),
        AuditRecord::MedianIqrScale { medians, iqrs },
    ))
}

/// Divide each row by its sum so every transformed row totals 1.
pub fn closure(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(closure_impl(matrix)?.0)
}

fn closure_impl(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, AuditRecord)> {
    let mut row_sums = Vec::with_capacity(matrix.n_samples());
    let mut values = Vec::with_capacity(matrix.values().len());
    for i in 0..matrix.n_samples() {
        let row = matrix.row(i);
        if let Some(j) = row.iter().position(|v| *v < 0.0) {
            return Err(Error::Transform(format!(
                "closure: negative value at sample '{}', feature '{}'",
                matrix.sample_ids()[i],
                matrix.feature_labels()[j]
            )));
        }
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Transform(format!(
                "closure: non-positive row sum for sample '{}'",
                matrix.sample_ids()[i]
            )));
        }
        row_sums.push(sum);
        values.extend(row.iter().map(|v| v / sum));
    }
    Ok((
        matrix.with_values(values),
        AuditRecord::Closure { row_sums },
    ))
}

/// Divide each row by a maximum-peak value chosen per [`MaxPeakMode`].
pub fn max_peak(matrix: &FeatureMatrix, mode: MaxPeakMode) -> Result<FeatureMatrix> {
    Ok(max_peak_impl(matrix, mode)?.0)
}

fn max_peak_impl(
    matrix: &FeatureMatrix,
    mode: MaxPeakMode,
) -> Result<(FeatureMatrix, AuditRecord)> {
    let p = matrix.n_features();
    if let Some(idx) = matrix.values().iter().position(|v| *v < 0.0) {
        return Err(Error::Transform(format!(
            "max_peak: negative value at sample '{}', feature '{}'",
            matrix.sample_ids()[idx / p],
            matrix.feature_labels()[idx % p]
        )));
    }
    let location = match mode {
        MaxPeakMode::PerSpectrum => None,
        MaxPeakMode::MeanSpectrumLocation => {
            let means: Vec<f64> = (0..p).map(|j| stats::mean(&matrix.column(j))).collect();
            let loc = means
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(j, _)| j)
                .unwrap();
            Some(loc)
        }
    };
    let mut divisors = Vec::with_capacity(matrix.n_samples());
    let mut values = Vec::with_capacity(matrix.values().len());
    for i in 0..matrix.n_samples() {
        let row = matrix.row(i);
        let d = match location {
            Some(loc) => row[loc],
            None => row.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        };
        if d <= 0.0 {
            return Err(Error::Transform(format!(
                "max_peak: non-positive divisor for sample '{}'",
                matrix.sample_ids()[i]
            )));
        }
        divisors.push(d);
        values.extend(row.iter().map(|v| v / d));
    }
    Ok((
        matrix.with_values(values),
        AuditRecord::MaxPeak {
            mode,
            location,
            divisors,
        },
    ))
}

/// Differences between subsequent features: output has p-1 columns with
/// `out[i][j] = in[i][j+1] - in[i][j]`.
pub fn lag_diff(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(lag_diff_impl(matrix)?.0)
}

fn lag_diff_impl(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, AuditRecord)> {
    let p = matrix.n_features();
    if p < 2 {
        return Err(Error::Transform(
            "lag_diff requires at least 2 features".into(),
        ));
    }
    let labels: Vec<String> = (0..p - 1)
        .map(|j| {
            format!(
                "{}-{}",
                matrix.feature_labels()[j + 1],
                matrix.feature_labels()[j]
            )
        })
        .collect();
    let mut values = Vec::with_capacity(matrix.n_samples() * (p - 1));
    for i in 0..matrix.n_samples() {
        let row = matrix.row(i);
        values.extend((0..p - 1).map(|j| row[j + 1] - row[j]));
    }
    Ok((matrix.with_features(values, labels), AuditRecord::LagDiff))
}

/// Quantile normalization against the mean-of-order-statistics reference.
///
/// Ties within a sample receive the mean of the reference values their
/// ranks span.
pub fn quantile(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    Ok(quantile_impl(matrix)?.0)
}

fn quantile_impl(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, AuditRecord)> {
    let n = matrix.n_samples();
    let p = matrix.n_features();
    if n < 2 {
        return Err(Error::Transform(
            "quantile normalization requires at least 2 samples".into(),
        ));
    }
    let mut reference = vec![0.0; p];
    for i in 0..n {
        let mut row = matrix.row(i).to_vec();
        row.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (r, v) in row.iter().enumerate() {
            reference[r] += v;
        }
    }
    for r in reference.iter_mut() {
        *r /= n as f64;
    }

    let mut values = vec![0.0; n * p];
    for i in 0..n {
        let row = matrix.row(i);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap());
        let mut k = 0;
        while k < p {
            let mut k2 = k;
            while k2 + 1 < p && row[order[k2 + 1]] == row[order[k]] {
                k2 += 1;
            }
            let tie_value = stats::mean(&reference[k..=k2]);
            for slot in &order[k..=k2] {
                values[i * p + slot] = tie_value;
            }
            k = k2 + 1;
        }
    }
    Ok((
        matrix.with_values(values),
        AuditRecord::Quantile { reference },
    ))
}

/// Threshold each feature: 1 if strictly above its threshold, else 0.
pub fn binarize(matrix: &FeatureMatrix, thresholds: &[f64]) -> Result<FeatureMatrix> {
    Ok(binarize_impl(matrix, thresholds)?.0)
}

fn binarize_impl(
    matrix: &FeatureMatrix,
    thresholds: &[f64],
) -> Result<(FeatureMatrix, AuditRecord)> {
    let p = matrix.n_features();
    if thresholds.len() != p {
        return Err(Error::Transform(format!(
            "binarize: {} thresholds for {} features",
            thresholds.len(),
            p
        )));
    }
    let values = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| if *v > thresholds[idx % p] { 1.0 } else { 0.0 })
        .collect();
    Ok((
        matrix.with_values(values),
        AuditRecord::Binarize {
            thresholds: thresholds.to_vec(),
        },
    ))
}

fn apply_step(
    matrix: &FeatureMatrix,
    step: &TransformStep,
) -> Result<(FeatureMatrix, AuditRecord)> {
    match step {
        TransformStep::LogShift { a } => log_shift_impl(matrix, *a),
        TransformStep::UnitSdScale { center } => unit_sd_impl(matrix, *center),
        TransformStep::ParetoScale => pareto_impl(matrix),
        TransformStep::MedianIqrScale => median_iqr_impl(matrix),
        TransformStep::Closure => closure_impl(matrix),
        TransformStep::MaxPeak { mode } => max_peak_impl(matrix, *mode),
        TransformStep::LagDiff => lag_diff_impl(matrix),
        TransformStep::Quantile => quantile_impl(matrix),
        TransformStep::Binarize { thresholds } => binarize_impl(matrix, thresholds),
    }
}

/// Apply the pipeline steps in order.
///
/// Returns the transformed matrix and a copy of the pipeline with the
/// audit trail filled in. A scaling step placed before a log transform
/// yields a warning in `warnings`; any step error aborts with the step
/// index.
pub fn apply_pipeline(
    matrix: &FeatureMatrix,
    pipeline: &Pipeline,
) -> Result<(FeatureMatrix, Pipeline)> {
    let mut run = Pipeline::new(pipeline.steps.clone());
    for (i, step) in pipeline.steps.iter().enumerate() {
        if step.is_scaling() {
            if let Some(j) = pipeline.steps[i + 1..]
                .iter()
                .position(|s| matches!(s, TransformStep::LogShift { .. }))
            {
                run.warnings.push(format!(
                    "step order: {} at position {} precedes log_shift at position {}; \
                     apply logarithms early and compute scale statistics afterwards",
                    step.kind_name(),
                    i,
                    i + 1 + j
                ));
            }
        }
    }
    let mut current = matrix.clone();
    for (i, step) in pipeline.steps.iter().enumerate() {
        let (next, record) = apply_step(&current, step).map_err(|e| {
            Error::Transform(format!("step {} ({}): {}", i, step.kind_name(), e))
        })?;
        run.audit.push(record);
        current = next;
    }
    Ok((current, run))
}

/// Closure-bias demonstration report: pairwise correlations before and
/// after closure normalization of independent positive data.
#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub p: usize,
    pub n: usize,
    pub corr_before: Vec<Vec<f64>>,
    pub corr_after: Vec<Vec<f64>>,
    pub mean_offdiag_before: f64,
    pub mean_offdiag_after: f64,
}

fn correlation_matrix(matrix: &FeatureMatrix) -> Vec<Vec<f64>> {
    let p = matrix.n_features();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| matrix.column(j)).collect();
    let mut out = vec![vec![0.0; p]; p];
    for i in 0..p {
        out[i][i] = 1.0;
        for j in i + 1..p {
            let r = stats::pearson(&cols[i], &cols[j]);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}

fn mean_offdiag(corr: &[Vec<f64>]) -> f64 {
    let p = corr.len();
    if p < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                sum += corr[i][j];
            }
        }
    }
    sum / (p * (p - 1)) as f64
}

/// Generate `n` rows of `p` i.i.d. log-normal values (unit log-variance),
/// close them, and report the correlation structure before and after.
///
/// For independent components the induced pairwise correlation is
/// -1/(p-1); with p = 3 the absolute correlation rises from 0 to 0.5.
pub fn closure_bias_experiment(p: usize, n: usize, seed: u64) -> Result<BiasReport> {
    if p < 2 {
        return Err(Error::Invalid(
            "closure bias experiment requires p >= 2".into(),
        ));
    }
    if n < 100 {
        return Err(Error::Invalid(
            "closure bias experiment requires n >= 100".into(),
        ));
    }
    let mut rng = stream(seed, [label_tag("closure_bias"), 0, 0]);
    let values: Vec<f64> = (0..n * p)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z.exp()
        })
        .collect();
    let matrix = FeatureMatrix::new(
        values,
        (1..=n).map(|i| format!("s{i}")).collect(),
        (1..=p).map(|j| format!("f{j}")).collect(),
        None,
        None,
    )?;
    let corr_before = correlation_matrix(&matrix);
    let closed = closure(&matrix)?;
    let corr_after = correlation_matrix(&closed);
    Ok(BiasReport {
        p,
        n,
        mean_offdiag_before: mean_offdiag(&corr_before),
        mean_offdiag_after: mean_offdiag(&corr_after),
        corr_before,
        corr_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = rows.len();
        let p = rows[0].len();
        FeatureMatrix::from_rows(
            rows,
            (1..=n).map(|i| format!("s{i}")).collect(),
            (1..=p).map(|j| format!("f{j}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn log_shift_basics() {
        let m = labeled(vec![vec![0.0, 9.0]]);
        let t = log_shift(&m, 1.0).unwrap();
        assert_eq!(t.get(0, 0), 0.0);
        assert!((t.get(0, 1) - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_shift_rejects_nonpositive() {
        let m = labeled(vec![vec![-2.0, 1.0]]);
        let err = log_shift(&m, 1.0).unwrap_err().to_string();
        assert!(err.contains("s1") && err.contains("f1"), "{err}");
    }

    #[test]
    fn unit_sd_leaves_unit_column_alone() {
        let m = labeled(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let t = unit_sd_scale(&m, false).unwrap();
        assert_eq!(t.column(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn unit_sd_output_has_unit_sd() {
        let m = labeled(vec![
            vec![5.0, 0.1],
            vec![9.0, 0.4],
            vec![1.0, 0.9],
            vec![4.0, 0.2],
        ]);
        for center in [false, true] {
            let t = unit_sd_scale(&m, center).unwrap();
            for j in 0..2 {
                assert!((stats::sample_sd(&t.column(j)) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_sd_rejects_constant_columns() {
        let m = labeled(vec![vec![1.0, 3.0], vec![1.0, 4.0]]);
        let err = unit_sd_scale(&m, false).unwrap_err().to_string();
        assert!(err.contains("f1"), "{err}");
    }

    #[test]
    fn pareto_divides_by_sqrt_sd() {
        // Column SD 4 -> divide by 2.
        let m = labeled(vec![vec![2.0], vec![2.0 + 4.0 * (2f64).sqrt()]]);
        let sd = stats::sample_sd(&m.column(0));
        assert!((sd - 4.0).abs() < 1e-12);
        let t = pareto_scale(&m).unwrap();
        assert!((t.get(0, 0) - 1.0).abs() < 1e-12);
        let out_sd = stats::sample_sd(&t.column(0));
        assert!((out_sd - sd.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn median_iqr_matches_order_statistics() {
        let m = labeled((1..=5).map(|v| vec![v as f64]).collect());
        let t = median_iqr_scale(&m).unwrap();
        assert_eq!(t.column(0), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let mut col = t.column(0);
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(stats::median_sorted(&col).abs() < 1e-12);
    }

    #[test]
    fn median_iqr_rejects_zero_iqr() {
        // Two distinct values arranged so q75 == q25.
        let m = labeled(vec![vec![1.0], vec![1.0], vec![1.0], vec![9.0]]);
        assert!(median_iqr_scale(&m).is_err());
    }

    #[test]
    fn closure_rows_sum_to_one() {
        let m = labeled(vec![vec![2.0, 2.0, 2.0], vec![1.0, 0.0, 3.0]]);
        let t = closure(&m).unwrap();
        assert_eq!(t.row(0), &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(t.row(1), &[0.25, 0.0, 0.75]);
        for i in 0..2 {
            assert!((t.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closure_rejects_bad_rows() {
        let m = labeled(vec![vec![1.0, -0.5]]);
        assert!(closure(&m).is_err());
        let z = labeled(vec![vec![0.0, 0.0]]);
        let err = closure(&z).unwrap_err().to_string();
        assert!(err.contains("s1"), "{err}");
    }

    #[test]
    fn closure_is_idempotent() {
        let m = labeled(vec![vec![2.0, 5.0, 3.0], vec![0.4, 0.1, 9.5]]);
        let once = closure(&m).unwrap();
        let twice = closure(&once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn max_peak_per_spectrum() {
        let m = labeled(vec![vec![1.0, 4.0, 2.0]]);
        let t = max_peak(&m, MaxPeakMode::PerSpectrum).unwrap();
        assert_eq!(t.row(0), &[0.25, 1.0, 0.5]);
    }

    #[test]
    fn max_peak_mean_location() {
        let m = labeled(vec![vec![1.0, 4.0, 2.0], vec![2.0, 2.0, 2.0]]);
        // Mean spectrum (1.5, 3, 2): max at feature index 1.
        let t = max_peak(&m, MaxPeakMode::MeanSpectrumLocation).unwrap();
        assert_eq!(t.row(0), &[0.25, 1.0, 0.5]);
        assert_eq!(t.row(1), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn max_peak_rejects_zero_rows() {
        let m = labeled(vec![vec![1.0, 2.0], vec![0.0, 0.0]]);
        let err = max_peak(&m, MaxPeakMode::PerSpectrum)
            .unwrap_err()
            .to_string();
        assert!(err.contains("s2"), "{err}");
    }

    #[test]
    fn lag_diff_basics() {
        let m = labeled(vec![vec![1.0, 3.0, 6.0]]);
        let t = lag_diff(&m).unwrap();
        assert_eq!(t.row(0), &[2.0, 3.0]);
        assert_eq!(t.feature_labels(), &["f2-f1", "f3-f2"]);
        let single = labeled(vec![vec![1.0]]);
        assert!(lag_diff(&single).is_err());
    }

    #[test]
    fn lag_diff_of_logs_kills_multiplicative_effects() {
        let row = vec![1.5, 4.0, 2.5, 9.0];
        let m = labeled(vec![row.clone()]);
        let scaled = labeled(vec![row.iter().map(|v| v * 37.5).collect()]);
        let a = lag_diff(&log_shift(&m, 0.0).unwrap()).unwrap();
        let b = lag_diff(&log_shift(&scaled, 0.0).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_averages_sorted_rows() {
        let m = labeled(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let t = quantile(&m).unwrap();
        assert_eq!(t.row(0), &[2.5, 3.5, 4.5]);
        assert_eq!(t.row(1), &[2.5, 3.5, 4.5]);
    }

    #[test]
    fn quantile_tie_rule_hand_computed() {
        // Reference is ((1+3)/2, (1+5)/2, (2+7)/2) = (2, 3, 4.5). The tied
        // pair in row one spans the two lowest reference values.
        let m = labeled(vec![vec![1.0, 1.0, 2.0], vec![3.0, 5.0, 7.0]]);
        let t = quantile(&m).unwrap();
        assert_eq!(t.row(0), &[2.5, 2.5, 4.5]);
        assert_eq!(t.row(1), &[2.0, 3.0, 4.5]);
    }

    #[test]
    fn quantile_preserves_ranks_without_ties() {
        let m = labeled(vec![vec![9.0, 1.0, 5.0], vec![0.0, 2.0, 1.0]]);
        let t = quantile(&m).unwrap();
        for i in 0..2 {
            let input = m.row(i);
            let output = t.row(i);
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(
                        input[a] < input[b],
                        output[a] < output[b],
                        "rank flip at row {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn binarize_uses_strict_inequality() {
        let m = labeled(vec![vec![0.5, 2.0, 1.0]]);
        let t = binarize(&m, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.row(0), &[0.0, 1.0, 0.0]);
        let all = binarize(&m, &[-1e300, -1e300, -1e300]).unwrap();
        assert!(all.values().iter().all(|v| *v == 1.0));
        assert!(binarize(&m, &[1.0]).is_err());
    }

    #[test]
    fn pipeline_composes_and_audits() {
        let m = labeled(vec![vec![1.0, 10.0], vec![4.0, 20.0], vec![9.0, 40.0]]);
        let pipe = Pipeline::new(vec![
            TransformStep::LogShift { a: 1.0 },
            TransformStep::UnitSdScale { center: false },
        ]);
        let (t, run) = apply_pipeline(&m, &pipe).unwrap();
        let manual = unit_sd_scale(&log_shift(&m, 1.0).unwrap(), false).unwrap();
        assert_eq!(t, manual);
        assert_eq!(run.audit.len(), 2);
        assert!(run.warnings.is_empty());
    }

    #[test]
    fn pipeline_warns_on_scaling_before_log() {
        let m = labeled(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let pipe = Pipeline::new(vec![
            TransformStep::UnitSdScale { center: false },
            TransformStep::LogShift { a: 1.0 },
        ]);
        let (_, run) = apply_pipeline(&m, &pipe).unwrap();
        assert_eq!(run.warnings.len(), 1);
        assert!(run.warnings[0].contains("order"), "{}", run.warnings[0]);
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let m = labeled(vec![vec![1.0, 2.0]]);
        let (t, run) = apply_pipeline(&m, &Pipeline::new(vec![])).unwrap();
        assert_eq!(t, m);
        assert!(run.audit.is_empty());
    }

    #[test]
    fn pipeline_error_names_step() {
        let m = labeled(vec![vec![-5.0]]);
        let pipe = Pipeline::new(vec![
            TransformStep::Binarize {
                thresholds: vec![0.0],
            },
            TransformStep::LogShift { a: 0.0 },
        ]);
        let err = apply_pipeline(&m, &pipe).unwrap_err().to_string();
        assert!(err.contains("step 1"), "{err}");
    }

    #[test]
    fn pipeline_json_round_trip() {
        let pipe = Pipeline::new(vec![
            TransformStep::LogShift { a: 1.0 },
            TransformStep::MaxPeak {
                mode: MaxPeakMode::MeanSpectrumLocation,
            },
            TransformStep::Closure,
        ]);
        let text = pipe.to_json();
        let back = Pipeline::from_json(&text).unwrap();
        assert_eq!(back.steps, pipe.steps);
        assert!(text.contains("\"kind\": \"log_shift\""), "{text}");
    }

    #[test]
    fn closure_bias_two_variables_is_minus_one() {
        let report = closure_bias_experiment(2, 500, 3).unwrap();
        assert!((report.corr_after[0][1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn closure_bias_ten_variables_near_minus_ninth() {
        let report = closure_bias_experiment(10, 50_000, 5).unwrap();
        assert!(
            (report.mean_offdiag_after + 1.0 / 9.0).abs() < 0.05,
            "mean offdiag {}",
            report.mean_offdiag_after
        );
    }

    #[test]
    fn closure_bias_matrices_are_symmetric_unit_diagonal() {
        let report = closure_bias_experiment(4, 300, 9).unwrap();
        for mat in [&report.corr_before, &report.corr_after] {
            for i in 0..4 {
                assert!((mat[i][i] - 1.0).abs() < 1e-12);
                for j in 0..4 {
                    assert!((mat[i][j] - mat[j][i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn closure_bias_validates_dimensions() {
        assert!(closure_bias_experiment(1, 1000, 0).is_err());
        assert!(closure_bias_experiment(3, 50, 0).is_err());
    }
}
