//! Two-group inference engines: ordinary least squares with a pooled
//! t-test, and a random-intercept linear mixed model fit by ML or REML
//! with a Wald test on the group effect.
//!
//! The mixed model is `y = mu + beta * group + b_batch + e` with
//! `b ~ N(0, sigma_b^2)` and `e ~ N(0, sigma_e^2)`. For a fixed variance
//! ratio `lambda = sigma_b^2 / sigma_e^2` the fixed effects and the error
//! variance have closed-form generalized-least-squares solutions; the
//! block-diagonal covariance is inverted per batch through the rank-one
//! Sherman-Morrison update, so one profile evaluation costs O(batches).
//! `lambda` itself is maximized by a derivative-free search on
//! `log(1 + lambda)`.
//!
//! The Wald statistic `beta / se` is referred to a Student t distribution
//! with containment degrees of freedom: `n - batches - 1` when the group
//! contrast varies within at least one batch, `batches - 2` when group is
//! constant within every batch (a purely between-batch contrast). With a
//! single batch this reduces exactly to the pooled t-test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

const LAMBDA_MAX: f64 = 1e6;
const OPT_TOL: f64 = 1e-8;
const OPT_MAX_ITER: usize = 200;
const GRID_POINTS: usize = 33;

/// Estimation method recorded on a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    Ml,
    Reml,
}

/// Response, binary group indicator and batch index per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmData {
    y: Vec<f64>,
    group: Vec<bool>,
    batch: Vec<usize>,
}

impl LmmData {
    pub fn new(y: Vec<f64>, group: Vec<bool>, batch: Vec<usize>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Invalid("empty response vector".into()));
        }
        if group.len() != y.len() || batch.len() != y.len() {
            return Err(Error::Invalid(format!(
                "length mismatch: y={}, group={}, batch={}",
                y.len(),
                group.len(),
                batch.len()
            )));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite response value {v}")));
        }
        Ok(Self { y, group, batch })
    }

    /// Data for a design without batch structure (a single batch).
    pub fn unbatched(y: Vec<f64>, group: Vec<bool>) -> Result<Self> {
        let n = y.len();
        Self::new(y, group, vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn group(&self) -> &[bool] {
        &self.group
    }

    pub fn batch(&self) -> &[usize] {
        &self.batch
    }
}

/// A fitted two-group model.
#[derive(Debug, Clone, Serialize)]
pub struct LmmFit {
    pub mu_hat: f64,
    pub beta_hat: f64,
    pub sigma_b: f64,
    pub sigma_e: f64,
    pub se_beta: f64,
    /// Wald (or pooled t) statistic `beta_hat / se_beta`.
    pub statistic: f64,
    /// Degrees of freedom of the reference t distribution.
    pub df: f64,
    pub p_value: f64,
    pub method: Method,
    pub converged: bool,
    pub log_likelihood: f64,
}

/// Reject the null `beta = 0` when `p_value < alpha` (strict).
pub fn wald_test(fit: &LmmFit, alpha: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    Ok(fit.p_value < alpha)
}

fn two_sided_t_p(statistic: f64, df: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    (2.0 * t.cdf(-statistic.abs())).clamp(0.0, 1.0)
}

fn check_groups(data: &LmmData) -> Result<(usize, usize)> {
    let n1 = data.group.iter().filter(|g| **g).count();
    let n0 = data.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::Fit("both groups must be present".into()));
    }
    Ok((n0, n1))
}

/// Pooled two-sample t-test, equivalently OLS on an intercept and the
/// group indicator.
pub fn fit_ols(data: &LmmData) -> Result<LmmFit> {
    let n = data.len();
    if n < 3 {
        return Err(Error::Fit("OLS needs at least 3 observations".into()));
    }
    let (n0, n1) = check_groups(data)?;
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    for (y, g) in data.y.iter().zip(&data.group) {
        if *g {
            sum1 += y;
        } else {
            sum0 += y;
        }
    }
    let mean0 = sum0 / n0 as f64;
    let mean1 = sum1 / n1 as f64;
    let mut rss = 0.0;
    for (y, g) in data.y.iter().zip(&data.group) {
        let m = if *g { mean1 } else { mean0 };
        rss += (y - m) * (y - m);
    }
    let df = (n - 2) as f64;
    let pooled_var = rss / df;
    if pooled_var <= 0.0 {
        return Err(Error::Fit("zero pooled variance".into()));
    }
    let se = (pooled_var * (1.0 / n0 as f64 + 1.0 / n1 as f64)).sqrt();
    let beta = mean1 - mean0;
    let statistic = beta / se;
    let sigma2_ml = rss / n as f64;
    let log_likelihood =
        -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2_ml).ln() + 1.0);
    Ok(LmmFit {
        mu_hat: mean0,
        beta_hat: beta,
        sigma_b: 0.0,
        sigma_e: pooled_var.sqrt(),
        se_beta: se,
        statistic,
        df,
        p_value: two_sided_t_p(statistic, df),
        method: Method::Ols,
        converged: true,
        log_likelihood,
    })
}

/// Per-batch sufficient statistics.
struct BatchSums {
    n: f64,
    cases: f64,
    sum_y: f64,
}

struct DesignSums {
    n: f64,
    cases: f64,
    sum_y: f64,
    sum_gy: f64,
    sum_yy: f64,
    batches: Vec<BatchSums>,
    /// Group varies within at least one batch.
    within_variation: bool,
}

impl DesignSums {
    fn build(data: &LmmData) -> Self {
        let mut index = std::collections::BTreeMap::new();
        let mut batches: Vec<BatchSums> = Vec::new();
        let mut sum_y = 0.0;
        let mut sum_gy = 0.0;
        let mut sum_yy = 0.0;
        let mut cases = 0.0;
        for i in 0..data.len() {
            let k = *index.entry(data.batch[i]).or_insert_with(|| {
                batches.push(BatchSums {
                    n: 0.0,
                    cases: 0.0,
                    sum_y: 0.0,
                });
                batches.len() - 1
            });
            let y = data.y[i];
            let g = f64::from(data.group[i]);
            batches[k].n += 1.0;
            batches[k].cases += g;
            batches[k].sum_y += y;
            sum_y += y;
            sum_gy += g * y;
            sum_yy += y * y;
            cases += g;
        }
        let within_variation = batches
            .iter()
            .any(|b| b.cases > 0.0 && b.cases < b.n);
        DesignSums {
            n: data.len() as f64,
            cases,
            sum_y,
            sum_gy,
            sum_yy,
            batches,
            within_variation,
        }
    }

    fn n_batches(&self) -> usize {
        self.batches.len()
    }
}

struct ProfileEval {
    /// -2 log (restricted) likelihood; +inf on a degenerate evaluation.
    neg2ll: f64,
    mu: f64,
    beta: f64,
    sigma2: f64,
    var_beta: f64,
}

/// Closed-form GLS at a fixed variance ratio.
///
/// With `W = I + lambda Z Z'`, each batch block inverts as
/// `I - lambda/(1 + lambda n_k) J`, so all quadratic forms reduce to
/// per-batch sums.
fn eval_profile(sums: &DesignSums, lambda: f64, reml: bool) -> ProfileEval {
    let degenerate = ProfileEval {
        neg2ll: f64::INFINITY,
        mu: f64::NAN,
        beta: f64::NAN,
        sigma2: f64::NAN,
        var_beta: f64::NAN,
    };
    let mut a11 = sums.n;
    let mut a12 = sums.cases;
    let mut a22 = sums.cases;
    let mut b1 = sums.sum_y;
    let mut b2 = sums.sum_gy;
    let mut ywy = sums.sum_yy;
    let mut log_det_w = 0.0;
    for b in &sums.batches {
        let w = lambda / (1.0 + lambda * b.n);
        a11 -= w * b.n * b.n;
        a12 -= w * b.n * b.cases;
        a22 -= w * b.cases * b.cases;
        b1 -= w * b.n * b.sum_y;
        b2 -= w * b.cases * b.sum_y;
        ywy -= w * b.sum_y * b.sum_y;
        log_det_w += (1.0 + lambda * b.n).ln();
    }
    let det = a11 * a22 - a12 * a12;
    if !(det > 0.0) || !det.is_finite() {
        return degenerate;
    }
    let mu = (a22 * b1 - a12 * b2) / det;
    let beta = (a11 * b2 - a12 * b1) / det;
    let quad = ywy - (mu * b1 + beta * b2);
    if !(quad > 0.0) || !quad.is_finite() {
        return degenerate;
    }
    let n = sums.n;
    let two_pi = 2.0 * std::f64::consts::PI;
    let (sigma2, neg2ll) = if reml {
        let dof = n - 2.0;
        let sigma2 = quad / dof;
        let neg2 =
            dof * sigma2.ln() + log_det_w + det.ln() + dof * (1.0 + two_pi.ln());
        (sigma2, neg2)
    } else {
        let sigma2 = quad / n;
        let neg2 = n * sigma2.ln() + log_det_w + n * (1.0 + two_pi.ln());
        (sigma2, neg2)
    };
    ProfileEval {
        neg2ll,
        mu,
        beta,
        sigma2,
        var_beta: sigma2 * a11 / det,
    }
}

/// Golden-section minimization on `[a, b]`; returns the midpoint of the
/// final bracket and whether the bracket shrank below `tol` within the
/// iteration cap.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64, cap: usize) -> (f64, bool) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a) > tol && iters < cap {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    ((a + b) / 2.0, (b - a) <= tol)
}

/// Profiled log-likelihood (ML) or restricted log-likelihood (REML) at a
/// given variance ratio `lambda = sigma_b^2 / sigma_e^2`.
///
/// Exposed as a diagnostic so the optimizer can be cross-checked against
/// a grid.
pub fn profiled_log_likelihood(data: &LmmData, method: Method, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let reml = match method {
        Method::Reml => true,
        Method::Ml => false,
        Method::Ols => {
            return Err(Error::Invalid(
                "profiled likelihood is defined for ml/reml only".into(),
            ))
        }
    };
    check_groups(data)?;
    let sums = DesignSums::build(data);
    let eval = eval_profile(&sums, lambda, reml);
    if !eval.neg2ll.is_finite() {
        return Err(Error::Fit("degenerate profile evaluation".into()));
    }
    Ok(-0.5 * eval.neg2ll)
}

/// Fit the random-intercept model by profiling the variance ratio.
///
/// The search runs on `t = log(1 + lambda)` over `[0, log(1 + 1e6)]`:
/// a coarse grid pass brackets the optimum, golden-section refines it to
/// absolute tolerance 1e-8, and the boundary values are always compared
/// against the interior candidate, with ties resolved toward
/// `sigma_b = 0`.
pub fn fit_lmm(data: &LmmData, method: Method) -> Result<LmmFit> {
    let reml = match method {
        Method::Reml => true,
        Method::Ml => false,
        Method::Ols => {
            return Err(Error::Invalid(
                "use fit_ols for the no-batch analysis".into(),
            ))
        }
    };
    let n = data.len();
    if n < 4 {
        return Err(Error::Fit("mixed model needs at least 4 observations".into()));
    }
    check_groups(data)?;
    let sums = DesignSums::build(data);

    // Degenerate designs show up as a singular GLS system already at
    // lambda = 0 (ordinary least squares).
    if !eval_profile(&sums, 0.0, reml).neg2ll.is_finite() {
        return Err(Error::Fit(
            "degenerate design: group effect inestimable".into(),
        ));
    }

    let t_max = LAMBDA_MAX.ln_1p();
    let objective = |t: f64| eval_profile(&sums, t.exp_m1(), reml).neg2ll;

    // Coarse bracket, then golden-section refinement.
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let t = t_max * i as f64 / (GRID_POINTS - 1) as f64;
        let fi = objective(t);
        if fi < best_f {
            best_f = fi;
            best_i = i;
        }
    }
    let step = t_max / (GRID_POINTS - 1) as f64;
    let lo = step * best_i.saturating_sub(1) as f64;
    let hi = (step * (best_i + 1) as f64).min(t_max);
    let (t_opt, converged) = golden_min(objective, lo, hi, OPT_TOL, OPT_MAX_ITER);

    // Honest boundary handling: never report an interior optimum that the
    // boundaries beat, and prefer the sigma_b = 0 boundary on ties.
    let mut t_hat = t_opt;
    let mut f_hat = objective(t_opt);
    if objective(t_max) < f_hat {
        t_hat = t_max;
        f_hat = objective(t_max);
    }
    if objective(0.0) <= f_hat + 1e-10 {
        t_hat = 0.0;
    }

    let lambda = t_hat.exp_m1();
    let eval = eval_profile(&sums, lambda, reml);
    if !eval.neg2ll.is_finite() || eval.var_beta <= 0.0 {
        return Err(Error::Fit(
            "degenerate design: group effect inestimable".into(),
        ));
    }

    let k = sums.n_batches();
    let df = if sums.within_variation {
        (n as f64 - k as f64 - 1.0).max(1.0)
    } else {
        (k as f64 - 2.0).max(1.0)
    };
    let se_beta = eval.var_beta.sqrt();
    let statistic = eval.beta / se_beta;
    Ok(LmmFit {
        mu_hat: eval.mu,
        beta_hat: eval.beta,
        sigma_b: (lambda * eval.sigma2).sqrt(),
        sigma_e: eval.sigma2.sqrt(),
        se_beta,
        statistic,
        df,
        p_value: two_sided_t_p(statistic, df),
        method,
        converged,
        log_likelihood: -0.5 * eval.neg2ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn simple_data() -> LmmData {
        LmmData::unbatched(
            vec![0.0, 1.0, 1.0, 2.0],
            vec![false, false, true, true],
        )
        .unwrap()
    }

    #[test]
    fn ols_difference_of_means() {
        let fit = fit_ols(&simple_data()).unwrap();
        assert!((fit.beta_hat - 1.0).abs() < 1e-12);
        assert!((fit.mu_hat - 0.5).abs() < 1e-12);
        assert_eq!(fit.df, 2.0);
    }

    #[test]
    fn ols_equal_groups_give_p_one() {
        let data = LmmData::unbatched(
            vec![0.0, 1.0, 0.0, 1.0],
            vec![false, false, true, true],
        )
        .unwrap();
        let fit = fit_ols(&data).unwrap();
        assert_eq!(fit.beta_hat, 0.0);
        assert!((fit.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_location_equivariance() {
        let base = simple_data();
        let shifted = LmmData::unbatched(
            base.y().iter().map(|v| v + 11.5).collect(),
            base.group().to_vec(),
        )
        .unwrap();
        let f0 = fit_ols(&base).unwrap();
        let f1 = fit_ols(&shifted).unwrap();
        assert!((f0.beta_hat - f1.beta_hat).abs() < 1e-12);
        assert!((f1.mu_hat - f0.mu_hat - 11.5).abs() < 1e-12);
    }

    #[test]
    fn ols_rejects_degenerate_input() {
        let single = LmmData::unbatched(vec![1.0, 2.0, 3.0], vec![true, true, true]).unwrap();
        assert!(fit_ols(&single).is_err());
        let constant = LmmData::unbatched(
            vec![1.0, 1.0, 2.0, 2.0],
            vec![false, false, true, true],
        )
        .unwrap();
        assert!(fit_ols(&constant).is_err());
    }

    /// Synthetic blocked data with known effects.
    fn blocked_data(seed: u64, beta: f64, sigma_b: f64, sigma_e: f64) -> LmmData {
        let mut rng = stream(seed, [901, 0, 0]);
        let mut y = Vec::new();
        let mut group = Vec::new();
        let mut batch = Vec::new();
        for plate in 0..3usize {
            let b = sigma_b * rng.sample::<f64, _>(StandardNormal);
            for i in 0..40 {
                let g = i % 2 == 0;
                let e = sigma_e * rng.sample::<f64, _>(StandardNormal);
                y.push(beta * f64::from(g) + b + e);
                group.push(g);
                batch.push(plate + 1);
            }
        }
        LmmData::new(y, group, batch).unwrap()
    }

    #[test]
    fn single_batch_ml_collapses_to_ols_beta() {
        let data = LmmData::unbatched(
            vec![0.3, 1.4, 0.9, 2.2, 1.8, 0.1, 2.9, 1.1],
            vec![false, true, false, true, true, false, true, false],
        )
        .unwrap();
        let ols = fit_ols(&data).unwrap();
        let ml = fit_lmm(&data, Method::Ml).unwrap();
        assert!((ml.beta_hat - ols.beta_hat).abs() < 1e-8);
        assert_eq!(ml.sigma_b, 0.0);
    }

    #[test]
    fn single_batch_reml_reproduces_ols_exactly() {
        let data = LmmData::unbatched(
            vec![0.3, 1.4, 0.9, 2.2, 1.8, 0.1, 2.9, 1.1],
            vec![false, true, false, true, true, false, true, false],
        )
        .unwrap();
        let ols = fit_ols(&data).unwrap();
        let reml = fit_lmm(&data, Method::Reml).unwrap();
        assert!((reml.beta_hat - ols.beta_hat).abs() < 1e-8);
        assert!((reml.mu_hat - ols.mu_hat).abs() < 1e-8);
        assert!((reml.sigma_e - ols.sigma_e).abs() < 1e-8);
        assert!((reml.se_beta - ols.se_beta).abs() < 1e-8);
        assert!((reml.p_value - ols.p_value).abs() < 1e-8);
        assert_eq!(reml.df, ols.df);
    }

    #[test]
    fn optimum_beats_boundaries() {
        let data = blocked_data(5, 1.0, 2.0, 1.0);
        for method in [Method::Ml, Method::Reml] {
            let fit = fit_lmm(&data, method).unwrap();
            let lambda_hat = (fit.sigma_b / fit.sigma_e).powi(2);
            let at_opt = profiled_log_likelihood(&data, method, lambda_hat).unwrap();
            let at_zero = profiled_log_likelihood(&data, method, 0.0).unwrap();
            let at_max = profiled_log_likelihood(&data, method, LAMBDA_MAX).unwrap();
            assert!(at_opt >= at_zero - 1e-10);
            assert!(at_opt >= at_max - 1e-10);
        }
    }

    #[test]
    fn reml_optimum_beats_grid() {
        let data = blocked_data(6, 0.5, 1.5, 1.0);
        let fit = fit_lmm(&data, Method::Reml).unwrap();
        let lambda_hat = (fit.sigma_b / fit.sigma_e).powi(2);
        let at_opt = profiled_log_likelihood(&data, Method::Reml, lambda_hat).unwrap();
        let t_max = LAMBDA_MAX.ln_1p();
        for i in 0..64 {
            let t = t_max * i as f64 / 63.0;
            let ll = profiled_log_likelihood(&data, Method::Reml, t.exp_m1()).unwrap();
            assert!(
                at_opt >= ll - 1e-8,
                "grid point {i} beats optimum: {ll} > {at_opt}"
            );
        }
    }

    #[test]
    fn location_and_scale_equivariance() {
        let data = blocked_data(7, 0.8, 1.2, 0.9);
        let fit = fit_lmm(&data, Method::Reml).unwrap();

        let shifted = LmmData::new(
            data.y().iter().map(|v| v + 4.25).collect(),
            data.group().to_vec(),
            data.batch().to_vec(),
        )
        .unwrap();
        let fs = fit_lmm(&shifted, Method::Reml).unwrap();
        assert!((fs.mu_hat - fit.mu_hat - 4.25).abs() < 1e-9);
        assert!((fs.beta_hat - fit.beta_hat).abs() < 1e-9);
        assert!((fs.sigma_b - fit.sigma_b).abs() < 1e-9);
        assert!((fs.sigma_e - fit.sigma_e).abs() < 1e-9);
        assert!((fs.p_value - fit.p_value).abs() < 1e-9);

        let c = 3.5;
        let scaled = LmmData::new(
            data.y().iter().map(|v| v * c).collect(),
            data.group().to_vec(),
            data.batch().to_vec(),
        )
        .unwrap();
        let fc = fit_lmm(&scaled, Method::Reml).unwrap();
        assert!((fc.beta_hat - c * fit.beta_hat).abs() < 1e-9);
        assert!((fc.sigma_b - c * fit.sigma_b).abs() < 1e-7);
        assert!((fc.sigma_e - c * fit.sigma_e).abs() < 1e-9);
        assert!((fc.se_beta - c * fit.se_beta).abs() < 1e-9);
        assert!((fc.statistic - fit.statistic).abs() < 1e-9);
        assert!((fc.p_value - fit.p_value).abs() < 1e-9);
    }

    #[test]
    fn size_one_batches_fall_to_boundary() {
        let mut rng = stream(3, [77, 0, 0]);
        let n = 24;
        let y: Vec<f64> = (0..n)
            .map(|i| f64::from(i % 2 == 0) + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let group: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let batch: Vec<usize> = (0..n).map(|i| i + 1).collect();
        let data = LmmData::new(y, group, batch).unwrap();
        let fit = fit_lmm(&data, Method::Reml).unwrap();
        assert!(
            fit.sigma_b == 0.0 || !fit.converged,
            "unidentifiable fit must land on the boundary or flag non-convergence, got sigma_b={}",
            fit.sigma_b
        );
    }

    #[test]
    fn wald_test_thresholds() {
        let mut fit = fit_ols(&simple_data()).unwrap();
        fit.p_value = 0.049;
        assert!(wald_test(&fit, 0.05).unwrap());
        fit.p_value = 0.05;
        assert!(!wald_test(&fit, 0.05).unwrap());
        assert!(wald_test(&fit, 0.0).is_err());
        assert!(wald_test(&fit, 1.0).is_err());
    }

    #[test]
    fn single_group_rejected() {
        let data = LmmData::new(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![true; 4],
            vec![1, 1, 2, 2],
        )
        .unwrap();
        assert!(fit_lmm(&data, Method::Reml).is_err());
    }

    #[test]
    fn recovers_generating_parameters() {
        // Moderate check here; the acceptance suite runs the full 500
        // replicate version.
        let mut beta_sum = 0.0;
        let mut sigma_e_sum = 0.0;
        let reps = 60;
        for r in 0..reps {
            let data = blocked_data(1000 + r, 1.0, 1.8, 1.8);
            let fit = fit_lmm(&data, Method::Reml).unwrap();
            beta_sum += fit.beta_hat;
            sigma_e_sum += fit.sigma_e;
        }
        let mean_beta = beta_sum / reps as f64;
        let mean_sigma_e = sigma_e_sum / reps as f64;
        assert!((mean_beta - 1.0).abs() < 0.15, "mean beta {mean_beta}");
        assert!(
            (mean_sigma_e - 1.8).abs() < 0.2,
            "mean sigma_e {mean_sigma_e}"
        );
    }
}
