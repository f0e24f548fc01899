//! Binary logistic regression by iteratively reweighted least squares, with
//! Wald tests, odds ratios and Nagelkerke R².
//!
//! Columns are standardised internally for conditioning; coefficients and
//! covariance are reported on the original scale. Indicators are not centred
//! in the reported model, so `exp(beta)` is the odds multiplier for switching
//! the flag on.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::stats::{chi2_sf, stars};

pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitOptions {
    pub max_iter: usize,
    /// Stop once the largest absolute coefficient update falls below this.
    pub tol: f64,
    /// Any |beta| above this is treated as separation.
    pub separation_bound: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            separation_bound: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    /// Names of the non-intercept columns, in coefficient order.
    pub variables: Vec<String>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    /// Inverse of the information matrix at the final coefficients.
    pub covariance: Matrix,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostics: Vec<String>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Bernoulli log-likelihood of labels under linear predictors.
pub fn log_likelihood_eta(eta: &[f64], y: &[bool]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| if yi { -softplus(-e) } else { -softplus(e) })
        .sum()
}

/// Log-likelihood of the intercept-only model.
pub fn null_log_likelihood(y: &[bool]) -> f64 {
    let n = y.len() as f64;
    let n1 = y.iter().filter(|&&b| b).count() as f64;
    let n0 = n - n1;
    let mut ll = 0.0;
    if n1 > 0.0 {
        ll += n1 * libm::log(n1 / n);
    }
    if n0 > 0.0 {
        ll += n0 * libm::log(n0 / n);
    }
    ll
}

/// Linear predictor with intercept-first coefficients.
pub fn linear_predictor(beta: &[f64], x: &[f64]) -> f64 {
    beta[0] + dot(&beta[1..], x)
}

/// Log-likelihood at arbitrary coefficients (intercept first).
pub fn log_likelihood(beta: &[f64], x: &Matrix, y: &[bool]) -> f64 {
    let eta: Vec<f64> = x.iter_rows().map(|r| linear_predictor(beta, r)).collect();
    log_likelihood_eta(&eta, y)
}

/// Gradient of the log-likelihood (intercept first).
pub fn score(beta: &[f64], x: &Matrix, y: &[bool]) -> Vec<f64> {
    let mut g = vec![0.0; x.cols() + 1];
    for (r, &yi) in x.iter_rows().zip(y) {
        let resid = f64::from(u8::from(yi)) - sigmoid(linear_predictor(beta, r));
        g[0] += resid;
        for (gj, xj) in g[1..].iter_mut().zip(r) {
            *gj += resid * xj;
        }
    }
    g
}

struct Standardised {
    /// Design with a leading column of ones, standardised columns after.
    z: Matrix,
    means: Vec<f64>,
    sds: Vec<f64>,
}

fn standardise(x: &Matrix, names: &[String]) -> Result<Standardised> {
    let n = x.rows();
    let p = x.cols();
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    let mut constant = Vec::new();
    for j in 0..p {
        let col = x.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
        means[j] = m;
        sds[j] = libm::sqrt(ss / n as f64);
        if !(sds[j] > 0.0) || col.iter().all(|&v| v == col[0]) {
            constant.push(names[j].clone());
        }
    }
    if !constant.is_empty() {
        return Err(Error::RankDeficient { columns: constant });
    }
    let mut z = Matrix::zeros(n, p + 1);
    for i in 0..n {
        z[(i, 0)] = 1.0;
        for j in 0..p {
            z[(i, j + 1)] = (x[(i, j)] - means[j]) / sds[j];
        }
    }
    Ok(Standardised { z, means, sds })
}

/// Maps standardised-scale coefficients back to the original scale.
fn to_original(gamma: &[f64], s: &Standardised) -> Vec<f64> {
    let mut beta = vec![0.0; gamma.len()];
    beta[0] = gamma[0];
    for j in 0..s.means.len() {
        beta[j + 1] = gamma[j + 1] / s.sds[j];
        beta[0] -= gamma[j + 1] * s.means[j] / s.sds[j];
    }
    beta
}

/// `T C Tᵀ` for the linear map of [`to_original`].
fn covariance_to_original(c: &Matrix, s: &Standardised) -> Matrix {
    let q = c.rows();
    let mut t = Matrix::zeros(q, q);
    t[(0, 0)] = 1.0;
    for j in 0..s.means.len() {
        t[(0, j + 1)] = -s.means[j] / s.sds[j];
        t[(j + 1, j + 1)] = 1.0 / s.sds[j];
    }
    let tc = t.matmul(c).expect("square");
    tc.matmul(&t.transpose()).expect("square")
}

fn weighted_information(z: &Matrix, eta: &[f64]) -> (Matrix, Vec<f64>) {
    let q = z.cols();
    let mut h = Matrix::zeros(q, q);
    let mut p = Vec::with_capacity(eta.len());
    for (r, &e) in z.iter_rows().zip(eta) {
        let pi = sigmoid(e);
        p.push(pi);
        let w = pi * (1.0 - pi);
        for a in 0..q {
            let wa = w * r[a];
            for b in 0..=a {
                h[(a, b)] += wa * r[b];
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    (h, p)
}

fn design_names(names: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter()
        .map(|&j| if j == 0 { String::from(INTERCEPT) } else { names[j - 1].clone() })
        .collect()
}

/// Fits `P(y) = sigmoid(b0 + x·b)`.
///
/// Errors on single-class labels, `n < p + 1`, constant or collinear columns.
/// Separation and exhausted iterations return a model with
/// `converged = false` and a diagnostic.
pub fn fit_logit(x: &Matrix, y: &[bool], names: &[String], opts: &LogitOptions) -> Result<LogitModel> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::SchemaMismatch { expected: n, actual: y.len() });
    }
    if names.len() != p {
        return Err(Error::SchemaMismatch { expected: p, actual: names.len() });
    }
    let n1 = y.iter().filter(|&&b| b).count();
    if n1 == 0 || n1 == n {
        return Err(Error::SingleClass);
    }
    if n < p + 1 {
        return Err(Error::InvalidArgument(format!("{n} rows cannot identify {} coefficients", p + 1)));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("tol must be positive and max_iter at least 1".into()));
    }
    let s = standardise(x, names)?;
    let z = &s.z;
    let q = p + 1;

    let gram = z.transpose().matmul(z).expect("conformable");
    if let Err(bad) = Cholesky::new(&gram) {
        return Err(Error::RankDeficient {
            columns: design_names(names, &bad),
        });
    }

    let yf: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
    let prevalence = n1 as f64 / n as f64;
    let mut gamma = vec![0.0; q];
    gamma[0] = libm::log(prevalence / (1.0 - prevalence));
    let mut eta = z.matvec(&gamma);
    let mut ll = log_likelihood_eta(&eta, y);
    let ll0 = null_log_likelihood(y);

    let mut diagnostics = Vec::new();
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let (h, prob) = weighted_information(z, &eta);
        let mut g = vec![0.0; q];
        for ((r, &yi), &pi) in z.iter_rows().zip(&yf).zip(&prob) {
            let resid = yi - pi;
            for (gj, zj) in g.iter_mut().zip(r) {
                *gj += resid * zj;
            }
        }
        let chol = match Cholesky::new(&h) {
            Ok(c) => c,
            Err(_) => {
                separated = true;
                diagnostics.push(format!(
                    "information matrix singular at iteration {iterations}; fitted probabilities saturated"
                ));
                break;
            }
        };
        let delta = chol.solve(&g);
        let mut t = 1.0;
        let mut halvings = 0;
        let (next, next_eta, next_ll) = loop {
            let cand: Vec<f64> = gamma.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let cand_eta = z.matvec(&cand);
            let cand_ll = log_likelihood_eta(&cand_eta, y);
            if cand_ll >= ll - 1e-12 * libm::fabs(ll) || halvings >= 40 {
                break (cand, cand_eta, cand_ll);
            }
            t *= 0.5;
            halvings += 1;
        };
        let step: Vec<f64> = delta.iter().map(|d| t * d).collect();
        // The back-transform is linear, so it maps the update directly.
        let max_step = to_original(&step, &s).iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
        gamma = next;
        eta = next_eta;
        ll = next_ll;
        let beta = to_original(&gamma, &s);
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numerical("non-finite coefficient during IRLS".into()));
        }
        if let Some(j) = beta.iter().position(|b| libm::fabs(*b) > opts.separation_bound) {
            separated = true;
            diagnostics.push(format!(
                "|beta| of {} exceeds {} at iteration {iterations}: quasi-complete separation",
                design_names(names, &[j])[0],
                opts.separation_bound
            ));
            break;
        }
        if max_step < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged && !separated {
        diagnostics.push(format!("no convergence within {} iterations", opts.max_iter));
    }

    let (h, _) = weighted_information(z, &eta);
    let cov_std = match Cholesky::new(&h) {
        Ok(c) => c.inverse(),
        Err(_) => {
            converged = false;
            if diagnostics.is_empty() {
                diagnostics.push("information matrix singular at the final estimate".into());
            }
            let mut m = Matrix::zeros(q, q);
            for i in 0..q {
                m[(i, i)] = f64::INFINITY;
            }
            m
        }
    };
    let covariance = if cov_std[(0, 0)].is_finite() {
        covariance_to_original(&cov_std, &s)
    } else {
        cov_std
    };
    Ok(LogitModel {
        variables: names.to_vec(),
        coefficients: to_original(&gamma, &s),
        covariance,
        log_likelihood: ll,
        null_log_likelihood: ll0,
        n,
        converged,
        iterations,
        diagnostics,
    })
}

/// [`fit_logit`] after removing columns that carry no information of their
/// own: constant columns and columns aliased with earlier ones. Returns the
/// model on the kept columns and the removed names, in schema order.
pub fn fit_logit_dropping_aliased(
    x: &Matrix,
    y: &[bool],
    names: &[String],
    opts: &LogitOptions,
) -> Result<(LogitModel, Vec<String>)> {
    let mut keep: Vec<usize> = (0..x.cols()).collect();
    loop {
        let kept: Vec<String> = keep.iter().map(|&j| names[j].clone()).collect();
        match fit_logit(&x.select_cols(&keep), y, &kept, opts) {
            Err(Error::RankDeficient { columns }) => {
                let before = keep.len();
                keep.retain(|&j| !columns.contains(&names[j]));
                if keep.len() == before {
                    return Err(Error::RankDeficient { columns });
                }
            }
            Err(e) => return Err(e),
            Ok(m) => {
                let dropped = (0..x.cols()).filter(|j| !keep.contains(j)).map(|j| names[j].clone()).collect();
                return Ok((m, dropped));
            }
        }
    }
}

impl LogitModel {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.coefficients.len())
            .map(|j| libm::sqrt(self.covariance[(j, j)]))
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.variables.len() {
            return Err(Error::SchemaMismatch {
                expected: self.variables.len(),
                actual: x.len(),
            });
        }
        Ok(sigmoid(linear_predictor(&self.coefficients, x)))
    }

    pub fn nagelkerke_r2(&self) -> Result<f64> {
        nagelkerke_r2(self.null_log_likelihood, self.log_likelihood, self.n)
    }

    pub fn cox_snell_r2(&self) -> Result<f64> {
        cox_snell_r2(self.null_log_likelihood, self.log_likelihood, self.n)
    }
}

/// `sigmoid(beta · [1, x])`.
pub fn predict_logit(model: &LogitModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

pub fn cox_snell_r2(ll0: f64, ll1: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Empty("observations"));
    }
    Ok(-libm::expm1(2.0 * (ll0 - ll1) / n as f64))
}

/// Cox-Snell R² divided by its maximum `1 − exp(2 LL0 / n)`.
pub fn nagelkerke_r2(ll0: f64, ll1: f64, n: usize) -> Result<f64> {
    let cs = cox_snell_r2(ll0, ll1, n)?;
    let max = -libm::expm1(2.0 * ll0 / n as f64);
    if !(max > 0.0) {
        return Err(Error::Domain("null log-likelihood is zero".into()));
    }
    Ok(cs / max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldRow {
    pub variable: String,
    pub beta: f64,
    pub standard_error: f64,
    pub wald_statistic: f64,
    pub p_value: f64,
    pub odds_ratio: f64,
}

impl WaldRow {
    pub fn new(variable: String, beta: f64, standard_error: f64) -> Result<Self> {
        if !(standard_error > 0.0) || !standard_error.is_finite() {
            return Err(Error::Domain(format!("standard error {standard_error} for {variable}")));
        }
        let w = (beta / standard_error) * (beta / standard_error);
        Ok(Self {
            p_value: chi2_sf(w, 1.0)?,
            odds_ratio: libm::exp(beta),
            wald_statistic: w,
            variable,
            beta,
            standard_error,
        })
    }

    pub fn stars(&self) -> &'static str {
        stars(self.p_value)
    }
}

/// One Wald row per coefficient; the intercept row comes last when included.
pub fn wald_table(model: &LogitModel, include_intercept: bool) -> Result<Vec<WaldRow>> {
    if !model.converged {
        return Err(Error::NotConverged(model.diagnostics.join("; ")));
    }
    let se = model.standard_errors();
    let mut rows = Vec::with_capacity(model.coefficients.len());
    for (j, name) in model.variables.iter().enumerate() {
        rows.push(WaldRow::new(name.clone(), model.coefficients[j + 1], se[j + 1])?);
    }
    if include_intercept {
        rows.push(WaldRow::new(INTERCEPT.into(), model.coefficients[0], se[0])?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::string::ToString;
    use rand::Rng as _;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn intercept_only_recovers_logit_of_prevalence() {
        let y: Vec<bool> = (0..1000).map(|i| i < 439).collect();
        let x = Matrix::zeros(1000, 0);
        let m = fit_logit(&x, &y, &[], &LogitOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.coefficients[0] - libm::log(0.439 / 0.561)).abs() < 1e-12);
        assert!((m.coefficients[0] + 0.2452).abs() < 1e-4);
        assert!((m.predict(&[]).unwrap() - 0.439).abs() < 1e-12);
        assert!(m.nagelkerke_r2().unwrap().abs() < 1e-12);
    }

    #[test]
    fn separation_is_not_converged() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]], 1).unwrap();
        let y = [false, false, true, true];
        let m = fit_logit(&x, &y, &names(1), &LogitOptions::default()).unwrap();
        assert!(!m.converged);
        assert!(!m.diagnostics.is_empty());
        assert!(wald_table(&m, true).is_err());
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 5.0], [2.0, 4.0, 5.0], [3.0, 6.0, 5.0], [0.0, 0.0, 5.0]], 3).unwrap();
        let y = [true, false, true, false];
        match fit_logit(&x, &y, &names(3), &LogitOptions::default()) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["x2".to_string()]),
            other => panic!("{other:?}"),
        }
        let x = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [0.0, 0.0]], 2).unwrap();
        match fit_logit(&x, &y, &names(2), &LogitOptions::default()) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["x1".to_string()]),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            fit_logit(&Matrix::zeros(3, 0), &[true; 3], &[], &LogitOptions::default()),
            Err(Error::SingleClass)
        );
    }

    #[test]
    fn aliased_columns_are_dropped_and_reported() {
        let mut r = rng::stream(2, 0);
        let rows: Vec<[f64; 4]> = (0..400)
            .map(|_| {
                let a: f64 = r.random();
                let b: f64 = r.random();
                [a, 2.0 * a, 7.0, b]
            })
            .collect();
        let y: Vec<bool> = rows.iter().map(|v| r.random::<f64>() < sigmoid(v[0] - v[3])).collect();
        let x = Matrix::from_rows(&rows, 4).unwrap();
        let (m, dropped) = fit_logit_dropping_aliased(&x, &y, &names(4), &LogitOptions::default()).unwrap();
        assert_eq!(dropped, vec!["x1".to_string(), "x2".to_string()]);
        assert_eq!(m.variables, vec!["x0".to_string(), "x3".to_string()]);
        assert!(m.converged);
    }

    #[test]
    fn optimality_and_score_identity() {
        let mut r = rng::stream(5, 0);
        let n = 2000;
        let rows: Vec<[f64; 3]> = (0..n)
            .map(|_| [r.random::<f64>() * 4.0, f64::from(u8::from(r.random_bool(0.3))), r.random::<f64>() * 500.0])
            .collect();
        let x = Matrix::from_rows(&rows, 3).unwrap();
        let y: Vec<bool> = rows
            .iter()
            .map(|v| r.random_bool(sigmoid(-0.5 + 0.8 * v[0] - 0.872 * v[1] + 0.002 * v[2])))
            .collect();
        let m = fit_logit(&x, &y, &names(3), &LogitOptions::default()).unwrap();
        assert!(m.converged);
        let g = score(&m.coefficients, &x, &y);
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
        let mean_p: f64 = x.iter_rows().map(|row| m.predict(row).unwrap()).sum::<f64>() / n as f64;
        let prev = y.iter().filter(|&&b| b).count() as f64 / n as f64;
        assert!((mean_p - prev).abs() < 1e-8);
        assert!(m.log_likelihood >= m.null_log_likelihood);
        assert!((log_likelihood(&m.coefficients, &x, &y) - m.log_likelihood).abs() < 1e-8);
    }

    #[test]
    fn wald_odds_ratios() {
        let row = WaldRow::new("img".into(), -0.872, 0.1).unwrap();
        assert_eq!(format!("{:.3}", row.odds_ratio), "0.418");
        let row = WaldRow::new("url".into(), 0.445, 0.1).unwrap();
        assert!((row.odds_ratio - 1.5605).abs() < 1e-3);
        let row = WaldRow::new("zero".into(), 0.0, 0.1).unwrap();
        assert_eq!((row.odds_ratio, row.p_value), (1.0, 1.0));
        assert!(WaldRow::new("bad".into(), 1.0, 0.0).is_err());
    }

    #[test]
    fn nagelkerke_edges() {
        assert_eq!(nagelkerke_r2(-10.0, -10.0, 20).unwrap(), 0.0);
        assert!(nagelkerke_r2(-10.0, -5.0, 0).is_err());
        let r = nagelkerke_r2(-693.1, -100.0, 1000).unwrap();
        assert!(r > 0.0 && r < 1.0);
    }
}
