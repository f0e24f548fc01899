//! Naive Bayes with Gaussian or Gaussian-kernel class-conditional densities.
//!
//! Kernel bandwidths follow Silverman's rule of thumb
//! (`0.9 · min(sd, IQR/1.34) · n^(-1/5)`, with the usual fallbacks when that
//! is zero), multiplied by an adjustment factor.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stats::{percentile_sorted, sample_sd};

/// Floor for Gaussian standard deviations.
pub const SD_FLOOR: f64 = 1e-9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub kernel: bool,
    /// Bandwidth multiplier (kernel mode only).
    pub adjust: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self { kernel: true, adjust: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Gaussian { mean: f64, sd: f64 },
    Kernel { sorted: Vec<f64>, bandwidth: f64 },
}

impl Density {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Density::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - libm::log(*sd) - LN_SQRT_2PI
            }
            Density::Kernel { sorted, bandwidth } => kernel_ln_pdf(sorted, *bandwidth, x),
        }
    }
}

/// Log of `1/(n h) Σ φ((x − xi)/h)`, summing only the points within
/// `sqrt(d_min² + 72.25 h²)` of `x`; every omitted term is below `e^-36` of
/// the largest one.
fn kernel_ln_pdf(sorted: &[f64], h: f64, x: f64) -> f64 {
    let n = sorted.len();
    let at = sorted.partition_point(|&v| v < x);
    let mut d_min = f64::INFINITY;
    if at < n {
        d_min = sorted[at] - x;
    }
    if at > 0 {
        d_min = d_min.min(x - sorted[at - 1]);
    }
    let radius = libm::sqrt(d_min * d_min + 72.25 * h * h);
    let lo = sorted.partition_point(|&v| v < x - radius);
    let hi = sorted.partition_point(|&v| v <= x + radius);
    let zmin = d_min / h;
    let anchor = -0.5 * zmin * zmin;
    let mut acc = 0.0;
    for &v in &sorted[lo..hi] {
        let z = (x - v) / h;
        acc += libm::exp(-0.5 * z * z - anchor);
    }
    anchor + libm::log(acc) - libm::log(n as f64 * h) - LN_SQRT_2PI
}

/// Silverman bandwidth of sorted values, before adjustment.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let sd = sample_sd(sorted);
    let iqr = percentile_sorted(sorted, 0.75) - percentile_sorted(sorted, 0.25);
    let mut lo = sd.min(iqr / 1.34);
    if !(lo > 0.0) {
        lo = if sd > 0.0 {
            sd
        } else if sorted[0] != 0.0 {
            libm::fabs(sorted[0])
        } else {
            1.0
        };
    }
    0.9 * lo * libm::pow(n as f64, -0.2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    /// Prior of class 0 (negative) and class 1 (positive).
    pub priors: [f64; 2],
    /// `densities[class][feature]`.
    pub densities: [Vec<Density>; 2],
}

pub fn fit_nb(x: &Matrix, y: &[bool], params: &NbParams) -> Result<NbModel> {
    let n = x.rows();
    if y.len() != n {
        return Err(Error::SchemaMismatch { expected: n, actual: y.len() });
    }
    let n1 = y.iter().filter(|&&b| b).count();
    if n1 == 0 || n1 == n {
        return Err(Error::SingleClass);
    }
    if params.kernel && !(params.adjust > 0.0) {
        return Err(Error::InvalidArgument("bandwidth adjustment must be positive".into()));
    }
    let class_density = |class: bool| -> Vec<Density> {
        (0..x.cols())
            .map(|j| {
                let mut v: Vec<f64> = x.iter_rows().zip(y).filter(|(_, &c)| c == class).map(|(r, _)| r[j]).collect();
                if params.kernel {
                    v.sort_by(f64::total_cmp);
                    let bandwidth = silverman_bandwidth(&v) * params.adjust;
                    Density::Kernel { sorted: v, bandwidth }
                } else {
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    Density::Gaussian {
                        mean,
                        sd: sample_sd(&v).max(SD_FLOOR),
                    }
                }
            })
            .collect()
    };
    Ok(NbModel {
        priors: [(n - n1) as f64 / n as f64, n1 as f64 / n as f64],
        densities: [class_density(false), class_density(true)],
    })
}

impl NbModel {
    /// Unnormalised log posterior of each class.
    pub fn class_scores(&self, x: &[f64]) -> [f64; 2] {
        let score = |c: usize| {
            libm::log(self.priors[c]) + self.densities[c].iter().zip(x).map(|(d, &v)| d.ln_pdf(v)).sum::<f64>()
        };
        [score(0), score(1)]
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let [s0, s1] = self.class_scores(x);
        let m = s0.max(s1);
        let e0 = libm::exp(s0 - m);
        let e1 = libm::exp(s1 - m);
        e1 / (e0 + e1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_midpoint_is_even() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [0.0], [2.0], [3.0], [4.0]], 1).unwrap();
        let y = [false, false, false, true, true, true];
        for kernel in [false, true] {
            let m = fit_nb(&x, &y, &NbParams { kernel, adjust: 1.0 }).unwrap();
            assert!((m.predict_proba(&[1.0]) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn six_points_gaussian_by_hand() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [5.0], [7.0], [9.0]], 1).unwrap();
        let y = [false, false, false, true, true, true];
        let m = fit_nb(&x, &y, &NbParams { kernel: false, adjust: 1.0 }).unwrap();
        // class 0: mean 2, sd 1; class 1: mean 7, sd 2.
        let pdf = |x: f64, m: f64, s: f64| (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * core::f64::consts::PI).sqrt());
        let q = 4.0;
        let want = pdf(q, 7.0, 2.0) / (pdf(q, 7.0, 2.0) + pdf(q, 2.0, 1.0));
        assert!((m.predict_proba(&[q]) - want).abs() < 1e-9);
    }

    #[test]
    fn identical_densities_return_priors() {
        let x = Matrix::from_rows(&[[1.0]; 10], 1).unwrap();
        let mut y = [false; 10];
        y[0] = true;
        let m = fit_nb(&x, &y, &NbParams { kernel: false, adjust: 1.0 }).unwrap();
        assert!((m.predict_proba(&[1.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn kernel_matches_full_sum() {
        let v: Vec<f64> = (0..50).map(|i| f64::from(i * i % 37) * 0.3).collect();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let h = silverman_bandwidth(&sorted);
        for q in [-5.0, 0.0, 3.3, 7.7, 50.0] {
            let full: f64 = sorted.iter().map(|&xi| (-0.5 * ((q - xi) / h).powi(2)).exp()).sum::<f64>()
                / (50.0 * h * (2.0 * core::f64::consts::PI).sqrt());
            let ours = kernel_ln_pdf(&sorted, h, q);
            if full > 1e-300 {
                assert!((ours - full.ln()).abs() < 1e-12, "{q}");
            } else {
                assert!(ours.is_finite());
            }
        }
        assert!(fit_nb(&Matrix::zeros(2, 1), &[true, true], &NbParams::default()).is_err());
    }
}
