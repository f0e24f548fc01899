//! Descriptive statistics, one-way ANOVA and Tukey-Kramer comparisons.
//!
//! The ANOVA is the plain (equal-variance) F test; no Welch correction is
//! applied even when group variances differ by orders of magnitude.

mod special;
mod studentized;

use alloc::vec::Vec;

pub use special::{
    chi2_sf, f_sf, ln_beta, normal_cdf, normal_sf, regularized_gamma, regularized_incomplete_beta,
};
pub use studentized::{studentized_range_cdf, studentized_range_quantile, studentized_range_sf};

use crate::error::{Error, Result};

/// Summary row: mean, sample SD (n − 1), median, central 95 % interval
/// (2.5th and 97.5th percentiles), min, max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub min: f64,
    pub max: f64,
}

/// Percentile of sorted data by linear interpolation between order
/// statistics (`(n − 1) p` positioning).
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    libm::sqrt(ss / (values.len() - 1) as f64)
}

pub fn describe(values: &[f64]) -> Result<Descriptive> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Descriptive {
        n: values.len(),
        mean: mean(values),
        sd: sample_sd(values),
        median: percentile_sorted(&sorted, 0.5),
        lower: percentile_sorted(&sorted, 0.025),
        upper: percentile_sorted(&sorted, 0.975),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaResult {
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub ms_between: f64,
    pub ms_within: f64,
    pub f_value: f64,
    pub p_value: f64,
}

impl AnovaResult {
    pub fn df_total(&self) -> usize {
        self.df_between + self.df_within
    }
}

pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("ANOVA needs at least two groups".into()));
    }
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::Empty("ANOVA group"));
    }
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(Error::InvalidArgument("ANOVA needs more observations than groups".into()));
    }
    let grand = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    let mut ss_total = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        for &x in g {
            ss_within += (x - m) * (x - m);
            ss_total += (x - grand) * (x - grand);
        }
    }
    if ss_within == 0.0 && ss_between == 0.0 {
        return Err(Error::InvalidArgument(
            "F undefined: no variation between or within groups".into(),
        ));
    }
    let df_between = k - 1;
    let df_within = n - k;
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let (f_value, p_value) = if ms_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ms_between / ms_within;
        (f, f_sf(f, df_between as f64, df_within as f64)?)
    };
    Ok(AnovaResult {
        ss_between,
        ss_within,
        ss_total,
        df_between,
        df_within,
        ms_between,
        ms_within,
        f_value,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TukeyComparison<L> {
    pub group_a: L,
    pub group_b: L,
    /// mean(a) − mean(b)
    pub mean_difference: f64,
    pub standard_error: f64,
    pub q_statistic: f64,
    pub p_value: f64,
}

/// Tukey-Kramer comparisons for every unordered pair, in input order.
pub fn tukey_kramer<L: Copy, G: AsRef<[f64]>>(
    groups: &[(L, G)],
    anova: &AnovaResult,
) -> Result<Vec<TukeyComparison<L>>> {
    if groups.len() < 2 || groups.iter().any(|(_, g)| g.as_ref().is_empty()) {
        return Err(Error::InvalidArgument("Tukey needs at least two non-empty groups".into()));
    }
    let k = groups.len();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (la, a) = (&groups[i].0, groups[i].1.as_ref());
            let (lb, b) = (&groups[j].0, groups[j].1.as_ref());
            let diff = mean(a) - mean(b);
            let se = libm::sqrt(anova.ms_within / 2.0 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64));
            let q = if se > 0.0 {
                libm::fabs(diff) / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let p = studentized_range_sf(q, k, anova.df_within as f64)?;
            out.push(TukeyComparison {
                group_a: *la,
                group_b: *lb,
                mean_difference: diff,
                standard_error: se,
                q_statistic: q,
                p_value: p,
            });
        }
    }
    Ok(out)
}

/// Significance stars: `***` p < 0.001, `**` p < 0.01, `*` p < 0.05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
