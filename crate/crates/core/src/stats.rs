//! Small statistical helpers: location/scale summaries, Kolmogorov-Smirnov
//! statistics, Anderson-Darling normality and least-squares slopes.

use alloc::vec::Vec;

use num_traits::Float;

use crate::special::norm_cdf;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Type-7 quantile (linear interpolation between order statistics).
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(xs), p)
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Median absolute deviation scaled by 1.4826 (consistent for the normal
/// standard deviation).
pub fn mad(xs: &[f64]) -> f64 {
    let m = median(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    1.4826 * median(&dev)
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Small-x series converges faster.
        let c = (2.0 * core::f64::consts::PI).sqrt() / x;
        let e = -core::f64::consts::PI * core::f64::consts::PI / (8.0 * x * x);
        let s: f64 = (1..=50)
            .map(|k| ((2 * k - 1) as f64).powi(2) * e)
            .map(f64::exp)
            .sum();
        return (1.0 - c * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS test against the uniform law on `[0,1]`: statistic and
/// asymptotic p-value (with Stephens' small-sample adjustment).
pub fn ks_uniform(xs: &[f64]) -> (f64, f64) {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let rt = n.sqrt();
    (d, kolmogorov_survival((rt + 0.12 + 0.11 / rt) * d))
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`;
/// ties across samples are handled by advancing through equal values
/// before comparing.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a two-sample KS statistic.
pub fn two_sample_ks_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    kolmogorov_survival((en + 0.12 + 0.11 / en) * d)
}

/// Anderson-Darling test of normality with estimated mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonDarling {
    /// `A^2 (1 + 0.75/n + 2.25/n^2)`.
    pub statistic: f64,
    /// 5% critical value of the adjusted statistic.
    pub critical: f64,
}

impl AndersonDarling {
    pub const CRITICAL_5PCT: f64 = 0.752;

    pub fn rejects(&self) -> bool {
        self.statistic > self.critical
    }
}

pub fn anderson_darling_normal(xs: &[f64]) -> AndersonDarling {
    let n = xs.len();
    let nf = n as f64;
    let m = mean(xs);
    let s = variance(xs).sqrt();
    let v = sorted(xs);
    let z: Vec<f64> = v
        .iter()
        .map(|x| norm_cdf((x - m) / s).clamp(1e-300, 1.0 - 1e-16))
        .collect();
    let mut acc = 0.0;
    for i in 0..n {
        acc += (2.0 * i as f64 + 1.0) * (z[i].ln() + (1.0 - z[n - 1 - i]).ln());
    }
    let a2 = -nf - acc / nf;
    AndersonDarling {
        statistic: a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf)),
        critical: AndersonDarling::CRITICAL_5PCT,
    }
}

/// Ordinary least squares fit `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Classical standard error of the slope.
    pub slope_se: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_se = if n > 2.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LinearFit {
        intercept,
        slope,
        slope_se,
    }
}
