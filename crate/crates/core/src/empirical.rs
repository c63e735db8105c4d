//! Rank-based empirical distribution machinery: the joint and marginal
//! empirical cdfs, marginal quantiles, the empirical copula and the
//! processes `A_n`, `alpha_n` and `beta_jn`.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::copula::{check_unit, Copula};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng;

/// Whether the observations are on their original scale or already mapped
/// through the true margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Raw,
    PseudoUniform,
}

/// What to do with tied observations in a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    Reject,
    /// Add seeded uniform noise of magnitude `1e-9 * column range` to
    /// columns that contain ties.
    Jitter {
        seed: u64,
    },
}

const JITTER_SCALE: f64 = 1e-9;

/// An `n x d` sample with its rank matrix, immutable after construction.
#[derive(Debug, Clone)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    d: usize,
    kind: SampleKind,
    ranks: Vec<u32>,
    sorted: Vec<f64>,
    jittered: bool,
}

impl Sample {
    /// `data` is row-major with `d` columns.
    pub fn new(mut data: Vec<f64>, d: usize, kind: SampleKind, ties: TiePolicy) -> Result<Self> {
        if d == 0 || data.is_empty() {
            return Err(Error::EmptySample);
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len() % d,
            });
        }
        let n = data.len() / d;
        if n > u32::MAX as usize {
            return Err(Error::Numerical(alloc::format!(
                "sample size {n} exceeds rank storage"
            )));
        }
        for j in 0..d {
            if (0..n).any(|i| !data[i * d + j].is_finite()) {
                return Err(Error::NonFinite { column: j });
            }
        }
        if kind == SampleKind::PseudoUniform {
            check_unit(&data).map_err(|_| Error::NotPseudoUniform)?;
        }
        let mut jittered = false;
        let mut ranks = alloc::vec![0u32; n * d];
        let mut sorted = alloc::vec![0.0; n * d];
        let mut order: Vec<usize> = (0..n).collect();
        for j in 0..d {
            let mut tied = sort_column(&data, n, d, j, &mut order);
            if tied {
                if let TiePolicy::Jitter { seed } = ties {
                    jitter_column(&mut data, n, d, j, kind, seed);
                    jittered = true;
                    tied = sort_column(&data, n, d, j, &mut order);
                }
            }
            if tied {
                return Err(Error::Ties { column: j });
            }
            for (r, &i) in order.iter().enumerate() {
                ranks[i * d + j] = r as u32 + 1;
                sorted[j * n + r] = data[i * d + j];
            }
        }
        Ok(Self {
            data,
            n,
            d,
            kind,
            ranks,
            sorted,
            jittered,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: SampleKind, ties: TiePolicy) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptySample)?;
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, d, kind, ties)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> SampleKind {
        self.kind
    }

    /// True when the jitter tie policy modified the data.
    pub fn was_jittered(&self) -> bool {
        self.jittered
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// 1-based rank of observation `i` in column `j`.
    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.d + j]
    }

    pub fn rank_row(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.d..(i + 1) * self.d]
    }

    /// Sorted values of column `j`.
    pub fn order_statistics(&self, j: usize) -> &[f64] {
        &self.sorted[j * self.n..(j + 1) * self.n]
    }

    fn check_axis(&self, j: usize) -> Result<()> {
        if j >= self.d {
            return Err(Error::AxisOutOfRange {
                axis: j,
                dim: self.d,
            });
        }
        Ok(())
    }

    /// Rescaled ranks `R/(n+1)` as an approximate pseudo-uniform sample.
    pub fn rank_pseudo_observations(&self) -> Sample {
        let scale = 1.0 / (self.n as f64 + 1.0);
        let data = self.ranks.iter().map(|&r| r as f64 * scale).collect();
        Sample::new(data, self.d, SampleKind::PseudoUniform, TiePolicy::Reject)
            .expect("ranks are distinct and inside (0,1)")
    }

    /// The first `m` rows as a sample of their own.
    pub fn prefix(&self, m: usize) -> Result<Sample> {
        let m = m.min(self.n);
        Sample::new(
            self.data[..m * self.d].to_vec(),
            self.d,
            self.kind,
            TiePolicy::Reject,
        )
    }

    /// `F_n(x) = n^-1 sum_i prod_j 1{X_ji <= x_j}`.
    pub fn joint_ecdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let count = self
            .data
            .chunks_exact(self.d)
            .filter(|row| row.iter().zip(x).all(|(a, b)| a <= b))
            .count();
        Ok(count as f64 / self.n as f64)
    }

    /// `F_jn(x)`.
    pub fn marginal_ecdf(&self, j: usize, x: f64) -> Result<f64> {
        self.check_axis(j)?;
        let count = self.order_statistics(j).partition_point(|&v| v <= x);
        Ok(count as f64 / self.n as f64)
    }

    /// `F_jn^-(t) = inf{x : F_jn(x) >= t}`: the `k`-th order statistic with
    /// `k` the smallest integer with `k/n >= t`; the column minimum at
    /// `t = 0`.
    pub fn marginal_quantile(&self, j: usize, t: f64) -> Result<f64> {
        self.check_axis(j)?;
        check_unit(&[t])?;
        let k = rank_threshold(self.n, t).max(1);
        Ok(self.order_statistics(j)[k - 1])
    }

    /// `C_n(u) = n^-1 #{i : R_ji <= k_j(u_j) for all j}` where `k_j(u)` is
    /// [`rank_threshold`].
    pub fn empirical_copula(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: u.len(),
            });
        }
        check_unit(u)?;
        let thresholds: Vec<u32> = u
            .iter()
            .map(|&x| rank_threshold(self.n, x) as u32)
            .collect();
        Ok(self.count_dominated_ranks(&thresholds) as f64 / self.n as f64)
    }

    fn count_dominated_ranks(&self, thresholds: &[u32]) -> usize {
        self.ranks
            .chunks_exact(self.d)
            .filter(|r| r.iter().zip(thresholds).all(|(a, b)| a <= b))
            .count()
    }

    /// `C~_n(u) = n^-1 sum_i prod_j 1{U_ji <= u_j}` on the raw values.
    pub fn uniform_empirical(&self, u: &[f64]) -> Result<f64> {
        self.joint_ecdf(u)
    }
}

fn sort_column(data: &[f64], n: usize, d: usize, j: usize, order: &mut [usize]) -> bool {
    for (k, o) in order.iter_mut().enumerate() {
        *o = k;
    }
    order.sort_by(|&a, &b| data[a * d + j].total_cmp(&data[b * d + j]).then(a.cmp(&b)));
    let _ = n;
    order
        .windows(2)
        .any(|w| data[w[0] * d + j] == data[w[1] * d + j])
}

fn jitter_column(data: &mut [f64], n: usize, d: usize, j: usize, kind: SampleKind, seed: u64) {
    let (lo, hi) = (0..n)
        .map(|i| data[i * d + j])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    let scale = JITTER_SCALE * if range > 0.0 { range } else { 1.0 };
    let mut rng = rng::derived_stream(seed, &[0x7155, j as u64]);
    for i in 0..n {
        let e: f64 = rng.random_range(-1.0..1.0);
        let v = &mut data[i * d + j];
        *v += scale * e;
        if kind == SampleKind::PseudoUniform {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Smallest `k in 0..=n` with `k/n >= u`, the generalized-inverse index of
/// the uniform empirical cdf. The comparison is made in floating point on
/// `k as f64 / n as f64`, which keeps rank-based and order-statistic based
/// evaluations bit-identical.
pub fn rank_threshold(n: usize, u: f64) -> usize {
    if u <= 0.0 {
        return 0;
    }
    if u >= 1.0 {
        return n;
    }
    let nf = n as f64;
    let mut k = ((u * nf).ceil() as usize).min(n);
    while k > 0 && (k - 1) as f64 / nf >= u {
        k -= 1;
    }
    while k < n && (k as f64) / nf < u {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessTag {
    /// Modified empirical copula process `A_n`.
    An,
    /// Uniform multivariate empirical process `alpha_n`.
    AlphaN,
    /// Smoothed process `Â_n`.
    SmoothedAn,
}

/// Values of a process on every point of a grid.
#[derive(Debug, Clone)]
pub struct ProcessEvaluation<'g> {
    pub grid: &'g Grid,
    pub values: Vec<f64>,
    pub tag: ProcessTag,
    pub n: usize,
}

impl ProcessEvaluation<'_> {
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_grid_dim(sample: &Sample, grid: &Grid) -> Result<()> {
    if grid.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: grid.dim(),
        });
    }
    Ok(())
}

/// `C_n` at every grid point. Tensor grids use a cumulative histogram in
/// `O(n d log m + |grid| d)`; other grids evaluate pointwise.
pub fn empirical_copula_on_grid(sample: &Sample, grid: &Grid) -> Result<Vec<f64>> {
    check_grid_dim(sample, grid)?;
    let n = sample.n();
    match grid.axes() {
        Some(axes) => {
            let thresholds: Vec<Vec<u32>> = axes
                .iter()
                .map(|a| a.iter().map(|&x| rank_threshold(n, x) as u32).collect())
                .collect();
            Ok(cumulative_counts(axes, n, |i, j| {
                let r = sample.rank(i, j);
                thresholds[j].partition_point(|&t| t < r)
            }))
        }
        None => grid.points().map(|u| sample.empirical_copula(u)).collect(),
    }
}

/// `C~_n` (counts on raw values) at every grid point.
pub fn uniform_empirical_on_grid(sample: &Sample, grid: &Grid) -> Result<Vec<f64>> {
    check_grid_dim(sample, grid)?;
    let n = sample.n();
    match grid.axes() {
        Some(axes) => Ok(cumulative_counts(axes, n, |i, j| {
            let v = sample.row(i)[j];
            axes[j].partition_point(|&x| x < v)
        })),
        None => grid.points().map(|u| sample.uniform_empirical(u)).collect(),
    }
}

/// For each observation, `first(i, j)` is the first axis index at which it
/// starts being counted (or `axis.len()` for never). The multi-dimensional
/// prefix sum of the histogram of these index tuples gives the counts.
fn cumulative_counts<F: Fn(usize, usize) -> usize>(
    axes: &[Vec<f64>],
    n: usize,
    first: F,
) -> Vec<f64> {
    let d = axes.len();
    let lens: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut strides = alloc::vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * lens[j + 1];
    }
    let total: usize = lens.iter().product();
    let mut hist = alloc::vec![0u32; total];
    'rows: for i in 0..n {
        let mut idx = 0;
        for j in 0..d {
            let g = first(i, j);
            if g >= lens[j] {
                continue 'rows;
            }
            idx += g * strides[j];
        }
        hist[idx] += 1;
    }
    for j in 0..d {
        let stride = strides[j];
        let len = lens[j];
        for k in 0..total {
            let pos = (k / stride) % len;
            if pos > 0 {
                hist[k] += hist[k - stride];
            }
        }
    }
    hist.into_iter().map(|c| c as f64 / n as f64).collect()
}

/// `C(u)` at every grid point.
pub fn model_on_grid<C: Copula + ?Sized>(model: &C, grid: &Grid) -> Vec<f64> {
    grid.points().map(|u| model.cdf_at(u)).collect()
}

/// `A_n(u) = sqrt(n) (C_n(u) - C(u))` on the grid.
pub fn copula_process<'g, C: Copula + ?Sized>(
    sample: &Sample,
    model: &C,
    grid: &'g Grid,
) -> Result<ProcessEvaluation<'g>> {
    if model.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: model.dim(),
        });
    }
    let truth = model_on_grid(model, grid);
    copula_process_with_truth(sample, &truth, grid)
}

/// As [`copula_process`] with `C` precomputed on the grid.
pub fn copula_process_with_truth<'g>(
    sample: &Sample,
    truth: &[f64],
    grid: &'g Grid,
) -> Result<ProcessEvaluation<'g>> {
    let cn = empirical_copula_on_grid(sample, grid)?;
    if truth.len() != cn.len() {
        return Err(Error::DimensionMismatch {
            expected: cn.len(),
            got: truth.len(),
        });
    }
    let rt = (sample.n() as f64).sqrt();
    let values = cn.iter().zip(truth).map(|(a, b)| rt * (a - b)).collect();
    Ok(ProcessEvaluation {
        grid,
        values,
        tag: ProcessTag::An,
        n: sample.n(),
    })
}

/// `alpha_n(u) = sqrt(n) (C~_n(u) - C(u))`; needs pseudo-uniform data.
pub fn alpha_process<'g, C: Copula + ?Sized>(
    sample: &Sample,
    model: &C,
    grid: &'g Grid,
) -> Result<ProcessEvaluation<'g>> {
    if sample.kind() != SampleKind::PseudoUniform {
        return Err(Error::NotPseudoUniform);
    }
    if model.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: model.dim(),
        });
    }
    let ct = uniform_empirical_on_grid(sample, grid)?;
    let rt = (sample.n() as f64).sqrt();
    let values = grid
        .points()
        .zip(&ct)
        .map(|(u, c)| rt * (c - model.cdf_at(u)))
        .collect();
    Ok(ProcessEvaluation {
        grid,
        values,
        tag: ProcessTag::AlphaN,
        n: sample.n(),
    })
}

/// `beta_jn(u) = sqrt(n) (G_jn^-(u) - u)` with the order-statistic
/// quantile (column minimum at `u = 0`).
pub fn beta_process(sample: &Sample, j: usize, u: f64) -> Result<f64> {
    if sample.kind() != SampleKind::PseudoUniform {
        return Err(Error::NotPseudoUniform);
    }
    let q = sample.marginal_quantile(j, u)?;
    Ok((sample.n() as f64).sqrt() * (q - u))
}

/// `sup_u |beta_jn(u)|` over all `u in [0,1]`, attained at the jump points
/// `u = k/n` (from both sides).
pub fn beta_sup(sample: &Sample, j: usize) -> Result<f64> {
    if sample.kind() != SampleKind::PseudoUniform {
        return Err(Error::NotPseudoUniform);
    }
    if j >= sample.dim() {
        return Err(Error::AxisOutOfRange {
            axis: j,
            dim: sample.dim(),
        });
    }
    let n = sample.n();
    let os = sample.order_statistics(j);
    let nf = n as f64;
    // On ((k-1)/n, k/n] the quantile equals U_(k).
    let mut sup = os[0].abs();
    for (k, &q) in os.iter().enumerate() {
        let lo = k as f64 / nf;
        let hi = (k + 1) as f64 / nf;
        sup = sup.max((q - lo).abs()).max((q - hi).abs());
    }
    Ok(nf.sqrt() * sup)
}

/// `sup_grid |C_n - C|` given `C` on the grid.
pub fn sup_deviation(sample: &Sample, truth: &[f64], grid: &Grid) -> Result<f64> {
    let cn = empirical_copula_on_grid(sample, grid)?;
    Ok(cn
        .iter()
        .zip(truth)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests;
