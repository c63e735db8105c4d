//! Kernel-smoothed empirical copula
//! `Ĉ_n(u) = h^{-1} int_{[0,1]^d} k((u - v)/h^{1/d}) C_n(v) dv`
//! and the four-term decomposition of `Â_n - A_n`.
//!
//! Because `C_n` is a sum of orthant indicators `1{v_j > (R_ji - 1)/n}`
//! (restricted to the cube) and the kernel is a product, the convolution
//! is available in closed form through the profile cdf `K1`:
//!
//! `Ĉ_n(u) = n^-1 sum_i prod_j [K1((u_j - a_ji)/b) - K1((u_j - 1)/b)]`
//!
//! with `a_ji = (R_ji - 1)/n` and `b = h^{1/d}`. No mass is added back at
//! the boundary.

use alloc::vec::Vec;
use num_traits::Float;

use crate::copula::{check_unit, Copula};
use crate::empirical::{
    copula_process_with_truth, model_on_grid, ProcessEvaluation, ProcessTag, Sample,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::{Bandwidth, Kernel};
use crate::quadrature::GaussLegendre;

/// Default Gauss-Legendre nodes per axis for smoothing the model cdf.
pub const MODEL_NODES: usize = 32;

fn check_dims(sample_dim: usize, kernel: &Kernel, bw: &Bandwidth) -> Result<()> {
    for got in [kernel.dim(), bw.dim] {
        if got != sample_dim {
            return Err(Error::DimensionMismatch {
                expected: sample_dim,
                got,
            });
        }
    }
    Ok(())
}

/// One-dimensional weight `K1((u - a)/b) - K1((u - 1)/b)`: the kernel mass
/// placed on `v in (a, 1]` around `u`.
fn axis_weight(kernel: &Kernel, b: f64, u: f64, a: f64) -> f64 {
    kernel.profile_cdf((u - a) / b) - kernel.profile_cdf((u - 1.0) / b)
}

/// `Ĉ_n(u)`.
pub fn smoothed_copula(sample: &Sample, kernel: &Kernel, bw: &Bandwidth, u: &[f64]) -> Result<f64> {
    check_dims(sample.dim(), kernel, bw)?;
    if u.len() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: u.len(),
        });
    }
    check_unit(u)?;
    let b = bw.axis_scale();
    let nf = sample.n() as f64;
    let sum: f64 = (0..sample.n())
        .map(|i| {
            sample
                .rank_row(i)
                .iter()
                .zip(u)
                .map(|(&r, &x)| axis_weight(kernel, b, x, (r - 1) as f64 / nf))
                .product::<f64>()
        })
        .sum();
    Ok(sum / nf)
}

/// `Ĉ_n` on every grid point. Tensor grids precompute the per-axis weight
/// tables, so each point costs `O(n d)` multiplications.
pub fn smoothed_copula_on_grid(
    sample: &Sample,
    kernel: &Kernel,
    bw: &Bandwidth,
    grid: &Grid,
) -> Result<Vec<f64>> {
    check_dims(sample.dim(), kernel, bw)?;
    if grid.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: grid.dim(),
        });
    }
    let Some(axes) = grid.axes() else {
        return grid
            .points()
            .map(|u| smoothed_copula(sample, kernel, bw, u))
            .collect();
    };
    let n = sample.n();
    let nf = n as f64;
    let d = sample.dim();
    let b = bw.axis_scale();
    // tables[j][g * n + (r - 1)]
    let tables: Vec<Vec<f64>> = axes
        .iter()
        .map(|axis| {
            let mut t = Vec::with_capacity(axis.len() * n);
            for &x in axis {
                t.extend((0..n).map(|r| axis_weight(kernel, b, x, r as f64 / nf)));
            }
            t
        })
        .collect();
    let lens: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut idx = alloc::vec![0usize; d];
    let mut out = Vec::with_capacity(grid.len());
    let mut prod = alloc::vec![1.0; n];
    for _ in 0..grid.len() {
        prod.iter_mut().for_each(|p| *p = 1.0);
        for j in 0..d {
            let row = &tables[j][idx[j] * n..(idx[j] + 1) * n];
            for (i, p) in prod.iter_mut().enumerate() {
                *p *= row[sample.rank(i, j) as usize - 1];
            }
        }
        out.push(prod.iter().sum::<f64>() / nf);
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < lens[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(out)
}

/// `Â_n(u) = sqrt(n) (Ĉ_n(u) - C(u))` on the grid.
pub fn smoothed_process<'g, C: Copula + ?Sized>(
    sample: &Sample,
    kernel: &Kernel,
    bw: &Bandwidth,
    model: &C,
    grid: &'g Grid,
) -> Result<ProcessEvaluation<'g>> {
    if model.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: model.dim(),
        });
    }
    let ch = smoothed_copula_on_grid(sample, kernel, bw, grid)?;
    let rt = (sample.n() as f64).sqrt();
    let values = grid
        .points()
        .zip(&ch)
        .map(|(u, c)| rt * (c - model.cdf_at(u)))
        .collect();
    Ok(ProcessEvaluation {
        grid,
        values,
        tag: ProcessTag::SmoothedAn,
        n: sample.n(),
    })
}

/// Kernel mass over the cube seen from `u`:
/// `int over prod_j [(u_j - 1)/b, u_j/b] of k`.
pub fn kernel_mass(kernel: &Kernel, bw: &Bandwidth, u: &[f64]) -> f64 {
    let b = bw.axis_scale();
    u.iter().map(|&x| axis_weight(kernel, b, x, 0.0)).product()
}

/// `int k(w) C(u - b w) dw` over the part of the kernel support that maps
/// into the cube, by tensor Gauss-Legendre with `nodes` points per axis.
pub fn smoothed_model<C: Copula + ?Sized>(
    model: &C,
    kernel: &Kernel,
    bw: &Bandwidth,
    u: &[f64],
    nodes: usize,
) -> f64 {
    let rule = GaussLegendre::new(nodes);
    smoothed_model_with(model, kernel, bw, u, &rule)
}

fn smoothed_model_with<C: Copula + ?Sized>(
    model: &C,
    kernel: &Kernel,
    bw: &Bandwidth,
    u: &[f64],
    rule: &GaussLegendre,
) -> f64 {
    let b = bw.axis_scale();
    let r = kernel.support_radius();
    let lo: Vec<f64> = u.iter().map(|&x| ((x - 1.0) / b).max(-r)).collect();
    let hi: Vec<f64> = u.iter().map(|&x| (x / b).min(r)).collect();
    if lo.iter().zip(&hi).any(|(a, c)| a >= c) {
        return 0.0;
    }
    let mut v = alloc::vec![0.0; u.len()];
    rule.integrate_box(&lo, &hi, |w| {
        let mut k = 1.0;
        for j in 0..w.len() {
            k *= kernel.profile_at(w[j]);
            v[j] = (u[j] - b * w[j]).clamp(0.0, 1.0);
        }
        if k == 0.0 {
            0.0
        } else {
            k * model.cdf_at(&v)
        }
    })
}

/// Pointwise split of `Â_n - A_n = sqrt(n)(Ĉ_n - C_n)` into
///
/// * `nabla1 = sqrt(n)(Ĉ_n - C̄) - A_n m` (kernel-modulus term),
/// * `nabla2 = A_n (m - 1)` (kernel-mass term),
/// * `nabla3 = sqrt(n)(C̄ - C m)` (bias term),
/// * `nabla4 = sqrt(n) C (m - 1)` (C-mass term),
///
/// where `m` is [`kernel_mass`] and `C̄` is [`smoothed_model`]. The four
/// signed terms add up to `Â_n - A_n` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingDecomposition {
    pub difference: Vec<f64>,
    pub terms: Vec<[f64; 4]>,
    pub smoothed: Vec<f64>,
    pub process: Vec<f64>,
}

impl SmoothingDecomposition {
    /// `sup |Â_n - A_n|` over the grid.
    pub fn sup_difference(&self) -> f64 {
        self.difference.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norms of the four terms.
    pub fn sup_terms(&self) -> [f64; 4] {
        let mut s = [0.0f64; 4];
        for t in &self.terms {
            for k in 0..4 {
                s[k] = s[k].max(t[k].abs());
            }
        }
        s
    }
}

pub fn decompose_smoothing_error<C: Copula + ?Sized>(
    sample: &Sample,
    kernel: &Kernel,
    bw: &Bandwidth,
    model: &C,
    grid: &Grid,
) -> Result<SmoothingDecomposition> {
    let model_terms = ModelSmoothing::new(model, kernel, bw, grid)?;
    decompose_with(sample, kernel, bw, &model_terms, grid)
}

/// The sample-independent pieces of the decomposition (`C`, `C̄`, mass) on
/// a grid, reusable across replicates with the same bandwidth.
#[derive(Debug, Clone)]
pub struct ModelSmoothing {
    truth: Vec<f64>,
    smoothed: Vec<f64>,
    mass: Vec<f64>,
}

impl ModelSmoothing {
    pub fn new<C: Copula + ?Sized>(
        model: &C,
        kernel: &Kernel,
        bw: &Bandwidth,
        grid: &Grid,
    ) -> Result<Self> {
        check_dims(model.dim(), kernel, bw)?;
        if grid.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: grid.dim(),
            });
        }
        let rule = GaussLegendre::new(MODEL_NODES);
        Ok(Self {
            truth: model_on_grid(model, grid),
            smoothed: grid
                .points()
                .map(|u| smoothed_model_with(model, kernel, bw, u, &rule))
                .collect(),
            mass: grid.points().map(|u| kernel_mass(kernel, bw, u)).collect(),
        })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn smoothed_model(&self) -> &[f64] {
        &self.smoothed
    }
}

pub fn decompose_with(
    sample: &Sample,
    kernel: &Kernel,
    bw: &Bandwidth,
    model_terms: &ModelSmoothing,
    grid: &Grid,
) -> Result<SmoothingDecomposition> {
    let ch = smoothed_copula_on_grid(sample, kernel, bw, grid)?;
    let an = copula_process_with_truth(sample, &model_terms.truth, grid)?.values;
    let rt = (sample.n() as f64).sqrt();
    let mut terms = Vec::with_capacity(grid.len());
    let mut difference = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (c, cbar, m) = (
            model_terms.truth[k],
            model_terms.smoothed[k],
            model_terms.mass[k],
        );
        let t = [
            rt * (ch[k] - cbar) - an[k] * m,
            an[k] * (m - 1.0),
            rt * (cbar - c * m),
            rt * c * (m - 1.0),
        ];
        terms.push(t);
        difference.push(rt * (ch[k] - c) - an[k]);
    }
    Ok(SmoothingDecomposition {
        difference,
        terms,
        smoothed: ch,
        process: an,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::CopulaModel;
    use crate::empirical::empirical_copula_on_grid;
    use crate::kernel::Profile;
    use proptest::prelude::*;
    use std::vec;

    // Independent oracle: tensor quadrature of the convolution over the
    // cube, split at the jump points of C_n.
    fn convolution_oracle(sample: &Sample, kernel: &Kernel, bw: &Bandwidth, u: &[f64]) -> f64 {
        let b = bw.axis_scale();
        let n = sample.n();
        let r = kernel.support_radius();
        let rule = GaussLegendre::new(12);
        // Breakpoints per axis: cell edges k/n and the support ends.
        let mut total = 0.0;
        let cuts: Vec<Vec<f64>> = u
            .iter()
            .map(|&x| {
                let lo = (x - r * b).max(0.0);
                let hi = (x + r * b).min(1.0);
                let mut c: Vec<f64> = (0..=n)
                    .map(|k| k as f64 / n as f64)
                    .filter(|&t| t > lo && t < hi)
                    .collect();
                c.insert(0, lo);
                c.push(hi);
                c
            })
            .collect();
        assert_eq!(u.len(), 2);
        for a in cuts[0].windows(2) {
            for c in cuts[1].windows(2) {
                total += rule.integrate_box(&[a[0], c[0]], &[a[1], c[1]], |v| {
                    let k =
                        kernel.profile_at((u[0] - v[0]) / b) * kernel.profile_at((u[1] - v[1]) / b);
                    k * sample.empirical_copula(v).unwrap()
                });
            }
        }
        total / bw.h
    }

    #[test]
    fn closed_form_matches_direct_convolution() {
        let s = CopulaModel::clayton(2, 1.5).unwrap().sample(12, 5).unwrap();
        for profile in [
            Profile::Epanechnikov,
            Profile::Quartic,
            Profile::HigherOrder(4),
        ] {
            let k = Kernel::new(profile, 2).unwrap();
            let bw = Bandwidth::new(0.04, 12, k.order(), 2).unwrap();
            for u in [[0.5, 0.5], [0.1, 0.8], [0.95, 0.3], [0.0, 0.6], [1.0, 1.0]] {
                let fast = smoothed_copula(&s, &k, &bw, &u).unwrap();
                let slow = convolution_oracle(&s, &k, &bw, &u);
                assert!(
                    (fast - slow).abs() < 1e-10,
                    "{profile:?} {u:?}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn tensor_grid_matches_pointwise() {
        let s = CopulaModel::frank(3, 2.0).unwrap().sample(40, 2).unwrap();
        let k = Kernel::new(Profile::Quartic, 3).unwrap();
        let bw = Bandwidth::new(0.01, 40, 2, 3).unwrap();
        let g = Grid::uniform(3, 5).unwrap();
        let fast = smoothed_copula_on_grid(&s, &k, &bw, &g).unwrap();
        for (k_, u) in g.points().enumerate() {
            let p = smoothed_copula(&s, &k, &bw, u).unwrap();
            assert!((fast[k_] - p).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_interior_mass_is_one() {
        let k = Kernel::new(Profile::Epanechnikov, 2).unwrap();
        let bw = Bandwidth::new(0.01, 100, 2, 2).unwrap();
        assert!((kernel_mass(&k, &bw, &[0.5, 0.5]) - 1.0).abs() < 1e-15);
        // Half the support hangs over each edge at a corner.
        assert!((kernel_mass(&k, &bw, &[1.0, 1.0]) - 0.25).abs() < 1e-15);
        assert!((kernel_mass(&k, &bw, &[0.0, 0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn approximate_identity() {
        let s = CopulaModel::independence(2).sample(30, 8).unwrap();
        let k = Kernel::new(Profile::Epanechnikov, 2).unwrap();
        let u = [0.45, 0.55];
        let target = s.empirical_copula(&u).unwrap();
        let bw = Bandwidth::new(1e-4, 30, 2, 2).unwrap();
        assert!((smoothed_copula(&s, &k, &bw, &u).unwrap() - target).abs() < 1e-3);
    }

    #[test]
    fn close_to_cn_for_moderate_bandwidth() {
        let n = 500;
        let s = CopulaModel::independence(2).sample(n, 4).unwrap();
        let k = Kernel::new(Profile::Epanechnikov, 2).unwrap();
        let bw = Bandwidth::new(1.0 / (n as f64).sqrt(), n, 2, 2).unwrap();
        let g = Grid::uniform(2, 21)
            .unwrap()
            .trimmed(bw.axis_scale())
            .unwrap();
        let ch = smoothed_copula_on_grid(&s, &k, &bw, &g).unwrap();
        let cn = empirical_copula_on_grid(&s, &g).unwrap();
        let sup = ch
            .iter()
            .zip(&cn)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // Lipschitz-1 margins: each axis moves by at most the support width.
        assert!(sup < 2.0 * bw.axis_scale() + 2.0 / n as f64, "sup {sup}");
    }

    #[test]
    fn smoothed_model_bias_order() {
        // With C plugged in, |C̄ - C| / h^{s/d} stays bounded as h shrinks.
        let m = CopulaModel::fgm(2, 1.0).unwrap();
        let u = [0.5, 0.4];
        for profile in [Profile::Epanechnikov, Profile::HigherOrder(4)] {
            let k = Kernel::new(profile, 2).unwrap();
            let s = k.order() as f64;
            let mut ratios = vec![];
            for &h in &[0.04, 0.01, 0.0025] {
                let bw = Bandwidth::new(h, 100, k.order(), 2).unwrap();
                let c = smoothed_model(&m, &k, &bw, &u, 32);
                ratios.push((c - m.cdf(&u).unwrap()).abs() / h.powf(s / 2.0));
            }
            assert!(ratios.iter().all(|r| *r < 1.0), "{profile:?} {ratios:?}");
        }
        // Halving h with an order-2 kernel divides the bias by ~2^{2/d}.
        let k = Kernel::new(Profile::Epanechnikov, 2).unwrap();
        let bias = |h: f64| {
            let bw = Bandwidth::new(h, 100, 2, 2).unwrap();
            smoothed_model(&m, &k, &bw, &u, 32) - m.cdf(&u).unwrap()
        };
        let ratio = bias(0.01) / bias(0.005);
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn monotone_away_from_the_upper_edge() {
        // Within one support width of u_j = 1 the cube truncation removes
        // mass as u_j grows, so monotonicity only holds below that band.
        let s = CopulaModel::gumbel(2, 2.0).unwrap().sample(60, 1).unwrap();
        let k = Kernel::new(Profile::Quartic, 2).unwrap();
        let bw = Bandwidth::new(0.02, 60, 2, 2).unwrap();
        let top = 1.0 - bw.axis_scale();
        let axis: Vec<f64> = (0..15).map(|i| top * i as f64 / 14.0).collect();
        let g = Grid::tensor(vec![axis.clone(), axis], false).unwrap();
        let v = smoothed_copula_on_grid(&s, &k, &bw, &g).unwrap();
        for i in 0..15 {
            for j in 0..15 {
                let here = v[i * 15 + j];
                assert!((0.0..=1.0 + 1e-12).contains(&here));
                if i + 1 < 15 {
                    assert!(v[(i + 1) * 15 + j] >= here - 1e-10);
                }
                if j + 1 < 15 {
                    assert!(v[i * 15 + j + 1] >= here - 1e-10);
                }
            }
        }
        // Inside the band it can decrease.
        let near = smoothed_copula(&s, &k, &bw, &[1.0 - 0.5 * bw.axis_scale(), 1.0]).unwrap();
        let edge = smoothed_copula(&s, &k, &bw, &[1.0, 1.0]).unwrap();
        assert!(edge < near);
    }

    #[test]
    fn corner_shows_boundary_loss() {
        let m = CopulaModel::independence(2);
        let s = m.sample(200, 3).unwrap();
        let k = Kernel::new(Profile::Epanechnikov, 2).unwrap();
        let bw = Bandwidth::new(0.01, 200, 2, 2).unwrap();
        let g = Grid::uniform(2, 3).unwrap();
        let p = smoothed_process(&s, &k, &bw, &m, &g).unwrap();
        assert_eq!(p.tag, ProcessTag::SmoothedAn);
        assert!(p.values[g.len() - 1] < 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn decomposition_adds_up(n in 5usize..120, seed in any::<u64>(), h in 0.001f64..0.3, order4 in any::<bool>()) {
            let m = CopulaModel::fgm(2, 0.7).unwrap();
            let s = m.sample(n, seed).unwrap();
            let profile = if order4 { Profile::HigherOrder(4) } else { Profile::Epanechnikov };
            let k = Kernel::new(profile, 2).unwrap();
            let bw = Bandwidth::new(h, n, k.order(), 2).unwrap();
            let g = Grid::uniform(2, 6).unwrap();
            let dec = decompose_smoothing_error(&s, &k, &bw, &m, &g).unwrap();
            for (t, d) in dec.terms.iter().zip(&dec.difference) {
                prop_assert!((t.iter().sum::<f64>() - d).abs() < 1e-10);
            }
            let ah = smoothed_process(&s, &k, &bw, &m, &g).unwrap();
            for (k_, d) in dec.difference.iter().enumerate() {
                prop_assert!((ah.values[k_] - dec.process[k_] - d).abs() < 1e-10);
            }
        }
    }
}
