//! Gaussian fields on a grid: the copula Brownian bridge `B_C`, the Kiefer
//! field `K_C(., t)` at integer times and the corrected process
//! `K*(u, t) = K(u, t) - sum_j K(1,..,u_j,..,1, t) dC(u)/du_j`.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg;
use crate::rng;

/// Points whose bridge variance is below this are treated as pinned to 0.
pub const DEGENERATE_VARIANCE: f64 = 1e-15;

/// Diagonal jitter tried in order until the factorization succeeds.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

fn meet(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a.min(*b)).collect()
}

/// `C(u ∧ v) - C(u) C(v)`.
pub fn bridge_covariance<C: Copula + ?Sized>(model: &C, u: &[f64], v: &[f64]) -> f64 {
    model.cdf_at(&meet(u, v)) - model.cdf_at(u) * model.cdf_at(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    BridgeBC,
    KieferKC,
    KStar,
}

/// Values of one field draw on every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub time_index: u64,
    pub tag: FieldTag,
    pub seed: u64,
}

impl FieldSample {
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Cholesky factor of the bridge covariance restricted to the grid points
/// with positive variance; the others are pinned to zero.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    grid: Grid,
    active: Vec<usize>,
    degenerate: Vec<usize>,
    factor: Vec<f64>,
    jitter: f64,
}

/// Assembles `Σ` over the non-degenerate grid points and factorizes it,
/// escalating the diagonal jitter along [`JITTER_LADDER`].
pub fn build_factor<C: Copula + ?Sized>(model: &C, grid: &Grid) -> Result<CovarianceFactor> {
    if grid.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: grid.dim(),
        });
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cdf: Vec<f64> = grid.points().map(|u| model.cdf_at(u)).collect();
    let (active, degenerate): (Vec<usize>, Vec<usize>) =
        (0..grid.len()).partition(|&k| cdf[k] - cdf[k] * cdf[k] > DEGENERATE_VARIANCE);
    let m = active.len();
    let mut sigma = alloc::vec![0.0; m * m];
    for a in 0..m {
        let u = grid.point(active[a]);
        for b in 0..=a {
            let v = grid.point(active[b]);
            let s = model.cdf_at(&meet(u, v)) - cdf[active[a]] * cdf[active[b]];
            sigma[a * m + b] = s;
            sigma[b * m + a] = s;
        }
    }
    for &jitter in &JITTER_LADDER {
        if let Some(factor) = linalg::cholesky(&sigma, m, jitter) {
            return Ok(CovarianceFactor {
                grid: grid.clone(),
                active,
                degenerate,
                factor,
                jitter,
            });
        }
    }
    let min_eigenvalue = linalg::symmetric_eigenvalues(&sigma, m)
        .first()
        .copied()
        .unwrap_or(0.0);
    Err(Error::FactorizationFailed { min_eigenvalue })
}

impl CovarianceFactor {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Grid indices excluded from the factorization (zero variance).
    pub fn degenerate_points(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn active_points(&self) -> &[usize] {
        &self.active
    }

    /// Row-major lower-triangular factor over [`Self::active_points`].
    pub fn matrix_factor(&self) -> &[f64] {
        &self.factor
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// One bridge draw from `rng` into `out` (grid length), using `z` as
    /// scratch for the standard normals.
    pub fn draw_bridge<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        z: &mut Vec<f64>,
        y: &mut Vec<f64>,
        out: &mut [f64],
    ) {
        let m = self.active.len();
        z.clear();
        z.extend((0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        y.resize(m, 0.0);
        linalg::lower_mul(&self.factor, m, z, y);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, &k) in self.active.iter().enumerate() {
            out[k] = y[a];
        }
    }

    /// `B_C` on the grid; degenerate points are exactly 0.
    pub fn sample_bridge(&self, seed: u64) -> FieldSample {
        let mut rng = rng::stream(seed);
        let mut values = alloc::vec![0.0; self.grid.len()];
        self.draw_bridge(&mut rng, &mut Vec::new(), &mut Vec::new(), &mut values);
        FieldSample {
            values,
            time_index: 1,
            tag: FieldTag::BridgeBC,
            seed,
        }
    }

    /// `K_C(., k)` for `k = 0..=t_max` as partial sums of independent
    /// bridges; entry 0 is identically zero.
    pub fn sample_kiefer(&self, t_max: u64, seed: u64) -> Vec<FieldSample> {
        let mut rng = rng::stream(seed);
        let len = self.grid.len();
        let mut acc = alloc::vec![0.0; len];
        let mut inc = alloc::vec![0.0; len];
        let (mut z, mut y) = (Vec::new(), Vec::new());
        let mut out = Vec::with_capacity(t_max as usize + 1);
        out.push(FieldSample {
            values: acc.clone(),
            time_index: 0,
            tag: FieldTag::KieferKC,
            seed,
        });
        for k in 1..=t_max {
            self.draw_bridge(&mut rng, &mut z, &mut y, &mut inc);
            acc.iter_mut().zip(&inc).for_each(|(a, b)| *a += b);
            out.push(FieldSample {
                values: acc.clone(),
                time_index: k,
                tag: FieldTag::KieferKC,
                seed,
            });
        }
        out
    }
}

/// For each grid point and axis, the grid index of its margin point
/// `(1,..,u_j,..,1)`.
fn margin_indices(grid: &Grid) -> Result<Vec<usize>> {
    let d = grid.dim();
    let mut idx = Vec::with_capacity(grid.len() * d);
    for u in grid.points() {
        for (j, &x) in u.iter().enumerate() {
            idx.push(
                grid.margin_point(j, x)
                    .ok_or(Error::MissingMarginPoint { axis: j, value: x })?,
            );
        }
    }
    Ok(idx)
}

/// Applies `K*(u) = K(u) - sum_j K(m_j(u)) w_j(u)` to a field given on the
/// grid, with `weights[k * d + j] = dC(u_k)/du_j`. Fails if a margin point
/// is missing from the grid.
pub fn kstar_transform(grid: &Grid, field: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let d = grid.dim();
    if field.len() != grid.len() || weights.len() != grid.len() * d {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: field.len(),
        });
    }
    let idx = margin_indices(grid)?;
    Ok(apply_kstar(field, weights, &idx, d))
}

fn apply_kstar(field: &[f64], weights: &[f64], idx: &[usize], d: usize) -> Vec<f64> {
    (0..field.len())
        .map(|k| {
            let corr: f64 = (0..d)
                .map(|j| field[idx[k * d + j]] * weights[k * d + j])
                .sum();
            field[k] - corr
        })
        .collect()
}

/// Precomputed factor, partial derivatives and margin lookups for repeated
/// `K*` draws on one grid.
#[derive(Debug, Clone)]
pub struct KStarSampler {
    factor: CovarianceFactor,
    weights: Vec<f64>,
    margins: Vec<usize>,
}

impl KStarSampler {
    pub fn new<C: Copula + ?Sized>(model: &C, grid: &Grid) -> Result<Self> {
        let margins = margin_indices(grid)?;
        let factor = build_factor(model, grid)?;
        let d = grid.dim();
        let mut weights = Vec::with_capacity(grid.len() * d);
        for u in grid.points() {
            weights.extend((0..d).map(|j| model.partial_at(u, j)));
        }
        Ok(Self {
            factor,
            weights,
            margins,
        })
    }

    pub fn factor(&self) -> &CovarianceFactor {
        &self.factor
    }

    /// `dC(u_k)/du_j` at `k * d + j`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One draw of `K*(., time)` from `rng`: `sqrt(time)` times the
    /// transformed bridge, which has the law of the Kiefer-based process at
    /// that fixed time.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, time: u64) -> Vec<f64> {
        let mut bridge = alloc::vec![0.0; self.factor.grid.len()];
        self.factor
            .draw_bridge(rng, &mut Vec::new(), &mut Vec::new(), &mut bridge);
        let scale = (time as f64).sqrt();
        let mut v = apply_kstar(
            &bridge,
            &self.weights,
            &self.margins,
            self.factor.grid.dim(),
        );
        v.iter_mut().for_each(|x| *x *= scale);
        v
    }

    pub fn sample(&self, time: u64, seed: u64) -> FieldSample {
        let mut rng = rng::stream(seed);
        FieldSample {
            values: self.draw(&mut rng, time),
            time_index: time,
            tag: FieldTag::KStar,
            seed,
        }
    }

    /// `K*(., t)` for `t = 0..=t_max` from one Kiefer path, transformed
    /// at each time.
    pub fn sample_path(&self, t_max: u64, seed: u64) -> Vec<FieldSample> {
        self.factor
            .sample_kiefer(t_max, seed)
            .into_iter()
            .map(|k| FieldSample {
                values: apply_kstar(
                    &k.values,
                    &self.weights,
                    &self.margins,
                    self.factor.grid.dim(),
                ),
                time_index: k.time_index,
                tag: FieldTag::KStar,
                seed,
            })
            .collect()
    }
}

/// One draw of `K*(., time)` on a margin-augmented grid.
pub fn sample_kstar<C: Copula + ?Sized>(
    model: &C,
    grid: &Grid,
    time: u64,
    seed: u64,
) -> Result<FieldSample> {
    Ok(KStarSampler::new(model, grid)?.sample(time, seed))
}

fn with_coordinate(u: &[f64], j: usize, x: f64) -> Vec<f64> {
    let mut p = u.to_vec();
    p[j] = x;
    p
}

/// `Cov(K*(u, 1), K*(v, 1))` by bilinear expansion of the `K*` transform
/// with `Cov(K(u), K(v)) = C(u ∧ v) - C(u)C(v)`:
///
/// ```text
/// Σ(u,v) - Σ_j ∂_jC(v) [C(u with u_j ∧ v_j) - C(u) v_j]
///        - Σ_i ∂_iC(u) [C(v with u_i ∧ v_i) - C(v) u_i]
///        + Σ_i Σ_j ∂_iC(u) ∂_jC(v) [C_ij(u_i, v_j) - u_i v_j]
/// ```
///
/// where `C_ij(s, t)` is the bivariate margin and `C_ii(s, t) = s ∧ t`.
pub fn kstar_covariance<C: Copula + ?Sized>(model: &C, u: &[f64], v: &[f64]) -> f64 {
    let d = model.dim();
    let cu = model.cdf_at(u);
    let cv = model.cdf_at(v);
    let pu: Vec<f64> = (0..d).map(|j| model.partial_at(u, j)).collect();
    let pv: Vec<f64> = (0..d).map(|j| model.partial_at(v, j)).collect();
    let mut cov = model.cdf_at(&meet(u, v)) - cu * cv;
    for j in 0..d {
        let m = u[j].min(v[j]);
        cov -= pv[j] * (model.cdf_at(&with_coordinate(u, j, m)) - cu * v[j]);
        cov -= pu[j] * (model.cdf_at(&with_coordinate(v, j, m)) - cv * u[j]);
    }
    let mut ones = alloc::vec![1.0; d];
    for i in 0..d {
        for j in 0..d {
            let cross = if i == j {
                u[i].min(v[i])
            } else {
                ones[i] = u[i];
                ones[j] = v[j];
                let c = model.cdf_at(&ones);
                ones[i] = 1.0;
                ones[j] = 1.0;
                c
            };
            cov += pu[i] * pv[j] * (cross - u[i] * v[j]);
        }
    }
    cov
}

/// Step below which the coordinate search in [`kstar_variance_sup`] stops.
pub const REFINE_TOLERANCE: f64 = 1e-6;

/// `sup_u Var(K*(u, 1))`: grid argmax followed by coordinatewise
/// step-halving search. Returns the value and the maximizing point.
pub fn kstar_variance_sup<C: Copula + ?Sized>(model: &C, grid: &Grid) -> Result<(f64, Vec<f64>)> {
    if grid.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: grid.dim(),
        });
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let var = |u: &[f64]| kstar_covariance(model, u, u);
    let (mut best, mut point) = grid.points().map(|u| (var(u), u.to_vec())).fold(
        (f64::NEG_INFINITY, Vec::new()),
        |acc, cur| if cur.0 > acc.0 { cur } else { acc },
    );
    let mut step = match grid.axes() {
        Some(axes) => axes
            .iter()
            .filter(|a| a.len() > 1)
            .map(|a| a[1] - a[0])
            .fold(0.0, f64::max),
        None => 0.0,
    }
    .max(0.05);
    while step >= REFINE_TOLERANCE {
        let mut improved = false;
        for j in 0..point.len() {
            for dir in [-1.0, 1.0] {
                let x = (point[j] + dir * step).clamp(0.0, 1.0);
                let cand = with_coordinate(&point, j, x);
                let val = var(&cand);
                if val > best {
                    best = val;
                    point = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, point))
}
