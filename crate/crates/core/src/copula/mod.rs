//! Parametric copula families.
//!
//! A [`CopulaModel`] is validated at construction and immutable afterwards,
//! so evaluation never fails on parameter grounds. The [`Copula`] trait is
//! the unchecked evaluation surface used by the numerical code; the checked
//! `cdf`/`partial` methods on the model validate points first.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special::{bvn_cdf, norm_cdf, norm_pdf, norm_quantile};

mod sampling;

/// Finite-difference step for partial derivatives without a closed form.
pub const FD_STEP: f64 = 1e-5;

/// Nodes of the one-factor integral used by the exchangeable Gaussian copula.
const FACTOR_NODES: usize = 160;
const FACTOR_RANGE: f64 = 9.0;

/// Evaluation surface shared by models and adapters.
///
/// Implementations may assume `u.len() == self.dim()` and `u` in the cube.
pub trait Copula: Sync {
    fn dim(&self) -> usize;

    fn cdf_at(&self, u: &[f64]) -> f64;

    /// First partial derivative in coordinate `j`, clamped to `[0, 1]`.
    fn partial_at(&self, u: &[f64], j: usize) -> f64 {
        finite_difference_partial(self, u, j).0
    }
}

/// How a partial derivative was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativePath {
    Analytic,
    Central,
    Forward,
    Backward,
}

/// Difference quotient of `cdf_at` in coordinate `j` with step [`FD_STEP`];
/// one-sided within a step of the boundary.
pub fn finite_difference_partial<C: Copula + ?Sized>(
    c: &C,
    u: &[f64],
    j: usize,
) -> (f64, DerivativePath) {
    let h = FD_STEP;
    let x = u[j];
    let mut p = u.to_vec();
    let mut at = |t: f64| {
        p[j] = t;
        c.cdf_at(&p)
    };
    let (v, path) = if x < h {
        ((at(x + h) - at(x)) / h, DerivativePath::Forward)
    } else if x > 1.0 - h {
        ((at(x) - at(x - h)) / h, DerivativePath::Backward)
    } else {
        ((at(x + h) - at(x - h)) / (2.0 * h), DerivativePath::Central)
    };
    (v.clamp(0.0, 1.0), path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Independence,
    Clayton,
    Gumbel,
    Frank,
    Gaussian,
    Fgm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Gaussian => "gaussian",
            Family::Fgm => "fgm",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        let lower = name.trim().to_ascii_lowercase();
        Some(match lower.as_str() {
            "independence" | "product" | "indep" => Family::Independence,
            "clayton" => Family::Clayton,
            "gumbel" | "gumbel-hougaard" => Family::Gumbel,
            "frank" => Family::Frank,
            "gaussian" | "normal" => Family::Gaussian,
            "fgm" | "farlie-gumbel-morgenstern" => Family::Fgm,
            _ => return None,
        })
    }

    pub const ALL: [Family; 6] = [
        Family::Independence,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Gaussian,
        Family::Fgm,
    ];

    /// Whether second partials stay bounded on the closed cube. Clayton and
    /// Gumbel blow up at the corners.
    pub fn smooth_on_closed_cube(self) -> bool {
        !matches!(self, Family::Clayton | Family::Gumbel)
    }
}

/// A parametric copula: family, dimension and (at most one) parameter.
///
/// Parameter domains: Clayton `theta > 0`; Gumbel `theta >= 1`; Frank
/// `theta != 0` for `d = 2` and `theta > 0` above; Gaussian correlation in
/// `(-1, 1)` for `d = 2` and exchangeable `[0, 1)` above; FGM
/// `theta in [-1, 1]` on the top-order term.
#[derive(Debug, Clone)]
pub struct CopulaModel {
    family: Family,
    dim: usize,
    theta: f64,
    factor_rule: Option<Vec<(f64, f64)>>,
}

impl PartialEq for CopulaModel {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
            && self.dim == other.dim
            && self.theta.to_bits() == other.theta.to_bits()
    }
}

fn invalid(family: Family, reason: alloc::string::String) -> Error {
    Error::InvalidParameter {
        family: family.name(),
        reason,
    }
}

impl CopulaModel {
    pub fn new(family: Family, dim: usize, params: &[f64]) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(
                family,
                format!("dimension must be at least 2, got {dim}"),
            ));
        }
        let expected = usize::from(family != Family::Independence);
        if params.len() != expected {
            return Err(invalid(
                family,
                format!("expected {expected} parameter(s), got {}", params.len()),
            ));
        }
        let theta = params.first().copied().unwrap_or(0.0);
        if !theta.is_finite() {
            return Err(invalid(
                family,
                format!("parameter must be finite, got {theta}"),
            ));
        }
        let ok = match family {
            Family::Independence => true,
            Family::Clayton => theta > 0.0,
            Family::Gumbel => theta >= 1.0,
            Family::Frank => {
                if dim == 2 {
                    theta != 0.0
                } else {
                    theta > 0.0
                }
            }
            Family::Gaussian => {
                if dim == 2 {
                    theta > -1.0 && theta < 1.0
                } else {
                    (0.0..1.0).contains(&theta)
                }
            }
            Family::Fgm => (-1.0..=1.0).contains(&theta),
        };
        if !ok {
            return Err(invalid(
                family,
                format!("theta = {theta} outside the family domain for d = {dim}"),
            ));
        }
        let factor_rule = (family == Family::Gaussian && dim > 2).then(|| {
            GaussLegendre::new(FACTOR_NODES)
                .mapped(-FACTOR_RANGE, FACTOR_RANGE)
                .collect()
        });
        Ok(Self {
            family,
            dim,
            theta,
            factor_rule,
        })
    }

    pub fn independence(dim: usize) -> Self {
        Self::new(Family::Independence, dim, &[]).expect("independence is valid for d >= 2")
    }

    pub fn clayton(dim: usize, theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, dim, &[theta])
    }

    pub fn gumbel(dim: usize, theta: f64) -> Result<Self> {
        Self::new(Family::Gumbel, dim, &[theta])
    }

    pub fn frank(dim: usize, theta: f64) -> Result<Self> {
        Self::new(Family::Frank, dim, &[theta])
    }

    pub fn gaussian(dim: usize, rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian, dim, &[rho])
    }

    pub fn fgm(dim: usize, theta: f64) -> Result<Self> {
        Self::new(Family::Fgm, dim, &[theta])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> Vec<f64> {
        match self.family {
            Family::Independence => Vec::new(),
            _ => alloc::vec![self.theta],
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        check_unit(u)
    }

    /// `C(u)`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        Ok(self.cdf_at(u))
    }

    /// `dC/du_j` (zero-based `j`).
    pub fn partial(&self, u: &[f64], j: usize) -> Result<f64> {
        Ok(self.partial_with_path(u, j)?.0)
    }

    /// Partial derivative together with the path taken: analytic on the
    /// open cube when the family has a closed form, finite differences
    /// otherwise.
    pub fn partial_with_path(&self, u: &[f64], j: usize) -> Result<(f64, DerivativePath)> {
        self.check_point(u)?;
        if j >= self.dim {
            return Err(Error::AxisOutOfRange {
                axis: j,
                dim: self.dim,
            });
        }
        Ok(self.partial_and_path(u, j))
    }

    fn partial_and_path(&self, u: &[f64], j: usize) -> (f64, DerivativePath) {
        let interior = u.iter().all(|&x| x > 0.0 && x < 1.0);
        if interior {
            if let Some(v) = self.analytic_partial(u, j) {
                return (v.clamp(0.0, 1.0), DerivativePath::Analytic);
            }
        }
        finite_difference_partial(self, u, j)
    }

    /// `C` at the point with coordinate `i` set to `s`, `j` set to `t`, all
    /// others 1.
    pub fn bivariate_margin(&self, i: usize, j: usize, s: f64, t: f64) -> Result<f64> {
        for axis in [i, j] {
            if axis >= self.dim {
                return Err(Error::AxisOutOfRange {
                    axis,
                    dim: self.dim,
                });
            }
        }
        if i == j {
            return Err(invalid(
                self.family,
                format!("bivariate margin needs distinct axes, got {i} twice"),
            ));
        }
        check_unit(&[s, t])?;
        let mut p = alloc::vec![1.0; self.dim];
        p[i] = s;
        p[j] = t;
        Ok(self.cdf_at(&p))
    }

    fn raw_cdf(&self, u: &[f64]) -> f64 {
        let th = self.theta;
        match self.family {
            Family::Independence => u.iter().product(),
            Family::Clayton => {
                let s: f64 = u.iter().map(|&x| x.powf(-th)).sum::<f64>() - (self.dim as f64 - 1.0);
                s.powf(-1.0 / th)
            }
            Family::Gumbel => {
                let t: f64 = u.iter().map(|&x| (-x.ln()).powf(th)).sum();
                (-t.powf(1.0 / th)).exp()
            }
            Family::Frank => {
                let p: f64 = u.iter().map(|&x| (-th * x).exp_m1()).product();
                let d = (-th).exp_m1().powi(self.dim as i32 - 1);
                -(p / d).ln_1p() / th
            }
            Family::Gaussian => {
                if self.dim == 2 {
                    if u[0] >= 1.0 {
                        return u[1];
                    }
                    if u[1] >= 1.0 {
                        return u[0];
                    }
                    bvn_cdf(norm_quantile(u[0]), norm_quantile(u[1]), th)
                } else {
                    let x: Vec<f64> = u.iter().map(|&v| norm_quantile(v)).collect();
                    let a = th.sqrt();
                    let b = (1.0 - th).sqrt();
                    self.factor_rule
                        .as_ref()
                        .expect("factor rule exists for d > 2")
                        .iter()
                        .map(|&(z, w)| {
                            w * norm_pdf(z)
                                * x.iter()
                                    .map(|&xi| norm_cdf((xi - a * z) / b))
                                    .product::<f64>()
                        })
                        .sum()
                }
            }
            Family::Fgm => {
                let prod: f64 = u.iter().product();
                let comp: f64 = u.iter().map(|&x| 1.0 - x).product();
                prod * (1.0 + th * comp)
            }
        }
    }

    fn analytic_partial(&self, u: &[f64], j: usize) -> Option<f64> {
        let th = self.theta;
        let others = || {
            u.iter()
                .enumerate()
                .filter(move |&(i, _)| i != j)
                .map(|(_, &x)| x)
        };
        Some(match self.family {
            Family::Independence => others().product(),
            Family::Clayton => {
                let s: f64 = u.iter().map(|&x| x.powf(-th)).sum::<f64>() - (self.dim as f64 - 1.0);
                u[j].powf(-th - 1.0) * s.powf(-1.0 / th - 1.0)
            }
            Family::Gumbel => {
                let t: f64 = u.iter().map(|&x| (-x.ln()).powf(th)).sum();
                let c = (-t.powf(1.0 / th)).exp();
                c * t.powf(1.0 / th - 1.0) * (-u[j].ln()).powf(th - 1.0) / u[j]
            }
            Family::Frank => {
                let e: Vec<f64> = u.iter().map(|&x| (-th * x).exp_m1()).collect();
                let p: f64 = e.iter().product();
                let d = (-th).exp_m1().powi(self.dim as i32 - 1);
                let rest: f64 = e
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &x)| x)
                    .product();
                (-th * u[j]).exp() * rest / (d + p)
            }
            Family::Gaussian if self.dim == 2 => {
                let xj = norm_quantile(u[j]);
                let xo = norm_quantile(u[1 - j]);
                norm_cdf((xo - th * xj) / (1.0 - th * th).sqrt())
            }
            Family::Gaussian => return None,
            Family::Fgm => {
                let prod: f64 = others().product();
                let comp: f64 = others().map(|x| 1.0 - x).product();
                prod * (1.0 + th * (1.0 - 2.0 * u[j]) * comp)
            }
        })
    }
}

impl Copula for CopulaModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn cdf_at(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let upper = u.iter().copied().fold(1.0, f64::min);
        let lower = (u.iter().sum::<f64>() - (self.dim as f64 - 1.0)).clamp(0.0, upper);
        let v = self.raw_cdf(u);
        if v.is_nan() {
            return lower;
        }
        v.clamp(lower, upper)
    }

    fn partial_at(&self, u: &[f64], j: usize) -> f64 {
        self.partial_and_path(u, j).0
    }
}

/// A copula with its coordinates relabelled: `C'(u) = C(u_perm)` where
/// `u_perm[perm[k]] = u[k]`.
#[derive(Debug, Clone)]
pub struct Permuted<'a, C: ?Sized> {
    inner: &'a C,
    perm: Vec<usize>,
}

impl<'a, C: Copula + ?Sized> Permuted<'a, C> {
    pub fn new(inner: &'a C, perm: Vec<usize>) -> Result<Self> {
        let d = inner.dim();
        if perm.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: perm.len(),
            });
        }
        let mut seen = alloc::vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::AxisOutOfRange { axis: p, dim: d });
            }
            seen[p] = true;
        }
        Ok(Self { inner, perm })
    }

    fn map(&self, u: &[f64]) -> Vec<f64> {
        let mut v = alloc::vec![0.0; u.len()];
        for (k, &p) in self.perm.iter().enumerate() {
            v[p] = u[k];
        }
        v
    }
}

impl<C: Copula + ?Sized> Copula for Permuted<'_, C> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn cdf_at(&self, u: &[f64]) -> f64 {
        self.inner.cdf_at(&self.map(u))
    }

    fn partial_at(&self, u: &[f64], j: usize) -> f64 {
        self.inner.partial_at(&self.map(u), self.perm[j])
    }
}

pub(crate) fn check_unit(u: &[f64]) -> Result<()> {
    match u.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        Some(&value) => Err(Error::OutsideUnitCube { value }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests;
