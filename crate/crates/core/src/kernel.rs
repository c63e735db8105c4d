//! Compactly supported product kernels of order `s` and bandwidths.
//!
//! A kernel on `R^d` is the product of a one-dimensional profile applied
//! to each coordinate. Polynomial profiles live on `[-1, 1]`; the truncated
//! Gaussian lives on `[-3, 3]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::GaussLegendre;
use crate::special::norm_cdf;

const GAUSS_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Epanechnikov,
    Quartic,
    TruncatedGaussian,
    /// `(1 - x^2) p(x^2)` on `[-1, 1]` with the even polynomial `p` chosen
    /// so that the moments of degree `2, 4, ..., s - 2` vanish. `s` must be
    /// even; `s = 2` is the Epanechnikov kernel.
    HigherOrder(usize),
}

impl Profile {
    pub fn name(self) -> String {
        match self {
            Profile::Epanechnikov => "epanechnikov".into(),
            Profile::Quartic => "quartic".into(),
            Profile::TruncatedGaussian => "gaussian".into(),
            Profile::HigherOrder(s) => format!("polynomial{s}"),
        }
    }

    /// Accepts `epanechnikov`, `quartic`/`biweight`, `gaussian`,
    /// `polynomial` (order taken from `order`).
    pub fn parse(name: &str, order: usize) -> Option<Profile> {
        Some(match name.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" => Profile::Epanechnikov,
            "quartic" | "biweight" => Profile::Quartic,
            "gaussian" | "truncated-gaussian" => Profile::TruncatedGaussian,
            "polynomial" | "higher-order" => Profile::HigherOrder(order),
            _ => return None,
        })
    }
}

/// Product kernel `k(v) = prod_j k1(v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    profile: Profile,
    dim: usize,
    order: usize,
    radius: f64,
    /// Coefficients of the profile polynomial in `x` (polynomial profiles).
    poly: Vec<f64>,
    /// Antiderivative coefficients, normalized to vanish at `-1`.
    anti: Vec<f64>,
    mass_scale: f64,
}

impl Kernel {
    pub fn new(profile: Profile, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidKernel("dimension must be positive".into()));
        }
        let (order, radius, poly) = match profile {
            Profile::Epanechnikov => (2, 1.0, alloc::vec![0.75, 0.0, -0.75]),
            Profile::Quartic => (
                2,
                1.0,
                alloc::vec![15.0 / 16.0, 0.0, -30.0 / 16.0, 0.0, 15.0 / 16.0],
            ),
            Profile::TruncatedGaussian => (2, GAUSS_RADIUS, Vec::new()),
            Profile::HigherOrder(s) => {
                if s < 2 || s % 2 != 0 || s > 12 {
                    return Err(Error::InvalidKernel(format!(
                        "polynomial kernel order must be even in 2..=12, got {s}"
                    )));
                }
                (s, 1.0, higher_order_profile(s)?)
            }
        };
        let anti = antiderivative(&poly);
        Ok(Self {
            profile,
            dim,
            order,
            radius,
            poly,
            anti,
            mass_scale: 1.0,
        })
    }

    /// The same kernel multiplied by `scale`; a scale other than one breaks
    /// the unit-mass condition and is meant as a negative control.
    pub fn scaled(mut self, scale: f64) -> Self {
        self.mass_scale = scale;
        self
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Half-width of the support on each axis.
    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    pub fn is_nonnegative(&self) -> bool {
        self.order <= 2 && self.mass_scale >= 0.0
    }

    /// One-dimensional profile `k1(x)`.
    pub fn profile_at(&self, x: f64) -> f64 {
        if x.abs() > self.radius {
            return 0.0;
        }
        self.mass_scale
            * match self.profile {
                Profile::TruncatedGaussian => {
                    crate::special::norm_pdf(x) / (norm_cdf(GAUSS_RADIUS) - norm_cdf(-GAUSS_RADIUS))
                }
                _ => horner(&self.poly, x),
            }
    }

    /// `K1(x) = int_{-inf}^x k1`.
    pub fn profile_cdf(&self, x: f64) -> f64 {
        let x = x.clamp(-self.radius, self.radius);
        self.mass_scale
            * match self.profile {
                Profile::TruncatedGaussian => {
                    (norm_cdf(x) - norm_cdf(-GAUSS_RADIUS))
                        / (norm_cdf(GAUSS_RADIUS) - norm_cdf(-GAUSS_RADIUS))
                }
                _ => horner(&self.anti, x),
            }
    }

    /// `k(v)`; zero outside the support.
    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(v.iter().map(|&x| self.profile_at(x)).product())
    }

    /// `int x^p k1(x) dx` with an `m`-node Gauss-Legendre rule per smooth
    /// piece of the profile.
    fn profile_moment(&self, p: usize, rule: &GaussLegendre) -> f64 {
        rule.integrate(-self.radius, self.radius, |x| {
            x.powi(p as i32) * self.profile_at(x)
        })
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn antiderivative(poly: &[f64]) -> Vec<f64> {
    if poly.is_empty() {
        return Vec::new();
    }
    let mut a = alloc::vec![0.0; poly.len() + 1];
    for (k, &c) in poly.iter().enumerate() {
        a[k + 1] = c / (k + 1) as f64;
    }
    a[0] = -horner(&a, -1.0);
    a
}

/// Solves for `p(y) = sum_m c_m y^m` (`m < s/2`) with
/// `int (1 - x^2) p(x^2) x^{2k} dx = [k == 0]` for `k < s/2`, then expands
/// `(1 - x^2) p(x^2)` into powers of `x`.
fn higher_order_profile(s: usize) -> Result<Vec<f64>> {
    let q = s / 2;
    // int_{-1}^{1} x^{2p} (1 - x^2) dx
    let w = |p: usize| 2.0 / (2 * p + 1) as f64 - 2.0 / (2 * p + 3) as f64;
    let mut a = alloc::vec![0.0; q * q];
    for k in 0..q {
        for m in 0..q {
            a[k * q + m] = w(k + m);
        }
    }
    let mut b = alloc::vec![0.0; q];
    b[0] = 1.0;
    let c = linalg::solve(&a, &b)
        .ok_or_else(|| Error::InvalidKernel(format!("moment system for order {s} is singular")))?;
    let mut poly = alloc::vec![0.0; 2 * q + 1];
    for (m, &cm) in c.iter().enumerate() {
        poly[2 * m] += cm;
        poly[2 * m + 2] -= cm;
    }
    Ok(poly)
}

/// Tolerance for the moment conditions.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

/// One moment condition `int v^alpha k(v) dv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub exponents: Vec<usize>,
    pub value: f64,
    /// `Some(target)` for equality conditions; `None` for the degree-`s`
    /// finiteness condition.
    pub target: Option<f64>,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub order: usize,
    pub checks: Vec<MomentCheck>,
    /// Largest change of any moment between `m` and `2m` quadrature nodes.
    pub quadrature_change: f64,
    pub converged: bool,
    pub passed: bool,
}

impl MomentReport {
    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.target.is_some())
            .fold(0.0, |m, c| m.max(c.residual))
    }

    pub fn failures(&self) -> impl Iterator<Item = &MomentCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Checks the order-`s` conditions: unit mass, vanishing mixed moments of
/// total degree `1..s-1`, finite degree-`s` absolute moments. Mixed moments
/// of a product kernel factor into one-dimensional moments, each computed
/// by Gauss-Legendre quadrature at two resolutions; disagreement between
/// the two fails the report.
pub fn verify_order(kernel: &Kernel) -> MomentReport {
    let s = kernel.order;
    let coarse = GaussLegendre::new(32);
    let fine = GaussLegendre::new(64);
    let mut change: f64 = 0.0;
    let mut mom = Vec::with_capacity(s + 1);
    let mut abs_mom = Vec::with_capacity(s + 1);
    for p in 0..=s {
        let a = kernel.profile_moment(p, &coarse);
        let b = kernel.profile_moment(p, &fine);
        change = change.max((a - b).abs());
        mom.push(b);
        abs_mom.push(fine.integrate(-kernel.radius, kernel.radius, |x| {
            (x.powi(p as i32) * kernel.profile_at(x)).abs()
        }));
    }
    let converged = change < MOMENT_TOLERANCE * 0.1;
    let mut checks = Vec::new();
    for alpha in multi_indices(kernel.dim, s) {
        let degree: usize = alpha.iter().sum();
        if degree == s {
            let value: f64 = alpha.iter().map(|&p| abs_mom[p]).product();
            checks.push(MomentCheck {
                exponents: alpha,
                value,
                target: None,
                residual: 0.0,
                passed: value.is_finite(),
            });
        } else {
            let value: f64 = alpha.iter().map(|&p| mom[p]).product();
            let target = if degree == 0 { 1.0 } else { 0.0 };
            let residual = (value - target).abs();
            checks.push(MomentCheck {
                exponents: alpha,
                value,
                target: Some(target),
                residual,
                passed: residual < MOMENT_TOLERANCE,
            });
        }
    }
    let passed = converged && checks.iter().all(|c| c.passed);
    MomentReport {
        order: s,
        checks,
        quadrature_change: change,
        converged,
        passed,
    }
}

/// All exponent vectors of length `d` with total degree at most `s`.
fn multi_indices(d: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = alloc::vec![0usize; d];
    fn rec(j: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if j == cur.len() {
            out.push(cur.clone());
            return;
        }
        for p in 0..=left {
            cur[j] = p;
            rec(j + 1, left - p, cur, out);
        }
        cur[j] = 0;
    }
    rec(0, s, &mut cur, &mut out);
    out
}

/// Thresholds used by [`Bandwidth::admissibility`].
pub const MIN_EFFECTIVE_COUNT: f64 = 1.0;
pub const MAX_BIAS_SCALE: f64 = 1.0;

/// Volume bandwidth `h`; each axis is scaled by `h^{1/d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub h: f64,
    pub n: usize,
    pub order: usize,
    pub dim: usize,
}

/// Finite-`n` proxies for `h -> 0`, `nh -> inf`, `sqrt(n) h^{s/d} -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub nh: f64,
    pub bias_scale: f64,
    pub shrinking: bool,
    pub enough_points: bool,
    pub small_bias: bool,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.shrinking && self.enough_points && self.small_bias
    }
}

impl Bandwidth {
    pub fn new(h: f64, n: usize, order: usize, dim: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidBandwidth(format!(
                "h must be positive and finite, got {h}"
            )));
        }
        if n == 0 || dim == 0 || order == 0 {
            return Err(Error::InvalidBandwidth(
                "n, order and dimension must be positive".into(),
            ));
        }
        Ok(Self { h, n, order, dim })
    }

    /// `h(n) = n^{-d/(2s)} / ln n`, for which `sqrt(n) h^{s/d} = (ln n)^{-s/d}`.
    pub fn default_for(n: usize, order: usize, dim: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidBandwidth(format!(
                "default bandwidth needs n >= 3, got {n}"
            )));
        }
        let nf = n as f64;
        Self::new(
            nf.powf(-(dim as f64) / (2.0 * order as f64)) / nf.ln(),
            n,
            order,
            dim,
        )
    }

    /// Per-axis scale `h^{1/d}`.
    pub fn axis_scale(&self) -> f64 {
        self.h.powf(1.0 / self.dim as f64)
    }

    pub fn admissibility(&self) -> Admissibility {
        let nh = self.n as f64 * self.h;
        let bias_scale = (self.n as f64).sqrt() * self.h.powf(self.order as f64 / self.dim as f64);
        Admissibility {
            nh,
            bias_scale,
            shrinking: self.h < 1.0,
            enough_points: nh >= MIN_EFFECTIVE_COUNT,
            small_bias: bias_scale <= MAX_BIAS_SCALE,
        }
    }

    /// True when the kernel support around every point of the cube leaves
    /// the cube, so no point has full kernel mass.
    pub fn exceeds_cube(&self, kernel: &Kernel) -> bool {
        kernel.support_radius() * self.axis_scale() >= 0.5
    }
}
