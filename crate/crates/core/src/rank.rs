//! Spearman- and Kendall-type functionals of a bivariate copula,
//! multivariate rank-order statistics, the classical rank correlations and
//! the iterated-logarithm constant `rho`.
//!
//! * `S(C) = int int J(u, v, C(u, v)) du dv`
//! * `T(C) = int int J(u, v, C(u, v)) dC(u, v)`
//! * `R_n = n^-1 sum_i J(R_1i/n, ..., R_di/n)`

use alloc::vec::Vec;

use num_traits::Float;

use crate::copula::{Copula, CopulaModel};
use crate::empirical::Sample;
use crate::error::{Error, Result};
use crate::fields::{kstar_covariance, kstar_variance_sup};
use crate::grid::Grid;
use crate::quadrature::{diagonal_split_rule, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// `J = 12 z - 3`.
    SpearmanJ,
    /// `J = 4 z - 1`.
    KendallJ,
    Custom,
}

/// `coef * u^a * v^b * z^c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTerm {
    pub coef: f64,
    pub a: u32,
    pub b: u32,
    pub c: u32,
}

impl ScoreTerm {
    pub const fn new(coef: f64, a: u32, b: u32, c: u32) -> Self {
        Self { coef, a, b, c }
    }
}

type ScoreFn = fn(f64, f64, f64) -> f64;

#[derive(Debug, Clone)]
enum Repr {
    Polynomial(Vec<ScoreTerm>),
    Function { f: ScoreFn, dz: ScoreFn },
}

/// A score `J(u, v, z)` on `[0,1]^3` with its `z`-derivative.
#[derive(Debug, Clone)]
pub struct ScoreFunction {
    kind: ScoreKind,
    repr: Repr,
    bound: Option<f64>,
}

/// Points per axis for the numerical `sup |dJ/dz|` estimate.
const BOUND_GRID: usize = 21;

impl ScoreFunction {
    pub fn spearman() -> Self {
        Self {
            kind: ScoreKind::SpearmanJ,
            repr: Repr::Polynomial(alloc::vec![
                ScoreTerm::new(12.0, 0, 0, 1),
                ScoreTerm::new(-3.0, 0, 0, 0)
            ]),
            bound: Some(12.0),
        }
    }

    pub fn kendall() -> Self {
        Self {
            kind: ScoreKind::KendallJ,
            repr: Repr::Polynomial(alloc::vec![
                ScoreTerm::new(4.0, 0, 0, 1),
                ScoreTerm::new(-1.0, 0, 0, 0)
            ]),
            bound: Some(4.0),
        }
    }

    pub fn polynomial(terms: Vec<ScoreTerm>) -> Result<Self> {
        if terms.iter().any(|t| !t.coef.is_finite()) {
            return Err(Error::Numerical("score coefficients must be finite".into()));
        }
        Ok(Self {
            kind: ScoreKind::Custom,
            repr: Repr::Polynomial(terms),
            bound: None,
        })
    }

    /// A score given by functions for `J` and `dJ/dz`. Finiteness is
    /// checked only where the score is evaluated.
    pub fn from_fn(f: ScoreFn, dz: ScoreFn) -> Self {
        Self {
            kind: ScoreKind::Custom,
            repr: Repr::Function { f, dz },
            bound: None,
        }
    }

    /// Overrides the numerical estimate of `sup |dJ/dz|`.
    pub fn with_z_derivative_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn terms(&self) -> Option<&[ScoreTerm]> {
        match &self.repr {
            Repr::Polynomial(t) => Some(t),
            Repr::Function { .. } => None,
        }
    }

    pub fn eval(&self, u: f64, v: f64, z: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial(t) => t
                .iter()
                .map(|t| t.coef * u.powi(t.a as i32) * v.powi(t.b as i32) * z.powi(t.c as i32))
                .sum(),
            Repr::Function { f, .. } => f(u, v, z),
        }
    }

    /// `dJ/dz`.
    pub fn dz(&self, u: f64, v: f64, z: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial(t) => t
                .iter()
                .filter(|t| t.c > 0)
                .map(|t| {
                    t.coef
                        * t.c as f64
                        * u.powi(t.a as i32)
                        * v.powi(t.b as i32)
                        * z.powi(t.c as i32 - 1)
                })
                .sum(),
            Repr::Function { dz, .. } => dz(u, v, z),
        }
    }

    /// Supplied bound, or `max |dJ/dz|` over a `21^3` lattice of the cube
    /// (infinite if any value there is not finite).
    pub fn z_derivative_bound(&self) -> f64 {
        if let Some(b) = self.bound {
            return b;
        }
        let m = BOUND_GRID - 1;
        let mut sup: f64 = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                for k in 0..=m {
                    let d = self.dz(
                        i as f64 / m as f64,
                        j as f64 / m as f64,
                        k as f64 / m as f64,
                    );
                    if !d.is_finite() {
                        return f64::INFINITY;
                    }
                    sup = sup.max(d.abs());
                }
            }
        }
        sup
    }

    fn z_degree(&self) -> Option<u32> {
        self.terms()
            .map(|t| t.iter().map(|t| t.c).max().unwrap_or(0))
    }
}

fn require_bivariate(d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::RequiresBivariate(d));
    }
    Ok(())
}

/// Default Gauss-Legendre nodes per axis for model functionals.
pub const MODEL_NODES: usize = 64;

/// `S(C)` for a smooth copula by tensor Gauss-Legendre quadrature.
pub fn spearman_functional<C: Copula + ?Sized>(model: &C, score: &ScoreFunction) -> Result<f64> {
    spearman_functional_with(model, score, MODEL_NODES)
}

pub fn spearman_functional_with<C: Copula + ?Sized>(
    model: &C,
    score: &ScoreFunction,
    nodes: usize,
) -> Result<f64> {
    require_bivariate(model.dim())?;
    let rule = GaussLegendre::new(nodes);
    Ok(rule.integrate_box(&[0.0, 0.0], &[1.0, 1.0], |p| {
        score.eval(p[0], p[1], model.cdf_at(p))
    }))
}

/// `int_lo^1 x^a dx`.
fn tail_moment(lo: f64, a: u32) -> f64 {
    (1.0 - lo.powi(a as i32 + 1)) / (a as f64 + 1.0)
}

/// `int_lo^hi x^a dx`.
fn cell_moment(lo: f64, hi: f64, a: u32) -> f64 {
    (hi.powi(a as i32 + 1) - lo.powi(a as i32 + 1)) / (a as f64 + 1.0)
}

/// `S(C_n)` for the piecewise-constant empirical copula, exactly.
///
/// Polynomial scores of degree at most one in `z` use
/// `int int u^a v^b C_n = n^-1 sum_i int_{a_i}^1 u^a du int_{b_i}^1 v^b dv`
/// with `a_i = (R_1i - 1)/n`, in `O(n)`. Otherwise each of the `n^2`
/// cells `((i-1)/n, i/n] x ((j-1)/n, j/n]` is integrated, with the cell
/// values built by a row sweep; function scores use a 4-point
/// Gauss-Legendre rule per cell.
pub fn spearman_functional_empirical(sample: &Sample, score: &ScoreFunction) -> Result<f64> {
    require_bivariate(sample.dim())?;
    let n = sample.n();
    let nf = n as f64;
    if let (Some(terms), Some(deg)) = (score.terms(), score.z_degree()) {
        if deg <= 1 {
            let mut total = 0.0;
            for t in terms {
                total += if t.c == 0 {
                    t.coef / ((t.a + 1) as f64 * (t.b + 1) as f64)
                } else {
                    let s: f64 = (0..n)
                        .map(|i| {
                            let r = sample.rank_row(i);
                            tail_moment((r[0] - 1) as f64 / nf, t.a)
                                * tail_moment((r[1] - 1) as f64 / nf, t.b)
                        })
                        .sum();
                    t.coef * s / nf
                };
            }
            return Ok(total);
        }
    }
    // Row sweep: col_of[i] = R_2 of the observation with R_1 = i + 1.
    let mut col_of = alloc::vec![0usize; n];
    for i in 0..n {
        let r = sample.rank_row(i);
        col_of[r[0] as usize - 1] = r[1] as usize - 1;
    }
    let mut counts = alloc::vec![0u32; n];
    let rule = GaussLegendre::new(4);
    let mut total = 0.0;
    for (i, &c) in col_of.iter().enumerate() {
        for x in &mut counts[c..] {
            *x += 1;
        }
        let (ulo, uhi) = (i as f64 / nf, (i + 1) as f64 / nf);
        for (j, &cnt) in counts.iter().enumerate() {
            let z = cnt as f64 / nf;
            let (vlo, vhi) = (j as f64 / nf, (j + 1) as f64 / nf);
            total += match score.terms() {
                Some(terms) => terms
                    .iter()
                    .map(|t| {
                        t.coef
                            * z.powi(t.c as i32)
                            * cell_moment(ulo, uhi, t.a)
                            * cell_moment(vlo, vhi, t.b)
                    })
                    .sum::<f64>(),
                None => rule.integrate_box(&[ulo, vlo], &[uhi, vhi], |p| score.eval(p[0], p[1], z)),
            };
        }
    }
    Ok(total)
}

/// For every observation, the number of observations (itself included)
/// with both ranks at most its own: `n C_n(R_1i/n, R_2i/n)`.
fn dominated_counts(sample: &Sample) -> Vec<u32> {
    let n = sample.n();
    let mut by_r1 = alloc::vec![0usize; n];
    for i in 0..n {
        by_r1[sample.rank(i, 0) as usize - 1] = i;
    }
    let mut tree = alloc::vec![0u32; n + 1];
    let mut out = alloc::vec![0u32; n];
    for &i in &by_r1 {
        let r2 = sample.rank(i, 1) as usize;
        let mut k = r2;
        while k <= n {
            tree[k] += 1;
            k += k & k.wrapping_neg();
        }
        let (mut k, mut s) = (r2, 0);
        while k > 0 {
            s += tree[k];
            k -= k & k.wrapping_neg();
        }
        out[i] = s;
    }
    out
}

/// `T(C_n) = n^-1 sum_i J(R_1i/n, R_2i/n, C_n(R_1i/n, R_2i/n))`: the
/// integral against `dC_n` as a sum over the sample atoms, with the
/// right-continuous value of `C_n` at each atom.
pub fn kendall_functional_empirical(sample: &Sample, score: &ScoreFunction) -> Result<f64> {
    require_bivariate(sample.dim())?;
    let n = sample.n();
    let nf = n as f64;
    let counts = dominated_counts(sample);
    let s: f64 = (0..n)
        .map(|i| {
            let r = sample.rank_row(i);
            score.eval(r[0] as f64 / nf, r[1] as f64 / nf, counts[i] as f64 / nf)
        })
        .sum();
    Ok(s / nf)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// QMC layout for [`kendall_functional`]: independent random shifts of a
/// two-dimensional Kronecker (R2) sequence.
pub const KENDALL_SHIFTS: usize = 10;
pub const KENDALL_POINTS: usize = 10_000;

/// `T(C) = E J(U, V, C(U, V))` for `(U, V) ~ C`, by randomized QMC: points
/// of a shifted R2 sequence are mapped through `V = conditional inverse`.
/// The standard error is taken across the independent shifts.
pub fn kendall_functional(
    model: &CopulaModel,
    score: &ScoreFunction,
    seed: u64,
) -> Result<Estimate> {
    require_bivariate(model.dim())?;
    use rand::Rng;
    // Plastic-number Kronecker increments.
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    let mut rng = crate::rng::derived_stream(seed, &[0x6b65]);
    let mut means = Vec::with_capacity(KENDALL_SHIFTS);
    for _ in 0..KENDALL_SHIFTS {
        let (s1, s2): (f64, f64) = (rng.random(), rng.random());
        let mut acc = 0.0;
        for k in 1..=KENDALL_POINTS {
            let x1 = (s1 + k as f64 * a1).fract();
            let x2 = (s2 + k as f64 * a2).fract();
            let v = model.conditional_inverse(x1, x2)?;
            acc += score.eval(x1, v, model.cdf_at(&[x1, v]));
        }
        means.push(acc / KENDALL_POINTS as f64);
    }
    let value = crate::stats::mean(&means);
    let std_error = (crate::stats::variance(&means) / KENDALL_SHIFTS as f64).sqrt();
    Ok(Estimate { value, std_error })
}

/// Nodes per axis of the diagonal-split rule used by [`delta_method_width`].
pub const DELTA_NODES: usize = 14;

/// Asymptotic standard deviation of `sqrt(n)(S(C_n) - S(C))`:
/// the square root of
/// `int int J3(u) J3(v) Cov(K*(u,1), K*(v,1)) du dv` with
/// `J3(u) = dJ/dz (u_1, u_2, C(u))`. Each coordinate pair `(u_k, v_k)`
/// uses a rule split along `u_k = v_k`, where the covariance has its kinks.
pub fn delta_method_width<C: Copula + ?Sized>(score: &ScoreFunction, model: &C) -> Result<f64> {
    require_bivariate(model.dim())?;
    let bound = score.z_derivative_bound();
    if !bound.is_finite() {
        return Err(Error::UnboundedScore);
    }
    if bound == 0.0 {
        return Ok(0.0);
    }
    let rule = diagonal_split_rule(DELTA_NODES);
    let j3 = |u: &[f64]| score.dz(u[0], u[1], model.cdf_at(u));
    let mut total = 0.0;
    for &(u1, v1, w1) in &rule {
        for &(u2, v2, w2) in &rule {
            let u = [u1, u2];
            let v = [v1, v2];
            let a = j3(&u);
            if a == 0.0 {
                continue;
            }
            total += w1 * w2 * a * j3(&v) * kstar_covariance(model, &u, &v);
        }
    }
    Ok(total.max(0.0).sqrt())
}

/// A score `J: [0,1]^d -> R` for [`rank_statistic`].
#[derive(Debug, Clone)]
pub enum RankScore {
    /// `sum coef * prod_j u_j^{p_j}`.
    Polynomial(Vec<(f64, Vec<u32>)>),
    Function(fn(&[f64]) -> f64),
}

impl RankScore {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            RankScore::Polynomial(terms) => terms
                .iter()
                .map(|(c, p)| {
                    c * u
                        .iter()
                        .zip(p)
                        .map(|(x, &k)| x.powi(k as i32))
                        .product::<f64>()
                })
                .sum(),
            RankScore::Function(f) => f(u),
        }
    }
}

/// `R_n = n^-1 sum_i J(R_1i/n, ..., R_di/n)`.
pub fn rank_statistic(sample: &Sample, score: &RankScore) -> Result<f64> {
    if let RankScore::Polynomial(terms) = score {
        if let Some((_, p)) = terms.iter().find(|(_, p)| p.len() != sample.dim()) {
            return Err(Error::DimensionMismatch {
                expected: sample.dim(),
                got: p.len(),
            });
        }
    }
    let nf = sample.n() as f64;
    let mut u = alloc::vec![0.0; sample.dim()];
    let mut s = 0.0;
    for i in 0..sample.n() {
        for (x, &r) in u.iter_mut().zip(sample.rank_row(i)) {
            *x = r as f64 / nf;
        }
        s += score.eval(&u);
    }
    Ok(s / nf)
}

/// Classical Spearman rank correlation.
pub fn spearman_rho(sample: &Sample) -> Result<f64> {
    require_bivariate(sample.dim())?;
    let nf = sample.n() as f64;
    let s: f64 = (0..sample.n())
        .map(|i| sample.rank(i, 0) as f64 * sample.rank(i, 1) as f64)
        .sum();
    Ok(12.0 * s / (nf * (nf * nf - 1.0)) - 3.0 * (nf + 1.0) / (nf - 1.0))
}

/// Classical Kendall tau (no ties), in `O(n log n)`.
pub fn kendall_tau(sample: &Sample) -> Result<f64> {
    require_bivariate(sample.dim())?;
    let n = sample.n();
    let concordant: u64 = dominated_counts(sample).iter().map(|&c| c as u64 - 1).sum();
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(2.0 * concordant as f64 / pairs - 1.0)
}

/// `rho = sqrt(sup_u Var K*(u, 1))`, the constant of the law of the
/// iterated logarithm for `sup |C_n - C|`.
pub fn lil_rho<C: Copula + ?Sized>(model: &C, grid: &Grid) -> Result<f64> {
    Ok(kstar_variance_sup(model, grid)?.0.sqrt())
}

#[cfg(test)]
mod tests;
