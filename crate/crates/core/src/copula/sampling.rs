use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Exp1, Gamma, StandardNormal};

use super::{Copula, CopulaModel, Family};
use crate::empirical::{Sample, SampleKind, TiePolicy};
use crate::error::{Error, Result};
use crate::rng;
use crate::special::{norm_cdf, norm_quantile};

impl CopulaModel {
    /// `n` i.i.d. rows with law `C`, deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        let mut rng = rng::stream(seed);
        let mut data = Vec::with_capacity(n * self.dim);
        self.sample_rows(&mut rng, n, &mut data);
        Sample::new(data, self.dim, SampleKind::PseudoUniform, TiePolicy::Reject)
    }

    /// Appends `n` rows drawn from `rng` to `out` (row-major). Rows are
    /// drawn one at a time, so continuing the same stream extends a sample
    /// by a prefix-preserving suffix.
    pub fn sample_rows<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, out: &mut Vec<f64>) {
        let d = self.dim;
        let th = self.theta;
        let mut row = alloc::vec![0.0; d];
        for _ in 0..n {
            match self.family {
                Family::Independence => {
                    for x in row.iter_mut() {
                        *x = rng.sample(Open01);
                    }
                }
                Family::Clayton => {
                    let v: f64 = rng.sample(Gamma::new(1.0 / th, 1.0).expect("theta > 0"));
                    for x in row.iter_mut() {
                        let e: f64 = rng.sample(Exp1);
                        *x = (-(e / v).ln_1p() / th).exp();
                    }
                }
                Family::Gumbel => {
                    let alpha = 1.0 / th;
                    let v = positive_stable(rng, alpha);
                    for x in row.iter_mut() {
                        let e: f64 = rng.sample(Exp1);
                        *x = (-(e / v).powf(alpha)).exp();
                    }
                }
                Family::Frank if d == 2 => {
                    row[0] = rng.sample(Open01);
                    let w: f64 = rng.sample(Open01);
                    row[1] = frank_conditional_inverse(th, row[0], w);
                }
                Family::Frank => {
                    let v = logarithmic(rng, -(-th).exp_m1()) as f64;
                    for x in row.iter_mut() {
                        let e: f64 = rng.sample(Exp1);
                        // psi(t) = -ln(1 - (1 - e^-theta) e^-t) / theta
                        let t = e / v;
                        *x = -(((-th).exp_m1() * (-t).exp()).ln_1p()) / th;
                    }
                }
                Family::Gaussian if d == 2 => {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    row[0] = norm_cdf(z1);
                    row[1] = norm_cdf(th * z1 + (1.0 - th * th).sqrt() * z2);
                }
                Family::Gaussian => {
                    let z0: f64 = rng.sample(StandardNormal);
                    let (a, b) = (th.sqrt(), (1.0 - th).sqrt());
                    for x in row.iter_mut() {
                        let e: f64 = rng.sample(StandardNormal);
                        *x = norm_cdf(a * z0 + b * e);
                    }
                }
                Family::Fgm => {
                    let mut a = th;
                    for x in row[..d - 1].iter_mut() {
                        *x = rng.sample(Open01);
                        a *= 1.0 - 2.0 * *x;
                    }
                    let w: f64 = rng.sample(Open01);
                    row[d - 1] = fgm_conditional_inverse(a, w);
                }
            }
            // Keep every coordinate strictly inside the cube so ranks are defined.
            for x in row.iter_mut() {
                *x = x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            }
            out.extend_from_slice(&row);
        }
    }

    /// Inverse of the conditional law `v -> dC(u, v)/du` at level `w`
    /// (bivariate models only). Closed forms where they exist, bisection on
    /// the partial derivative otherwise.
    pub fn conditional_inverse(&self, u: f64, w: f64) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::RequiresBivariate(self.dim));
        }
        super::check_unit(&[u, w])?;
        let th = self.theta;
        let v = match self.family {
            Family::Independence => w,
            Family::Clayton => {
                if u <= 0.0 || w <= 0.0 {
                    0.0
                } else {
                    ((w.powf(-th / (1.0 + th)) - 1.0) * u.powf(-th) + 1.0).powf(-1.0 / th)
                }
            }
            Family::Frank => frank_conditional_inverse(th, u, w),
            Family::Fgm => fgm_conditional_inverse(th * (1.0 - 2.0 * u), w),
            Family::Gaussian => {
                norm_cdf(th * norm_quantile(u) + (1.0 - th * th).sqrt() * norm_quantile(w))
            }
            Family::Gumbel => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let uu = u.clamp(1e-300, 1.0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.partial_at(&[uu, mid], 0) < w {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }
}

fn fgm_conditional_inverse(a: f64, w: f64) -> f64 {
    // v + a v (1 - v) = w, stable root
    let b = 1.0 + a;
    2.0 * w / (b + (b * b - 4.0 * a * w).max(0.0).sqrt())
}

fn frank_conditional_inverse(th: f64, u: f64, w: f64) -> f64 {
    let num = w * (-th).exp_m1();
    let den = w + (1.0 - w) * (-th * u).exp();
    -(num / den).ln_1p() / th
}

/// Positive stable variable with Laplace transform `exp(-s^alpha)`,
/// Chambers-Mallows-Stuck (Kanter) representation.
fn positive_stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u: f64 = rng.sample::<f64, _>(Open01) * PI;
    let w: f64 = rng.sample(Exp1);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Logarithmic series variable with parameter `p in (0,1)` (Kemp's LK).
fn logarithmic<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    let v: f64 = rng.sample(Open01);
    let u2: f64 = rng.sample(Open01);
    if v > p {
        return 1;
    }
    let q = -((-p).ln_1p() * u2).exp_m1();
    if v <= q * q {
        let k = 1.0 + (v.ln() / q.ln()).floor();
        return if k.is_finite() && k >= 1.0 {
            k as u64
        } else {
            1
        };
    }
    if v <= q {
        2
    } else {
        1
    }
}

#[cfg(test)]
pub(super) fn logarithmic_for_tests<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    logarithmic(rng, p)
}
