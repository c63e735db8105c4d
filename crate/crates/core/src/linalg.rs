//! Dense symmetric linear algebra on row-major `Vec<f64>` storage.

use alloc::vec::Vec;

use num_traits::Float;

/// Lower Cholesky factor of a symmetric `m x m` matrix with `jitter` added
/// to the diagonal. Returns `None` on a non-positive pivot.
pub fn cholesky(a: &[f64], m: usize, jitter: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), m * m);
    let mut l = alloc::vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            if i == j {
                s += jitter;
            }
            let (ri, rj) = (&l[i * m..i * m + j], &l[j * m..j * m + j]);
            s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
            if i == j {
                // Also rejects NaN.
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(s > 0.0) {
                    return None;
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Some(l)
}

/// `y = L z` for a row-major lower-triangular `L`.
pub fn lower_mul(l: &[f64], m: usize, z: &[f64], y: &mut [f64]) {
    for i in 0..m {
        let row = &l[i * m..i * m + i + 1];
        y[i] = row.iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut a = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))?;
        if a[p * m + c] == 0.0 {
            return None;
        }
        if p != c {
            for k in 0..m {
                a.swap(c * m + k, p * m + k);
            }
            x.swap(c, p);
        }
        for r in c + 1..m {
            let f = a[r * m + c] / a[c * m + c];
            for k in c..m {
                a[r * m + k] -= f * a[c * m + k];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..m).rev() {
        let mut s = x[c];
        for k in c + 1..m {
            s -= a[c * m + k] * x[k];
        }
        x[c] = s / a[c * m + c];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &[f64], m: usize) -> Vec<f64> {
    let mut a = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        let scale: f64 = (0..m)
            .map(|i| a[i * m + i] * a[i * m + i])
            .sum::<f64>()
            .max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}
