use std::vec;
use std::vec::Vec;

use super::sampling::logarithmic_for_tests;
use super::*;
use crate::rng;
use crate::special::bvn_cdf;
use crate::stats::ks_uniform;

fn models() -> Vec<CopulaModel> {
    vec![
        CopulaModel::independence(2),
        CopulaModel::independence(3),
        CopulaModel::clayton(2, 2.0).unwrap(),
        CopulaModel::clayton(3, 0.7).unwrap(),
        CopulaModel::gumbel(2, 1.8).unwrap(),
        CopulaModel::gumbel(3, 2.5).unwrap(),
        CopulaModel::frank(2, 4.0).unwrap(),
        CopulaModel::frank(2, -3.0).unwrap(),
        CopulaModel::frank(3, 2.0).unwrap(),
        CopulaModel::gaussian(2, 0.6).unwrap(),
        CopulaModel::gaussian(2, -0.4).unwrap(),
        CopulaModel::gaussian(3, 0.5).unwrap(),
        CopulaModel::fgm(2, 1.0).unwrap(),
        CopulaModel::fgm(3, -0.8).unwrap(),
    ]
}

fn interior_points(d: usize) -> Vec<Vec<f64>> {
    let levels = [0.07, 0.3, 0.55, 0.81, 0.96];
    let mut out = Vec::new();
    let total = levels.len().pow(d as u32);
    for k in 0..total {
        let mut rem = k;
        let mut p = Vec::with_capacity(d);
        for _ in 0..d {
            p.push(levels[rem % levels.len()]);
            rem /= levels.len();
        }
        out.push(p);
    }
    out
}

#[test]
fn closed_form_values() {
    let ind = CopulaModel::independence(2);
    assert_eq!(ind.cdf(&[0.5, 0.5]).unwrap(), 0.25);
    let clayton = CopulaModel::clayton(2, 2.0).unwrap();
    // (0.5^-2 + 0.5^-2 - 1)^(-1/2) = 7^(-1/2)
    assert!((clayton.cdf(&[0.5, 0.5]).unwrap() - 7f64.powf(-0.5)).abs() < 1e-15);
    let fgm = CopulaModel::fgm(2, 0.5).unwrap();
    assert!((fgm.cdf(&[0.5, 0.5]).unwrap() - 0.28125).abs() < 1e-15);
    let gumbel = CopulaModel::gumbel(2, 2.0).unwrap();
    let expect = (-(2.0 * 0.5f64.ln().powi(2)).sqrt()).exp();
    assert!((gumbel.cdf(&[0.5, 0.5]).unwrap() - expect).abs() < 1e-15);
    let gauss = CopulaModel::gaussian(2, 0.5).unwrap();
    let expect = 0.25 + 0.5f64.asin() / (2.0 * core::f64::consts::PI);
    assert!((gauss.cdf(&[0.5, 0.5]).unwrap() - expect).abs() < 1e-14);
}

#[test]
fn closed_form_partials() {
    let ind = CopulaModel::independence(2);
    assert!((ind.partial(&[0.3, 0.7], 0).unwrap() - 0.7).abs() < 1e-15);
    let fgm = CopulaModel::fgm(2, 1.0).unwrap();
    // v + theta v (1 - v)(1 - 2u)
    let (u, v) = (0.2, 0.6);
    let expect = v + v * (1.0 - v) * (1.0 - 2.0 * u);
    assert!((fgm.partial(&[u, v], 0).unwrap() - expect).abs() < 1e-15);
    let (p, path) = fgm.partial_with_path(&[u, v], 0).unwrap();
    assert_eq!(path, DerivativePath::Analytic);
    assert!(p > 0.0);
}

#[test]
fn margins_and_boundaries() {
    for m in models() {
        let d = m.dim();
        for p in interior_points(1) {
            for j in 0..d {
                let mut u = vec![1.0; d];
                u[j] = p[0];
                assert!(
                    (m.cdf(&u).unwrap() - p[0]).abs() < 1e-9,
                    "{:?} margin {j} at {}",
                    m.family(),
                    p[0]
                );
                u[j] = 0.0;
                assert_eq!(m.cdf(&u).unwrap(), 0.0);
            }
        }
        assert!((m.cdf(&vec![1.0; d]).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn frechet_hoeffding_bounds_and_monotone() {
    for m in models() {
        let d = m.dim();
        for u in interior_points(d) {
            let c = m.cdf(&u).unwrap();
            let upper = u.iter().copied().fold(1.0, f64::min);
            let lower = (u.iter().sum::<f64>() - (d as f64 - 1.0)).max(0.0);
            assert!(c >= lower && c <= upper, "{:?} {u:?}", m.family());
            for j in 0..d {
                let mut v = u.clone();
                v[j] = (v[j] + 0.1).min(1.0);
                assert!(
                    m.cdf(&v).unwrap() >= c - 1e-14,
                    "{:?} not monotone",
                    m.family()
                );
            }
        }
    }
}

#[test]
fn bivariate_rectangles_have_nonnegative_mass() {
    for m in models().into_iter().filter(|m| m.dim() == 2) {
        let ax: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        for i in 0..20 {
            for j in 0..20 {
                let c = |a: f64, b: f64| m.cdf(&[a, b]).unwrap();
                let mass = c(ax[i + 1], ax[j + 1]) - c(ax[i], ax[j + 1]) - c(ax[i + 1], ax[j])
                    + c(ax[i], ax[j]);
                assert!(mass > -1e-13, "{:?} cell ({i},{j}) mass {mass}", m.family());
            }
        }
    }
}

#[test]
fn analytic_partials_match_finite_differences() {
    for m in models() {
        let d = m.dim();
        for u in interior_points(d) {
            for j in 0..d {
                let a = m.partial(&u, j).unwrap();
                let (f, _) = finite_difference_partial(&m, &u, j);
                assert!(
                    (a - f).abs() < 1e-5,
                    "{:?} d={d} {u:?} j={j}: {a} vs {f}",
                    m.family()
                );
            }
        }
    }
}

#[test]
fn boundary_partials_use_one_sided_differences() {
    let m = CopulaModel::fgm(2, 0.5).unwrap();
    let (_, path) = m.partial_with_path(&[0.0, 0.4], 0).unwrap();
    assert_eq!(path, DerivativePath::Forward);
    let (v, path) = m.partial_with_path(&[1.0, 0.4], 0).unwrap();
    assert_eq!(path, DerivativePath::Backward);
    // dC/du at u = 1 is v - theta v (1 - v)
    assert!((v - (0.4 - 0.5 * 0.4 * 0.6)).abs() < 1e-4);
}

#[test]
fn exchangeable_gaussian_matches_bivariate_normal() {
    let m = CopulaModel::gaussian(3, 0.45).unwrap();
    for u in interior_points(2) {
        let c3 = m.cdf(&[u[0], u[1], 1.0]).unwrap();
        let c2 = bvn_cdf(
            crate::special::norm_quantile(u[0]),
            crate::special::norm_quantile(u[1]),
            0.45,
        );
        assert!((c3 - c2).abs() < 1e-9, "{u:?}: {c3} vs {c2}");
    }
}

#[test]
fn parameter_domains() {
    assert!(CopulaModel::clayton(2, 0.0).is_err());
    assert!(CopulaModel::gumbel(2, 0.9).is_err());
    assert!(CopulaModel::frank(2, 0.0).is_err());
    assert!(CopulaModel::frank(3, -1.0).is_err());
    assert!(CopulaModel::gaussian(2, 1.0).is_err());
    assert!(CopulaModel::gaussian(3, -0.2).is_err());
    assert!(CopulaModel::fgm(2, 1.5).is_err());
    assert!(CopulaModel::new(Family::Independence, 1, &[]).is_err());
    assert!(CopulaModel::new(Family::Clayton, 2, &[]).is_err());
    assert!(CopulaModel::clayton(2, f64::NAN).is_err());
    let m = CopulaModel::independence(2);
    assert!(matches!(
        m.cdf(&[0.5]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        m.cdf(&[0.5, 1.2]),
        Err(Error::OutsideUnitCube { .. })
    ));
    assert!(matches!(
        m.partial(&[0.5, 0.5], 2),
        Err(Error::AxisOutOfRange { .. })
    ));
}

#[test]
fn samplers_have_uniform_margins_and_match_cdf() {
    let n = 4000;
    for (k, m) in models().into_iter().enumerate() {
        let s = m.sample(n, 100 + k as u64).unwrap();
        let d = m.dim();
        for j in 0..d {
            let col: Vec<f64> = (0..n).map(|i| s.row(i)[j]).collect();
            let (stat, p) = ks_uniform(&col);
            assert!(
                p > 1e-4,
                "{:?} d={d} column {j}: D={stat} p={p}",
                m.family()
            );
        }
        // Joint: empirical vs model cdf on interior points, within ~4.5 / sqrt(n).
        for u in interior_points(d) {
            let emp = s.joint_ecdf(&u).unwrap();
            let c = m.cdf(&u).unwrap();
            assert!(
                (emp - c).abs() < 4.5 * (c * (1.0 - c)).sqrt().max(0.02) / (n as f64).sqrt(),
                "{:?} d={d} {u:?}: {emp} vs {c}",
                m.family()
            );
        }
    }
}

#[test]
fn clayton_kendall_tau() {
    // tau = theta / (theta + 2)
    let m = CopulaModel::clayton(2, 2.0).unwrap();
    let s = m.sample(3000, 9).unwrap();
    let n = s.n();
    let mut conc = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let a = (s.row(i)[0] - s.row(j)[0]) * (s.row(i)[1] - s.row(j)[1]);
            conc += if a > 0.0 { 1 } else { -1 };
        }
    }
    let tau = conc as f64 / (n * (n - 1) / 2) as f64;
    assert!((tau - 0.5).abs() < 0.03, "tau {tau}");
}

#[test]
fn sampling_is_deterministic_and_prefix_preserving() {
    let m = CopulaModel::gumbel(3, 1.5).unwrap();
    let a = m.sample(200, 77).unwrap();
    let b = m.sample(200, 77).unwrap();
    assert_eq!(a.data(), b.data());
    let c = m.sample(50, 77).unwrap();
    assert_eq!(&a.data()[..150], c.data());
    let other = m.sample(200, 78).unwrap();
    assert_ne!(a.data(), other.data());
}

#[test]
fn conditional_inverse_inverts_partial() {
    for m in models().into_iter().filter(|m| m.dim() == 2) {
        for &u in &[0.1, 0.45, 0.9] {
            for &w in &[0.05, 0.5, 0.93] {
                let v = m.conditional_inverse(u, w).unwrap();
                let back = m.partial(&[u, v], 0).unwrap();
                assert!(
                    (back - w).abs() < 1e-6,
                    "{:?} u={u} w={w}: v={v} back={back}",
                    m.family()
                );
            }
        }
    }
    assert!(matches!(
        CopulaModel::independence(3).conditional_inverse(0.2, 0.2),
        Err(Error::RequiresBivariate(3))
    ));
}

#[test]
fn logarithmic_series_frequencies() {
    let p: f64 = 0.8;
    let mut rng = rng::stream(5);
    let n = 200_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let k = logarithmic_for_tests(&mut rng, p) as usize;
        if k <= 3 {
            counts[k] += 1;
        }
    }
    let norm = -1.0 / (1.0 - p).ln();
    for (k, &c) in counts.iter().enumerate().skip(1) {
        let expect = norm * p.powi(k as i32) / k as f64;
        let got = c as f64 / n as f64;
        assert!((got - expect).abs() < 0.005, "k={k}: {got} vs {expect}");
    }
}

#[test]
fn permuted_relabels_coordinates() {
    let m = CopulaModel::fgm(3, 0.6).unwrap();
    let p = Permuted::new(&m, vec![2, 0, 1]).unwrap();
    let u = [0.2, 0.5, 0.9];
    let mapped = [0.5, 0.9, 0.2];
    assert!((p.cdf_at(&u) - m.cdf_at(&mapped)).abs() < 1e-15);
    assert!((p.partial_at(&u, 0) - m.partial_at(&mapped, 2)).abs() < 1e-15);
    assert!(Permuted::new(&m, vec![0, 0, 1]).is_err());
}
