use std::vec;
use std::vec::Vec;

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::copula::CopulaModel;

/// `G^-(u) = inf{t >= 0 : #{U <= t}/n >= u}` over the candidate set
/// `{0} ∪ {U_i}` by direct search.
fn brute_quantile(col: &[f64], u: f64) -> f64 {
    let n = col.len() as f64;
    let mut cands = vec![0.0];
    cands.extend_from_slice(col);
    cands
        .into_iter()
        .filter(|&t| col.iter().filter(|&&x| x <= t).count() as f64 / n >= u)
        .fold(f64::INFINITY, f64::min)
}

/// `C~_n(G_1^-(u_1), ..., G_d^-(u_d))` by direct counting.
fn compositional_copula(rows: &[Vec<f64>], u: &[f64]) -> f64 {
    let d = u.len();
    let q: Vec<f64> = (0..d)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            brute_quantile(&col, u[j])
        })
        .collect();
    rows.iter()
        .filter(|r| r.iter().zip(&q).all(|(a, b)| a <= b))
        .count() as f64
        / rows.len() as f64
}

fn rows_of(s: &Sample) -> Vec<Vec<f64>> {
    (0..s.n()).map(|i| s.row(i).to_vec()).collect()
}

#[test]
fn threshold_is_the_generalized_inverse_index() {
    for n in 1..60 {
        let nf = n as f64;
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let t = rank_threshold(n, u);
            assert!(t <= n);
            assert!(t as f64 / nf >= u || t == n);
            if t > 0 {
                assert!(((t - 1) as f64) / nf < u);
            }
        }
        for k in 0..=n {
            assert_eq!(rank_threshold(n, k as f64 / nf), k);
        }
    }
}

#[test]
fn hand_computed_copula() {
    // Ranks: column 0 -> 1,3,2 ; column 1 -> 2,1,3
    let s = Sample::from_rows(
        &[vec![0.1, 5.0], vec![0.9, 1.0], vec![0.4, 7.0]],
        SampleKind::Raw,
        TiePolicy::Reject,
    )
    .unwrap();
    assert_eq!(s.rank_row(0), &[1, 2]);
    assert_eq!(s.rank_row(1), &[3, 1]);
    assert_eq!(s.rank_row(2), &[2, 3]);
    let third = 1.0 / 3.0;
    assert_eq!(s.empirical_copula(&[third, 2.0 * third]).unwrap(), third);
    assert_eq!(
        s.empirical_copula(&[2.0 * third, 2.0 * third]).unwrap(),
        third
    );
    assert_eq!(s.empirical_copula(&[1.0, 0.5]).unwrap(), 2.0 * third);
    assert_eq!(s.empirical_copula(&[0.0, 1.0]).unwrap(), 0.0);
    assert_eq!(s.empirical_copula(&[1.0, 1.0]).unwrap(), 1.0);
    assert_eq!(s.joint_ecdf(&[0.4, 7.0]).unwrap(), 2.0 * third);
    assert_eq!(s.marginal_ecdf(1, 5.0).unwrap(), 2.0 * third);
    assert_eq!(s.marginal_quantile(1, 0.5).unwrap(), 5.0);
    assert_eq!(s.marginal_quantile(0, 0.0).unwrap(), 0.1);
    assert_eq!(s.marginal_quantile(0, 1.0).unwrap(), 0.9);
}

#[test]
fn rank_invariance_under_monotone_maps() {
    let m = CopulaModel::clayton(3, 1.5).unwrap();
    let s = m.sample(40, 3).unwrap();
    let warped: Vec<f64> = s
        .data()
        .chunks(3)
        .flat_map(|r| {
            [
                r[0].ln(),
                10.0 * r[1].powi(3) - 4.0,
                (r[2] / (1.0 - r[2])).sqrt(),
            ]
        })
        .collect();
    let w = Sample::new(warped, 3, SampleKind::Raw, TiePolicy::Reject).unwrap();
    let grid = Grid::uniform(3, 7).unwrap();
    assert_eq!(
        empirical_copula_on_grid(&s, &grid).unwrap(),
        empirical_copula_on_grid(&w, &grid).unwrap()
    );
}

#[test]
fn validation_errors() {
    assert!(matches!(
        Sample::new(vec![], 2, SampleKind::Raw, TiePolicy::Reject),
        Err(Error::EmptySample)
    ));
    assert!(matches!(
        Sample::new(vec![1.0, 2.0, 3.0], 2, SampleKind::Raw, TiePolicy::Reject),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        Sample::new(
            vec![1.0, f64::NAN, 3.0, 4.0],
            2,
            SampleKind::Raw,
            TiePolicy::Reject
        ),
        Err(Error::NonFinite { column: 1 })
    ));
    assert!(matches!(
        Sample::new(
            vec![0.5, 1.5, 0.2, 0.3],
            2,
            SampleKind::PseudoUniform,
            TiePolicy::Reject
        ),
        Err(Error::NotPseudoUniform)
    ));
    assert!(matches!(
        Sample::new(
            vec![1.0, 2.0, 3.0, 2.0],
            2,
            SampleKind::Raw,
            TiePolicy::Reject
        ),
        Err(Error::Ties { column: 1 })
    ));
    let s = Sample::new(
        vec![0.2, 0.3, 0.4, 0.1],
        2,
        SampleKind::Raw,
        TiePolicy::Reject,
    )
    .unwrap();
    assert!(matches!(
        s.empirical_copula(&[0.5]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        s.empirical_copula(&[0.5, -0.1]),
        Err(Error::OutsideUnitCube { .. })
    ));
    assert!(matches!(
        s.marginal_quantile(2, 0.5),
        Err(Error::AxisOutOfRange { .. })
    ));
    let ind = CopulaModel::independence(2);
    let g = Grid::uniform(2, 3).unwrap();
    assert!(matches!(
        alpha_process(&s, &ind, &g),
        Err(Error::NotPseudoUniform)
    ));
    assert!(matches!(
        beta_process(&s, 0, 0.5),
        Err(Error::NotPseudoUniform)
    ));
}

#[test]
fn jitter_breaks_ties_deterministically() {
    let data = vec![1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 2.0, 5.0];
    let a = Sample::new(
        data.clone(),
        2,
        SampleKind::Raw,
        TiePolicy::Jitter { seed: 9 },
    )
    .unwrap();
    let b = Sample::new(
        data.clone(),
        2,
        SampleKind::Raw,
        TiePolicy::Jitter { seed: 9 },
    )
    .unwrap();
    assert!(a.was_jittered());
    assert_eq!(a.data(), b.data());
    // Only the tied column moves, by at most 1e-9 times its range.
    for (x, y) in a.data().iter().zip(&data).skip(1).step_by(2) {
        assert_eq!(x, y);
    }
    for (x, y) in a.data().iter().zip(&data).step_by(2) {
        assert!((x - y).abs() <= 1e-9);
    }
    let clean = Sample::new(
        vec![0.1, 0.2, 0.3, 0.4],
        2,
        SampleKind::Raw,
        TiePolicy::Jitter { seed: 1 },
    )
    .unwrap();
    assert!(!clean.was_jittered());
}

#[test]
fn beta_sup_matches_dense_scan() {
    let s = CopulaModel::independence(2).sample(25, 4).unwrap();
    let fast = beta_sup(&s, 1).unwrap();
    let mut slow: f64 = 0.0;
    for k in 0..=25 {
        // Just before and at each jump point.
        for u in [k as f64 / 25.0, (k as f64 / 25.0 - 1e-12).max(0.0)] {
            slow = slow.max(beta_process(&s, 1, u).unwrap().abs());
        }
    }
    assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
}

#[test]
fn prefix_and_pseudo_observations() {
    let s = CopulaModel::frank(2, 3.0).unwrap().sample(30, 1).unwrap();
    let p = s.prefix(10).unwrap();
    assert_eq!(p.n(), 10);
    assert_eq!(p.data(), &s.data()[..20]);
    let r = s.rank_pseudo_observations();
    let g = Grid::uniform(2, 11).unwrap();
    assert_eq!(
        empirical_copula_on_grid(&r, &g).unwrap(),
        empirical_copula_on_grid(&s, &g).unwrap()
    );
}

#[test]
fn process_tags_and_scaling() {
    let m = CopulaModel::fgm(2, 0.5).unwrap();
    let s = m.sample(100, 2).unwrap();
    let g = Grid::uniform(2, 5).unwrap();
    let a = copula_process(&s, &m, &g).unwrap();
    assert_eq!(a.tag, ProcessTag::An);
    assert_eq!(a.n, 100);
    for (k, u) in g.points().enumerate() {
        let expect = 10.0 * (s.empirical_copula(u).unwrap() - m.cdf(u).unwrap());
        assert!((a.values[k] - expect).abs() < 1e-14);
    }
    let al = alpha_process(&s, &m, &g).unwrap();
    assert_eq!(al.tag, ProcessTag::AlphaN);
    // Corner values vanish.
    assert_eq!(a.values[0], 0.0);
    assert!(a.values[g.len() - 1].abs() < 1e-12);
}

fn sample_strategy() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=50, 2usize..=3, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_and_compositional_paths_agree((n, d, seed) in sample_strategy(), extra in proptest::collection::vec(0.0f64..=1.0, 6)) {
        let s = CopulaModel::independence(d).sample(n, seed).unwrap();
        let rows = rows_of(&s);
        let nf = n as f64;
        let mut r = crate::rng::stream(seed ^ 0xabc);
        // Mix jump points, boundaries and arbitrary values.
        for t in 0..40 {
            let u: Vec<f64> = (0..d)
                .map(|j| match (t + j) % 4 {
                    0 => r.random_range(0..=n) as f64 / nf,
                    1 => extra[(t + j) % extra.len()],
                    2 => [0.0, 1.0][r.random_range(0..2)],
                    _ => r.random::<f64>(),
                })
                .collect();
            prop_assert_eq!(s.empirical_copula(&u).unwrap(), compositional_copula(&rows, &u), "u = {:?}", u);
        }
    }

    #[test]
    fn quantile_path_agrees_off_zero((n, d, seed) in sample_strategy(), u in proptest::collection::vec(1e-9f64..=1.0, 3)) {
        // F_jn^- returns the column minimum at 0 rather than 0, so the
        // composition C_n(u) = F_n(F_1n^-(u_1), ...) is checked on (0,1]^d.
        let s = CopulaModel::clayton(d, 1.0).unwrap().sample(n, seed).unwrap();
        let u = &u[..d];
        let x: Vec<f64> = (0..d).map(|j| s.marginal_quantile(j, u[j]).unwrap()).collect();
        prop_assert_eq!(s.empirical_copula(u).unwrap(), s.joint_ecdf(&x).unwrap());
        for j in 0..d {
            prop_assert!(s.marginal_ecdf(j, x[j]).unwrap() >= u[j]);
        }
    }

    #[test]
    fn tensor_fast_path_matches_pointwise((n, d, seed) in sample_strategy(), m in 2usize..9, jitter in 0.0f64..0.05) {
        let s = CopulaModel::gumbel(d, 1.7).unwrap().sample(n, seed).unwrap();
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..m).map(|k| ((k as f64 + jitter * (j + 1) as f64) / (m - 1) as f64).min(1.0)).collect())
            .collect();
        let tensor = Grid::tensor(axes, false).unwrap();
        let pts: Vec<Vec<f64>> = tensor.points().map(|p| p.to_vec()).collect();
        let list = Grid::from_points(d, &pts, false).unwrap();
        prop_assert_eq!(empirical_copula_on_grid(&s, &tensor).unwrap(), empirical_copula_on_grid(&s, &list).unwrap());
        prop_assert_eq!(uniform_empirical_on_grid(&s, &tensor).unwrap(), uniform_empirical_on_grid(&s, &list).unwrap());
    }

    #[test]
    fn empirical_copula_is_a_distribution_on_the_grid((n, _d, seed) in sample_strategy()) {
        let s = CopulaModel::frank(2, -2.0).unwrap().sample(n, seed).unwrap();
        let g = Grid::uniform(2, 9).unwrap();
        let c = empirical_copula_on_grid(&s, &g).unwrap();
        let idx = |i: usize, j: usize| c[i * 9 + j];
        for i in 0..8 {
            for j in 0..8 {
                let mass = idx(i + 1, j + 1) - idx(i, j + 1) - idx(i + 1, j) + idx(i, j);
                prop_assert!(mass >= -1e-15);
            }
        }
        // Margins of C_n are the uniform empirical df of ranks: ceil(n u)/n.
        for k in 0..9 {
            let u = k as f64 / 8.0;
            prop_assert_eq!(idx(k, 8), rank_threshold(n, u) as f64 / n as f64);
        }
    }
}
