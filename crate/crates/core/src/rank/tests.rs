use std::vec;
use std::vec::Vec;

use super::*;
use crate::empirical::{SampleKind, TiePolicy};

fn hand_sample() -> Sample {
    Sample::from_rows(
        &[
            vec![0.3, 1.2],
            vec![0.1, 0.4],
            vec![0.8, 2.5],
            vec![0.5, 0.2],
            vec![0.9, 1.9],
        ],
        SampleKind::Raw,
        TiePolicy::Reject,
    )
    .unwrap()
}

fn brute_concordance(s: &Sample) -> (usize, usize) {
    let (mut c, mut d) = (0, 0);
    for i in 0..s.n() {
        for j in i + 1..s.n() {
            let p = (s.row(i)[0] - s.row(j)[0]) * (s.row(i)[1] - s.row(j)[1]);
            if p > 0.0 {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    (c, d)
}

#[test]
fn score_evaluation() {
    let s = ScoreFunction::spearman();
    assert_eq!(s.eval(0.1, 0.2, 0.5), 3.0);
    assert_eq!(s.dz(0.1, 0.2, 0.5), 12.0);
    assert_eq!(s.kind(), ScoreKind::SpearmanJ);
    let k = ScoreFunction::kendall();
    assert_eq!(k.eval(0.0, 0.0, 0.25), 0.0);
    let p = ScoreFunction::polynomial(vec![ScoreTerm::new(2.0, 1, 0, 2)]).unwrap();
    // dJ/dz = 4 u z, max 4
    assert!((p.z_derivative_bound() - 4.0).abs() < 1e-12);
    let log = ScoreFunction::from_fn(|_, _, z| z.ln(), |_, _, z| 1.0 / z);
    assert!(log.z_derivative_bound().is_infinite());
    assert!(matches!(
        delta_method_width(&log, &CopulaModel::independence(2)),
        Err(Error::UnboundedScore)
    ));
}

#[test]
fn spearman_model_values() {
    let s = ScoreFunction::spearman();
    assert!(
        spearman_functional(&CopulaModel::independence(2), &s)
            .unwrap()
            .abs()
            < 1e-14
    );
    for &th in &[-1.0, -0.3, 0.5, 1.0] {
        let v = spearman_functional(&CopulaModel::fgm(2, th).unwrap(), &s).unwrap();
        assert!((v - th / 3.0).abs() < 1e-13, "theta {th}: {v}");
    }
    // Gaussian: rho_S = 6/pi asin(r/2)
    let r: f64 = 0.6;
    let v = spearman_functional(&CopulaModel::gaussian(2, r).unwrap(), &s).unwrap();
    assert!((v - 6.0 / core::f64::consts::PI * (r / 2.0).asin()).abs() < 1e-6);
    assert!(matches!(
        spearman_functional(&CopulaModel::independence(3), &s),
        Err(Error::RequiresBivariate(3))
    ));
}

#[test]
fn empirical_spearman_paths_agree() {
    let m = CopulaModel::clayton(2, 1.0).unwrap();
    let sample = m.sample(80, 2).unwrap();
    let fast = spearman_functional_empirical(&sample, &ScoreFunction::spearman()).unwrap();
    // Adding a zero z^2 term forces the cell sum.
    let slow_score = ScoreFunction::polynomial(vec![
        ScoreTerm::new(12.0, 0, 0, 1),
        ScoreTerm::new(-3.0, 0, 0, 0),
        ScoreTerm::new(0.0, 0, 0, 2),
    ])
    .unwrap();
    let slow = spearman_functional_empirical(&sample, &slow_score).unwrap();
    assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    let f = ScoreFunction::from_fn(|_, _, z| 12.0 * z - 3.0, |_, _, _| 12.0);
    let by_fn = spearman_functional_empirical(&sample, &f).unwrap();
    assert!((fast - by_fn).abs() < 1e-12);
    // A score mixing u, v and z^2, fast path unavailable: compare against
    // brute-force midpoint-free cell integration with 8-point rules.
    let mixed = ScoreFunction::polynomial(vec![
        ScoreTerm::new(1.5, 1, 2, 2),
        ScoreTerm::new(-0.5, 0, 1, 1),
    ])
    .unwrap();
    let exact = spearman_functional_empirical(&sample, &mixed).unwrap();
    let n = sample.n();
    let rule = GaussLegendre::new(4);
    let mut brute = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lo = [i as f64 / n as f64, j as f64 / n as f64];
            let hi = [(i + 1) as f64 / n as f64, (j + 1) as f64 / n as f64];
            let z = sample.empirical_copula(&hi).unwrap();
            brute += rule.integrate_box(&lo, &hi, |p| mixed.eval(p[0], p[1], z));
        }
    }
    assert!((exact - brute).abs() < 1e-12);
}

#[test]
fn empirical_spearman_near_classical() {
    for s in [
        hand_sample(),
        CopulaModel::gumbel(2, 2.0).unwrap().sample(50, 1).unwrap(),
    ] {
        let n = s.n() as f64;
        let a = spearman_functional_empirical(&s, &ScoreFunction::spearman()).unwrap();
        let b = spearman_rho(&s).unwrap();
        // S(C_n) = 12 sum R1 R2 / n^3 - 3, which differs from rho_S by
        // 6/(n-1) - 12 sum R1 R2 / (n^2 (n^2 - 1)).
        let sum_rr: f64 = (0..s.n())
            .map(|i| s.rank(i, 0) as f64 * s.rank(i, 1) as f64)
            .sum();
        assert!((a - (12.0 * sum_rr / (n * n * n) - 3.0)).abs() < 1e-12);
        assert!((a - b).abs() <= 6.0 / (n - 1.0), "{a} vs {b}");
    }
    // Hand sample ranks: (2,3),(1,2),(4,5),(3,1),(5,4): sum R1 R2 = 6+2+20+3+20 = 51
    let s = hand_sample();
    assert!(
        (spearman_rho(&s).unwrap() - (12.0 * 51.0 / (5.0 * 24.0) - 3.0 * 6.0 / 4.0)).abs() < 1e-14
    );
}

#[test]
fn empirical_kendall_matches_concordance() {
    for s in [
        hand_sample(),
        CopulaModel::frank(2, -4.0).unwrap().sample(120, 9).unwrap(),
    ] {
        let n = s.n();
        let (c, d) = brute_concordance(&s);
        let tau = (c as f64 - d as f64) / (n * (n - 1) / 2) as f64;
        assert!((kendall_tau(&s).unwrap() - tau).abs() < 1e-14);
        let t = kendall_functional_empirical(&s, &ScoreFunction::kendall()).unwrap();
        let expect = 4.0 * (c + n) as f64 / (n * n) as f64 - 1.0;
        assert!((t - expect).abs() < 1e-14);
        // T - tau = 4/n - 4 N_c / (n^2 (n - 1)), between 2/n and 4/n.
        assert!((t - tau).abs() <= 4.0 / n as f64 + 1e-12);
    }
}

#[test]
fn empirical_kendall_rank_invariant() {
    let s = CopulaModel::clayton(2, 3.0).unwrap().sample(60, 4).unwrap();
    let warped: Vec<f64> = s
        .data()
        .chunks(2)
        .flat_map(|r| [r[0].powi(3), (r[1] * 7.0).exp()])
        .collect();
    let w = Sample::new(warped, 2, SampleKind::Raw, TiePolicy::Reject).unwrap();
    let k = ScoreFunction::kendall();
    assert_eq!(
        kendall_functional_empirical(&s, &k).unwrap(),
        kendall_functional_empirical(&w, &k).unwrap()
    );
}

#[test]
fn kendall_model_values() {
    let k = ScoreFunction::kendall();
    let ind = kendall_functional(&CopulaModel::independence(2), &k, 1).unwrap();
    assert!(ind.value.abs() < 0.01, "{ind:?}");
    let cl = kendall_functional(&CopulaModel::clayton(2, 2.0).unwrap(), &k, 1).unwrap();
    assert!((cl.value - 0.5).abs() < 0.01, "{cl:?}");
    assert!(cl.std_error < 0.005);
    // FGM: tau = 2 theta / 9
    let f = kendall_functional(&CopulaModel::fgm(2, 0.9).unwrap(), &k, 2).unwrap();
    assert!((f.value - 0.2).abs() < 0.01, "{f:?}");
    // Gumbel: tau = 1 - 1/theta
    let g = kendall_functional(&CopulaModel::gumbel(2, 2.5).unwrap(), &k, 3).unwrap();
    assert!((g.value - 0.6).abs() < 0.01, "{g:?}");
}

#[test]
fn delta_width_values() {
    let ind = CopulaModel::independence(2);
    // sqrt(n) rho_S -> N(0, 1) under independence.
    let w = delta_method_width(&ScoreFunction::spearman(), &ind).unwrap();
    assert!((w - 1.0).abs() < 1e-6, "{w}");
    let flat = ScoreFunction::polynomial(vec![ScoreTerm::new(1.0, 1, 1, 0)]).unwrap();
    assert_eq!(delta_method_width(&flat, &ind).unwrap(), 0.0);
}

#[test]
fn rank_statistic_values() {
    let s = CopulaModel::independence(3).sample(40, 6).unwrap();
    assert!((rank_statistic(&s, &RankScore::Function(|_| 1.0)).unwrap() - 1.0).abs() < 1e-15);
    // Depends on one coordinate only: mean of k/n = (n + 1)/(2n).
    let one = RankScore::Polynomial(vec![(1.0, vec![0, 1, 0])]);
    assert!((rank_statistic(&s, &one).unwrap() - 41.0 / 80.0).abs() < 1e-15);
    let bad = RankScore::Polynomial(vec![(1.0, vec![1, 1])]);
    assert!(matches!(
        rank_statistic(&s, &bad),
        Err(Error::DimensionMismatch { .. })
    ));
    let h = hand_sample();
    let sp = RankScore::Polynomial(vec![(12.0, vec![1, 1]), (-3.0, vec![0, 0])]);
    let r = rank_statistic(&h, &sp).unwrap();
    assert!((r - spearman_rho(&h).unwrap()).abs() <= 6.0 / 4.0);
    assert!(
        (r - spearman_functional_empirical(&h, &ScoreFunction::spearman()).unwrap()).abs() < 1e-12
    );
}

#[test]
fn lil_constant_independence() {
    let rho = lil_rho(
        &CopulaModel::independence(2),
        &Grid::uniform(2, 21).unwrap(),
    )
    .unwrap();
    assert!((rho - 0.25).abs() < 1e-4);
}
