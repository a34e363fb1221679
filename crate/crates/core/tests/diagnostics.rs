use cabs::diagnostics::{
    bound_report, cluster_sizes, correlation_experiment, exact_embeddings, spearman, tail_norm, theorem1_bound,
    theorem2_gap, theta_hat, truncation_errors, BoundConfig, BoundReport,
};
use cabs::io::Recipe;
use cabs::matcore::{frob_norm, pinv_truncated, DEFAULT_RANK_TOL};
use cabs::samplers::uniform_indices;
use cabs::{DenseMat, MatrixSource, RankSpec, Sketch};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;

fn report(e_r: f64, e_c: f64, t_r: usize, t_c: usize, w_pinv_norm: f64) -> BoundReport {
    BoundReport {
        e_r,
        e_c,
        t_r,
        t_c,
        t: t_r.max(t_c),
        w_pinv_norm,
        k: 1,
        bound_value: 0.0,
    }
}

#[test]
fn cluster_size_examples() {
    assert_eq!(cluster_sizes(&[0, 0, 1], 2), 2);
    assert_eq!(cluster_sizes(&[0, 1, 2], 3), 1);
    assert_eq!(cluster_sizes(&[0; 7], 3), 7);
}

#[test]
fn theorem1_examples() {
    let cfg = BoundConfig::new(1.0).unwrap();
    assert_eq!(theorem1_bound(0.0, 0.0, 3, 2, 4, 5.0, &cfg), 0.0);
    let v = theorem1_bound(1.0, 1.0, 1, 1, 1, 1.0, &cfg);
    assert!((v - (12f64.sqrt() + 1.0)).abs() < 1e-12);
    let tail = cfg.with_tail(2.5).unwrap();
    assert!((theorem1_bound(1.0, 1.0, 1, 1, 1, 1.0, &tail) - v - 2.5).abs() < 1e-12);
    assert!(BoundConfig::new(0.0).is_err());
    assert!(BoundConfig::new(1.0).unwrap().with_tail(-1.0).is_err());
}

#[test]
fn theorem2_examples() {
    let p = report(4.0, 4.0, 1, 1, 1.0);
    assert_eq!(theorem2_gap(&p, &p, 1, 1.0).unwrap(), 0.0);
    let f = report(1.0, 1.0, 1, 1, 1.0);
    let expected = 6.0 * 6f64.sqrt() / 4.0 + 15.0 / 4.0;
    assert!((theorem2_gap(&p, &f, 1, 1.0).unwrap() - expected).abs() < 1e-12);
    let worse = report(5.0, 1.0, 1, 1, 1.0);
    assert!(theorem2_gap(&p, &worse, 1, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn theorem1_is_monotone(
        e_r in 0.0f64..10.0, e_c in 0.0f64..10.0, t_r in 1usize..20, t_c in 1usize..20,
        k in 1usize..50, w in 0.0f64..10.0, theta in 0.01f64..10.0, bump in 0.0f64..1.0, which in 0usize..6,
    ) {
        let cfg = BoundConfig::new(theta).unwrap();
        let base = theorem1_bound(e_r, e_c, t_r, t_c, k, w, &cfg);
        prop_assert!(base >= 0.0);
        let step = 1 + (bump * 3.0) as usize;
        let bumped = match which {
            0 => theorem1_bound(e_r + bump, e_c, t_r, t_c, k, w, &cfg),
            1 => theorem1_bound(e_r, e_c + bump, t_r, t_c, k, w, &cfg),
            2 => theorem1_bound(e_r, e_c, t_r + step, t_c, k, w, &cfg),
            3 => theorem1_bound(e_r, e_c, t_r, t_c + step, k, w, &cfg),
            4 => theorem1_bound(e_r, e_c, t_r, t_c, k, w + bump, &cfg),
            _ => theorem1_bound(e_r, e_c, t_r, t_c, k, w, &BoundConfig::new(theta + bump).unwrap()),
        };
        prop_assert!(bumped >= base);
    }

    #[test]
    fn theorem2_gap_is_nonnegative_and_zero_only_without_drop(
        f_r in 0.0f64..5.0, f_c in 0.0f64..5.0, d_r in 0.0f64..5.0, d_c in 0.0f64..5.0, zero_r: bool, zero_c: bool,
        t_r in 1usize..10, t_c in 1usize..10, k in 1usize..20, w in 0.01f64..5.0, theta in 0.01f64..5.0,
    ) {
        let d_r = if zero_r { 0.0 } else { d_r + 1e-3 };
        let d_c = if zero_c { 0.0 } else { d_c + 1e-3 };
        let p = report(f_r + d_r, f_c + d_c, t_r, t_c, w);
        let f = report(f_r, f_c, t_r, t_c, w);
        let gap = theorem2_gap(&p, &f, k, theta).unwrap();
        prop_assert!(gap >= 0.0 && gap.is_finite());
        prop_assert_eq!(gap == 0.0, d_r == 0.0 && d_c == 0.0);
    }

    #[test]
    fn spearman_matches_pearson_on_ranks(xs in proptest::collection::vec((0u8..20, 0u8..20), 2..60)) {
        let x: Vec<f64> = xs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = xs.iter().map(|p| f64::from(p.1)).collect();
        let rho = spearman(&x, &y);
        let (rx, ry) = (ranks(&x), ranks(&y));
        let expected = pearson(&rx, &ry);
        if expected.is_nan() {
            prop_assert!(rho.is_nan());
        } else {
            prop_assert!((rho - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_errors_match_direct_evaluation(m in 3usize..25, n in 3usize..25, r in 1usize..5, seed: u64) {
        let a = Recipe::Lowrank { m, n, r: 3, noise: 0.3, seed }.generate().unwrap().to_dense();
        let src = MatrixSource::dense(a.clone());
        let u = gaussian_like(m, r, seed ^ 1);
        let v = gaussian_like(n, r, seed ^ 2);
        let s = Array1::from_iter((0..r).map(|i| 3.0 / (i + 1) as f64));
        let sk = Sketch::new(u, s, v, false).unwrap();
        let fast = truncation_errors(&src, &sk).unwrap();
        let norm = frob_norm(&a);
        for (i, e) in fast.iter().enumerate() {
            let direct = frob_norm(&(sk.truncated(i + 1).reconstruct() - a.as_array())) / norm;
            prop_assert!((e - direct).abs() < 1e-7, "rank {}: {} vs {}", i + 1, e, direct);
        }
    }

    #[test]
    fn bound_holds_with_estimated_theta(seed: u64, k in 3usize..8) {
        let a = Recipe::Lowrank { m: 20, n: 15, r: 3, noise: 0.1, seed }.generate().unwrap().to_dense();
        let (p, q) = exact_embeddings(a.view()).unwrap();
        let rows = uniform_indices(20, k, seed).unwrap();
        let cols = uniform_indices(15, k, seed ^ 9).unwrap();
        let theta = theta_hat(a.view(), p.view(), q.view(), &rows, &cols).unwrap();
        prop_assume!(theta.is_finite());
        let w = a.as_array().select(Axis(0), rows.as_slice()).select(Axis(1), cols.as_slice());
        let w = DenseMat::from_array(w).unwrap();
        let rep = bound_report(p.view(), q.view(), &rows, &cols, &w, &BoundConfig::new(theta.max(1e-12)).unwrap()).unwrap();
        let c = a.as_array().select(Axis(1), cols.as_slice());
        let r = a.as_array().select(Axis(0), rows.as_slice());
        let approx = c.dot(&pinv_truncated(w.view(), RankSpec::Auto, DEFAULT_RANK_TOL).unwrap()).dot(&r);
        let actual = frob_norm(&(approx - a.as_array()));
        prop_assert!(rep.bound_value >= actual * (1.0 - 1e-9), "bound {} < actual {}", rep.bound_value, actual);
    }
}

fn gaussian_like(m: usize, r: usize, seed: u64) -> Array2<f64> {
    Recipe::Lowrank {
        m,
        n: r,
        r,
        noise: 0.0,
        seed,
    }
    .generate()
    .unwrap()
    .to_dense()
    .into_array()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        f64::NAN
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[test]
fn spearman_examples() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    assert!(spearman(&[1.0], &[1.0]).is_nan());
    assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_nan());
}

#[test]
fn tail_norm_is_energy_beyond_r() {
    assert!((tail_norm(&[3.0, 4.0, 12.0], 1) - 160f64.sqrt()).abs() < 1e-12);
    assert_eq!(tail_norm(&[3.0], 5), 0.0);
}

#[test]
fn correlation_trials_on_exact_rank() {
    let src = Recipe::Lowrank {
        m: 30,
        n: 25,
        r: 4,
        noise: 0.0,
        seed: 2,
    }
    .source(false)
    .unwrap();
    assert!(correlation_experiment(&src, 4, 0, 1).unwrap().is_empty());
    // Sampling every row and column gives zero encoding error.
    let square = Recipe::Lowrank {
        m: 20,
        n: 20,
        r: 4,
        noise: 0.0,
        seed: 3,
    }
    .source(false)
    .unwrap();
    for t in correlation_experiment(&square, 20, 6, 1).unwrap() {
        assert_eq!((t.e_r, t.e_c), (0.0, 0.0));
        assert!(t.sketch_error < 1e-8);
    }
    let trials = correlation_experiment(&src, 6, 20, 1).unwrap();
    assert_eq!(trials.len(), 20);
    assert_eq!(trials, correlation_experiment(&src.fresh(), 6, 20, 1).unwrap());
    for t in &trials {
        assert!(t.e_r >= 0.0 && t.e_c >= 0.0);
        assert!(t.sketch_error < 1e-8, "exact-rank source gave {}", t.sketch_error);
    }
    assert!(src.access().all);
}

#[test]
fn exact_embeddings_reproduce_matrix() {
    let a = Recipe::Lowrank {
        m: 12,
        n: 9,
        r: 3,
        noise: 0.2,
        seed: 5,
    }
    .generate()
    .unwrap()
    .to_dense();
    let (p, q) = exact_embeddings(a.view()).unwrap();
    assert!(frob_norm(&(p.dot(&q.t()) - a.as_array())) < 1e-12 * frob_norm(&a));
}
