use distributions::TaskDist;
use fitting::{fit_pareto, fit_truncated_pareto, goodness_report};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn draws(d: &TaskDist, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn alpha_of(d: &TaskDist) -> f64 {
    match *d {
        TaskDist::Pareto { alpha, .. } | TaskDist::TruncatedPareto { alpha, .. } => alpha,
        _ => panic!("not a Pareto fit"),
    }
}

#[test]
fn pareto_fit_recovers_parameters() {
    let xs = draws(&TaskDist::pareto(1.0, 2.0).unwrap(), 100_000, 1);
    let f = fit_pareto(&xs).unwrap();
    let TaskDist::Pareto { s, alpha } = f.dist else { panic!() };
    assert!((1.9..=2.1).contains(&alpha), "{alpha}");
    assert!((1.0..=1.001).contains(&s), "{s}");
    assert_eq!(f.n_samples, 100_000);
}

#[test]
fn truncated_fit_recovers_tail_index() {
    let xs = draws(&TaskDist::truncated_pareto(1.0, 1e10, 1.1).unwrap(), 100_000, 2);
    let a = alpha_of(&fit_truncated_pareto(&xs).unwrap().dist);
    assert!((1.05..=1.15).contains(&a), "{a}");
}

#[test]
fn far_truncation_matches_the_plain_fit() {
    let xs = draws(&TaskDist::truncated_pareto(1.0, 1e12, 2.0).unwrap(), 100_000, 3);
    let a = alpha_of(&fit_truncated_pareto(&xs).unwrap().dist);
    let b = alpha_of(&fit_pareto(&xs).unwrap().dist);
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn heavy_truncation_is_handled() {
    // light truncation biases the plain fit upward; the truncated fit does not
    let xs = draws(&TaskDist::truncated_pareto(1.0, 5.0, 1.0).unwrap(), 100_000, 4);
    let f = fit_truncated_pareto(&xs).unwrap();
    let TaskDist::TruncatedPareto { s, u, alpha } = f.dist else { panic!() };
    assert!((alpha - 1.0).abs() < 0.05, "{alpha}");
    assert!(s >= 1.0 && u <= 5.0);
}

#[test]
fn self_ks_is_small_and_wrong_fit_is_worse() {
    let xs = draws(&TaskDist::pareto(1.0, 2.0).unwrap(), 100_000, 5);
    let f = fit_pareto(&xs).unwrap();
    let good = goodness_report(&f, &xs).unwrap();
    assert!(good.ks_statistic < 0.01, "{}", good.ks_statistic);
    let mut wrong = f.clone();
    let TaskDist::Pareto { s, alpha } = f.dist else { panic!() };
    wrong.dist = TaskDist::pareto(s, 2.0 * alpha).unwrap();
    let bad = goodness_report(&wrong, &xs).unwrap();
    assert!(bad.ks_statistic > good.ks_statistic);
    for w in good.tail_points.windows(2) {
        assert!(w[1].empirical <= w[0].empirical && w[1].fitted <= w[0].fitted);
    }
}

#[test]
fn error_shrinks_with_sample_size() {
    let d = TaskDist::pareto(1.0, 2.0).unwrap();
    let mean_err = |n: usize| {
        (0..20u64)
            .map(|seed| (alpha_of(&fit_pareto(&draws(&d, n, 100 + seed)).unwrap().dist) - 2.0).abs())
            .sum::<f64>()
            / 20.0
    };
    let (e3, e4, e5) = (mean_err(1_000), mean_err(10_000), mean_err(100_000));
    assert!(e3 > e4 && e4 > e5, "{e3} {e4} {e5}");
}

#[test]
fn truncated_fit_without_a_root_reports_convergence() {
    // mean log-excess above half the log range: no interior maximum
    let xs = [1.0, 9.9, 9.95, 10.0];
    assert!(matches!(fit_truncated_pareto(&xs), Err(fitting::MathError::Convergence(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fits_bracket_the_data_and_are_scale_equivariant(
        xs in prop::collection::vec(1.0f64..1e3, 3..60),
        lambda in 0.01f64..100.0,
    ) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let scaled: Vec<f64> = xs.iter().map(|x| x * lambda).collect();
        let p = fit_pareto(&xs).unwrap();
        let q = fit_pareto(&scaled).unwrap();
        let (TaskDist::Pareto { s: s1, alpha: a1 }, TaskDist::Pareto { s: s2, alpha: a2 }) = (p.dist, q.dist) else { panic!() };
        prop_assert!(xs.iter().all(|&x| s1 <= x));
        prop_assert!((a1 / a2 - 1.0).abs() < 1e-9);
        prop_assert!((s2 / (s1 * lambda) - 1.0).abs() < 1e-12);
        if let (Ok(t1), Ok(t2)) = (fit_truncated_pareto(&xs), fit_truncated_pareto(&scaled)) {
            let (TaskDist::TruncatedPareto { s, u, alpha: b1 }, TaskDist::TruncatedPareto { u: u2, alpha: b2, .. }) = (t1.dist, t2.dist) else { panic!() };
            prop_assert!(xs.iter().all(|&x| s <= x && x <= u));
            prop_assert!((b1 - b2).abs() < 1e-6);
            prop_assert!((u2 / (u * lambda) - 1.0).abs() < 1e-12);
        }
    }
}
