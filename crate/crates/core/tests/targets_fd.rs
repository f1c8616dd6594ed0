mod common;

use chees_smc::targets::{
    banana_target, gaussian_target, ill_conditioned_target, logistic_target, IllConditionedSpec,
    Target,
};
use common::{fd_gradient, relative_error, synthetic_credit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn worst_gradient_error<G: Target<f64>>(target: &G, points: usize, scale: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad = vec![0.0; target.dim()];
    (0..points)
        .map(|_| {
            let x: Vec<f64> = (0..target.dim())
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let lp = target.log_density_and_grad(&x, &mut grad);
            assert!((lp - target.log_density(&x)).abs() <= 1e-9 * lp.abs().max(1.0));
            relative_error(&fd_gradient(|y| target.log_density(y), &x, 1e-5), &grad)
        })
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_gradient_matches_finite_differences() {
    assert!(worst_gradient_error(&gaussian_target(), 200, 3.0, 1) < 1e-5);
}

#[test]
fn ill_conditioned_gradient_matches_finite_differences() {
    assert!(worst_gradient_error(&ill_conditioned_target(3), 100, 1.0, 2) < 1e-5);
}

#[test]
fn banana_gradient_matches_finite_differences() {
    assert!(worst_gradient_error(&banana_target(), 200, 4.0, 3) < 1e-5);
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let data = synthetic_credit(400, 11);
    assert!(worst_gradient_error(&logistic_target(&data), 100, 0.5, 4) < 1e-5);
}

#[test]
fn gaussian_log_density_is_quadratic() {
    let t = ill_conditioned_target::<f64>(5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let x: Vec<f64> = (0..100).map(|_| rng.sample(StandardNormal)).collect();
        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let ratio = t.log_density(&scaled) / t.log_density(&x);
        assert!((ratio - 9.0).abs() < 1e-9);
    }
}

#[test]
fn logistic_log_density_is_concave_along_lines() {
    let data = synthetic_credit(300, 12);
    let t = logistic_target::<f64>(&data);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let a: Vec<f64> = (0..25).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..25).map(|_| rng.sample(StandardNormal)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        assert!(t.log_density(&mid) >= 0.5 * (t.log_density(&a) + t.log_density(&b)) - 1e-9);
    }
}

#[test]
fn ill_conditioned_spec_is_reproducible() {
    let a = IllConditionedSpec::generate(100, 9);
    let b = IllConditionedSpec::generate(100, 9);
    assert_eq!(a.eigenvalues, b.eigenvalues);
    assert_eq!(a.q, b.q);
    assert!(a.eigenvalues.iter().all(|&l| l >= IllConditionedSpec::EIGENVALUE_FLOOR));
}
