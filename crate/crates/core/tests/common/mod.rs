#![allow(dead_code)]

use chees_smc::targets::{load_german_credit, GermanCreditDataset, GERMAN_CREDIT_FEATURES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The real dataset when `GERMAN_CREDIT_PATH` points at it.
pub fn german_credit() -> Option<GermanCreditDataset> {
    let path = std::env::var_os("GERMAN_CREDIT_PATH")?;
    load_german_credit(path).ok()
}

/// Standardized features and labels drawn from a known logistic model, with
/// the same shape as the German-credit data.
pub fn synthetic_credit(rows: usize, seed: u64) -> GermanCreditDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..GERMAN_CREDIT_FEATURES)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut features = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let x: Vec<f64> = (0..GERMAN_CREDIT_FEATURES)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let z: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        let p = 1.0 / (1.0 + (-z).exp());
        labels.push(u8::from(rng.random::<f64>() < p));
        features.push(x);
    }
    GermanCreditDataset {
        features,
        labels,
        constant_columns: vec![],
    }
}

pub fn credit_or_synthetic() -> (GermanCreditDataset, &'static str) {
    match german_credit() {
        Some(d) => (d, "german credit"),
        None => (synthetic_credit(1000, 7), "synthetic credit-shaped data"),
    }
}

/// Central-difference gradient.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖b‖, 1)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1.0)
}
