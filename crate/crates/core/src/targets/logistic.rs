use super::{GermanCreditDataset, Target};
use crate::scalar::{dot, norm_sq, Real};

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `log σ(z)` without overflow for large `|z|`.
pub fn log_sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Bayesian logistic regression with a standard-normal prior on every
/// coefficient. The last coefficient multiplies an appended intercept column.
#[derive(Debug, Clone)]
pub struct LogisticRegression<T> {
    design: Vec<Vec<T>>,
    labels: Vec<T>,
    dim: usize,
}

impl<T: Real> LogisticRegression<T> {
    pub fn from_dataset(dataset: &GermanCreditDataset) -> Self {
        let design: Vec<Vec<T>> = dataset
            .features
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| T::lit(x))
                    .chain(std::iter::once(T::one()))
                    .collect()
            })
            .collect();
        let dim = design.first().map_or(1, Vec::len);
        LogisticRegression {
            design,
            labels: dataset.labels.iter().map(|&y| T::lit(y as f64)).collect(),
            dim,
        }
    }

    pub fn design(&self) -> &[Vec<T>] {
        &self.design
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }
}

impl<T: Real> Target<T> for LogisticRegression<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "german-credit"
    }

    fn log_density(&self, theta: &[T]) -> T {
        let lik: T = self
            .design
            .iter()
            .zip(&self.labels)
            .map(|(x, &y)| {
                let z = dot(x, theta);
                y * log_sigmoid(z) + (T::one() - y) * log_sigmoid(-z)
            })
            .sum();
        lik - T::lit(0.5) * norm_sq(theta)
    }

    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        for (g, &t) in grad.iter_mut().zip(theta) {
            *g = -t;
        }
        let mut logp = -T::lit(0.5) * norm_sq(theta);
        for (x, &y) in self.design.iter().zip(&self.labels) {
            let z = dot(x, theta);
            logp += y * log_sigmoid(z) + (T::one() - y) * log_sigmoid(-z);
            let resid = y - sigmoid(z);
            for (g, &xi) in grad.iter_mut().zip(x) {
                *g += xi * resid;
            }
        }
        logp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((log_sigmoid(800.0f64)).abs() < 1e-300);
        assert!((log_sigmoid(-800.0f64) + 800.0).abs() < 1e-9);
        for z in [-30.0f64, -2.0, 0.3, 12.0] {
            assert!((log_sigmoid(z) - sigmoid(z).ln()).abs() < 1e-12);
        }
    }
}
