//! Benchmark posteriors: unnormalized log-densities with analytic gradients.

mod banana;
mod gaussian;
mod german_credit;
mod logistic;

pub use banana::Banana;
pub use gaussian::{DenseGaussian, DiagGaussian, IllConditionedSpec};
pub use german_credit::{load_german_credit, GermanCreditDataset, GERMAN_CREDIT_FEATURES};
pub use logistic::{log_sigmoid, sigmoid, LogisticRegression};

use rand::Rng;

use crate::rng;
use crate::scalar::{standard_normal, Real};

/// A differentiable unnormalized log-density.
pub trait Target<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn log_density(&self, theta: &[T]) -> T;

    /// Writes `∇ log π(θ)` into `grad` and returns `log π(θ)`. Each call is
    /// one gradient evaluation for accounting purposes.
    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T;

    fn true_mean(&self) -> Option<&[T]> {
        None
    }

    /// Diagonal of the true covariance, when known.
    fn true_variance(&self) -> Option<&[T]> {
        None
    }
}

impl<T: Real, U: Target<T> + ?Sized> Target<T> for &U {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn log_density(&self, theta: &[T]) -> T {
        (**self).log_density(theta)
    }
    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        (**self).log_density_and_grad(theta, grad)
    }
    fn true_mean(&self) -> Option<&[T]> {
        (**self).true_mean()
    }
    fn true_variance(&self) -> Option<&[T]> {
        (**self).true_variance()
    }
}

impl<T: Real, U: Target<T> + ?Sized> Target<T> for Box<U> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn log_density(&self, theta: &[T]) -> T {
        (**self).log_density(theta)
    }
    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        (**self).log_density_and_grad(theta, grad)
    }
    fn true_mean(&self) -> Option<&[T]> {
        (**self).true_mean()
    }
    fn true_variance(&self) -> Option<&[T]> {
        (**self).true_variance()
    }
}

/// The 5-d diagonal Gaussian benchmark.
pub fn gaussian_target<T: Real>() -> DiagGaussian<T> {
    DiagGaussian::new(
        "gaussian",
        [-4.0, -2.0, 0.0, 2.0, 4.0].map(T::lit).to_vec(),
        [1.0, 1.5, 2.0, 2.5, 3.0].map(T::lit).to_vec(),
    )
}

/// The 100-d Gaussian with Haar-random eigenvectors and Gamma(0.5, 1)
/// eigenvalues.
pub fn ill_conditioned_target<T: Real>(seed: u64) -> DenseGaussian<T> {
    DenseGaussian::from_spec(&IllConditionedSpec::generate(100, seed))
}

pub fn banana_target<T: Real>() -> Banana<T> {
    Banana::new()
}

pub fn logistic_target<T: Real>(dataset: &GermanCreditDataset) -> LogisticRegression<T> {
    LogisticRegression::from_dataset(dataset)
}

/// `J` i.i.d. draws from the standard-normal prior `N(0, I_D)`.
pub fn sample_prior<T: Real>(dim: usize, particles: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = rng::substream(seed, 0, rng::INIT_SLOT);
    sample_prior_with(dim, particles, &mut rng)
}

pub(crate) fn sample_prior_with<T: Real, R: Rng + ?Sized>(
    dim: usize,
    particles: usize,
    rng: &mut R,
) -> Vec<Vec<T>> {
    (0..particles)
        .map(|_| (0..dim).map(|_| standard_normal(rng)).collect())
        .collect()
}

/// Log-density of the prior with constants dropped: `−½‖θ‖²`.
pub fn prior_log_density<T: Real>(theta: &[T]) -> T {
    -T::lit(0.5) * crate::scalar::norm_sq(theta)
}
