use nalgebra::DMatrix;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::Target;
use crate::rng;
use crate::scalar::Real;

/// Gaussian with diagonal covariance.
#[derive(Debug, Clone)]
pub struct DiagGaussian<T> {
    name: String,
    mean: Vec<T>,
    variance: Vec<T>,
    precision: Vec<T>,
}

impl<T: Real> DiagGaussian<T> {
    pub fn new(name: impl Into<String>, mean: Vec<T>, variance: Vec<T>) -> Self {
        assert_eq!(mean.len(), variance.len());
        assert!(variance.iter().all(|&v| v > T::zero()));
        let precision = variance.iter().map(|&v| v.recip()).collect();
        DiagGaussian {
            name: name.into(),
            mean,
            variance,
            precision,
        }
    }

    pub fn standard(dim: usize) -> Self {
        DiagGaussian::new("standard-normal", vec![T::zero(); dim], vec![T::one(); dim])
    }
}

impl<T: Real> Target<T> for DiagGaussian<T> {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn log_density(&self, theta: &[T]) -> T {
        let half = T::lit(0.5);
        theta
            .iter()
            .zip(&self.mean)
            .zip(&self.precision)
            .map(|((&x, &m), &p)| -half * (x - m) * (x - m) * p)
            .sum()
    }

    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        let half = T::lit(0.5);
        let mut logp = T::zero();
        for d in 0..theta.len() {
            let r = theta[d] - self.mean[d];
            grad[d] = -r * self.precision[d];
            logp += half * r * grad[d];
        }
        logp
    }

    fn true_mean(&self) -> Option<&[T]> {
        Some(&self.mean)
    }

    fn true_variance(&self) -> Option<&[T]> {
        Some(&self.variance)
    }
}

/// Random covariance `Σ = Q diag(λ) Qᵀ` with Haar-distributed `Q`.
#[derive(Debug, Clone)]
pub struct IllConditionedSpec {
    pub seed: u64,
    pub eigenvalues: Vec<f64>,
    pub q: DMatrix<f64>,
}

impl IllConditionedSpec {
    pub const EIGENVALUE_FLOOR: f64 = 1e-8;

    pub fn generate(dim: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let normal = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
        let qr = normal.qr();
        let mut q = qr.q();
        let r = qr.r();
        // positive-diagonal R makes the QR factor Haar distributed
        for (i, mut col) in q.column_iter_mut().enumerate() {
            if r[(i, i)] < 0.0 {
                col.neg_mut();
            }
        }
        let gamma = Gamma::<f64>::new(0.5, 1.0).expect("valid gamma parameters");
        let eigenvalues = (0..dim)
            .map(|_| gamma.sample(&mut rng).max(Self::EIGENVALUE_FLOOR))
            .collect();
        IllConditionedSpec {
            seed,
            eigenvalues,
            q,
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&self.eigenvalues.clone().into());
        &self.q * lambda * self.q.transpose()
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }
}

/// Zero-mean Gaussian with a dense precision matrix.
#[derive(Debug, Clone)]
pub struct DenseGaussian<T> {
    name: String,
    dim: usize,
    /// row-major `Σ⁻¹`
    precision: Vec<T>,
    mean: Vec<T>,
    variance: Vec<T>,
}

impl<T: Real> DenseGaussian<T> {
    pub fn from_spec(spec: &IllConditionedSpec) -> Self {
        let dim = spec.eigenvalues.len();
        let inv = DMatrix::from_diagonal(
            &spec
                .eigenvalues
                .iter()
                .map(|l| l.recip())
                .collect::<Vec<_>>()
                .into(),
        );
        let precision = &spec.q * inv * spec.q.transpose();
        let covariance = spec.covariance();
        DenseGaussian {
            name: "ill-gauss".into(),
            dim,
            precision: (0..dim * dim)
                .map(|i| T::lit(precision[(i / dim, i % dim)]))
                .collect(),
            mean: vec![T::zero(); dim],
            variance: (0..dim).map(|i| T::lit(covariance[(i, i)])).collect(),
        }
    }

    pub fn precision_row(&self, i: usize) -> &[T] {
        &self.precision[i * self.dim..(i + 1) * self.dim]
    }
}

impl<T: Real> Target<T> for DenseGaussian<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn log_density(&self, theta: &[T]) -> T {
        let mut grad = vec![T::zero(); self.dim];
        self.log_density_and_grad(theta, &mut grad)
    }

    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        let half = T::lit(0.5);
        let mut logp = T::zero();
        for i in 0..self.dim {
            let g = -crate::scalar::dot(self.precision_row(i), theta);
            grad[i] = g;
            logp += half * theta[i] * g;
        }
        logp
    }

    fn true_mean(&self) -> Option<&[T]> {
        Some(&self.mean)
    }

    fn true_variance(&self) -> Option<&[T]> {
        Some(&self.variance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::gaussian_target;

    #[test]
    fn gaussian_examples() {
        let t = gaussian_target::<f64>();
        let mu = [-4.0, -2.0, 0.0, 2.0, 4.0];
        let mut g = [9.0; 5];
        assert_eq!(t.log_density_and_grad(&mu, &mut g), 0.0);
        assert_eq!(g, [0.0; 5]);
        let mut x = mu;
        x[0] += 1.0;
        t.log_density_and_grad(&x, &mut g);
        assert_eq!(g, [-1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn haar_factor_is_orthogonal() {
        let spec = IllConditionedSpec::generate(100, 1);
        let gram = spec.q.transpose() * &spec.q;
        let dev = (gram - DMatrix::<f64>::identity(100, 100)).abs().max();
        assert!(dev < 1e-10, "{dev}");
        assert!(spec.eigenvalues.iter().all(|&l| l > 0.0));
        let t = DenseGaussian::<f64>::from_spec(&spec);
        let mut g = vec![1.0; 100];
        t.log_density_and_grad(&vec![0.0; 100], &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn condition_numbers_are_in_the_expected_range() {
        let mut logs: Vec<f64> = (0..20)
            .map(|s| IllConditionedSpec::generate(100, s).condition_number().log10())
            .collect();
        logs.sort_by(f64::total_cmp);
        let median = 0.5 * (logs[9] + logs[10]);
        assert!((3.0..=8.0).contains(&median), "median log10 cond {median}");
    }
}
