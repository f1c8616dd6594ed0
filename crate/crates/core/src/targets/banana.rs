use super::Target;
use crate::scalar::Real;

/// Rosenbrock "banana": `θ₁ ~ N(0, 10)`, `θ₂ | θ₁ ~ N(0.03(θ₁² − 100), 1)`.
/// The 10 is a variance.
#[derive(Debug, Clone)]
pub struct Banana<T> {
    mean: [T; 2],
    variance: [T; 2],
}

const CURVATURE: f64 = 0.03;
const SHIFT: f64 = 100.0;
const VAR1: f64 = 10.0;

impl<T: Real> Banana<T> {
    pub fn new() -> Self {
        // E[θ₂] = b(E θ₁² − 100); Var θ₂ = 1 + b²·Var(θ₁²) = 1 + b²·2·10²
        Banana {
            mean: [T::zero(), T::lit(CURVATURE * (VAR1 - SHIFT))],
            variance: [
                T::lit(VAR1),
                T::lit(1.0 + CURVATURE * CURVATURE * 2.0 * VAR1 * VAR1),
            ],
        }
    }
}

impl<T: Real> Default for Banana<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Target<T> for Banana<T> {
    fn dim(&self) -> usize {
        2
    }

    fn name(&self) -> &str {
        "banana"
    }

    fn log_density(&self, theta: &[T]) -> T {
        let mut g = [T::zero(); 2];
        self.log_density_and_grad(theta, &mut g)
    }

    fn log_density_and_grad(&self, theta: &[T], grad: &mut [T]) -> T {
        let (x, y) = (theta[0], theta[1]);
        let b = T::lit(CURVATURE);
        let half = T::lit(0.5);
        let r = y - b * (x * x - T::lit(SHIFT));
        grad[0] = -x / T::lit(VAR1) + r * T::lit(2.0) * b * x;
        grad[1] = -r;
        -half * x * x / T::lit(VAR1) - half * r * r
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

    #[test]
    fn ridge_point_is_stationary() {
        let t = Banana::<f64>::new();
        let mut g = [1.0; 2];
        let lp = t.log_density_and_grad(&[0.0, -3.0], &mut g);
        assert_eq!(lp, 0.0);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        let mean = t.true_mean().unwrap();
        assert!(mean[0] == 0.0 && (mean[1] + 2.7).abs() < 1e-12);
    }
}
