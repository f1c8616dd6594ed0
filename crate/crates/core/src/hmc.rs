//! Leapfrog integration and Hamiltonian bookkeeping with an identity mass
//! matrix.

use crate::scalar::{norm_sq, Real};
use crate::targets::Target;

/// Position and momentum of the augmented target.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T> {
    pub position: Vec<T>,
    pub momentum: Vec<T>,
}

impl<T: Real> PhaseState<T> {
    pub fn new(position: Vec<T>, momentum: Vec<T>) -> Self {
        assert_eq!(position.len(), momentum.len(), "phase state dimension mismatch");
        PhaseState { position, momentum }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.momentum).all(|x| x.is_finite())
    }

    /// The same point with momentum negated.
    pub fn flipped(&self) -> Self {
        PhaseState {
            position: self.position.clone(),
            momentum: self.momentum.iter().map(|&p| -p).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeapfrogConfig<T> {
    pub step_size: T,
    /// Cap on leapfrog steps per trajectory.
    pub max_steps: usize,
}

impl<T: Real> LeapfrogConfig<T> {
    pub const DEFAULT_MAX_STEPS: usize = 500;

    pub fn new(step_size: T, max_steps: usize) -> Self {
        assert!(step_size > T::zero(), "step size must be positive");
        assert!(max_steps >= 1, "max_steps must be >= 1");
        LeapfrogConfig {
            step_size,
            max_steps,
        }
    }
}

/// Number of `∇ log π` evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct GradientCounter(u64);

impl GradientCounter {
    pub fn new() -> Self {
        GradientCounter(0)
    }

    #[inline]
    pub fn bump(&mut self) {
        self.0 += 1;
    }

    pub fn count(&self) -> u64 {
        self.0
    }

    pub fn merge(&mut self, other: GradientCounter) {
        self.0 += other.0;
    }
}

impl std::iter::Sum for GradientCounter {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        GradientCounter(iter.map(|c| c.0).sum())
    }
}

pub fn kinetic_energy<T: Real>(momentum: &[T]) -> T {
    T::lit(0.5) * norm_sq(momentum)
}

/// `H(θ, p) = ½‖p‖² − log π(θ)`.
pub fn hamiltonian<T: Real, G: Target<T> + ?Sized>(state: &PhaseState<T>, target: &G) -> T {
    kinetic_energy(&state.momentum) - target.log_density(&state.position)
}

/// Gradient evaluation that bumps the counter.
#[inline]
pub(crate) fn eval_grad<T: Real, G: Target<T> + ?Sized>(
    target: &G,
    theta: &[T],
    grad: &mut [T],
    counter: &mut GradientCounter,
) -> T {
    counter.bump();
    target.log_density_and_grad(theta, grad)
}

/// One leapfrog step. `grad` holds `∇ log π` at `theta` on entry and at the
/// new position on exit. Returns the new log-density.
#[inline]
pub(crate) fn leapfrog_step<T: Real, G: Target<T> + ?Sized>(
    target: &G,
    theta: &mut [T],
    momentum: &mut [T],
    grad: &mut [T],
    step_size: T,
    counter: &mut GradientCounter,
) -> T {
    let half = T::lit(0.5) * step_size;
    for ((p, x), g) in momentum.iter_mut().zip(theta.iter_mut()).zip(grad.iter()) {
        *p += half * *g;
        *x += step_size * *p;
    }
    let logp = eval_grad(target, theta, grad, counter);
    for (p, g) in momentum.iter_mut().zip(grad.iter()) {
        *p += half * *g;
    }
    logp
}

/// End point of a leapfrog trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub state: PhaseState<T>,
    pub initial_log_density: T,
    pub log_density: T,
    /// A non-finite value appeared; the end point is unusable.
    pub divergent: bool,
}

impl<T: Real> Trajectory<T> {
    pub fn initial_energy(&self, initial_momentum: &[T]) -> T {
        kinetic_energy(initial_momentum) - self.initial_log_density
    }

    pub fn final_energy(&self) -> T {
        kinetic_energy(&self.state.momentum) - self.log_density
    }
}

/// Integrates `steps` leapfrog steps from `start`. The gradient at the start
/// is evaluated fresh, so a finite trajectory costs exactly `steps + 1`
/// gradient evaluations. Integration stops early on a non-finite value.
pub fn leapfrog<T: Real, G: Target<T> + ?Sized>(
    target: &G,
    start: &PhaseState<T>,
    step_size: T,
    steps: usize,
    counter: &mut GradientCounter,
) -> Trajectory<T> {
    let mut theta = start.position.clone();
    let mut momentum = start.momentum.clone();
    let mut grad = vec![T::zero(); theta.len()];
    let initial_log_density = eval_grad(target, &theta, &mut grad, counter);
    let mut logp = initial_log_density;
    let mut divergent = !initial_log_density.is_finite();
    if !divergent {
        for _ in 0..steps {
            logp = leapfrog_step(target, &mut theta, &mut momentum, &mut grad, step_size, counter);
            if !logp.is_finite() || momentum.iter().any(|p| !p.is_finite()) {
                divergent = true;
                break;
            }
        }
    }
    Trajectory {
        state: PhaseState {
            position: theta,
            momentum,
        },
        initial_log_density,
        log_density: logp,
        divergent,
    }
}

/// `min(1, exp(H_current − H_proposed))`, zero for non-finite energies.
pub fn accept_probability_from_energies<T: Real>(current: T, proposed: T) -> T {
    if !current.is_finite() || !proposed.is_finite() {
        return T::zero();
    }
    let log_ratio = current - proposed;
    if log_ratio >= T::zero() {
        T::one()
    } else {
        log_ratio.exp()
    }
}

pub fn accept_probability<T: Real, G: Target<T> + ?Sized>(
    current: &PhaseState<T>,
    proposed: &PhaseState<T>,
    target: &G,
) -> T {
    if !proposed.is_finite() {
        return T::zero();
    }
    accept_probability_from_energies(hamiltonian(current, target), hamiltonian(proposed, target))
}

/// Metropolis–Hastings selection: `proposed` if `u < α`, else `current`.
pub fn mh_select<S, T: Real>(current: S, proposed: S, alpha: T, u: T) -> S {
    if u < alpha {
        proposed
    } else {
        current
    }
}
