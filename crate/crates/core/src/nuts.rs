//! No-U-Turn Sampler proposal: slice-sampling NUTS with recursive tree
//! doubling and a depth cap.
//!
//! With `max_depth = d ≥ 1` the final tree holds at most `2^d` states, so a
//! step costs at most `2^d` gradient evaluations including the one at the
//! starting point. `max_depth = 0` still takes a single leapfrog step.

use rand::Rng;

use crate::hmc::{eval_grad, kinetic_energy, leapfrog_step, GradientCounter, PhaseState};
use crate::scalar::{dot, standard_normal, Real};
use crate::targets::Target;

/// Energy error beyond which a subtree is abandoned as divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;
pub const DEFAULT_MAX_DEPTH: usize = 11;

/// True iff `(θ⁺ − θ⁻)·p⁻ < 0` or `(θ⁺ − θ⁻)·p⁺ < 0`.
pub fn u_turn<T: Real>(left: &PhaseState<T>, right: &PhaseState<T>) -> bool {
    u_turn_parts(
        &left.position,
        &left.momentum,
        &right.position,
        &right.momentum,
    )
}

fn u_turn_parts<T: Real>(theta_minus: &[T], p_minus: &[T], theta_plus: &[T], p_plus: &[T]) -> bool {
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for d in 0..theta_minus.len() {
        let span = theta_plus[d] - theta_minus[d];
        lhs += span * p_minus[d];
        rhs += span * p_plus[d];
    }
    lhs < T::zero() || rhs < T::zero()
}

/// Result of one NUTS transition.
#[derive(Debug, Clone)]
pub struct NutsOutcome<T> {
    pub position: Vec<T>,
    pub log_density: T,
    pub initial_log_density: T,
    /// Momentum drawn at the start of the step.
    pub initial_momentum: Vec<T>,
    /// Momentum at the selected leaf.
    pub final_momentum: Vec<T>,
    /// Number of completed doublings.
    pub depth: usize,
    pub leftmost: PhaseState<T>,
    pub rightmost: PhaseState<T>,
    pub divergent: bool,
}

#[derive(Clone)]
struct Edge<T> {
    theta: Vec<T>,
    momentum: Vec<T>,
    grad: Vec<T>,
}

#[derive(Clone)]
struct Candidate<T> {
    theta: Vec<T>,
    momentum: Vec<T>,
    log_density: T,
}

struct Subtree<T> {
    minus: Edge<T>,
    plus: Edge<T>,
    candidate: Candidate<T>,
    valid: u64,
    keep_going: bool,
}

struct Builder<'a, T, G: ?Sized, R: ?Sized> {
    target: &'a G,
    step_size: T,
    log_slice: T,
    rng: &'a mut R,
    counter: &'a mut GradientCounter,
    divergent: bool,
}

impl<T: Real, G: Target<T> + ?Sized, R: Rng + ?Sized> Builder<'_, T, G, R> {
    fn build(&mut self, start: &Edge<T>, forward: bool, depth: usize) -> Subtree<T> {
        if depth == 0 {
            return self.leaf(start, forward);
        }
        let mut tree = self.build(start, forward, depth - 1);
        if !tree.keep_going {
            return tree;
        }
        let outer = if forward { &tree.plus } else { &tree.minus }.clone();
        let other = self.build(&outer, forward, depth - 1);
        if forward {
            tree.plus = other.plus;
        } else {
            tree.minus = other.minus;
        }
        let total = tree.valid + other.valid;
        if other.valid > 0 && self.rng.random::<f64>() * (total as f64) < other.valid as f64 {
            tree.candidate = other.candidate;
        }
        tree.valid = total;
        tree.keep_going = other.keep_going
            && !u_turn_parts(
                &tree.minus.theta,
                &tree.minus.momentum,
                &tree.plus.theta,
                &tree.plus.momentum,
            );
        tree
    }

    fn leaf(&mut self, start: &Edge<T>, forward: bool) -> Subtree<T> {
        let mut edge = start.clone();
        let eps = if forward { self.step_size } else { -self.step_size };
        let logp = leapfrog_step(
            self.target,
            &mut edge.theta,
            &mut edge.momentum,
            &mut edge.grad,
            eps,
            self.counter,
        );
        let neg_energy = logp - kinetic_energy(&edge.momentum);
        let finite = neg_energy.is_finite();
        let valid = finite && self.log_slice <= neg_energy;
        let keep_going = finite && self.log_slice < T::lit(MAX_ENERGY_ERROR) + neg_energy;
        if !keep_going {
            self.divergent = true;
        }
        Subtree {
            candidate: Candidate {
                theta: edge.theta.clone(),
                momentum: edge.momentum.clone(),
                log_density: logp,
            },
            minus: edge.clone(),
            plus: edge,
            valid: valid as u64,
            keep_going,
        }
    }
}

/// One NUTS transition from `theta` with a fresh momentum draw.
pub fn nuts_step<T, G, R>(
    target: &G,
    theta: &[T],
    step_size: T,
    max_depth: usize,
    counter: &mut GradientCounter,
    rng: &mut R,
) -> NutsOutcome<T>
where
    T: Real,
    G: Target<T> + ?Sized,
    R: Rng + ?Sized,
{
    let momentum: Vec<T> = (0..theta.len()).map(|_| standard_normal(rng)).collect();
    nuts_step_with_momentum(target, theta, momentum, step_size, max_depth, counter, rng)
}

/// NUTS transition with a caller-supplied initial momentum.
pub fn nuts_step_with_momentum<T, G, R>(
    target: &G,
    theta: &[T],
    momentum: Vec<T>,
    step_size: T,
    max_depth: usize,
    counter: &mut GradientCounter,
    rng: &mut R,
) -> NutsOutcome<T>
where
    T: Real,
    G: Target<T> + ?Sized,
    R: Rng + ?Sized,
{
    let mut grad = vec![T::zero(); theta.len()];
    let logp0 = eval_grad(target, theta, &mut grad, counter);
    let start_state = PhaseState::new(theta.to_vec(), momentum.clone());
    if !logp0.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return NutsOutcome {
            position: theta.to_vec(),
            log_density: logp0,
            initial_log_density: logp0,
            initial_momentum: momentum.clone(),
            final_momentum: momentum,
            depth: 0,
            leftmost: start_state.clone(),
            rightmost: start_state,
            divergent: true,
        };
    }

    let joint0 = logp0 - kinetic_energy(&momentum);
    // log u with u ~ U(0, exp(joint0))
    let unif: f64 = rng.random::<f64>();
    let log_slice = joint0 + T::lit((1.0 - unif).ln());

    let start = Edge {
        theta: theta.to_vec(),
        momentum: momentum.clone(),
        grad,
    };
    let mut minus = start.clone();
    let mut plus = start;
    let mut candidate = Candidate {
        theta: theta.to_vec(),
        momentum: momentum.clone(),
        log_density: logp0,
    };
    let mut valid: u64 = 1;
    let mut depth = 0;

    let mut builder = Builder {
        target,
        step_size,
        log_slice,
        rng,
        counter,
        divergent: false,
    };
    loop {
        let forward = builder.rng.random::<bool>();
        let sub = if forward {
            builder.build(&plus, true, depth)
        } else {
            builder.build(&minus, false, depth)
        };
        if forward {
            plus = sub.plus;
        } else {
            minus = sub.minus;
        }
        if sub.keep_going
            && sub.valid > 0
            && builder.rng.random::<f64>() * (valid as f64) < sub.valid as f64
        {
            candidate = sub.candidate;
        }
        valid += sub.valid;
        depth += 1;
        let turned = u_turn_parts(&minus.theta, &minus.momentum, &plus.theta, &plus.momentum);
        if !sub.keep_going || turned || depth >= max_depth {
            break;
        }
    }

    let divergent = builder.divergent;
    NutsOutcome {
        position: candidate.theta,
        log_density: candidate.log_density,
        initial_log_density: logp0,
        initial_momentum: momentum,
        final_momentum: candidate.momentum,
        depth,
        leftmost: PhaseState::new(minus.theta, minus.momentum),
        rightmost: PhaseState::new(plus.theta, plus.momentum),
        divergent,
    }
}

/// Euclidean distance between the tree's end points.
pub fn tree_extent<T: Real>(outcome: &NutsOutcome<T>) -> T {
    let diff: Vec<T> = outcome
        .rightmost
        .position
        .iter()
        .zip(&outcome.leftmost.position)
        .map(|(&a, &b)| a - b)
        .collect();
    dot(&diff, &diff).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::DiagGaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn u_turn_examples() {
        let s = |x: f64, p: f64| PhaseState::new(vec![x, 0.0], vec![p, 0.0]);
        assert!(!u_turn(&s(0.0, 1.0), &s(1.0, 1.0)));
        assert!(u_turn(&s(0.0, 1.0), &s(1.0, -1.0)));
        let a = PhaseState::new(vec![1.0, 1.0], vec![0.3, -2.0]);
        let b = PhaseState::new(vec![1.0, 1.0], vec![-1.0, 0.5]);
        assert!(!u_turn(&a, &b));
    }

    #[test]
    fn depth_zero_takes_one_step() {
        let t = DiagGaussian::<f64>::standard(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let mut c = GradientCounter::new();
            let out = nuts_step(&t, &[0.5, -0.2, 1.0], 0.1, 0, &mut c, &mut rng);
            assert_eq!(c.count(), 2);
            assert_eq!(out.depth, 1);
        }
    }

    #[test]
    fn gradient_budget_respects_depth() {
        let t = DiagGaussian::<f64>::standard(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for max_depth in 1..8usize {
            for _ in 0..50 {
                let mut c = GradientCounter::new();
                let out = nuts_step(&t, &[0.1, 0.4], 0.01, max_depth, &mut c, &mut rng);
                let d = out.depth;
                assert!(d <= max_depth);
                assert!(c.count() <= (1u64 << d) + d as u64 + 1);
                assert!(c.count() <= 1u64 << max_depth);
            }
        }
    }

    #[test]
    fn initial_point_is_returned_when_nothing_moves() {
        struct Broken;
        impl Target<f64> for Broken {
            fn dim(&self) -> usize {
                1
            }
            fn name(&self) -> &str {
                "broken"
            }
            fn log_density(&self, _: &[f64]) -> f64 {
                f64::NAN
            }
            fn log_density_and_grad(&self, _: &[f64], g: &mut [f64]) -> f64 {
                g[0] = f64::NAN;
                f64::NAN
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = GradientCounter::new();
        let out = nuts_step(&Broken, &[0.3], 0.1, 5, &mut c, &mut rng);
        assert!(out.divergent);
        assert_eq!(out.position, vec![0.3]);
        assert_eq!(c.count(), 1);
    }
}
