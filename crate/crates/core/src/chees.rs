//! ChEES trajectory-length adaptation for an ensemble of HMC proposals.
//!
//! Every particle runs leapfrog for `⌈h·L/ε⌉` steps with its own jitter
//! factor `h`. During warm-up the ensemble yields one acceptance-weighted
//! estimate of the ChEES gradient with respect to `log L`, which drives an
//! Adam ascent step; an exponential moving average of `L` is kept and
//! becomes the fixed length once warm-up ends.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmc::{accept_probability_from_energies, leapfrog, GradientCounter, PhaseState};
use crate::rng;
use crate::scalar::{dot, norm_sq, standard_normal, Real};
use crate::smc::ProposalOutcome;
use crate::targets::Target;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Real> Default for AdamConfig<T> {
    fn default() -> Self {
        AdamConfig {
            learning_rate: T::lit(0.025),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheesConfig<T> {
    pub step_size: T,
    pub max_steps: usize,
    pub initial_length: T,
    /// Iteration at which `L` freezes to its moving average.
    pub warmup: usize,
    pub adam: AdamConfig<T>,
}

impl<T: Real> CheesConfig<T> {
    pub fn new(step_size: T) -> Self {
        CheesConfig {
            step_size,
            max_steps: 500,
            initial_length: T::lit(5.0),
            warmup: 100,
            adam: AdamConfig::default(),
        }
    }
}

/// Trajectory length, its moving average and the Adam moments for `log L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheesAdaptState<T> {
    length: T,
    moving_average: T,
    first_moment: T,
    second_moment: T,
    adam_steps: u32,
    frozen: bool,
    log_bounds: (T, T),
    adam: AdamConfig<T>,
    warmup: usize,
}

impl<T: Real> CheesAdaptState<T> {
    pub fn new(config: &CheesConfig<T>) -> Self {
        let lo = config.step_size.ln();
        let hi = (config.step_size * T::from_usize_lossy(config.max_steps)).ln();
        CheesAdaptState {
            length: config.initial_length,
            moving_average: T::zero(),
            first_moment: T::zero(),
            second_moment: T::zero(),
            adam_steps: 0,
            frozen: false,
            log_bounds: (lo, hi),
            adam: config.adam,
            warmup: config.warmup,
        }
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn moving_average(&self) -> T {
        self.moving_average
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn adam_steps(&self) -> u32 {
        self.adam_steps
    }

    pub fn moments(&self) -> (T, T) {
        (self.first_moment, self.second_moment)
    }

    /// Adam ascent step on `log L`, clamped to `[log ε, log(cap·ε)]`.
    pub fn adam_update(&mut self, gradient: T) {
        assert!(!self.frozen, "adam update after freeze");
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.adam;
        self.adam_steps += 1;
        let t = self.adam_steps as i32;
        self.first_moment = beta1 * self.first_moment + (T::one() - beta1) * gradient;
        self.second_moment =
            beta2 * self.second_moment + (T::one() - beta2) * gradient * gradient;
        let m_hat = self.first_moment / (T::one() - beta1.powi(t));
        let v_hat = self.second_moment / (T::one() - beta2.powi(t));
        let log_length = self.length.ln() + learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        let (lo, hi) = self.log_bounds;
        self.length = log_length.max(lo).min(hi).exp();
    }

    /// `L̄ ← 0.9 L̄ + 0.1 L`.
    pub fn update_moving_average(&mut self) {
        assert!(!self.frozen, "moving-average update after freeze");
        self.moving_average = T::lit(0.9) * self.moving_average + T::lit(0.1) * self.length;
    }

    /// Fixes `L` to the moving average for the rest of the run.
    pub fn freeze(&mut self) -> Result<()> {
        if self.moving_average <= T::zero() {
            return Err(Error::AdaptationNeverRan);
        }
        self.length = self.moving_average;
        self.frozen = true;
        Ok(())
    }

    /// Post-proposal update for one-based `iteration`: adapt before warm-up
    /// ends, freeze exactly at it.
    pub fn adapt(&mut self, record: &CheesStepRecord<T>, iteration: usize) -> Result<()> {
        if self.frozen {
            return Ok(());
        }
        if iteration < self.warmup {
            let estimates = chees_gradient_estimate(record)?;
            if let Some(g) = weighted_gradient(&estimates, &record.acceptance) {
                self.adam_update(g);
            }
            self.update_moving_average();
        } else if iteration == self.warmup {
            self.freeze()?;
        }
        Ok(())
    }
}

/// Leapfrog step count `min(cap, max(1, ⌈h·L/ε⌉))`.
pub fn jittered_length<T: Real>(jitter: T, length: T, step_size: T, cap: usize) -> usize {
    let steps = (jitter * length / step_size).ceil();
    let steps = steps.to_usize().unwrap_or(cap);
    steps.clamp(1, cap)
}

/// Everything the adaptation needs from one ensemble proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct CheesStepRecord<T> {
    pub previous: Vec<Vec<T>>,
    pub proposed: Vec<Vec<T>>,
    /// Momenta at the end of each trajectory, i.e. the velocity of the
    /// proposed point along its trajectory.
    pub momenta: Vec<Vec<T>>,
    pub acceptance: Vec<T>,
    /// Continuous jittered lengths `h·L`.
    pub lengths: Vec<T>,
}

impl<T: Real> CheesStepRecord<T> {
    pub fn len(&self) -> usize {
        self.previous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.previous.is_empty()
    }

    /// Squared distances of each previous and proposed point to its
    /// ensemble mean, plus the proposed-point centered vectors.
    fn centered(&self) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
        let mean_prev = ensemble_mean(&self.previous);
        let mean_prop = ensemble_mean(&self.proposed);
        let centered = |x: &[T], m: &[T]| x.iter().zip(m).map(|(&a, &b)| a - b).collect::<Vec<T>>();
        let prev_sq = self
            .previous
            .iter()
            .map(|x| norm_sq(&centered(x, &mean_prev)))
            .collect();
        let prop_centered: Vec<Vec<T>> = self
            .proposed
            .iter()
            .map(|x| centered(x, &mean_prop))
            .collect();
        let prop_sq = prop_centered.iter().map(|c| norm_sq(c)).collect();
        (prev_sq, prop_sq, prop_centered)
    }
}

fn ensemble_mean<T: Real>(points: &[Vec<T>]) -> Vec<T> {
    let n = T::from_usize_lossy(points.len());
    let mut mean = vec![T::zero(); points[0].len()];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Per-particle ChEES gradient estimates
/// `l·(‖θ' − θ̂'‖² − ‖θ − θ̂‖²)·(θ' − θ̂')ᵀp`.
pub fn chees_gradient_estimate<T: Real>(record: &CheesStepRecord<T>) -> Result<Vec<T>> {
    if record.len() < 2 {
        return Err(Error::InvalidArgument(
            "ChEES gradient needs at least two particles".into(),
        ));
    }
    let (prev_sq, prop_sq, prop_centered) = record.centered();
    Ok((0..record.len())
        .map(|c| {
            record.lengths[c]
                * (prop_sq[c] - prev_sq[c])
                * dot(&prop_centered[c], &record.momenta[c])
        })
        .collect())
}

/// `¼·mean[(‖θ' − θ̂'‖² − ‖θ − θ̂‖²)²]`.
pub fn chees_criterion<T: Real>(record: &CheesStepRecord<T>) -> T {
    let (prev_sq, prop_sq, _) = record.centered();
    let n = T::from_usize_lossy(record.len());
    prev_sq
        .iter()
        .zip(&prop_sq)
        .map(|(&a, &b)| (b - a) * (b - a))
        .sum::<T>()
        / n
        * T::lit(0.25)
}

/// Acceptance-weighted mean; `None` when every weight is zero.
pub fn weighted_gradient<T: Real>(estimates: &[T], acceptance: &[T]) -> Option<T> {
    let total: T = acceptance.iter().copied().sum();
    if total <= T::zero() {
        return None;
    }
    let weighted: T = estimates
        .iter()
        .zip(acceptance)
        .filter(|(_, &a)| a > T::zero())
        .map(|(&g, &a)| g * a)
        .sum();
    Some(weighted / total)
}

/// Proposes a move for every particle. No accept/reject step is applied:
/// each trajectory end point is kept, and the acceptance probability is
/// only recorded for the adaptation signal.
pub fn chees_propose<T, G>(
    target: &G,
    positions: &[Vec<T>],
    jitter_column: &[T],
    length: T,
    config: &CheesConfig<T>,
    seed: u64,
    iteration: usize,
) -> (Vec<ProposalOutcome<T>>, CheesStepRecord<T>)
where
    T: Real,
    G: Target<T> + ?Sized,
{
    assert_eq!(positions.len(), jitter_column.len());
    let moves: Vec<(ProposalOutcome<T>, T, T)> = positions
        .par_iter()
        .zip(jitter_column.par_iter())
        .enumerate()
        .map(|(j, (theta, &h))| {
            let mut rng = rng::substream(seed, iteration as u64, j as u64);
            let momentum: Vec<T> = (0..theta.len()).map(|_| standard_normal(&mut rng)).collect();
            let steps = jittered_length(h, length, config.step_size, config.max_steps);
            let mut counter = GradientCounter::new();
            let start = PhaseState::new(theta.clone(), momentum);
            let traj = leapfrog(target, &start, config.step_size, steps, &mut counter);
            let alpha = if traj.divergent {
                T::zero()
            } else {
                accept_probability_from_energies(
                    traj.initial_energy(&start.momentum),
                    traj.final_energy(),
                )
            };
            let outcome = ProposalOutcome {
                previous_log_density: traj.initial_log_density,
                new_log_density: traj.log_density,
                position: traj.state.position,
                initial_momentum: start.momentum,
                final_momentum: traj.state.momentum,
                divergent: traj.divergent,
                gradient_evaluations: counter.count(),
            };
            (outcome, alpha, h * length)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(moves.len());
    let mut record = CheesStepRecord {
        previous: positions.to_vec(),
        proposed: Vec::with_capacity(moves.len()),
        momenta: Vec::with_capacity(moves.len()),
        acceptance: Vec::with_capacity(moves.len()),
        lengths: Vec::with_capacity(moves.len()),
    };
    for (j, (outcome, alpha, l)) in moves.into_iter().enumerate() {
        // divergent end points carry no usable direction
        let (proposed, momentum) = if outcome.divergent {
            (record.previous[j].clone(), vec![T::zero(); outcome.final_momentum.len()])
        } else {
            (outcome.position.clone(), outcome.final_momentum.clone())
        };
        record.proposed.push(proposed);
        record.momenta.push(momentum);
        record.acceptance.push(alpha);
        record.lengths.push(l);
        outcomes.push(outcome);
    }
    (outcomes, record)
}

/// One ChEES ensemble step: propose with the current length, then adapt.
pub fn chees_smc_step<T, G>(
    target: &G,
    positions: &[Vec<T>],
    jitter_column: &[T],
    state: &mut CheesAdaptState<T>,
    config: &CheesConfig<T>,
    seed: u64,
    iteration: usize,
) -> Result<(Vec<ProposalOutcome<T>>, CheesStepRecord<T>)>
where
    T: Real,
    G: Target<T> + ?Sized,
{
    if positions.len() < 2 {
        return Err(Error::InvalidArgument(
            "ChEES ensemble needs at least two particles".into(),
        ));
    }
    let (outcomes, record) = chees_propose(
        target,
        positions,
        jitter_column,
        state.length(),
        config,
        seed,
        iteration,
    );
    state.adapt(&record, iteration)?;
    Ok((outcomes, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_record(prev: &[f64], prop: &[f64], p: &[f64], l: &[f64]) -> CheesStepRecord<f64> {
        CheesStepRecord {
            previous: prev.iter().map(|&x| vec![x]).collect(),
            proposed: prop.iter().map(|&x| vec![x]).collect(),
            momenta: p.iter().map(|&x| vec![x]).collect(),
            acceptance: vec![1.0; prev.len()],
            lengths: l.to_vec(),
        }
    }

    #[test]
    fn jittered_length_examples() {
        assert_eq!(jittered_length(1.0, 5.0, 0.1, 500), 50);
        assert_eq!(jittered_length(0.001, 5.0, 0.1, 500), 1);
        assert_eq!(jittered_length(1.0, 5.0, 0.001, 500), 500);
        assert_eq!(jittered_length(0.5, 3.7, 0.1, 500), 19);
    }

    #[test]
    fn gradient_estimate_hand_example() {
        let r = scalar_record(&[0.0, 2.0], &[0.0, 4.0], &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(chees_gradient_estimate(&r).unwrap(), vec![-6.0, 6.0]);
        let single = scalar_record(&[0.0], &[1.0], &[1.0], &[1.0]);
        assert!(chees_gradient_estimate(&single).is_err());
    }

    #[test]
    fn gradient_estimate_vanishing_cases() {
        // unchanged spread
        let r = scalar_record(&[-1.0, 1.0], &[3.0, 5.0], &[0.7, -0.2], &[1.0, 2.0]);
        assert!(chees_gradient_estimate(&r).unwrap().iter().all(|&g| g == 0.0));
        // momentum orthogonal to the centered proposal
        let r = CheesStepRecord {
            previous: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            proposed: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            momenta: vec![vec![0.0, 2.0], vec![0.0, -1.0]],
            acceptance: vec![1.0, 1.0],
            lengths: vec![1.0, 1.0],
        };
        assert!(chees_gradient_estimate(&r).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn weighted_gradient_examples() {
        assert_eq!(weighted_gradient(&[1.0, 2.0, 6.0], &[1.0, 1.0, 1.0]), Some(3.0));
        assert_eq!(weighted_gradient(&[3.0, 999.0], &[1.0, 0.0]), Some(3.0));
        assert_eq!(weighted_gradient(&[4.0, 0.0], &[0.25, 0.75]), Some(1.0));
        assert_eq!(weighted_gradient(&[4.0, 1.0], &[0.0, 0.0]), None);
    }

    #[test]
    fn adam_examples() {
        let config = CheesConfig::<f64>::new(0.1);
        let mut s = CheesAdaptState::new(&config);
        s.adam_update(0.0);
        assert!((s.length() - 5.0).abs() < 1e-12);

        let mut s = CheesAdaptState::new(&config);
        s.adam_update(3.0);
        assert!((s.length().ln() - 5f64.ln() - 0.025).abs() < 1e-9);

        let mut s = CheesAdaptState::new(&config);
        for _ in 0..2000 {
            s.adam_update(1e6);
        }
        assert!((s.length() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn moving_average_and_freeze() {
        let config = CheesConfig::<f64>::new(0.1);
        let mut s = CheesAdaptState::new(&config);
        assert!(matches!(s.clone().freeze(), Err(Error::AdaptationNeverRan)));
        s.update_moving_average();
        assert!((s.moving_average() - 0.5).abs() < 1e-15);
        for _ in 1..50 {
            s.update_moving_average();
        }
        assert!((s.moving_average() - 5.0 * (1.0 - 0.9f64.powi(50))).abs() < 1e-12);
        s.freeze().unwrap();
        assert!(s.is_frozen());
        assert_eq!(s.length(), s.moving_average());
    }

    #[test]
    fn criterion_is_nonnegative_and_zero_for_rigid_moves() {
        let r = scalar_record(&[-1.0, 1.0, 0.0], &[2.0, 4.0, 3.0], &[1.0; 3], &[1.0; 3]);
        assert_eq!(chees_criterion(&r), 0.0);
        let r = scalar_record(&[-1.0, 1.0, 0.0], &[2.0, 5.0, 3.0], &[1.0; 3], &[1.0; 3]);
        assert!(chees_criterion(&r) > 0.0);
    }
}
