//! Sequential Monte Carlo sampler over a static target.
//!
//! Each iteration normalizes the weights, resamples multinomially when the
//! effective sample size drops below `J/2`, moves every particle with the
//! configured proposal and reweights it. Gradient-based proposals are
//! reweighted in terms of their momenta (forward proposal density `N(p₀)`,
//! L-kernel density `N(−p_k)`); the leapfrog Jacobians cancel.

use rand::Rng;
use rayon::prelude::*;

use crate::chees::{chees_criterion, chees_smc_step, CheesAdaptState, CheesConfig};
use crate::diagnostics::{moment_mse, IterationDiagnostics};
use crate::error::{Error, Result};
use crate::hmc::{leapfrog, GradientCounter, PhaseState};
use crate::nuts::nuts_step;
use crate::quasirandom::JitterMatrix;
use crate::rng;
use crate::scalar::{norm_sq, standard_normal, Real};
use crate::targets::{prior_log_density, sample_prior_with, Target};

/// Result of moving one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalOutcome<T> {
    pub position: Vec<T>,
    pub previous_log_density: T,
    pub new_log_density: T,
    pub initial_momentum: Vec<T>,
    pub final_momentum: Vec<T>,
    pub divergent: bool,
    pub gradient_evaluations: u64,
}

/// Weighted particle population.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<T> {
    pub positions: Vec<Vec<T>>,
    pub log_weights: Vec<T>,
    pub iteration: usize,
}

impl<T: Real> ParticleEnsemble<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn normalized_weights(&self) -> Result<Vec<T>> {
        normalize_weights(&self.log_weights, self.iteration)
    }
}

/// Draws `J` particles from the standard-normal prior and weights them by
/// `π(θ)/q₀(θ)`.
pub fn init_ensemble<T: Real, G: Target<T> + ?Sized>(
    target: &G,
    particles: usize,
    seed: u64,
) -> Result<ParticleEnsemble<T>> {
    if particles < 2 {
        return Err(Error::InvalidArgument("SMC needs at least two particles".into()));
    }
    let mut rng = rng::substream(seed, 0, rng::INIT_SLOT);
    let positions: Vec<Vec<T>> = sample_prior_with(target.dim(), particles, &mut rng);
    let log_weights = positions
        .iter()
        .map(|theta| target.log_density(theta) - prior_log_density(theta))
        .map(|w| if w.is_nan() { T::neg_infinity() } else { w })
        .collect();
    Ok(ParticleEnsemble {
        positions,
        log_weights,
        iteration: 0,
    })
}

pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// `w̃ʲ = wʲ / Σ w`, computed in log space.
pub fn normalize_weights<T: Real>(log_weights: &[T], iteration: usize) -> Result<Vec<T>> {
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::Degenerate { iteration });
    }
    Ok(log_weights.iter().map(|&w| (w - lse).exp()).collect())
}

/// `1 / Σ (w̃ʲ)²`.
pub fn effective_sample_size<T: Real>(normalized: &[T]) -> T {
    T::one() / norm_sq(normalized)
}

/// Draws `J` ancestors i.i.d. from the normalized weights and resets every
/// log-weight to `−log J`.
pub fn multinomial_resample<T: Real, R: Rng + ?Sized>(
    ensemble: &mut ParticleEnsemble<T>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let weights = ensemble.normalized_weights()?;
    let ancestors = multinomial_ancestors(&weights, ensemble.len(), rng);
    ensemble.positions = ancestors
        .iter()
        .map(|&a| ensemble.positions[a].clone())
        .collect();
    let reset = -T::from_usize_lossy(ensemble.len()).ln();
    ensemble.log_weights.fill(reset);
    Ok(ancestors)
}

pub(crate) fn multinomial_ancestors<T: Real, R: Rng + ?Sized>(
    weights: &[T],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0f64;
    for w in weights {
        acc += w.to_f64_lossy();
        cumulative.push(acc);
    }
    let last = weights.len() - 1;
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cumulative.partition_point(|&c| c <= u).min(last)
        })
        .collect()
}

/// Momentum-form weight update:
/// `Δ log π + log N(−p_k) − log N(p_{k−1})`. Divergent moves get `−∞`.
pub fn weight_update<T: Real>(previous_log_weight: T, outcome: &ProposalOutcome<T>) -> T {
    if outcome.divergent {
        return T::neg_infinity();
    }
    let increment = outcome.new_log_density - outcome.previous_log_density
        + T::lit(0.5) * (norm_sq(&outcome.initial_momentum) - norm_sq(&outcome.final_momentum));
    if increment.is_finite() {
        previous_log_weight + increment
    } else {
        T::neg_infinity()
    }
}

/// `Σ w̃ʲ f(θʲ)`.
pub fn weighted_estimate<T: Real, F>(positions: &[Vec<T>], weights: &[T], f: F) -> Vec<T>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let mut acc: Vec<T> = Vec::new();
    for (theta, &w) in positions.iter().zip(weights) {
        let value = f(theta);
        if acc.is_empty() {
            acc = vec![T::zero(); value.len()];
        }
        if w == T::zero() {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(value) {
            *a += w * v;
        }
    }
    acc
}

/// Weighted per-coordinate mean and plug-in variance `Σ w̃ θ² − (Σ w̃ θ)²`.
pub fn weighted_mean_and_variance<T: Real>(positions: &[Vec<T>], weights: &[T]) -> (Vec<T>, Vec<T>) {
    let mean = weighted_estimate(positions, weights, |x| x.to_vec());
    let second = weighted_estimate(positions, weights, |x| x.iter().map(|&v| v * v).collect());
    let var = second.iter().zip(&mean).map(|(&s, &m)| s - m * m).collect();
    (mean, var)
}

/// How particles are moved between iterations.
#[derive(Debug, Clone)]
pub enum Proposal<T> {
    /// Gaussian random walk with isotropic scale; symmetric, so the weight
    /// increment is `Δ log π`.
    RandomWalk { scale: T },
    /// HMC with a fixed number of leapfrog steps.
    Hmc { steps: usize },
    Nuts { max_depth: usize },
    Chees {
        config: CheesConfig<T>,
        jitter: JitterMatrix<T>,
    },
}

impl<T: Real> Proposal<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Proposal::RandomWalk { .. } => "rw",
            Proposal::Hmc { .. } => "hmc",
            Proposal::Nuts { .. } => "nuts",
            Proposal::Chees { .. } => "chees",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcConfig<T> {
    pub particles: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub step_size: T,
    pub seed: u64,
    /// Keep particle positions for this many final iterations.
    pub keep_last: usize,
}

impl<T: Real> SmcConfig<T> {
    pub fn new(particles: usize, iterations: usize, step_size: T, seed: u64) -> Self {
        SmcConfig {
            particles,
            iterations,
            burn_in: (iterations / 2).min(100),
            step_size,
            seed,
            keep_last: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmcRun<T> {
    pub diagnostics: Vec<IterationDiagnostics>,
    pub ensemble: ParticleEnsemble<T>,
    /// `(iteration, positions)` for the last `keep_last` iterations.
    pub snapshots: Vec<(usize, Vec<Vec<T>>)>,
    /// Final ChEES adaptation state, when that proposal was used.
    pub chees_state: Option<CheesAdaptState<T>>,
}

fn hmc_outcome<T: Real>(
    traj: crate::hmc::Trajectory<T>,
    initial_momentum: Vec<T>,
    evaluations: u64,
) -> ProposalOutcome<T> {
    ProposalOutcome {
        position: traj.state.position,
        previous_log_density: traj.initial_log_density,
        new_log_density: traj.log_density,
        initial_momentum,
        final_momentum: traj.state.momentum,
        divergent: traj.divergent,
        gradient_evaluations: evaluations,
    }
}

fn propose_independent<T, G, F>(positions: &[Vec<T>], seed: u64, iteration: usize, mv: F) -> Vec<ProposalOutcome<T>>
where
    T: Real,
    G: Target<T> + ?Sized,
    F: Fn(&[T], &mut rand_chacha::ChaCha8Rng) -> ProposalOutcome<T> + Sync + Send,
{
    positions
        .par_iter()
        .enumerate()
        .map(|(j, theta)| {
            let mut rng = rng::substream(seed, iteration as u64, j as u64);
            mv(theta, &mut rng)
        })
        .collect()
}

/// Runs the sampler for `config.iterations` iterations.
pub fn run_smc<T, G>(config: &SmcConfig<T>, target: &G, proposal: &Proposal<T>) -> Result<SmcRun<T>>
where
    T: Real,
    G: Target<T> + ?Sized,
{
    run_smc_with_observer(config, target, proposal, |_, _, _| {})
}

/// [`run_smc`] that also hands the reweighted ensemble, its normalized
/// weights and the iteration's diagnostics to `observer`.
pub fn run_smc_with_observer<T, G, F>(
    config: &SmcConfig<T>,
    target: &G,
    proposal: &Proposal<T>,
    mut observer: F,
) -> Result<SmcRun<T>>
where
    T: Real,
    G: Target<T> + ?Sized,
    F: FnMut(&ParticleEnsemble<T>, &[T], &IterationDiagnostics),
{
    if config.burn_in >= config.iterations {
        return Err(Error::InvalidArgument(format!(
            "burn-in {} must be below the iteration count {}",
            config.burn_in, config.iterations
        )));
    }
    if let Proposal::Chees { jitter, .. } = proposal {
        if jitter.particles() != config.particles || jitter.iterations() < config.iterations {
            return Err(Error::InvalidArgument(
                "jitter matrix shape does not match the run".into(),
            ));
        }
    }
    let dim = target.dim();
    let j_total = config.particles;
    let half = T::from_usize_lossy(j_total) * T::lit(0.5);
    let eps = config.step_size;

    let mut ensemble = init_ensemble(target, j_total, config.seed)?;
    let mut log_densities: Vec<T> = ensemble.positions.iter().map(|x| target.log_density(x)).collect();
    let mut chees_state = match proposal {
        Proposal::Chees { config, .. } => Some(CheesAdaptState::new(config)),
        _ => None,
    };
    let mut diagnostics = Vec::with_capacity(config.iterations);
    let mut snapshots = Vec::new();
    let mut cumulative = 0u64;

    for k in 1..=config.iterations {
        ensemble.iteration = k;
        let weights = ensemble.normalized_weights()?;
        let ess_before = effective_sample_size(&weights);
        let resampled = ess_before < half;
        if resampled {
            let mut rng = rng::substream(config.seed, k as u64, rng::RESAMPLE_SLOT);
            let ancestors = multinomial_resample(&mut ensemble, &mut rng)?;
            log_densities = ancestors.iter().map(|&a| log_densities[a]).collect();
        }

        let mut criterion = None;
        let mut trajectory_length = None;
        let outcomes: Vec<ProposalOutcome<T>> = match proposal {
            Proposal::RandomWalk { scale } => {
                let scale = *scale;
                let current = &log_densities;
                let moved = propose_independent::<T, G, _>(&ensemble.positions, config.seed, k, |theta, rng| {
                    let position: Vec<T> = theta
                        .iter()
                        .map(|&x| x + scale * standard_normal::<T, _>(rng))
                        .collect();
                    let new_log_density = target.log_density(&position);
                    ProposalOutcome {
                        divergent: !new_log_density.is_finite(),
                        position,
                        previous_log_density: T::zero(),
                        new_log_density,
                        initial_momentum: Vec::new(),
                        final_momentum: Vec::new(),
                        gradient_evaluations: 0,
                    }
                });
                moved
                    .into_iter()
                    .zip(current)
                    .map(|(mut o, &lp)| {
                        o.previous_log_density = lp;
                        o
                    })
                    .collect()
            }
            Proposal::Hmc { steps } => {
                trajectory_length = Some(T::from_usize_lossy(*steps) * eps);
                propose_independent::<T, G, _>(&ensemble.positions, config.seed, k, |theta, rng| {
                    let momentum: Vec<T> = (0..dim).map(|_| standard_normal(rng)).collect();
                    let mut counter = GradientCounter::new();
                    let start = PhaseState::new(theta.to_vec(), momentum.clone());
                    let traj = leapfrog(target, &start, eps, *steps, &mut counter);
                    hmc_outcome(traj, momentum, counter.count())
                })
            }
            Proposal::Nuts { max_depth } => {
                propose_independent::<T, G, _>(&ensemble.positions, config.seed, k, |theta, rng| {
                    let mut counter = GradientCounter::new();
                    let out = nuts_step(target, theta, eps, *max_depth, &mut counter, rng);
                    ProposalOutcome {
                        position: out.position,
                        previous_log_density: out.initial_log_density,
                        new_log_density: out.log_density,
                        initial_momentum: out.initial_momentum,
                        final_momentum: out.final_momentum,
                        divergent: !out.log_density.is_finite(),
                        gradient_evaluations: counter.count(),
                    }
                })
            }
            Proposal::Chees { config: cc, jitter } => {
                let state = chees_state.as_mut().expect("chees state initialised");
                trajectory_length = Some(state.length());
                let column = jitter.column(k - 1);
                let (outcomes, record) = chees_smc_step(
                    target,
                    &ensemble.positions,
                    &column,
                    state,
                    cc,
                    config.seed,
                    k,
                )?;
                criterion = Some(chees_criterion(&record).to_f64_lossy());
                outcomes
            }
        };

        let mut grad_evals = 0u64;
        for (j, outcome) in outcomes.into_iter().enumerate() {
            grad_evals += outcome.gradient_evaluations;
            ensemble.log_weights[j] = match proposal {
                Proposal::RandomWalk { .. } => {
                    if outcome.divergent {
                        T::neg_infinity()
                    } else {
                        ensemble.log_weights[j] + outcome.new_log_density - outcome.previous_log_density
                    }
                }
                _ => weight_update(ensemble.log_weights[j], &outcome),
            };
            if !outcome.divergent {
                log_densities[j] = outcome.new_log_density;
                ensemble.positions[j] = outcome.position;
            }
        }
        cumulative += grad_evals;

        let weights = ensemble.normalized_weights()?;
        let ess = effective_sample_size(&weights);
        let (mean, var) = weighted_mean_and_variance(&ensemble.positions, &weights);
        let mse_mean = target.true_mean().map(|t| moment_mse(&mean, t).to_f64_lossy());
        let mse_var = target.true_variance().map(|t| moment_mse(&var, t).to_f64_lossy());

        diagnostics.push(IterationDiagnostics {
            iteration: k,
            particles: j_total,
            ess_before_resample: ess_before.to_f64_lossy(),
            ess: ess.to_f64_lossy(),
            resampled,
            grad_evals,
            cumulative_grad_evals: cumulative,
            est_mean: mean.iter().map(|v| v.to_f64_lossy()).collect(),
            est_var: var.iter().map(|v| v.to_f64_lossy()).collect(),
            mse_mean,
            mse_var,
            trajectory_length: trajectory_length.map(|l| l.to_f64_lossy()),
            chees_criterion: criterion,
        });
        observer(&ensemble, &weights, diagnostics.last().expect("just pushed"));

        if config.keep_last > 0 && k + config.keep_last > config.iterations {
            snapshots.push((k, ensemble.positions.clone()));
        }
    }

    Ok(SmcRun {
        diagnostics,
        ensemble,
        snapshots,
        chees_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn normalization_examples() {
        let w = normalize_weights(&[0.3f64; 4], 1).unwrap();
        assert!(w.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let w = normalize_weights(&[0.0f64, f64::NEG_INFINITY], 1).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
        assert!(matches!(
            normalize_weights(&[f64::NEG_INFINITY; 3], 7),
            Err(Error::Degenerate { iteration: 7 })
        ));
        let logs = [-0.3f64, 0.2, -1.1, 0.05, -2.0];
        let naive: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
        let total: f64 = naive.iter().sum();
        for (a, b) in normalize_weights(&logs, 0).unwrap().iter().zip(&naive) {
            assert!((a - b / total).abs() < 1e-12);
        }
    }

    #[test]
    fn ess_examples() {
        assert!((effective_sample_size(&vec![1e-3f64; 1000]) - 1000.0).abs() < 1e-9);
        assert_eq!(effective_sample_size(&[1.0f64, 0.0, 0.0]), 1.0);
        assert!((effective_sample_size(&[0.5f64, 0.25, 0.25]) - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn resampling_a_point_mass() {
        let mut e = ParticleEnsemble {
            positions: (0..10).map(|i| vec![i as f64]).collect(),
            log_weights: std::iter::once(0.0)
                .chain(std::iter::repeat(f64::NEG_INFINITY).take(9))
                .collect(),
            iteration: 1,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        multinomial_resample(&mut e, &mut rng).unwrap();
        assert!(e.positions.iter().all(|p| p[0] == 0.0));
        let w = e.normalized_weights().unwrap();
        assert!((effective_sample_size(&w) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn weight_update_examples() {
        let o = ProposalOutcome {
            position: vec![0.0],
            previous_log_density: -1.0,
            new_log_density: -1.5,
            initial_momentum: vec![1.0],
            final_momentum: vec![0.0],
            divergent: false,
            gradient_evaluations: 0,
        };
        // ΔH = 0: −0.5 potential change balanced by +0.5 kinetic change
        assert_eq!(weight_update(0.25, &o), 0.25);
        let still = ProposalOutcome {
            new_log_density: -1.0,
            final_momentum: vec![-1.0],
            ..o.clone()
        };
        assert_eq!(weight_update(0.0, &still), 0.0);
        let bad = ProposalOutcome { divergent: true, ..o };
        assert_eq!(weight_update(0.0, &bad), f64::NEG_INFINITY);
    }

    #[test]
    fn weighted_estimate_examples() {
        let pos = vec![vec![1.0, 2.0], vec![3.0, 6.0]];
        assert_eq!(weighted_estimate(&pos, &[0.5, 0.5], |x| x.to_vec()), vec![2.0, 4.0]);
        assert_eq!(weighted_estimate(&pos, &[1.0, 0.0], |x| x.to_vec()), vec![1.0, 2.0]);
    }
}
