//! Reported metrics: gradient cost per sample, ESS per gradient evaluation,
//! moment MSE trajectories and classification scores.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};
use crate::targets::{sigmoid, GermanCreditDataset};

/// One row of the per-iteration diagnostics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub particles: usize,
    pub ess_before_resample: f64,
    /// ESS after reweighting.
    pub ess: f64,
    pub resampled: bool,
    pub grad_evals: u64,
    pub cumulative_grad_evals: u64,
    pub est_mean: Vec<f64>,
    pub est_var: Vec<f64>,
    pub mse_mean: Option<f64>,
    pub mse_var: Option<f64>,
    /// Trajectory length used this iteration (ChEES and fixed-L HMC).
    pub trajectory_length: Option<f64>,
    pub chees_criterion: Option<f64>,
}

impl IterationDiagnostics {
    pub fn grad_evals_per_particle(&self) -> f64 {
        self.grad_evals as f64 / self.particles as f64
    }

    pub fn ess_per_grad(&self) -> Option<f64> {
        ess_per_grad(self.ess, self.grad_evals)
    }
}

/// `J_eff / ∇eval`, or `None` when the iteration took no gradients.
pub fn ess_per_grad(ess: f64, grad_evals: u64) -> Option<f64> {
    (grad_evals > 0).then(|| ess / grad_evals as f64)
}

/// `(1/D) Σ_d (est_d − truth_d)²`.
pub fn moment_mse<T: Real>(estimate: &[T], truth: &[T]) -> T {
    assert_eq!(estimate.len(), truth.len(), "moment dimension mismatch");
    let total: T = estimate
        .iter()
        .zip(truth)
        .map(|(&e, &t)| (e - t) * (e - t))
        .sum();
    total / T::from_usize_lossy(estimate.len())
}

/// Per-run averages over the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    /// Mean over all iterations of gradient evaluations per particle.
    pub grad_evals_per_sample: f64,
    /// Mean over iterations with gradient work of `J_eff / ∇eval`.
    pub ess_per_grad: Option<f64>,
    pub final_mse_mean: Option<f64>,
    pub final_mse_var: Option<f64>,
    /// Mean MSE over the post-burn-in iterations.
    pub post_burn_in_mse_mean: Option<f64>,
    pub post_burn_in_mse_var: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Averages the stream across all iterations; the burn-in prefix is only
/// excluded from the post-burn-in MSE averages.
pub fn summarize_run(stream: &[IterationDiagnostics], burn_in: usize) -> RunSummary {
    let post = stream.iter().filter(|d| d.iteration > burn_in);
    RunSummary {
        grad_evals_per_sample: mean_of(stream.iter().map(|d| d.grad_evals_per_particle()))
            .unwrap_or(0.0),
        ess_per_grad: mean_of(stream.iter().filter_map(|d| d.ess_per_grad())),
        final_mse_mean: stream.last().and_then(|d| d.mse_mean),
        final_mse_var: stream.last().and_then(|d| d.mse_var),
        post_burn_in_mse_mean: mean_of(post.clone().filter_map(|d| d.mse_mean)),
        post_burn_in_mse_var: mean_of(post.filter_map(|d| d.mse_var)),
    }
}

fn mean_option(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let collected: Option<Vec<f64>> = values.collect();
    collected.and_then(|v| mean_of(v.into_iter()))
}

/// Field-wise mean of per-run summaries.
pub fn mean_summary(runs: &[RunSummary]) -> RunSummary {
    RunSummary {
        grad_evals_per_sample: mean_of(runs.iter().map(|r| r.grad_evals_per_sample)).unwrap_or(0.0),
        ess_per_grad: mean_option(runs.iter().map(|r| r.ess_per_grad)),
        final_mse_mean: mean_option(runs.iter().map(|r| r.final_mse_mean)),
        final_mse_var: mean_option(runs.iter().map(|r| r.final_mse_var)),
        post_burn_in_mse_mean: mean_option(runs.iter().map(|r| r.post_burn_in_mse_mean)),
        post_burn_in_mse_var: mean_option(runs.iter().map(|r| r.post_burn_in_mse_var)),
    }
}

/// Binary classification scores with label 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub auroc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(probabilities: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut m = ConfusionMatrix::default();
        for (&p, &y) in probabilities.iter().zip(labels) {
            match (p >= threshold, y == 1) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mann–Whitney AUROC with midranks for ties.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut end = i + 1;
        while end < order.len() && scores[order[end]] == scores[order[i]] {
            end += 1;
        }
        // ranks i+1 ..= end share their average
        let midrank = (i + 1 + end) as f64 / 2.0;
        rank_sum += midrank * order[i..end].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = end;
    }
    let np = positives as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * negatives as f64))
}

/// Scores hard predictions and probabilities against labels.
pub fn report_from_probabilities(
    probabilities: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ClassificationReport> {
    let m = ConfusionMatrix::from_predictions(probabilities, labels, threshold);
    Ok(ClassificationReport {
        accuracy: m.accuracy(),
        precision: m.precision(),
        recall: m.recall(),
        f1: m.f1(),
        specificity: m.specificity(),
        auroc: auroc(probabilities, labels)?,
    })
}

/// Weighted posterior predictive `Σ_j w̃ʲ σ(θʲᵀ x_n)` for each row, with the
/// intercept as the last coefficient.
pub fn predictive_probabilities<T: Real>(
    positions: &[Vec<T>],
    weights: &[T],
    dataset: &GermanCreditDataset,
) -> Vec<f64> {
    dataset
        .features
        .iter()
        .map(|row| {
            let x: Vec<T> = row
                .iter()
                .map(|&v| T::lit(v))
                .chain(std::iter::once(T::one()))
                .collect();
            positions
                .iter()
                .zip(weights)
                .filter(|(_, &w)| w > T::zero())
                .map(|(theta, &w)| w.to_f64_lossy() * sigmoid(dot(&x, theta)).to_f64_lossy())
                .sum()
        })
        .collect()
}

pub fn classification_report<T: Real>(
    positions: &[Vec<T>],
    weights: &[T],
    dataset: &GermanCreditDataset,
    threshold: f64,
) -> Result<ClassificationReport> {
    let probabilities = predictive_probabilities(positions, weights, dataset);
    report_from_probabilities(&probabilities, &dataset.labels, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iteration: usize, ess: f64, grads: u64) -> IterationDiagnostics {
        IterationDiagnostics {
            iteration,
            particles: 100,
            ess_before_resample: ess,
            ess,
            resampled: false,
            grad_evals: grads,
            cumulative_grad_evals: 0,
            est_mean: vec![],
            est_var: vec![],
            mse_mean: Some(iteration as f64),
            mse_var: None,
            trajectory_length: None,
            chees_criterion: None,
        }
    }

    #[test]
    fn ess_per_grad_examples() {
        assert!((ess_per_grad(1000.0, 12650).unwrap() - 7.905e-2).abs() < 1e-5);
        assert_eq!(ess_per_grad(1000.0, 1000), Some(1.0));
        assert_eq!(ess_per_grad(1.0, 1_000_000), Some(1e-6));
        assert_eq!(ess_per_grad(10.0, 0), None);
    }

    #[test]
    fn moment_mse_examples() {
        assert_eq!(moment_mse(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(moment_mse(&[1.0, -1.0], &[0.0, 0.0]), 1.0);
        assert!((moment_mse(&[1.1, 2.1, 3.1], &[1.0, 2.0, 3.0]) - 0.01f64).abs() < 1e-14);
    }

    #[test]
    fn summary_examples() {
        let constant: Vec<_> = (1..=10).map(|k| row(k, 50.0, 500)).collect();
        let s = summarize_run(&constant, 5);
        assert_eq!(s.grad_evals_per_sample, 5.0);
        assert!((s.ess_per_grad.unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(s.final_mse_mean, Some(10.0));
        assert_eq!(s.post_burn_in_mse_mean, Some(8.0));
        assert_eq!(s.post_burn_in_mse_var, None);

        let stream = vec![row(1, 100.0, 1000), row(2, 20.0, 400), row(3, 30.0, 0)];
        let s = summarize_run(&stream, 0);
        assert!((s.grad_evals_per_sample - 14.0 / 3.0).abs() < 1e-12);
        assert!((s.ess_per_grad.unwrap() - 0.075).abs() < 1e-12);

        let a = summarize_run(&[row(1, 10.0, 100)], 0);
        let b = summarize_run(&[row(1, 30.0, 300)], 0);
        let m = mean_summary(&[a, b]);
        assert_eq!(m.grad_evals_per_sample, 2.0);
        assert!((m.ess_per_grad.unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn confusion_matrix_oracle() {
        let m = ConfusionMatrix {
            tp: 53,
            fp: 27,
            fn_: 47,
            tn: 223,
        };
        assert!((m.accuracy() - 0.7886).abs() < 1e-4);
        assert!((m.precision() - 0.6625).abs() < 1e-12);
        assert!((m.recall() - 0.53).abs() < 1e-12);
        assert!((m.specificity() - 0.892).abs() < 1e-12);
        let f1 = 2.0 * 0.6625 * 0.53 / (0.6625 + 0.53);
        assert!((m.f1() - f1).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_constant_predictions() {
        let labels = [1, 0, 1, 0, 0];
        let perfect = [1.0, 0.0, 1.0, 0.0, 0.0];
        let r = report_from_probabilities(&perfect, &labels, 0.5).unwrap();
        assert_eq!(
            (r.accuracy, r.precision, r.recall, r.f1, r.specificity, r.auroc),
            (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
        );
        let r = report_from_probabilities(&[0.5; 5], &labels, 0.5).unwrap();
        assert_eq!((r.recall, r.specificity, r.auroc), (1.0, 0.0, 0.5));
        assert!(matches!(
            report_from_probabilities(&[0.2, 0.7], &[1, 1], 0.5),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn auroc_pair_count_oracle() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.4, 0.9, 0.2, 0.4];
        let labels = [0, 0, 1, 1, 1, 0, 0, 1];
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            for (k, &yk) in labels.iter().enumerate() {
                if yi == 1 && yk == 0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[k] {
                        1.0
                    } else if scores[i] == scores[k] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((auroc(&scores, &labels).unwrap() - wins / pairs).abs() < 1e-15);
        let squashed: Vec<f64> = scores.iter().map(|s| s * s * s + 2.0).collect();
        assert_eq!(auroc(&squashed, &labels).unwrap(), auroc(&scores, &labels).unwrap());
    }
}
