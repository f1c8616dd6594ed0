use chees_smc::chees::jittered_length;
use chees_smc::diagnostics::{auroc, moment_mse, report_from_probabilities};
use chees_smc::quasirandom::radical_inverse;
use chees_smc::smc::{effective_sample_size, normalize_weights};
use proptest::prelude::*;

proptest! {
    #[test]
    fn normalized_weights_sum_to_one(logs in prop::collection::vec(-50.0f64..50.0, 1..200)) {
        let w = normalize_weights(&logs, 1).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ess = effective_sample_size(&w);
        prop_assert!(ess >= 1.0 - 1e-9 && ess <= logs.len() as f64 + 1e-9);
    }

    #[test]
    fn radical_inverse_stays_in_unit_interval(index in 1u64..1_000_000, base in prop::sample::select(vec![2u64, 3, 5, 7, 11, 97])) {
        let v = radical_inverse(index, base).unwrap();
        prop_assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn jittered_length_is_bounded(h in 1e-6f64..=1.0, l in 1e-3f64..100.0, eps in 1e-3f64..1.0, cap in 1usize..1000) {
        let n = jittered_length(h, l, eps, cap);
        prop_assert!(n >= 1 && n <= cap);
    }

    #[test]
    fn moment_mse_is_non_negative(a in prop::collection::vec(-10.0f64..10.0, 1..20)) {
        let b: Vec<f64> = a.iter().map(|x| x * 0.5 + 1.0).collect();
        prop_assert!(moment_mse(&a, &b) >= 0.0);
        prop_assert_eq!(moment_mse(&a, &a), 0.0);
    }

    #[test]
    fn auroc_ignores_monotone_transforms(
        scores in prop::collection::vec(0.0f64..1.0, 4..60),
        flips in prop::collection::vec(any::<bool>(), 60),
    ) {
        let mut labels: Vec<u8> = flips.iter().take(scores.len()).map(|&f| u8::from(f)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 2.0).collect();
        let a = auroc(&scores, &labels).unwrap();
        prop_assert!((a - auroc(&transformed, &labels).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn confusion_identities_hold(
        probs in prop::collection::vec(0.0f64..1.0, 4..80),
        flips in prop::collection::vec(any::<bool>(), 80),
    ) {
        let mut labels: Vec<u8> = flips.iter().take(probs.len()).map(|&f| u8::from(f)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let r = report_from_probabilities(&probs, &labels, 0.5).unwrap();
        let n = probs.len() as f64;
        let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
        let predicted = probs.iter().filter(|&&p| p >= 0.5).count() as f64;
        let tp = probs.iter().zip(&labels).filter(|(&p, &y)| p >= 0.5 && y == 1).count() as f64;
        let tn = probs.iter().zip(&labels).filter(|(&p, &y)| p < 0.5 && y == 0).count() as f64;
        prop_assert!((r.accuracy - (tp + tn) / n).abs() < 1e-12);
        prop_assert!((r.recall * pos - tp).abs() < 1e-9);
        prop_assert!((r.specificity * (n - pos) - tn).abs() < 1e-9);
        if predicted > 0.0 {
            prop_assert!((r.precision * predicted - tp).abs() < 1e-9);
        }
        if r.precision + r.recall > 0.0 {
            let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
            prop_assert!((r.f1 - f1).abs() < 1e-12);
        }
    }
}
