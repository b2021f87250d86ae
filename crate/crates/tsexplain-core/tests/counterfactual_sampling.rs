//! End-to-end checks of partial predictions against analytic answers.

mod common;

use common::{
    gauss_hermite_normal, gaussian_expectation, LogisticPredictor, OracleGenerator,
    UnitGaussianGenerator,
};
use ndarray::arr2;
use tsexplain_core::rng::stream;
use tsexplain_core::{partial_prediction, FeatureSet, SequencePredictor};

fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

#[test]
fn quadrature_reproduces_gaussian_moments() {
    let (nodes, weights) = gauss_hermite_normal(64);
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let moment = |k: i32| gaussian_expectation(&nodes, &weights, |z| z.powi(k));
    assert!(moment(1).abs() < 1e-12);
    assert!((moment(2) - 1.0).abs() < 1e-12);
    assert!((moment(4) - 3.0).abs() < 1e-12);
    assert!((moment(6) - 15.0).abs() < 1e-11);
    assert!((moment(10) - 945.0).abs() < 1e-8);
    // Non-polynomial but entire: E[e^z] = sqrt(e).
    let exp_mean = gaussian_expectation(&nodes, &weights, f64::exp);
    assert!((exp_mean - 0.5f64.exp()).abs() < 1e-12, "{exp_mean}");
}

/// The predictor sums feature 0, the generator proposes N(0, 1) for it, so
/// the partial prediction has the closed form E_z[sigmoid(prefix + z)].
#[test]
fn monte_carlo_agrees_with_quadrature() {
    let predictor = LogisticPredictor { num_features: 2 };
    let generator = UnitGaussianGenerator { num_features: 2 };
    let values = arr2(&[
        [0.4, -0.3, 0.9, 0.2, -0.6, 0.5],
        [1.0, 2.0, -1.0, 0.5, 0.0, 1.5],
    ]);
    let observed = FeatureSet::single(2, 1).unwrap();
    let (nodes, weights) = gauss_hermite_normal(64);

    for step in [0usize, 3, 5] {
        let prefix: f64 = (0..step).map(|s| values[[0, s]]).sum();
        let exact = gaussian_expectation(&nodes, &weights, |z| sigmoid(prefix + z));
        let mut rng = stream(9, &[0xABCD, step as u64]);
        let dist = partial_prediction(
            &predictor,
            &generator,
            &values,
            step,
            &observed,
            10_000,
            &mut rng,
        )
        .unwrap();
        let err = (dist.probs()[1] - exact).abs();
        assert!(err < 0.01, "step {step}: mc {} vs exact {exact}", dist.probs()[1]);
    }
}

#[test]
fn estimator_error_shrinks_with_the_sample_count() {
    let predictor = LogisticPredictor { num_features: 2 };
    let generator = UnitGaussianGenerator { num_features: 2 };
    let values = arr2(&[[0.4, -0.3, 0.9, 0.2], [1.0, 2.0, -1.0, 0.5]]);
    let observed = FeatureSet::single(2, 1).unwrap();
    let step = 3;
    let prefix: f64 = (0..step).map(|s| values[[0, s]]).sum();
    let (nodes, weights) = gauss_hermite_normal(64);
    let exact = gaussian_expectation(&nodes, &weights, |z| sigmoid(prefix + z));

    let mut errors = Vec::new();
    for &l in &[10usize, 100, 1_000, 10_000] {
        let mut rng = stream(9, &[0xBEEF, l as u64]);
        let dist =
            partial_prediction(&predictor, &generator, &values, step, &observed, l, &mut rng)
                .unwrap();
        let err = (dist.probs()[1] - exact).abs();
        // Universal bound on the standard error: sd <= 0.5 / sqrt(l).
        let bound = 3.0 * 0.5 / (l as f64).sqrt();
        assert!(err < bound, "l = {l}: err {err} above {bound}");
        errors.push(err);
    }
    assert!(
        errors[3] < errors[0],
        "error did not shrink: {errors:?}"
    );
}

/// Masking a feature the predictor never reads cannot move the prediction.
#[test]
fn sampling_an_ignored_feature_changes_nothing() {
    let predictor = LogisticPredictor { num_features: 3 };
    let generator = UnitGaussianGenerator { num_features: 3 };
    let values = arr2(&[
        [0.4, -0.3, 0.9, 0.2],
        [5.0, -4.0, 3.0, 2.0],
        [1.0, 1.0, 1.0, 1.0],
    ]);
    let truth = predictor.forward(&values);
    let observed = FeatureSet::single(3, 0).unwrap();
    for step in 0..4 {
        let mut rng = stream(9, &[0xCAFE, step as u64]);
        let dist = partial_prediction(
            &predictor,
            &generator,
            &values,
            step as usize,
            &observed,
            25,
            &mut rng,
        )
        .unwrap();
        for (a, b) in dist.probs().iter().zip(truth[step as usize].probs()) {
            assert!((a - b).abs() < 1e-15, "step {step}: {a} vs {b}");
        }
    }
}

/// A zero-variance generator that forecasts the true value turns sampling
/// into exact replacement, so the partial prediction is the true one.
#[test]
fn an_oracle_generator_recovers_the_true_distribution() {
    let predictor = LogisticPredictor { num_features: 2 };
    let values = arr2(&[[0.4, -0.3, 0.9, 0.2], [1.0, 2.0, -1.0, 0.5]]);
    let generator = OracleGenerator { series: values.clone() };
    let truth = predictor.forward(&values);
    let observed = FeatureSet::single(2, 1).unwrap();
    for step in 0..4 {
        let mut rng = stream(9, &[0xD00D, step as u64]);
        let dist = partial_prediction(
            &predictor,
            &generator,
            &values,
            step as usize,
            &observed,
            7,
            &mut rng,
        )
        .unwrap();
        for (a, b) in dist.probs().iter().zip(truth[step as usize].probs()) {
            assert!((a - b).abs() < 1e-15, "step {step}: {a} vs {b}");
        }
    }
}
