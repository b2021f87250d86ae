//! Closed-form models for checking the Monte Carlo machinery from outside
//! the crate: a predictor whose expectation under Gaussian noise has an
//! analytic (quadrature) answer, and generators with known conditionals.
//!
//! Shared by several test targets; not every target uses every helper.
#![allow(dead_code)]

use ndarray::Array2;
use tsexplain_core::{CounterfactualGenerator, PredictiveDistribution, SequencePredictor};

/// p(y = 1 | x_0..x_t) = sigmoid(sum of feature 0 so far). Ignores every
/// other feature, which makes "this feature cannot matter" testable exactly.
pub struct LogisticPredictor {
    pub num_features: usize,
}

impl SequencePredictor for LogisticPredictor {
    type State = f64;

    fn num_features(&self) -> usize {
        self.num_features
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn init_state(&self) -> f64 {
        0.0
    }

    fn step(&self, state: &mut f64, x: &[f64]) -> PredictiveDistribution {
        *state += x[0];
        let p1 = 1.0 / (1.0 + (-*state).exp());
        PredictiveDistribution::from_probs(vec![1.0 - p1, p1]).unwrap()
    }
}

/// Proposes N(0, 1) for every feature at every step, independent of history.
pub struct UnitGaussianGenerator {
    pub num_features: usize,
}

impl CounterfactualGenerator for UnitGaussianGenerator {
    type State = ();

    fn num_features(&self) -> usize {
        self.num_features
    }

    fn init_state(&self) {}

    fn advance(&self, _state: &mut (), _x: &[f64]) {}

    fn next_dist(&self, _state: &(), features: &[usize], means: &mut [f64], stds: &mut [f64]) {
        for i in 0..features.len() {
            means[i] = 0.0;
            stds[i] = 1.0;
        }
    }
}

/// Knows the series it will be asked about and forecasts the exact next
/// value with zero variance, so sampling is a no-op replacement.
pub struct OracleGenerator {
    pub series: Array2<f64>,
}

impl CounterfactualGenerator for OracleGenerator {
    type State = usize;

    fn num_features(&self) -> usize {
        self.series.nrows()
    }

    fn init_state(&self) -> usize {
        0
    }

    fn advance(&self, state: &mut usize, _x: &[f64]) {
        *state += 1;
    }

    fn next_dist(&self, state: &usize, features: &[usize], means: &mut [f64], stds: &mut [f64]) {
        for (i, &f) in features.iter().enumerate() {
            means[i] = self.series[[f, *state]];
            stds[i] = 0.0;
        }
    }
}

/// Nodes and weights such that E_{z ~ N(0,1)}[f(z)] ~= sum_i w_i f(x_i),
/// exact for polynomials up to degree 2n - 1.
///
/// Built from the orthonormal Hermite recurrence: roots located by a sign
/// scan plus Newton (h_n' = sqrt(2n) h_{n-1}), Christoffel weights
/// w_i = 1 / sum_k h_k(x_i)^2, then rescaled from e^{-x^2} to the standard
/// normal measure (x -> sqrt(2) x, weights sum to one).
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    // Orthonormal physicists' Hermite values h_0..h_n at x.
    let evaluate = |x: f64| -> Vec<f64> {
        let mut h = Vec::with_capacity(n + 1);
        h.push(std::f64::consts::PI.powf(-0.25));
        h.push(std::f64::consts::SQRT_2 * x * h[0]);
        for k in 1..n {
            let k_f = k as f64;
            let next =
                x * (2.0 / (k_f + 1.0)).sqrt() * h[k] - (k_f / (k_f + 1.0)).sqrt() * h[k - 1];
            h.push(next);
        }
        h
    };

    // All n roots lie inside |x| < sqrt(2n + 2); scan finely for brackets.
    let limit = ((2 * n + 2) as f64).sqrt();
    let grid = 40 * n;
    let mut roots = Vec::with_capacity(n);
    let mut prev_x = -limit;
    let mut prev_v = *evaluate(prev_x).last().unwrap();
    for i in 1..=grid {
        let x = -limit + 2.0 * limit * i as f64 / grid as f64;
        let v = *evaluate(x).last().unwrap();
        if prev_v == 0.0 {
            roots.push(prev_x);
        } else if prev_v.signum() != v.signum() {
            let mut root = 0.5 * (prev_x + x);
            for _ in 0..60 {
                let h = evaluate(root);
                let deriv = (2.0 * n as f64).sqrt() * h[n - 1];
                let step = h[n] / deriv;
                root -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            roots.push(root);
        }
        prev_x = x;
        prev_v = v;
    }
    assert_eq!(roots.len(), n, "sign scan missed a Hermite root");
    roots.sort_by(f64::total_cmp);

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &r in &roots {
        let h = evaluate(r);
        let christoffel: f64 = 1.0 / h[..n].iter().map(|v| v * v).sum::<f64>();
        nodes.push(std::f64::consts::SQRT_2 * r);
        weights.push(christoffel / std::f64::consts::PI.sqrt());
    }
    (nodes, weights)
}

/// E_{z ~ N(0,1)}[f(z)] by quadrature.
pub fn gaussian_expectation(nodes: &[f64], weights: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    nodes.iter().zip(weights).map(|(&x, &w)| w * f(x)).sum()
}
