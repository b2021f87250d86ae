//! Kullback-Leibler divergence between predictive distributions.

use crate::seqmodels::PredictiveDistribution;

/// KL(p || q) in nats. Both distributions are strictly positive by
/// construction, so the result is finite; tiny negative rounding residue is
/// clamped to zero. Panics if the class counts differ.
pub fn kl_divergence(p: &PredictiveDistribution, q: &PredictiveDistribution) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different class counts");
    let mut sum = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        sum += pi * (pi.ln() - qi.ln());
    }
    sum.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn dist(probs: Vec<f64>) -> PredictiveDistribution {
        PredictiveDistribution::from_probs(probs).unwrap()
    }

    #[test]
    fn identical_distributions_give_exact_zero() {
        let p = dist(vec![0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p), 0.0);
        let q = dist(p.probs().to_vec());
        assert_eq!(kl_divergence(&p, &q), 0.0);
    }

    #[test]
    fn near_point_mass_against_uniform_is_ln_two() {
        let p = dist(vec![1.0 - 1e-12, 1e-12]);
        let q = dist(vec![0.5, 0.5]);
        let ln2 = std::f64::consts::LN_2;
        assert!(
            (kl_divergence(&p, &q) - ln2).abs() < 1e-9,
            "{} vs {ln2}",
            kl_divergence(&p, &q)
        );
    }

    #[test]
    fn skewed_pair_matches_hand_computation() {
        // KL([1/4,3/4] || [3/4,1/4]) = 1/4 ln(1/3) + 3/4 ln(3) = 1/2 ln 3.
        let p = dist(vec![0.25, 0.75]);
        let q = dist(vec![0.75, 0.25]);
        let want = 0.5 * 3f64.ln();
        assert!((kl_divergence(&p, &q) - want).abs() < 1e-12);
        assert!((want - 0.549_306_144_334_054_9).abs() < 1e-15);
    }

    #[test]
    fn non_negative_and_positive_when_distinguishable() {
        let mut rng = stream(314, &[0x6b6c]);
        for _ in 0..10_000 {
            let k = rng.gen_range(2..5usize);
            let raw_p: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
            let raw_q: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
            let p = dist(raw_p);
            let q = dist(raw_q);
            let kl = kl_divergence(&p, &q);
            assert!(kl >= 0.0, "negative divergence {kl}");
            let tv: f64 = p
                .probs()
                .iter()
                .zip(q.probs())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            if tv >= 1e-6 {
                assert!(kl > 0.0, "zero divergence at total variation {tv}");
            }
        }
    }

    #[test]
    #[should_panic(expected = "different class counts")]
    fn mismatched_lengths_panic() {
        let p = dist(vec![0.5, 0.5]);
        let q = dist(vec![0.4, 0.3, 0.3]);
        kl_divergence(&p, &q);
    }
}
