//! NARMA dynamics and spike injection.

use super::DataError;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Generates a NARMA sequence of the given order, driven by i.i.d. inputs
/// u ~ U[0, 0.5]:
///
/// ```text
/// y(t+1) = 0.3 y(t) + 0.05 y(t) * sum_{i=0}^{order-1} y(t-i)
///          + 1.5 u(t-order+1) u(t) + 0.1
/// ```
///
/// History before t = 0 is zero-padded and y(0) = 0; the returned vector is
/// y(1)..y(length). Generation fails if the recurrence leaves |y| < 100.
pub fn narma_sequence<R: Rng + ?Sized>(
    order: usize,
    length: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DataError> {
    if order == 0 {
        return Err(DataError::InvalidArgument("NARMA order must be positive".into()));
    }
    if length == 0 {
        return Err(DataError::InvalidArgument("NARMA length must be positive".into()));
    }
    // Ring buffers of the most recent `order` values, index 0 = newest.
    let mut y_hist = vec![0.0f64; order];
    let mut u_hist = vec![0.0f64; order];
    let mut out = Vec::with_capacity(length);
    for step in 0..length {
        let u: f64 = rng.gen::<f64>() * 0.5;
        let u_lag = u_hist[order - 1]; // u(t - order + 1), with u(t) about to enter
        let y_cur = y_hist[0];
        let y_sum: f64 = y_hist.iter().sum();
        let y_next = 0.3 * y_cur + 0.05 * y_cur * y_sum + 1.5 * u_lag * u + 0.1;
        if !(y_next.abs() < 100.0) {
            return Err(DataError::NarmaDiverged { step });
        }
        y_hist.rotate_right(1);
        y_hist[0] = y_next;
        u_hist.rotate_right(1);
        u_hist[0] = u;
        out.push(y_next);
    }
    Ok(out)
}

/// A sequence after spike injection, with the injected step indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeInjection {
    pub values: Vec<f64>,
    /// Sorted, possibly empty. Step 0 is never spiked.
    pub spike_steps: Vec<usize>,
}

/// Adds `magnitude + |g|`, g ~ N(0, 1), to each step after step 0
/// independently with the given probability.
pub fn inject_spikes<R: Rng + ?Sized>(
    sequence: &[f64],
    probability: f64,
    magnitude: f64,
    rng: &mut R,
) -> Result<SpikeInjection, DataError> {
    if sequence.is_empty() {
        return Err(DataError::InvalidArgument("cannot inject spikes into an empty sequence".into()));
    }
    if !(0.0..=1.0).contains(&probability) {
        return Err(DataError::InvalidArgument(format!(
            "spike probability {probability} outside [0, 1]"
        )));
    }
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(DataError::InvalidArgument(format!(
            "spike magnitude {magnitude} must be finite and non-negative"
        )));
    }
    let mut values = sequence.to_vec();
    let mut spike_steps = Vec::new();
    for (t, v) in values.iter_mut().enumerate().skip(1) {
        if rng.gen::<f64>() < probability {
            let g: f64 = StandardNormal.sample(rng);
            *v += magnitude + g.abs();
            spike_steps.push(t);
        }
    }
    Ok(SpikeInjection { values, spike_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, tag};
    use rand::RngCore;

    /// Rng whose every bit is zero, forcing u = 0 draws.
    struct ZeroRng;
    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0);
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            dest.fill(0);
            Ok(())
        }
    }

    // With all inputs forced to zero the recurrence is exactly
    //   y(1) = 0.1
    //   y(2) = 0.3*0.1    + 0.05*0.1*0.1            + 0.1 = 0.1305
    //   y(3) = 0.3*0.1305 + 0.05*0.1305*(0.1305+0.1) + 0.1 = 0.1406540125
    #[test]
    fn zero_input_recurrence_matches_hand_evaluation() {
        let seq = narma_sequence(10, 3, &mut ZeroRng).unwrap();
        let expected = [0.1, 0.1305, 0.1406540125];
        for (got, want) in seq.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn first_value_is_offset_regardless_of_input() {
        // u(t-order+1) is zero-padded at t = 0 for order > 1, so y(1) = 0.1.
        let mut rng = stream(9, &[tag::NARMA, 0]);
        let seq = narma_sequence(10, 1, &mut rng).unwrap();
        assert_eq!(seq, vec![0.1]);
    }

    #[test]
    fn deterministic_under_equal_streams() {
        let a = narma_sequence(10, 64, &mut stream(3, &[tag::NARMA, 1])).unwrap();
        let b = narma_sequence(10, 64, &mut stream(3, &[tag::NARMA, 1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_degenerate_arguments() {
        assert!(narma_sequence(0, 10, &mut ZeroRng).is_err());
        assert!(narma_sequence(10, 0, &mut ZeroRng).is_err());
    }

    #[test]
    fn stays_bounded_over_long_horizons() {
        for seed in 0..5 {
            let seq = narma_sequence(10, 1000, &mut stream(seed, &[tag::NARMA])).unwrap();
            assert!(seq.iter().all(|y| y.is_finite() && y.abs() < 100.0));
        }
    }

    #[test]
    fn zero_probability_is_identity() {
        let seq: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        let inj = inject_spikes(&seq, 0.0, 2.0, &mut stream(0, &[tag::SPIKE])).unwrap();
        assert_eq!(inj.values, seq);
        assert!(inj.spike_steps.is_empty());
    }

    #[test]
    fn unit_probability_spikes_every_step_after_the_first() {
        let seq = vec![0.5; 12];
        let inj = inject_spikes(&seq, 1.0, 2.0, &mut stream(1, &[tag::SPIKE])).unwrap();
        assert_eq!(inj.spike_steps, (1..12).collect::<Vec<_>>());
        assert_eq!(inj.values[0], 0.5);
        for t in 1..12 {
            assert!(inj.values[t] >= 0.5 + 2.0, "step {t} rose by less than the magnitude");
        }
    }

    #[test]
    fn spike_count_tracks_the_binomial_expectation() {
        let seq = vec![0.0; 80];
        let mut total = 0usize;
        let runs = 400usize;
        for i in 0..runs {
            let inj =
                inject_spikes(&seq, 0.05, 2.0, &mut stream(42, &[tag::SPIKE, i as u64])).unwrap();
            total += inj.spike_steps.len();
        }
        let n = (runs * 79) as f64;
        let mean = n * 0.05;
        let sd = (n * 0.05 * 0.95).sqrt();
        assert!(
            (total as f64 - mean).abs() <= 3.0 * sd,
            "spike count {total} outside 3 standard deviations of {mean}"
        );
    }

    #[test]
    fn rejects_empty_sequences_and_bad_probability() {
        assert!(inject_spikes(&[], 0.5, 2.0, &mut ZeroRng).is_err());
        assert!(inject_spikes(&[1.0], 1.5, 2.0, &mut ZeroRng).is_err());
        assert!(inject_spikes(&[1.0], 0.5, -1.0, &mut ZeroRng).is_err());
    }
}
