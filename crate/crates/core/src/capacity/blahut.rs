use alloc::vec;
use alloc::vec::Vec;

use libm::{exp2, log2};

use super::{CapacityResult, InputDistribution, Maximizer};
use crate::channel::AveragedDmc;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 200_000;

/// `D(q_x ‖ r)` in bits; infinite when `q_x` puts mass where `r` has none.
fn divergence(row: &[f64], reference: &[f64]) -> f64 {
    row.iter()
        .zip(reference)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &r)| if r > 0.0 { p * log2(p / r) } else { f64::INFINITY })
        .sum()
}

/// Runs Blahut-Arimoto until `done(lower, upper)` accepts the bracket
/// `log2 Σ_x P(x)·2^{D(q_x‖Pq)} ≤ C ≤ max_x D(q_x‖Pq)`. Returns the last bracket,
/// the input distribution it belongs to, the iteration count, and whether `done` fired.
fn iterate(channel: &AveragedDmc, mut done: impl FnMut(f64, f64) -> bool) -> (f64, f64, Vec<f64>, usize, bool) {
    let inputs = channel.input_size();
    let mut p = vec![1.0 / inputs as f64; inputs];
    let mut exp_div = vec![0.0; inputs];
    let (mut lower, mut upper) = (0.0, f64::INFINITY);
    for iteration in 0..MAX_ITERATIONS {
        let output = channel.mix(&p);
        upper = f64::NEG_INFINITY;
        for (x, slot) in exp_div.iter_mut().enumerate() {
            let d = divergence(channel.row(x), &output);
            upper = upper.max(d);
            *slot = exp2(d);
        }
        let total: f64 = p.iter().zip(&exp_div).map(|(a, b)| a * b).sum();
        lower = log2(total);
        if done(lower, upper) {
            return (lower, upper, p, iteration, true);
        }
        for (px, c) in p.iter_mut().zip(&exp_div) {
            *px *= c / total;
        }
    }
    (lower, upper, p, MAX_ITERATIONS, false)
}

/// Shannon capacity `max_P I(X;Y)` of a DMC by Blahut-Arimoto iteration.
///
/// Stops once the capacity bracket is narrower than `tol`. The returned value is
/// the lower end and `optimality_gap` the bracket width.
pub fn shannon_capacity(channel: &AveragedDmc, tol: f64) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive"));
    }
    let (lower, upper, p, iterations, converged) = iterate(channel, |lo, hi| hi - lo <= tol);
    if !converged {
        return Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
        });
    }
    Ok(CapacityResult {
        value: lower.max(0.0),
        maximizer: Maximizer::Distribution(InputDistribution::from_weights_unchecked(p)),
        optimality_gap: (upper - lower).max(0.0),
        iterations,
    })
}

/// Whether `C(W)` exceeds `threshold`. Iterates only until the bracket lies on one side,
/// so nearly useless channels (where the bracket closes slowly) still decide quickly.
/// A capacity sitting exactly at the threshold counts as not exceeding it.
pub fn capacity_exceeds(channel: &AveragedDmc, threshold: f64) -> bool {
    let (lower, ..) = iterate(channel, |lo, hi| lo > threshold || hi <= threshold);
    lower > threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::entropy;
    use alloc::vec::Vec;

    fn bsc(p: f64) -> AveragedDmc {
        AveragedDmc::from_rows(&[vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    #[test]
    fn binary_symmetric_closed_form() {
        for p in [0.01, 0.1, 0.25, 0.4] {
            let c = shannon_capacity(&bsc(p), 1e-10).unwrap();
            let closed = 1.0 - entropy(&[p, 1.0 - p]).unwrap();
            assert!((c.value - closed).abs() <= 1e-6, "p={p}");
        }
        let c = shannon_capacity(&bsc(0.1), 1e-9).unwrap();
        assert!((c.value - 0.531004).abs() < 1e-6);
    }

    #[test]
    fn identical_rows_carry_nothing() {
        let ch = AveragedDmc::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(shannon_capacity(&ch, 1e-9).unwrap().value, 0.0);
    }

    #[test]
    fn noiseless_quaternary_channel() {
        let rows: Vec<_> = (0..4)
            .map(|x| (0..4).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        let ch = AveragedDmc::from_rows(&rows).unwrap();
        assert!((shannon_capacity(&ch, 1e-9).unwrap().value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn z_channel_matches_known_value() {
        // Z channel with 0.5 crossover: C = log2(1 + 2^{-2}) = log2(1.25).
        let ch = AveragedDmc::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let c = shannon_capacity(&ch, 1e-10).unwrap();
        assert!((c.value - log2(1.25)).abs() < 1e-8);
    }

    #[test]
    fn nearly_useless_channel_decides_quickly() {
        let ch = AveragedDmc::from_rows(&[
            vec![0.452_012_298_508_418_6, 0.547_987_701_491_581_4],
            vec![0.449_765_852_608_999_5, 0.550_234_147_391_000_5],
            vec![0.441_067_839_623_328_3, 0.558_932_160_376_671_7],
        ])
        .unwrap();
        assert!(capacity_exceeds(&ch, 1e-9));
        assert!(!capacity_exceeds(&bsc(0.5), 1e-9));
    }
}
