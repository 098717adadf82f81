//! State-dependent discrete memoryless channels with i.i.d. states.
//!
//! A [`StateDmc`] holds the kernel `W(y|x,s)` indexed `[x][s][y]` and the state
//! prior `P_S`. Because states are i.i.d. and unknown to both ends, every
//! capacity formula runs on the [`AveragedDmc`] with rows
//! `q_x(y) = Σ_s P_S(s)·W(y|x,s)`.

use alloc::vec::Vec;

use libm::{exp2, log2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::{Error, Result, DERIVED_TOLERANCE, INPUT_TOLERANCE};

/// Sequence length above which likelihoods are accumulated in the log domain.
const LINEAR_LIKELIHOOD_MAX_LEN: usize = 32;

/// Unvalidated channel description, as read from a channel file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawChannel {
    pub input_size: usize,
    pub output_size: usize,
    pub state_size: usize,
    pub state_prior: Vec<f64>,
    /// Indexed `[x][s][y]`.
    pub kernel: Vec<Vec<Vec<f64>>>,
}

/// A validated state-dependent DMC. Immutable after construction.
#[derive(Debug, Clone)]
pub struct StateDmc {
    input_size: usize,
    output_size: usize,
    state_size: usize,
    kernel: Vec<f64>,
    state_prior: Vec<f64>,
    averaged: AveragedDmc,
    state_sampler: WeightedIndex<f64>,
    row_samplers: Vec<WeightedIndex<f64>>,
}

/// Checks a raw description and builds the channel. Malformed rows are rejected, never repaired.
pub fn validate_channel(raw: &RawChannel) -> Result<StateDmc> {
    let ch = StateDmc::new(raw.kernel.clone(), raw.state_prior.clone())?;
    for (what, declared, found) in [
        ("input alphabet", raw.input_size, ch.input_size()),
        ("output alphabet", raw.output_size, ch.output_size()),
        ("state alphabet", raw.state_size, ch.state_size()),
    ] {
        if declared != found {
            return Err(Error::DimensionMismatch {
                what,
                expected: declared,
                found,
            });
        }
    }
    Ok(ch)
}

fn check_entry(location: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value.is_infinite() || value > 1.0 {
        return Err(Error::ProbabilityOutOfRange { location, value });
    }
    if value < 0.0 {
        return Err(Error::NegativeProbability { location, value });
    }
    Ok(())
}

impl StateDmc {
    /// Builds a channel from `kernel[x][s][y]` and the state prior.
    pub fn new(kernel: Vec<Vec<Vec<f64>>>, state_prior: Vec<f64>) -> Result<Self> {
        let input_size = kernel.len();
        if input_size == 0 {
            return Err(Error::EmptyAlphabet("input"));
        }
        let state_size = state_prior.len();
        if state_size == 0 {
            return Err(Error::EmptyAlphabet("state"));
        }
        let output_size = kernel[0].first().map_or(0, Vec::len);
        if output_size == 0 {
            return Err(Error::EmptyAlphabet("output"));
        }

        for &p in &state_prior {
            check_entry("state prior", p)?;
        }
        let prior_sum: f64 = state_prior.iter().sum();
        if (prior_sum - 1.0).abs() > INPUT_TOLERANCE {
            return Err(Error::PriorNotNormalized { sum: prior_sum });
        }

        let mut flat = Vec::with_capacity(input_size * state_size * output_size);
        for (x, per_state) in kernel.iter().enumerate() {
            if per_state.len() != state_size {
                return Err(Error::DimensionMismatch {
                    what: "kernel states",
                    expected: state_size,
                    found: per_state.len(),
                });
            }
            for (s, row) in per_state.iter().enumerate() {
                if row.len() != output_size {
                    return Err(Error::DimensionMismatch {
                        what: "kernel outputs",
                        expected: output_size,
                        found: row.len(),
                    });
                }
                for &p in row {
                    check_entry("kernel", p)?;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > INPUT_TOLERANCE {
                    return Err(Error::RowNotNormalized { x, s, sum });
                }
                flat.extend_from_slice(row);
            }
        }

        let mut rows = Vec::with_capacity(input_size * output_size);
        for x in 0..input_size {
            for y in 0..output_size {
                let p: f64 = (0..state_size)
                    .map(|s| state_prior[s] * flat[(x * state_size + s) * output_size + y])
                    .sum();
                rows.push(p);
            }
        }
        let averaged = AveragedDmc {
            input_size,
            output_size,
            rows,
        };

        let state_sampler =
            WeightedIndex::new(&state_prior).map_err(|_| Error::PriorNotNormalized { sum: prior_sum })?;
        let row_samplers = flat
            .chunks(output_size)
            .enumerate()
            .map(|(i, row)| {
                WeightedIndex::new(row).map_err(|_| Error::RowNotNormalized {
                    x: i / state_size,
                    s: i % state_size,
                    sum: row.iter().sum(),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            input_size,
            output_size,
            state_size,
            kernel: flat,
            state_prior,
            averaged,
            state_sampler,
            row_samplers,
        })
    }

    /// A state-independent channel (`|S| = 1`) with the given rows `W(y|x)`.
    pub fn stateless(rows: Vec<Vec<f64>>) -> Result<Self> {
        let kernel = rows.into_iter().map(|row| alloc::vec![row]).collect();
        Self::new(kernel, alloc::vec![1.0])
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn state_size(&self) -> usize {
        self.state_size
    }

    pub fn state_prior(&self) -> &[f64] {
        &self.state_prior
    }

    /// `W(·|x,s)`.
    pub fn kernel_row(&self, x: usize, s: usize) -> &[f64] {
        let start = (x * self.state_size + s) * self.output_size;
        &self.kernel[start..start + self.output_size]
    }

    /// `W(y|x,s)`.
    pub fn kernel(&self, x: usize, s: usize, y: usize) -> f64 {
        self.kernel[(x * self.state_size + s) * self.output_size + y]
    }

    pub fn averaged(&self) -> &AveragedDmc {
        &self.averaged
    }

    pub fn to_raw(&self) -> RawChannel {
        RawChannel {
            input_size: self.input_size,
            output_size: self.output_size,
            state_size: self.state_size,
            state_prior: self.state_prior.clone(),
            kernel: (0..self.input_size)
                .map(|x| (0..self.state_size).map(|s| self.kernel_row(x, s).to_vec()).collect())
                .collect(),
        }
    }

    pub(crate) fn check_input(&self, x: usize) -> Result<()> {
        check_index("input", x, self.input_size)
    }

    pub(crate) fn check_output(&self, y: usize) -> Result<()> {
        check_index("output", y, self.output_size)
    }

    pub(crate) fn check_state(&self, s: usize) -> Result<()> {
        check_index("state", s, self.state_size)
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.state_sampler.sample(rng)
    }

    /// Draws `n` i.i.d. states from `P_S`.
    pub fn sample_state_sequence<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.sample_state(rng)).collect()
    }

    /// Draws one output from `W(·|x,s)`.
    pub fn transmit<R: Rng + ?Sized>(&self, x: usize, s: usize, rng: &mut R) -> Result<usize> {
        self.check_input(x)?;
        self.check_state(s)?;
        Ok(self.row_samplers[x * self.state_size + s].sample(rng))
    }

    /// `E_{S^n}[W^n(y^n|x^n,S^n)]` in log2; `-inf` when the pair is impossible.
    pub fn sequence_log2_likelihood(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<f64> {
        self.check_pair(x_seq, y_seq)?;
        Ok(x_seq
            .iter()
            .zip(y_seq)
            .map(|(&x, &y)| log2(self.averaged.prob(x, y)))
            .sum())
    }

    /// `E_{S^n}[W^n(y^n|x^n,S^n)]`. The per-letter averaged probabilities are
    /// multiplied directly for short sequences and through log2 otherwise.
    pub fn sequence_likelihood(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<f64> {
        if x_seq.len() > LINEAR_LIKELIHOOD_MAX_LEN {
            return Ok(exp2(self.sequence_log2_likelihood(x_seq, y_seq)?));
        }
        self.check_pair(x_seq, y_seq)?;
        Ok(x_seq
            .iter()
            .zip(y_seq)
            .map(|(&x, &y)| self.averaged.prob(x, y))
            .product())
    }

    fn check_pair(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<()> {
        if x_seq.len() != y_seq.len() {
            return Err(Error::LengthMismatch {
                left: x_seq.len(),
                right: y_seq.len(),
            });
        }
        for &x in x_seq {
            self.check_input(x)?;
        }
        for &y in y_seq {
            self.check_output(y)?;
        }
        Ok(())
    }
}

/// `Σ_s P_S(s)·W(·|x,s)` for one input.
pub fn averaged_row(ch: &StateDmc, x: usize) -> Result<Vec<f64>> {
    ch.check_input(x)?;
    Ok(ch.averaged().row(x).to_vec())
}

/// The averaged channel of `ch`.
pub fn averaged_channel(ch: &StateDmc) -> AveragedDmc {
    ch.averaged().clone()
}

pub(crate) fn check_index(what: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, size })
    }
}

/// The effective (state-averaged) DMC, rows `q_x(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedDmc {
    input_size: usize,
    output_size: usize,
    rows: Vec<f64>,
}

impl AveragedDmc {
    /// A DMC given directly by its rows; rows must sum to 1 within the derived tolerance.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::EmptyAlphabet("input"));
        }
        let output_size = rows[0].len();
        if output_size == 0 {
            return Err(Error::EmptyAlphabet("output"));
        }
        let mut flat = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch {
                    what: "channel outputs",
                    expected: output_size,
                    found: row.len(),
                });
            }
            for &p in row {
                check_entry("channel row", p)?;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > DERIVED_TOLERANCE {
                return Err(Error::RowNotNormalized { x, s: 0, sum });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            input_size,
            output_size,
            rows: flat,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.output_size + y]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.output_size)
    }

    /// Output distribution `Σ_x P(x)·q_x` for an input distribution given as weights.
    pub fn mix(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.output_size];
        for (x, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(x)) {
                *o += w * p;
            }
        }
        out
    }

    /// The channel restricted to the listed inputs (in the listed order).
    pub fn restrict(&self, inputs: &[usize]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyAlphabet("input"));
        }
        let mut rows = Vec::with_capacity(inputs.len() * self.output_size);
        for &x in inputs {
            check_index("input", x, self.input_size)?;
            rows.extend_from_slice(self.row(x));
        }
        Ok(Self {
            input_size: inputs.len(),
            output_size: self.output_size,
            rows,
        })
    }
}

/// Input, state and output sequences of one block, all of equal length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SequenceTriple {
    pub x_seq: Vec<usize>,
    pub s_seq: Vec<usize>,
    pub y_seq: Vec<usize>,
}

impl SequenceTriple {
    pub fn new(ch: &StateDmc, x_seq: Vec<usize>, s_seq: Vec<usize>, y_seq: Vec<usize>) -> Result<Self> {
        for other in [s_seq.len(), y_seq.len()] {
            if other != x_seq.len() {
                return Err(Error::LengthMismatch {
                    left: x_seq.len(),
                    right: other,
                });
            }
        }
        x_seq.iter().try_for_each(|&x| ch.check_input(x))?;
        s_seq.iter().try_for_each(|&s| ch.check_state(s))?;
        y_seq.iter().try_for_each(|&y| ch.check_output(y))?;
        Ok(Self { x_seq, s_seq, y_seq })
    }

    pub fn len(&self) -> usize {
        self.x_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_seq.is_empty()
    }
}

/// The two canonical channels shipped with the crate.
pub mod fixtures {
    use super::*;
    use alloc::vec;

    /// Binary channel whose crossover is 0.05 in state 0 and 0.15 in state 1, uniform states.
    pub fn flip_bsc() -> StateDmc {
        let bsc = |p: f64| [vec![1.0 - p, p], vec![p, 1.0 - p]];
        let [s0x0, s0x1] = bsc(0.05);
        let [s1x0, s1x1] = bsc(0.15);
        StateDmc::new(vec![vec![s0x0, s1x0], vec![s0x1, s1x1]], vec![0.5, 0.5])
            .expect("FlipBSC fixture is valid")
    }

    /// Input 0 reveals the state through a 0.1-crossover; input 1 always outputs 1.
    pub fn sensor() -> StateDmc {
        StateDmc::new(
            vec![
                vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            vec![0.5, 0.5],
        )
        .expect("Sensor fixture is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{flip_bsc, sensor};
    use super::*;
    use crate::rng::seeded;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_kernel_is_valid() {
        let ch = StateDmc::stateless(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!((ch.input_size(), ch.output_size(), ch.state_size()), (2, 2, 1));
    }

    #[test]
    fn unnormalized_row_is_rejected() {
        let err = StateDmc::stateless(vec![vec![0.5, 0.49], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::RowNotNormalized { x: 0, s: 0, .. }));
    }

    #[test]
    fn negative_entry_and_ragged_arrays_are_rejected() {
        let err = StateDmc::stateless(vec![vec![1.1, -0.1], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOutOfRange { .. } | Error::NegativeProbability { .. }));
        let err = StateDmc::stateless(vec![vec![-0.0, 1.0], vec![-0.25, 1.25]]).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOutOfRange { .. } | Error::NegativeProbability { .. }));
        let err = StateDmc::stateless(vec![vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = StateDmc::new(vec![vec![vec![1.0]]], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = StateDmc::new(vec![vec![vec![1.0]]], vec![0.7]).unwrap_err();
        assert!(matches!(err, Error::PriorNotNormalized { .. }));
    }

    #[test]
    fn fixtures_validate_from_raw() {
        for ch in [flip_bsc(), sensor()] {
            let again = validate_channel(&ch.to_raw()).unwrap();
            assert_eq!(again.averaged(), ch.averaged());
        }
    }

    #[test]
    fn averaged_rows_match_fixtures() {
        let flip = flip_bsc();
        assert!(close(&averaged_row(&flip, 0).unwrap(), &[0.9, 0.1], 1e-12));
        assert!(close(&averaged_row(&flip, 1).unwrap(), &[0.1, 0.9], 1e-12));
        let s = sensor();
        assert!(close(&averaged_row(&s, 0).unwrap(), &[0.5, 0.5], 1e-12));
        assert!(close(&averaged_row(&s, 1).unwrap(), &[0.0, 1.0], 1e-12));
        assert!(matches!(averaged_row(&s, 2), Err(Error::IndexOutOfRange { .. })));

        let single = StateDmc::stateless(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert!(close(averaged_channel(&single).row(1), single.kernel_row(1, 0), 0.0));
    }

    #[test]
    fn degenerate_prior_samples_constant_states() {
        let ch = StateDmc::new(
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![1.0, 0.0],
        )
        .unwrap();
        let mut rng = seeded(3);
        assert!(ch.sample_state_sequence(1000, &mut rng).iter().all(|&s| s == 0));
    }

    #[test]
    fn state_frequency_is_within_three_standard_errors() {
        let ch = flip_bsc();
        let n = 100_000;
        let mut rng = seeded(11);
        let seq = ch.sample_state_sequence(n, &mut rng);
        let freq = seq.iter().filter(|&&s| s == 1).count() as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 3.0 * libm::sqrt(0.25 / n as f64));
        assert_eq!(seq, ch.sample_state_sequence(n, &mut seeded(11)));
    }

    #[test]
    fn transmit_follows_the_kernel_row() {
        let s = sensor();
        let mut rng = seeded(5);
        assert!((0..1000).all(|_| s.transmit(1, 0, &mut rng).unwrap() == 1));

        let flip = flip_bsc();
        let n = 100_000;
        let flips = (0..n)
            .filter(|_| flip.transmit(0, 0, &mut rng).unwrap() == 1)
            .count() as f64;
        let sigma = libm::sqrt(0.05 * 0.95 / n as f64);
        assert!((flips / n as f64 - 0.05).abs() <= 3.0 * sigma);

        let a = flip.transmit(0, 1, &mut seeded(9)).unwrap();
        let b = flip.transmit(0, 1, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
        assert!(flip.transmit(2, 0, &mut rng).is_err());
        assert!(flip.transmit(0, 2, &mut rng).is_err());
    }

    #[test]
    fn joint_state_output_frequencies_converge() {
        let ch = flip_bsc();
        let n = 100_000usize;
        let mut rng = seeded(21);
        let mut counts = [[0usize; 2]; 2];
        for _ in 0..n {
            let s = ch.sample_state(&mut rng);
            let y = ch.transmit(1, s, &mut rng).unwrap();
            counts[s][y] += 1;
        }
        for (s, row) in counts.iter().enumerate() {
            for (y, &count) in row.iter().enumerate() {
                let p = ch.state_prior()[s] * ch.kernel(1, s, y);
                let freq = count as f64 / n as f64;
                assert!((freq - p).abs() <= 3.0 * libm::sqrt(p * (1.0 - p) / n as f64) + 1e-12);
            }
        }
    }

    #[test]
    fn sequence_likelihood_examples() {
        let flip = flip_bsc();
        assert!((flip.sequence_likelihood(&[0, 0], &[0, 0]).unwrap() - 0.81).abs() < 1e-12);
        let one = flip.sequence_likelihood(&[1], &[0]).unwrap();
        assert!((one - flip.averaged().prob(1, 0)).abs() < 1e-15);
        assert!(matches!(
            flip.sequence_likelihood(&[0], &[0, 1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn long_sequences_use_the_log_domain() {
        let flip = flip_bsc();
        let x = vec![0; 2000];
        let y = vec![0; 2000];
        let log = flip.sequence_log2_likelihood(&x, &y).unwrap();
        assert!((log - 2000.0 * log2(0.9)).abs() < 1e-8);
        assert_eq!(flip.sequence_likelihood(&x, &y).unwrap(), exp2(log));
        let s = sensor();
        assert_eq!(s.sequence_log2_likelihood(&[1; 40], &[0; 40]).unwrap(), f64::NEG_INFINITY);
    }
}
