//! Inner transmission code: a random codebook over the allowed inputs with
//! maximum-likelihood decoding on the averaged channel.

use alloc::vec;
use alloc::vec::Vec;

use libm::{log2, pow};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::capacity::{capacity_exceeds, shannon_capacity, Maximizer, ZERO_CAPACITY_THRESHOLD};
use crate::channel::{check_index, AveragedDmc};
use crate::typicality::all_sequences;
use crate::{Error, Result, ENUMERATION_LIMIT};

/// Codebooks drawn per construction; the one with the smallest maximal error is kept.
const CODEBOOK_ATTEMPTS: usize = 16;
/// Monte Carlo draws per message when exact error computation is too large.
const ERROR_SAMPLES: usize = 4000;
/// Input weights below this in the capacity-achieving law are treated as zero.
const SUPPORT_THRESHOLD: f64 = 1e-6;
const SAMPLING_LAW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionCode {
    k: usize,
    codewords: Vec<Vec<usize>>,
    output_size: usize,
    log_rows: Vec<f64>,
    error_probabilities: Vec<f64>,
    errors_exact: bool,
}

impl TransmissionCode {
    /// Wraps explicit codewords; errors are computed exactly when small enough,
    /// otherwise estimated with `rng`.
    pub fn from_codewords<R: Rng + ?Sized>(
        channel: &AveragedDmc,
        codewords: Vec<Vec<usize>>,
        rng: &mut R,
    ) -> Result<Self> {
        if codewords.len() < 2 {
            return Err(Error::InvalidParameter("a transmission code needs at least two messages"));
        }
        let k = codewords[0].len();
        if k == 0 {
            return Err(Error::InvalidParameter("codeword length must be positive"));
        }
        for word in &codewords {
            if word.len() != k {
                return Err(Error::LengthMismatch {
                    left: k,
                    right: word.len(),
                });
            }
            for &x in word {
                check_index("input", x, channel.input_size())?;
            }
        }
        let log_rows = (0..channel.input_size())
            .flat_map(|x| channel.row(x).iter().map(|&p| log2(p)))
            .collect();
        let mut code = Self {
            k,
            codewords,
            output_size: channel.output_size(),
            log_rows,
            error_probabilities: Vec::new(),
            errors_exact: false,
        };
        let work = pow(channel.output_size() as f64, k as f64) * code.codewords.len() as f64;
        if work <= ENUMERATION_LIMIT as f64 {
            code.error_probabilities = code.exact_errors();
            code.errors_exact = true;
        } else {
            code.error_probabilities = code.sampled_errors(channel, rng);
        }
        Ok(code)
    }

    pub fn blocklength(&self) -> usize {
        self.k
    }

    pub fn messages(&self) -> usize {
        self.codewords.len()
    }

    pub fn codewords(&self) -> &[Vec<usize>] {
        &self.codewords
    }

    pub fn codeword(&self, j: usize) -> &[usize] {
        &self.codewords[j]
    }

    /// Per-message decoding error probabilities.
    pub fn error_probabilities(&self) -> &[f64] {
        &self.error_probabilities
    }

    pub fn max_error(&self) -> f64 {
        self.error_probabilities.iter().copied().fold(0.0, f64::max)
    }

    /// Whether the error probabilities were enumerated exactly rather than sampled.
    pub fn errors_exact(&self) -> bool {
        self.errors_exact
    }

    /// `log2 P(y^k | u_j)` on the averaged channel.
    pub fn log2_likelihood(&self, j: usize, y: &[usize]) -> f64 {
        self.codewords[j]
            .iter()
            .zip(y)
            .map(|(&x, &y)| self.log_rows[x * self.output_size + y])
            .sum()
    }

    /// Maximum-likelihood message; ties go to the lowest index.
    pub fn decode(&self, y: &[usize]) -> Result<usize> {
        if y.len() != self.k {
            return Err(Error::LengthMismatch {
                left: self.k,
                right: y.len(),
            });
        }
        for &symbol in y {
            check_index("output", symbol, self.output_size)?;
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..self.codewords.len() {
            let score = self.log2_likelihood(j, y);
            if score > best_score {
                best = j;
                best_score = score;
            }
        }
        Ok(best)
    }

    fn exact_errors(&self) -> Vec<f64> {
        let mut errors = vec![0.0; self.codewords.len()];
        for y in all_sequences(self.output_size, self.k) {
            let decoded = self.decode(&y).expect("enumerated outputs are in range");
            for (j, err) in errors.iter_mut().enumerate() {
                if j != decoded {
                    *err += pow(2.0, self.log2_likelihood(j, &y));
                }
            }
        }
        errors
    }

    fn sampled_errors<R: Rng + ?Sized>(&self, channel: &AveragedDmc, rng: &mut R) -> Vec<f64> {
        let samplers: Vec<_> = channel
            .rows()
            .map(|row| WeightedIndex::new(row).expect("channel rows are distributions"))
            .collect();
        let mut y = vec![0; self.k];
        (0..self.codewords.len())
            .map(|j| {
                let mut failures = 0usize;
                for _ in 0..ERROR_SAMPLES {
                    for (slot, &x) in y.iter_mut().zip(&self.codewords[j]) {
                        *slot = samplers[x].sample(rng);
                    }
                    if self.decode(&y).expect("sampled outputs are in range") != j {
                        failures += 1;
                    }
                }
                failures as f64 / ERROR_SAMPLES as f64
            })
            .collect()
    }
}

/// Draws `messages` distinct codewords of length `k` i.i.d. from the capacity-achieving
/// input law of the channel restricted to `allowed`, keeping the best of several draws.
pub fn build_transmission_code<R: Rng + ?Sized>(
    channel: &AveragedDmc,
    k: usize,
    messages: usize,
    allowed: &[usize],
    rng: &mut R,
) -> Result<TransmissionCode> {
    if messages < 2 {
        return Err(Error::InvalidParameter("a transmission code needs at least two messages"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("codeword length must be positive"));
    }
    let restricted = channel.restrict(allowed)?;
    if !capacity_exceeds(&restricted, ZERO_CAPACITY_THRESHOLD) {
        return Err(Error::ZeroCapacityChannel);
    }
    // Only the input law is used, to draw codewords, so a loose bracket suffices.
    let capacity = shannon_capacity(&restricted, SAMPLING_LAW_TOLERANCE)?;
    let Maximizer::Distribution(law) = capacity.maximizer else {
        unreachable!("Blahut-Arimoto returns a distribution")
    };
    let weights: Vec<f64> = law
        .probs()
        .iter()
        .map(|&p| if p < SUPPORT_THRESHOLD { 0.0 } else { p })
        .collect();
    let support = weights.iter().filter(|&&w| w > 0.0).count();
    if pow(support as f64, k as f64) < messages as f64 {
        return Err(Error::TooManyMessages { messages, k });
    }
    let sampler = WeightedIndex::new(&weights).map_err(|_| Error::ZeroCapacityChannel)?;

    let mut best: Option<TransmissionCode> = None;
    for _ in 0..CODEBOOK_ATTEMPTS {
        let Some(codewords) = draw_distinct(&sampler, allowed, k, messages, rng) else {
            continue;
        };
        let code = TransmissionCode::from_codewords(channel, codewords, rng)?;
        if best.as_ref().is_none_or(|b| code.max_error() < b.max_error()) {
            best = Some(code);
        }
        if best.as_ref().is_some_and(|b| b.max_error() == 0.0) {
            break;
        }
    }
    match best {
        Some(code) if code.max_error() < 0.5 => Ok(code),
        _ => Err(Error::TooManyMessages { messages, k }),
    }
}

fn draw_distinct<R: Rng + ?Sized>(
    sampler: &WeightedIndex<f64>,
    allowed: &[usize],
    k: usize,
    messages: usize,
    rng: &mut R,
) -> Option<Vec<Vec<usize>>> {
    let mut words: Vec<Vec<usize>> = Vec::with_capacity(messages);
    let mut draws = 0usize;
    while words.len() < messages {
        draws += 1;
        if draws > 1000 * messages {
            return None;
        }
        let word: Vec<usize> = (0..k).map(|_| allowed[sampler.sample(rng)]).collect();
        if !words.contains(&word) {
            words.push(word);
        }
    }
    Some(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn noiseless(k: usize) -> AveragedDmc {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        AveragedDmc::from_rows(&rows).unwrap()
    }

    #[test]
    fn noiseless_binary_code_fills_every_word() {
        let code = build_transmission_code(&noiseless(2), 3, 8, &[0, 1], &mut seeded(1)).unwrap();
        let mut words = code.codewords().to_vec();
        words.sort();
        words.dedup();
        assert_eq!(words.len(), 8);
        assert_eq!(code.max_error(), 0.0);
        assert!(code.errors_exact());
    }

    #[test]
    fn single_symbol_identity_code() {
        let code = build_transmission_code(&noiseless(2), 1, 2, &[0, 1], &mut seeded(2)).unwrap();
        let mut words = code.codewords().to_vec();
        words.sort();
        assert_eq!(words, vec![vec![0], vec![1]]);
        assert_eq!(code.max_error(), 0.0);
    }

    #[test]
    fn flip_bsc_two_messages_at_k8() {
        let ch = crate::channel::fixtures::flip_bsc();
        let code = build_transmission_code(ch.averaged(), 8, 2, &[0, 1], &mut seeded(3)).unwrap();
        assert!(code.errors_exact());
        // Independent check by summing over all 2^8 outputs.
        let mut worst = 0.0f64;
        for j in 0..2 {
            let mut err = 0.0;
            for y in all_sequences(2, 8) {
                if code.decode(&y).unwrap() != j {
                    err += ch.sequence_likelihood(code.codeword(j), &y).unwrap();
                }
            }
            assert!((err - code.error_probabilities()[j]).abs() < 1e-12);
            worst = worst.max(err);
        }
        assert!(worst < 0.2);
    }

    #[test]
    fn decoding_ties_go_to_lowest_index() {
        let ch = AveragedDmc::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let code = TransmissionCode::from_codewords(&ch, vec![vec![0, 0], vec![1, 1]], &mut seeded(0)).unwrap();
        assert_eq!(code.decode(&[0, 1]).unwrap(), 0);
        assert_eq!(code.decode(&[1, 0]).unwrap(), 0);
        assert_eq!(code.decode(&[1, 1]).unwrap(), 1);
        assert!((code.error_probabilities()[1] - 0.19).abs() < 1e-12);
        assert!(code.decode(&[1]).is_err());
    }

    #[test]
    fn impossible_requests_are_rejected() {
        assert_eq!(
            build_transmission_code(&noiseless(2), 2, 5, &[0, 1], &mut seeded(4)),
            Err(Error::TooManyMessages { messages: 5, k: 2 })
        );
        assert_eq!(
            build_transmission_code(&noiseless(2), 2, 2, &[0], &mut seeded(4)),
            Err(Error::ZeroCapacityChannel)
        );
        let useless = AveragedDmc::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(
            build_transmission_code(&useless, 4, 2, &[0, 1], &mut seeded(4)),
            Err(Error::ZeroCapacityChannel)
        );
    }

    #[test]
    fn large_blocks_fall_back_to_sampled_errors() {
        let ch = AveragedDmc::from_rows(&[vec![0.95, 0.05], vec![0.05, 0.95]]).unwrap();
        let code = build_transmission_code(&ch, 21, 2, &[0, 1], &mut seeded(5)).unwrap();
        assert!(!code.errors_exact());
        assert!(code.max_error() < 0.5);
    }

    #[test]
    fn useless_inputs_stay_out_of_the_codebook() {
        // Input 0 is pure noise; inputs 1 and 2 are noiseless.
        let ch = AveragedDmc::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let code = build_transmission_code(&ch, 3, 8, &[0, 1, 2], &mut seeded(6)).unwrap();
        assert!(code.codewords().iter().flatten().all(|&x| x != 0));
        assert_eq!(code.max_error(), 0.0);
    }
}
