//! Conditional types and the typical set of pilot outputs.
//!
//! `y^n` is typical for `x^n` when its conditional type `V(y|x)` lies within
//! max-norm `ε` of the averaged channel on every input occurring in `x^n`.
//! Comparisons carry a `1e-12` slack so that boundary types (`|V − W| = ε`
//! analytically) are classified the same way regardless of rounding.

use alloc::vec;
use alloc::vec::Vec;

use libm::{log2, pow};

use crate::capacity::entropy_of;
use crate::channel::{check_index, AveragedDmc};
use crate::coding::Pilot;
use crate::{Error, Result, ENUMERATION_LIMIT};

const TYPICALITY_SLACK: f64 = 1e-12;

/// Joint occurrence counts of `(x^n, y^n)` and the conditional frequencies they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalType {
    input_size: usize,
    output_size: usize,
    counts: Vec<u64>,
    input_counts: Vec<u64>,
}

impl ConditionalType {
    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.output_size + y]
    }

    pub fn input_count(&self, x: usize) -> u64 {
        self.input_counts[x]
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    /// `V(·|x)`, or `None` when `x` never occurs.
    pub fn row(&self, x: usize) -> Option<Vec<f64>> {
        let total = *self.input_counts.get(x)?;
        if total == 0 {
            return None;
        }
        Some(
            (0..self.output_size)
                .map(|y| self.count(x, y) as f64 / total as f64)
                .collect(),
        )
    }

    /// Inputs that occur at least once.
    pub fn support(&self) -> Vec<usize> {
        (0..self.input_size).filter(|&x| self.input_counts[x] > 0).collect()
    }
}

fn check_lengths(x_seq: &[usize], y_seq: &[usize]) -> Result<()> {
    if x_seq.len() != y_seq.len() {
        return Err(Error::LengthMismatch {
            left: x_seq.len(),
            right: y_seq.len(),
        });
    }
    Ok(())
}

/// Conditional type of `y^n` given `x^n`.
pub fn joint_type(input_size: usize, output_size: usize, x_seq: &[usize], y_seq: &[usize]) -> Result<ConditionalType> {
    check_lengths(x_seq, y_seq)?;
    if x_seq.is_empty() {
        return Err(Error::InvalidParameter("type of an empty sequence"));
    }
    let mut counts = vec![0u64; input_size * output_size];
    let mut input_counts = vec![0u64; input_size];
    for (&x, &y) in x_seq.iter().zip(y_seq) {
        check_index("input", x, input_size)?;
        check_index("output", y, output_size)?;
        counts[x * output_size + y] += 1;
        input_counts[x] += 1;
    }
    Ok(ConditionalType {
        input_size,
        output_size,
        counts,
        input_counts,
    })
}

/// `max_{x ∈ support, y} |V(y|x) − q_x(y)|`.
pub fn max_norm_distance(v: &ConditionalType, channel: &AveragedDmc, support: &[usize]) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("empty support"));
    }
    let mut worst = 0.0f64;
    for &x in support {
        check_index("input", x, channel.input_size())?;
        let row = v.row(x).ok_or(Error::MissingRow { x })?;
        for (a, b) in row.iter().zip(channel.row(x)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Whether `y^n` is in the typical set of `x^n` at radius `eps`.
pub fn typical_membership(channel: &AveragedDmc, x_seq: &[usize], y_seq: &[usize], eps: f64) -> Result<bool> {
    let v = joint_type(channel.input_size(), channel.output_size(), x_seq, y_seq)?;
    Ok(max_norm_distance(&v, channel, &v.support())? <= eps + TYPICALITY_SLACK)
}

/// `max_y |freq_{y^n}(y) − reference(y)|`.
pub fn output_type_distance(reference: &[f64], y_seq: &[usize]) -> Result<f64> {
    if y_seq.is_empty() {
        return Err(Error::InvalidParameter("type of an empty sequence"));
    }
    let mut counts = vec![0u64; reference.len()];
    for &y in y_seq {
        check_index("output", y, reference.len())?;
        counts[y] += 1;
    }
    let n = y_seq.len() as f64;
    Ok(counts
        .iter()
        .zip(reference)
        .map(|(&c, &r)| (c as f64 / n - r).abs())
        .fold(0.0, f64::max))
}

/// Typicality of a pilot output block against the pilot's output law
/// (`q_{x*}` for a symbol pilot, `Σ_x P*(x)·q_x` for a distribution pilot).
/// This is the test both ends of the link can run from `y^n` alone.
pub fn pilot_output_typical(channel: &AveragedDmc, pilot: &Pilot, y_seq: &[usize], eps: f64) -> Result<bool> {
    Ok(output_type_distance(&pilot.output_law(channel), y_seq)? <= eps + TYPICALITY_SLACK)
}

/// Joint typicality of `(x^n, y^n)` against `P(x)·q_x(y)` in max-norm.
pub fn joint_typical(
    channel: &AveragedDmc,
    p: &crate::capacity::InputDistribution,
    x_seq: &[usize],
    y_seq: &[usize],
    eps: f64,
) -> Result<bool> {
    let v = joint_type(channel.input_size(), channel.output_size(), x_seq, y_seq)?;
    let n = x_seq.len() as f64;
    let mut worst = 0.0f64;
    for x in 0..channel.input_size() {
        for y in 0..channel.output_size() {
            let expected = p.probs().get(x).copied().unwrap_or(0.0) * channel.prob(x, y);
            worst = worst.max((v.count(x, y) as f64 / n - expected).abs());
        }
    }
    Ok(worst <= eps + TYPICALITY_SLACK)
}

/// `c(ε) = ε·|X||Y|·log2(n+1)/n + ε·log2|Y|`.
pub fn typicality_constant(input_size: usize, output_size: usize, n: usize, eps: f64) -> f64 {
    let n = n as f64;
    eps * (input_size * output_size) as f64 * log2(n + 1.0) / n + eps * log2(output_size as f64)
}

/// `(n·(H − c(ε)), n·(H + c(ε)))`: log2 bounds on the typical-set size, where `H`
/// is the entropy of the pilot's output law.
pub fn typical_size_bounds(channel: &AveragedDmc, pilot: &Pilot, n: usize, eps: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("pilot length must be positive"));
    }
    if eps < 0.0 {
        return Err(Error::InvalidParameter("eps must be nonnegative"));
    }
    pilot.check(channel)?;
    let h = entropy_of(&pilot.output_law(channel));
    let c = typicality_constant(channel.input_size(), channel.output_size(), n, eps);
    let n = n as f64;
    Ok((n * (h - c), n * (h + c)))
}

/// Lexicographic iterator over all sequences of `len` symbols from `0..alphabet`.
#[derive(Debug, Clone)]
pub struct AllSequences {
    alphabet: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for AllSequences {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.alphabet {
                break;
            }
            cur[i] = 0;
        }
        Some(out)
    }
}

pub fn all_sequences(alphabet: usize, len: usize) -> AllSequences {
    AllSequences {
        alphabet,
        current: (alphabet > 0).then(|| vec![0; len]),
    }
}

/// `alphabet^len`, rejected above the enumeration limit.
pub(crate) fn guard_enumeration(alphabet: usize, len: usize) -> Result<()> {
    let size = pow(alphabet as f64, len as f64);
    if size > ENUMERATION_LIMIT as f64 {
        return Err(Error::TooLargeToEnumerate {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Every typical output sequence for `x^n`, lexicographically sorted.
pub fn enumerate_typical_set(channel: &AveragedDmc, x_seq: &[usize], eps: f64) -> Result<Vec<Vec<usize>>> {
    guard_enumeration(channel.output_size(), x_seq.len())?;
    let mut members = Vec::new();
    for y in all_sequences(channel.output_size(), x_seq.len()) {
        if typical_membership(channel, x_seq, &y, eps)? {
            members.push(y);
        }
    }
    Ok(members)
}

/// Every output block typical for a pilot, lexicographically sorted.
pub fn enumerate_pilot_typical_set(channel: &AveragedDmc, pilot: &Pilot, n: usize, eps: f64) -> Result<Vec<Vec<usize>>> {
    guard_enumeration(channel.output_size(), n)?;
    pilot.check(channel)?;
    let law = pilot.output_law(channel);
    let mut members = Vec::new();
    for y in all_sequences(channel.output_size(), n) {
        if output_type_distance(&law, &y)? <= eps + TYPICALITY_SLACK {
            members.push(y);
        }
    }
    Ok(members)
}
