use alloc::vec;
use alloc::vec::Vec;

use libm::pow;
use num_bigint::BigUint;

use crate::channel::{AveragedDmc, StateDmc};
use crate::coding::{IdFeedbackCode, Pilot};
use crate::estimation::DistortionProfile;
use crate::typicality::all_sequences;
use crate::{Error, Result, ENUMERATION_LIMIT};

/// Exact acceptance probability of one `(i, i')` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPair {
    pub sent: BigUint,
    pub tested: BigUint,
    pub accept_probability: f64,
}

impl ExactPair {
    /// `λ₁` contribution for `i = i'`, `λ₂` contribution otherwise.
    pub fn error_probability(&self) -> f64 {
        if self.sent == self.tested {
            1.0 - self.accept_probability
        } else {
            self.accept_probability
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactReport {
    pub pairs: Vec<ExactPair>,
    /// Max over the `i = i'` pairs, 0 if none were given.
    pub lambda1: f64,
    /// Max over the `i ≠ i'` pairs, 0 if none were given.
    pub lambda2: f64,
}

fn check_guard(code: &IdFeedbackCode, ch: &StateDmc) -> Result<()> {
    let y = ch.output_size() as f64;
    let mut size = pow(y, code.blocklength() as f64);
    if code.mode() == crate::capacity::Mode::Randomized {
        size *= pow(ch.input_size() as f64, code.pilot_length() as f64);
    }
    if size > ENUMERATION_LIMIT as f64 {
        return Err(Error::TooLargeToEnumerate {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

fn sequence_prob(channel: &AveragedDmc, x: &[usize], y: &[usize]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| channel.prob(a, b)).product()
}

/// `P(y^n)` of a pilot block, summed over the pilot input sequences it could come from.
fn pilot_probability(channel: &AveragedDmc, pilot: &Pilot, y: &[usize]) -> f64 {
    match pilot {
        Pilot::Symbol(x) => y.iter().map(|&b| channel.prob(*x, b)).product(),
        Pilot::Distribution(p) => {
            let probs = p.probs();
            all_sequences(channel.input_size(), y.len())
                .map(|x| {
                    let px: f64 = x.iter().map(|&a| probs[a]).product();
                    if px == 0.0 {
                        0.0
                    } else {
                        px * sequence_prob(channel, &x, y)
                    }
                })
                .sum()
        }
    }
}

/// Exact `λ₁`, `λ₂` by enumerating every output block (and, in randomized mode, every
/// pilot input block). The state is marginalized letterwise through the averaged channel.
pub fn exact_error_probabilities(
    code: &IdFeedbackCode,
    ch: &StateDmc,
    pairs: &[(BigUint, BigUint)],
) -> Result<ExactReport> {
    check_guard(code, ch)?;
    for (i, j) in pairs {
        code.check_identity(i)?;
        code.check_identity(j)?;
    }
    let channel = ch.averaged();
    let inner = code.inner();
    let colors = code.colors();
    let messages = inner.messages();
    // confusion[j][l] = Pr{decode = l | u_j sent}
    let mut confusion = vec![vec![0.0; messages]; messages];
    for y in all_sequences(channel.output_size(), inner.blocklength()) {
        let l = inner.decode(&y)?;
        for (j, row) in confusion.iter_mut().enumerate() {
            row[l] += sequence_prob(channel, inner.codeword(j), &y);
        }
    }
    let mut accept = vec![0.0; pairs.len()];
    for y in all_sequences(channel.output_size(), code.pilot_length()) {
        if !code.pilot_typical(&y)? {
            continue;
        }
        let p = pilot_probability(channel, code.pilot(), &y);
        if p == 0.0 {
            continue;
        }
        for ((i, j), acc) in pairs.iter().zip(accept.iter_mut()) {
            let sent = code.color(i, &y);
            let tested = code.color(j, &y);
            debug_assert!(sent < colors && tested < colors);
            *acc += p * confusion[sent][tested];
        }
    }
    let pairs: Vec<ExactPair> = pairs
        .iter()
        .zip(accept)
        .map(|((i, j), a)| ExactPair {
            sent: i.clone(),
            tested: j.clone(),
            accept_probability: a,
        })
        .collect();
    let max_of = |same: bool| {
        pairs
            .iter()
            .filter(|p| (p.sent == p.tested) == same)
            .map(ExactPair::error_probability)
            .fold(0.0, f64::max)
    };
    Ok(ExactReport {
        lambda1: max_of(true),
        lambda2: max_of(false),
        pairs,
    })
}

/// Exact `d_t = E[d(S_t, h*(X_t, Y_t))]` for `t = 1..m` when `sent` is transmitted.
/// Because `S_t` is independent of `X_t`, this is `E[d*(X_t)]`.
pub fn exact_distortion(
    code: &IdFeedbackCode,
    ch: &StateDmc,
    profile: &DistortionProfile,
    sent: &BigUint,
) -> Result<Vec<f64>> {
    check_guard(code, ch)?;
    code.check_identity(sent)?;
    let n = code.pilot_length();
    let pilot = code.pilot().distortion(profile)?;
    let mut out = vec![pilot; n];
    let mut inner = vec![0.0; code.blocklength() - n];
    let channel = ch.averaged();
    for y in all_sequences(channel.output_size(), n) {
        let p = pilot_probability(channel, code.pilot(), &y);
        let j = code.commitment(sent, &y)?.message();
        for (acc, &x) in inner.iter_mut().zip(code.inner().codeword(j)) {
            *acc += p * profile.get(x);
        }
    }
    out.extend(inner);
    Ok(out)
}
