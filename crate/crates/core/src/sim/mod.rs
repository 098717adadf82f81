//! Monte Carlo measurement of λ₁, λ₂ and per-symbol sensing distortion, plus the
//! exhaustive oracles the estimates are checked against.
//!
//! Each trial runs the full closed loop: draw `s_t`, emit `x_t`, draw `y_t`, feed it
//! back, estimate `ŝ_t = h*(x_t, y_t)`. After `m` steps the receiver tests `i'`.
//! Trial `k` of pair `(i, i')` draws from its own stream keyed by `(seed, i, i', k)`,
//! so pairs can be simulated in any order or in parallel and reduced afterwards.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use num_bigint::BigUint;
use rand::Rng;

use crate::channel::StateDmc;
use crate::coding::{IdFeedbackCode, Verdict};
use crate::estimation::SensingModel;
use crate::rng::{derive_stream, derive_stream_bytes};
use crate::{Error, Result};

mod exact;
mod oracles;

pub use exact::{exact_distortion, exact_error_probabilities, ExactPair, ExactReport};
pub use oracles::{brute_force_estimator_distortion, grid_capacity_oracle, BruteForceEstimator};

/// Smallest trial count [`monte_carlo`] accepts per pair.
pub const MIN_TRIALS: usize = 100;

/// Largest `N` for which [`IdentitySample::All`] tests every ordered pair.
pub const ALL_PAIRS_LIMIT: u32 = 16;

/// Identities tested by [`IdentitySample::Random`].
pub const SAMPLED_IDENTITIES: usize = 8;

/// One closed-loop block.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub sent: BigUint,
    pub tested: BigUint,
    pub verdict: Verdict,
    /// `d(s_t, ŝ_t)` for `t = 1..m`.
    pub distortions: Vec<f64>,
    pub pilot_typical: bool,
    pub inputs: Vec<usize>,
    pub states: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// Simulates one block sending `sent` and testing `tested`.
pub fn run_trial<R: Rng + ?Sized>(
    code: &IdFeedbackCode,
    ch: &StateDmc,
    sensing: &SensingModel,
    sent: &BigUint,
    tested: &BigUint,
    rng: &mut R,
) -> Result<TrialOutcome> {
    code.check_identity(tested)?;
    let m = code.blocklength();
    let mut state = code.encoder(sent.clone())?;
    let mut inputs = Vec::with_capacity(m);
    let mut states = Vec::with_capacity(m);
    let mut outputs = Vec::with_capacity(m);
    let mut distortions = Vec::with_capacity(m);
    for _ in 0..m {
        let s = ch.sample_state(rng);
        let x = code.encode_step(&mut state, rng)?;
        let y = ch.transmit(x, s, rng)?;
        code.feedback_update(&mut state, y);
        let s_hat = sensing.estimator.get(x, y);
        distortions.push(sensing.distortion.get(s, s_hat));
        inputs.push(x);
        states.push(s);
        outputs.push(y);
    }
    let pilot_typical = code.pilot_typical(&outputs[..code.pilot_length()])?;
    let verdict = code.verify(tested, &outputs)?;
    Ok(TrialOutcome {
        sent: sent.clone(),
        tested: tested.clone(),
        verdict,
        distortions,
        pilot_typical,
        inputs,
        states,
        outputs,
    })
}

/// Which identities a Monte Carlo run tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IdentitySample {
    /// Every ordered pair; only for `N ≤ 16`.
    All,
    /// Eight seeded identities: their eight `(i, i)` pairs and sixteen `i ≠ i'` pairs.
    Random,
}

/// Uniform draw from `1..=n`.
fn random_identity<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> BigUint {
    let bits = n.bits();
    let words = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (words as u64 - 1);
    let mask = if top_bits == 32 { u32::MAX } else { (1u32 << top_bits) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
        digits[words - 1] &= mask;
        let candidate = BigUint::new(digits);
        if candidate < *n {
            return candidate + 1u32;
        }
    }
}

/// Ordered `(sent, tested)` pairs, first the `i = i'` pairs then the `i ≠ i'` pairs.
pub fn identity_pairs(identities: &BigUint, sample: IdentitySample, seed: u64) -> Result<Vec<(BigUint, BigUint)>> {
    if *identities < BigUint::from(2u32) {
        return Err(Error::DegenerateCode);
    }
    let ids: Vec<BigUint> = match sample {
        IdentitySample::All => {
            if *identities > BigUint::from(ALL_PAIRS_LIMIT) {
                return Err(Error::InvalidParameter("all-pairs sampling needs N <= 16"));
            }
            let n = identities.to_u32_digits()[0];
            (1..=n).map(BigUint::from).collect()
        }
        IdentitySample::Random => {
            if *identities <= BigUint::from(SAMPLED_IDENTITIES) {
                let n = identities.to_u32_digits()[0];
                (1..=n).map(BigUint::from).collect()
            } else {
                let mut rng = derive_stream("identity-sample", seed, &[]);
                let mut ids: Vec<BigUint> = Vec::with_capacity(SAMPLED_IDENTITIES);
                while ids.len() < SAMPLED_IDENTITIES {
                    let id = random_identity(identities, &mut rng);
                    if !ids.contains(&id) {
                        ids.push(id);
                    }
                }
                ids
            }
        }
    };
    let mut pairs: Vec<(BigUint, BigUint)> = ids.iter().map(|i| (i.clone(), i.clone())).collect();
    match sample {
        IdentitySample::All => {
            for i in &ids {
                for j in &ids {
                    if i != j {
                        pairs.push((i.clone(), j.clone()));
                    }
                }
            }
        }
        IdentitySample::Random => {
            let k = ids.len();
            let mut offsets = vec![1, 3];
            if k <= 3 {
                offsets = (1..k).collect();
            }
            for &offset in &offsets {
                for a in 0..k {
                    pairs.push((ids[a].clone(), ids[(a + offset) % k].clone()));
                }
            }
        }
    }
    Ok(pairs)
}

/// Accumulated outcomes of the trials of one `(i, i')` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub sent: BigUint,
    pub tested: BigUint,
    pub trials: usize,
    pub accepts: usize,
    pub typical_pilots: usize,
    /// Per-index sums of `d(s_t, ŝ_t)` and of its square.
    pub distortion_sum: Vec<f64>,
    pub distortion_sq_sum: Vec<f64>,
    /// Sum and squared sum of each trial's time-averaged distortion.
    pub average_sum: f64,
    pub average_sq_sum: f64,
}

impl PairStats {
    fn new(sent: BigUint, tested: BigUint, m: usize) -> Self {
        Self {
            sent,
            tested,
            trials: 0,
            accepts: 0,
            typical_pilots: 0,
            distortion_sum: vec![0.0; m],
            distortion_sq_sum: vec![0.0; m],
            average_sum: 0.0,
            average_sq_sum: 0.0,
        }
    }

    fn push(&mut self, outcome: &TrialOutcome) {
        self.trials += 1;
        self.accepts += usize::from(outcome.verdict == Verdict::Accept);
        self.typical_pilots += usize::from(outcome.pilot_typical);
        for (t, &d) in outcome.distortions.iter().enumerate() {
            self.distortion_sum[t] += d;
            self.distortion_sq_sum[t] += d * d;
        }
        let avg = outcome.distortions.iter().sum::<f64>() / outcome.distortions.len() as f64;
        self.average_sum += avg;
        self.average_sq_sum += avg * avg;
    }

    pub fn accept_rate(&self) -> f64 {
        self.accepts as f64 / self.trials as f64
    }

    /// Error rate: rejection rate when `i = i'`, acceptance rate otherwise.
    pub fn error_rate(&self) -> f64 {
        if self.sent == self.tested {
            1.0 - self.accept_rate()
        } else {
            self.accept_rate()
        }
    }

    pub fn stderr(&self) -> f64 {
        proportion_stderr(self.accept_rate(), self.trials)
    }
}

fn proportion_stderr(p: f64, trials: usize) -> f64 {
    sqrt(p * (1.0 - p) / trials as f64)
}

/// Standard error of a mean from its sum and squared sum (unbiased variance).
fn mean_stderr(sum: f64, sq_sum: f64, count: usize) -> f64 {
    if count < 2 {
        return 0.0;
    }
    let c = count as f64;
    let mean = sum / c;
    let var = ((sq_sum - c * mean * mean) / (c - 1.0)).max(0.0);
    sqrt(var / c)
}

/// Runs `trials` blocks for one pair. Each trial uses its own derived stream.
pub fn simulate_pair(
    code: &IdFeedbackCode,
    ch: &StateDmc,
    sensing: &SensingModel,
    sent: &BigUint,
    tested: &BigUint,
    trials: usize,
    seed: u64,
) -> Result<PairStats> {
    let mut stats = PairStats::new(sent.clone(), tested.clone(), code.blocklength());
    let (a, b) = (sent.to_bytes_le(), tested.to_bytes_le());
    for k in 0..trials as u64 {
        let mut rng = derive_stream_bytes("trial", seed, &[&a, &b, &k.to_le_bytes()]);
        let outcome = run_trial(code, ch, sensing, sent, tested, &mut rng)?;
        stats.push(&outcome);
    }
    Ok(stats)
}

/// Acceptance statistics of one pair, as reported.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairReport {
    pub i: String,
    pub iprime: String,
    pub trials: usize,
    pub accept_rate: f64,
    pub stderr: f64,
}

/// Mean time-averaged distortion seen when sending one identity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityDistortion {
    pub identity: String,
    pub trials: usize,
    pub d_bar_hat: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub trials_per_pair: usize,
    pub pairs: Vec<PairReport>,
    /// Largest rejection rate over the tested `i = i'` pairs.
    pub lambda1_hat: f64,
    pub lambda1_stderr: f64,
    pub lambda1_mean: f64,
    /// Largest acceptance rate over the tested `i ≠ i'` pairs.
    pub lambda2_hat: f64,
    pub lambda2_stderr: f64,
    pub lambda2_mean: f64,
    /// Pooled over every trial of every pair.
    pub d_t_hat: Vec<f64>,
    pub d_t_stderr: Vec<f64>,
    pub d_bar_hat: f64,
    pub d_bar_stderr: f64,
    pub per_identity: Vec<IdentityDistortion>,
    pub pilot_typical_rate: f64,
}

impl SimReport {
    /// Reduces pair statistics in the given order.
    pub fn from_pairs(stats: &[PairStats]) -> Result<Self> {
        let first = stats.first().ok_or(Error::InvalidParameter("no identity pairs simulated"))?;
        let m = first.distortion_sum.len();
        let mut lambda1 = Extremum::default();
        let mut lambda2 = Extremum::default();
        let mut sum = vec![0.0; m];
        let mut sq_sum = vec![0.0; m];
        let (mut avg_sum, mut avg_sq_sum, mut total, mut typical) = (0.0, 0.0, 0usize, 0usize);
        let mut per_identity: Vec<(BigUint, usize, f64, f64)> = Vec::new();
        for s in stats {
            if s.distortion_sum.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "distortion vector",
                    expected: m,
                    found: s.distortion_sum.len(),
                });
            }
            if s.sent == s.tested {
                lambda1.push(s.error_rate(), s.stderr());
            } else {
                lambda2.push(s.error_rate(), s.stderr());
            }
            for t in 0..m {
                sum[t] += s.distortion_sum[t];
                sq_sum[t] += s.distortion_sq_sum[t];
            }
            avg_sum += s.average_sum;
            avg_sq_sum += s.average_sq_sum;
            total += s.trials;
            typical += s.typical_pilots;
            match per_identity.iter_mut().find(|e| e.0 == s.sent) {
                Some(e) => {
                    e.1 += s.trials;
                    e.2 += s.average_sum;
                    e.3 += s.average_sq_sum;
                }
                None => per_identity.push((s.sent.clone(), s.trials, s.average_sum, s.average_sq_sum)),
            }
        }
        let d_t_hat: Vec<f64> = sum.iter().map(|&x| x / total as f64).collect();
        let d_t_stderr = (0..m).map(|t| mean_stderr(sum[t], sq_sum[t], total)).collect();
        let d_bar_hat = d_t_hat.iter().sum::<f64>() / m as f64;
        Ok(Self {
            trials_per_pair: first.trials,
            pairs: stats
                .iter()
                .map(|s| PairReport {
                    i: s.sent.to_str_radix(10),
                    iprime: s.tested.to_str_radix(10),
                    trials: s.trials,
                    accept_rate: s.accept_rate(),
                    stderr: s.stderr(),
                })
                .collect(),
            lambda1_hat: lambda1.max,
            lambda1_stderr: lambda1.stderr,
            lambda1_mean: lambda1.mean(),
            lambda2_hat: lambda2.max,
            lambda2_stderr: lambda2.stderr,
            lambda2_mean: lambda2.mean(),
            d_t_hat,
            d_t_stderr,
            d_bar_hat,
            d_bar_stderr: mean_stderr(avg_sum, avg_sq_sum, total),
            per_identity: per_identity
                .into_iter()
                .map(|(id, n, s, sq)| IdentityDistortion {
                    identity: id.to_str_radix(10),
                    trials: n,
                    d_bar_hat: s / n as f64,
                    stderr: mean_stderr(s, sq, n),
                })
                .collect(),
            pilot_typical_rate: typical as f64 / total as f64,
        })
    }

    /// Largest per-index distortion estimate.
    pub fn max_d_t(&self) -> f64 {
        self.d_t_hat.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct Extremum {
    max: f64,
    stderr: f64,
    sum: f64,
    count: usize,
}

impl Extremum {
    fn push(&mut self, rate: f64, stderr: f64) {
        if self.count == 0 || rate > self.max {
            self.max = rate;
            self.stderr = stderr;
        }
        self.sum += rate;
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Simulates every selected pair sequentially and reduces in pair order.
pub fn monte_carlo(
    code: &IdFeedbackCode,
    ch: &StateDmc,
    sensing: &SensingModel,
    trials_per_pair: usize,
    sample: IdentitySample,
    seed: u64,
) -> Result<SimReport> {
    if trials_per_pair < MIN_TRIALS {
        return Err(Error::InvalidParameter("at least 100 trials per pair are required"));
    }
    let stats = identity_pairs(code.identities(), sample, seed)?
        .iter()
        .map(|(i, j)| simulate_pair(code, ch, sensing, i, j, trials_per_pair, seed))
        .collect::<Result<Vec<_>>>()?;
    SimReport::from_pairs(&stats)
}
