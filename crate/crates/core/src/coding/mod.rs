//! The concatenated feedback identification code.
//!
//! A block has length `m = n + ⌈√n⌉`:
//!
//! 1. **Pilot** (`t = 1..n`): the sender transmits `x*` (deterministic mode) or fresh
//!    draws from `P*` (randomized mode). The outputs come back over the noiseless
//!    feedback link, so both ends now hold the same `y^n`.
//! 2. **Commit** (`t = n + 1`): if `y^n` is typical the sender picks the color
//!    `j = F_i(y^n)`; otherwise the block is already lost and codeword `u_0` is sent
//!    as filler.
//! 3. **Inner block** (`t = n+1..m`): codeword `u_j` of the inner transmission code.
//!
//! The receiver testing identity `i'` accepts iff `y^n` is typical and the inner
//! decoder returns `F_{i'}(y^n)`.

use alloc::vec::Vec;

use libm::{ceil, sqrt};
use num_bigint::BigUint;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::capacity::{
    det_capacity_distortion, rand_capacity_distortion, InputDistribution, Maximizer, Mode,
};
use crate::channel::{check_index, AveragedDmc, StateDmc};
use crate::estimation::DistortionProfile;
use crate::rng::derive_stream;
use crate::typicality::pilot_output_typical;
use crate::{Error, Result, FEASIBILITY_SLACK};

mod coloring;
mod transmission;

pub use coloring::coloring;
pub use transmission::{build_transmission_code, TransmissionCode};

/// Weights below this are dropped from a randomized pilot.
const PILOT_WEIGHT_FLOOR: f64 = 1e-9;

/// What the sender transmits during the pilot block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Pilot {
    Symbol(usize),
    Distribution(InputDistribution),
}

impl Pilot {
    /// Law of one pilot output: `q_{x*}` or `Σ_x P*(x)·q_x`.
    pub fn output_law(&self, channel: &AveragedDmc) -> Vec<f64> {
        match self {
            Pilot::Symbol(x) => channel.row(*x).to_vec(),
            Pilot::Distribution(p) => channel.mix(p.probs()),
        }
    }

    /// Inputs the pilot can emit.
    pub fn support(&self) -> Vec<usize> {
        match self {
            Pilot::Symbol(x) => alloc::vec![*x],
            Pilot::Distribution(p) => p.support(),
        }
    }

    pub fn check(&self, channel: &AveragedDmc) -> Result<()> {
        match self {
            Pilot::Symbol(x) => check_index("input", *x, channel.input_size()),
            Pilot::Distribution(p) if p.len() != channel.input_size() => Err(Error::DimensionMismatch {
                what: "pilot distribution",
                expected: channel.input_size(),
                found: p.len(),
            }),
            Pilot::Distribution(_) => Ok(()),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Pilot::Symbol(_) => Mode::Deterministic,
            Pilot::Distribution(_) => Mode::Randomized,
        }
    }

    /// Expected per-symbol distortion `d*(x*)` or `d*(P*)`.
    pub fn distortion(&self, profile: &DistortionProfile) -> Result<f64> {
        match self {
            Pilot::Symbol(x) => {
                check_index("input", *x, profile.len())?;
                Ok(profile.get(*x))
            }
            Pilot::Distribution(p) => profile.for_distribution(p),
        }
    }
}

/// The capacity-achieving pilot for budget `D`: the best feasible symbol, or the
/// maximizing distribution over `P_D`.
pub fn select_pilot(
    channel: &AveragedDmc,
    profile: &DistortionProfile,
    budget: f64,
    mode: Mode,
    tol: f64,
) -> Result<Pilot> {
    match mode {
        Mode::Deterministic => match det_capacity_distortion(channel, profile, budget)?.maximizer {
            Maximizer::Symbol(x) => Ok(Pilot::Symbol(x)),
            Maximizer::Distribution(_) => unreachable!("deterministic maximizer is a symbol"),
        },
        Mode::Randomized => {
            let Maximizer::Distribution(p) = rand_capacity_distortion(channel, profile, budget, tol)?.maximizer
            else {
                unreachable!("randomized maximizer is a distribution")
            };
            let pruned: Vec<f64> = p
                .probs()
                .iter()
                .map(|&w| if w < PILOT_WEIGHT_FLOOR { 0.0 } else { w })
                .collect();
            let total: f64 = pruned.iter().sum();
            let pruned = InputDistribution::new(pruned.into_iter().map(|w| w / total).collect())?;
            if profile.admits(&pruned, budget)? {
                Ok(Pilot::Distribution(pruned))
            } else {
                Ok(Pilot::Distribution(p))
            }
        }
    }
}

/// Construction parameters of an [`IdFeedbackCode`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdCodeParams {
    /// Pilot length `n`.
    pub n: usize,
    /// Identity count `N`.
    pub identities: BigUint,
    /// Color count `M`, the number of inner messages.
    pub colors: usize,
    /// Typicality radius.
    pub eps: f64,
    pub mode: Mode,
    pub master_seed: u64,
    /// Solver tolerance for the randomized pilot.
    pub tol: f64,
}

impl IdCodeParams {
    pub fn new(n: usize, identities: impl Into<BigUint>, colors: usize, eps: f64, mode: Mode, master_seed: u64) -> Self {
        Self {
            n,
            identities: identities.into(),
            colors,
            eps,
            mode,
            master_seed,
            tol: crate::capacity::DEFAULT_TOLERANCE,
        }
    }
}

/// `⌈√n⌉`.
pub fn inner_length(n: usize) -> usize {
    ceil(sqrt(n as f64)) as usize
}

/// Replayable description of a code.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodeDescriptor {
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    /// Identity count in decimal.
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub identities: alloc::string::String,
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub colors: usize,
    pub eps: f64,
    pub pilot: Pilot,
    pub seed: u64,
    pub codewords: Vec<Vec<usize>>,
}

/// A feedback ID code for a state-dependent channel. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct IdFeedbackCode {
    n: usize,
    m: usize,
    pilot: Pilot,
    identities: BigUint,
    colors: usize,
    eps: f64,
    master_seed: u64,
    inner: TransmissionCode,
    channel: AveragedDmc,
    pilot_sampler: Option<WeightedIndex<f64>>,
}

/// Builds the code for budget `D`. The inner code uses the feasible inputs `X_D`
/// (deterministic mode) or the feasible inputs in the support of `P*` (randomized mode).
pub fn build_id_code(
    ch: &StateDmc,
    profile: &DistortionProfile,
    budget: f64,
    params: &IdCodeParams,
) -> Result<IdFeedbackCode> {
    let channel = ch.averaged();
    profile.require_feasible(budget)?;
    let pilot = select_pilot(channel, profile, budget, params.mode, params.tol)?;
    let feasible = profile.feasible_inputs(budget);
    let allowed: Vec<usize> = match &pilot {
        Pilot::Symbol(_) => feasible,
        Pilot::Distribution(p) => p.support().into_iter().filter(|x| feasible.contains(x)).collect(),
    };
    if allowed.is_empty() {
        return Err(Error::ZeroCapacityChannel);
    }
    let mut rng = derive_stream("inner-code", params.master_seed, &[]);
    let inner = build_transmission_code(channel, inner_length(params.n), params.colors, &allowed, &mut rng)?;
    IdFeedbackCode::from_parts(channel.clone(), pilot, params, inner)
}

impl IdFeedbackCode {
    /// Assembles a code from an explicit inner code, checking the structural invariants.
    pub fn from_parts(
        channel: AveragedDmc,
        pilot: Pilot,
        params: &IdCodeParams,
        inner: TransmissionCode,
    ) -> Result<Self> {
        if params.identities < BigUint::from(2u32) {
            return Err(Error::DegenerateCode);
        }
        if params.n == 0 {
            return Err(Error::InvalidParameter("pilot length must be positive"));
        }
        if !(params.eps >= 0.0) {
            return Err(Error::InvalidParameter("eps must be nonnegative"));
        }
        pilot.check(&channel)?;
        if pilot.mode() != params.mode {
            return Err(Error::InvalidParameter("pilot does not match the code mode"));
        }
        let k = inner_length(params.n);
        if inner.blocklength() != k {
            return Err(Error::DimensionMismatch {
                what: "inner code length",
                expected: k,
                found: inner.blocklength(),
            });
        }
        if params.colors < 2 || params.colors > inner.messages() {
            return Err(Error::InvalidParameter("color count must lie in 2..=inner messages"));
        }
        let pilot_sampler = match &pilot {
            Pilot::Symbol(_) => None,
            Pilot::Distribution(p) => Some(
                WeightedIndex::new(p.probs()).map_err(|_| Error::NotADistribution {
                    sum: p.probs().iter().sum(),
                })?,
            ),
        };
        Ok(Self {
            n: params.n,
            m: params.n + k,
            pilot,
            identities: params.identities.clone(),
            colors: params.colors,
            eps: params.eps,
            master_seed: params.master_seed,
            inner,
            channel,
            pilot_sampler,
        })
    }

    /// Rebuilds a code from its descriptor and channel.
    pub fn from_descriptor(ch: &StateDmc, desc: &CodeDescriptor) -> Result<Self> {
        let identities = BigUint::parse_bytes(desc.identities.as_bytes(), 10)
            .ok_or(Error::InvalidParameter("identity count is not a decimal integer"))?;
        let params = IdCodeParams {
            n: desc.n,
            identities,
            colors: desc.colors,
            eps: desc.eps,
            mode: desc.mode,
            master_seed: desc.seed,
            tol: crate::capacity::DEFAULT_TOLERANCE,
        };
        let mut rng = derive_stream("inner-code-errors", desc.seed, &[]);
        let inner = TransmissionCode::from_codewords(ch.averaged(), desc.codewords.clone(), &mut rng)?;
        let code = Self::from_parts(ch.averaged().clone(), desc.pilot.clone(), &params, inner)?;
        if code.m != desc.m {
            return Err(Error::DimensionMismatch {
                what: "blocklength",
                expected: code.m,
                found: desc.m,
            });
        }
        Ok(code)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            mode: self.mode(),
            n: self.n,
            m: self.m,
            identities: self.identities.to_str_radix(10),
            colors: self.colors,
            eps: self.eps,
            pilot: self.pilot.clone(),
            seed: self.master_seed,
            codewords: self.inner.codewords().to_vec(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.pilot.mode()
    }

    pub fn pilot_length(&self) -> usize {
        self.n
    }

    pub fn blocklength(&self) -> usize {
        self.m
    }

    pub fn pilot(&self) -> &Pilot {
        &self.pilot
    }

    pub fn identities(&self) -> &BigUint {
        &self.identities
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn inner(&self) -> &TransmissionCode {
        &self.inner
    }

    pub fn channel(&self) -> &AveragedDmc {
        &self.channel
    }

    /// ID rate `log2 log2 N / m`.
    pub fn rate(&self) -> f64 {
        crate::capacity::rate_of_code(&self.identities, self.m).expect("N ≥ 2 and m ≥ 1 by construction")
    }

    pub fn check_identity(&self, identity: &BigUint) -> Result<()> {
        if *identity >= BigUint::from(1u32) && *identity <= self.identities {
            Ok(())
        } else {
            Err(Error::InvalidParameter("identity outside 1..=N"))
        }
    }

    /// Whether a pilot output block is typical.
    pub fn pilot_typical(&self, y_pilot: &[usize]) -> Result<bool> {
        if y_pilot.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: y_pilot.len(),
            });
        }
        pilot_output_typical(&self.channel, &self.pilot, y_pilot, self.eps)
    }

    /// `F_i(y^n)`.
    pub fn color(&self, identity: &BigUint, y_pilot: &[usize]) -> usize {
        coloring(self.master_seed, identity, y_pilot, self.colors)
    }

    /// The inner message the sender of `identity` commits to after `y^n`.
    pub fn commitment(&self, identity: &BigUint, y_pilot: &[usize]) -> Result<Commitment> {
        Ok(if self.pilot_typical(y_pilot)? {
            Commitment::Color(self.color(identity, y_pilot))
        } else {
            Commitment::Abort
        })
    }

    /// Fresh encoder for `identity` at `t = 1`.
    pub fn encoder(&self, identity: BigUint) -> Result<EncoderState> {
        self.check_identity(&identity)?;
        Ok(EncoderState {
            identity,
            t: 1,
            history: Vec::with_capacity(self.n),
            commitment: None,
        })
    }

    /// Emits `x_t` and advances the encoder to `t + 1`.
    pub fn encode_step<R: Rng + ?Sized>(&self, state: &mut EncoderState, rng: &mut R) -> Result<usize> {
        if state.t > self.m {
            return Err(Error::OutOfTime { t: state.t, m: self.m });
        }
        let symbol = if state.t <= self.n {
            match (&self.pilot, &self.pilot_sampler) {
                (Pilot::Symbol(x), _) => *x,
                (Pilot::Distribution(_), Some(sampler)) => sampler.sample(rng),
                (Pilot::Distribution(_), None) => unreachable!("distribution pilots carry a sampler"),
            }
        } else {
            if state.commitment.is_none() {
                if state.history.len() != self.n {
                    return Err(Error::InvalidParameter("pilot feedback incomplete at commit time"));
                }
                state.commitment = Some(self.commitment(&state.identity, &state.history)?);
            }
            let j = state.commitment.expect("set above").message();
            self.inner.codeword(j)[state.t - self.n - 1]
        };
        state.t += 1;
        Ok(symbol)
    }

    /// Records the fed-back output `y_t`; only the pilot block is retained.
    pub fn feedback_update(&self, state: &mut EncoderState, y: usize) {
        if state.history.len() < self.n && state.t - 1 <= self.n {
            state.history.push(y);
        }
    }

    /// Receiver test for identity `i'` on a full output block.
    pub fn verify(&self, identity: &BigUint, y_full: &[usize]) -> Result<Verdict> {
        if y_full.len() != self.m {
            return Err(Error::LengthMismatch {
                left: self.m,
                right: y_full.len(),
            });
        }
        let (pilot, rest) = y_full.split_at(self.n);
        if !self.pilot_typical(pilot)? {
            return Ok(Verdict::Reject);
        }
        let decoded = self.inner.decode(rest)?;
        Ok(if decoded == self.color(identity, pilot) {
            Verdict::Accept
        } else {
            Verdict::Reject
        })
    }

    /// Pilot distortion `d*(x*)` / `d*(P*)` and the worst inner-codeword symbol distortion.
    pub fn distortion_envelope(&self, profile: &DistortionProfile) -> Result<(f64, f64)> {
        let pilot = self.pilot.distortion(profile)?;
        let inner = self
            .inner
            .codewords()
            .iter()
            .flatten()
            .map(|&x| profile.get(x))
            .fold(0.0, f64::max);
        Ok((pilot, inner))
    }

    /// Whether every transmitted symbol meets the per-symbol budget in expectation.
    pub fn meets_budget(&self, profile: &DistortionProfile, budget: f64) -> Result<bool> {
        let (pilot, inner) = self.distortion_envelope(profile)?;
        Ok(pilot <= budget + FEASIBILITY_SLACK && inner <= budget + FEASIBILITY_SLACK)
    }
}

/// Decision taken at `t = n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Commitment {
    Color(usize),
    /// Atypical pilot: the block is declared lost and `u_0` is sent as filler.
    Abort,
}

impl Commitment {
    pub fn message(self) -> usize {
        match self {
            Commitment::Color(j) => j,
            Commitment::Abort => 0,
        }
    }
}

/// Sender state for one block. Owned by a single task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderState {
    identity: BigUint,
    t: usize,
    history: Vec<usize>,
    commitment: Option<Commitment>,
}

impl EncoderState {
    pub fn identity(&self) -> &BigUint {
        &self.identity
    }

    /// Index of the next symbol to emit (1-based).
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn history(&self) -> &[usize] {
        &self.history
    }

    pub fn commitment(&self) -> Option<Commitment> {
        self.commitment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Accept,
    Reject,
}
