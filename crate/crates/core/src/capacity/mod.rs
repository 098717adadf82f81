//! Capacity expressions for identification over the averaged channel.
//!
//! | function | quantity |
//! |---|---|
//! | [`shannon_capacity`] | `C(W) = max_P I(X;Y)`, the randomized ID capacity without feedback |
//! | [`det_feedback_capacity`] | `max_x H(q_x)` |
//! | [`rand_feedback_capacity`] | `max_P H(Σ_x P(x)·q_x)` |
//! | [`det_capacity_distortion`] | `max_{x ∈ X_D} H(q_x)` |
//! | [`rand_capacity_distortion`] | `max_{P ∈ P_D} H(Σ_x P(x)·q_x)` |
//!
//! The feedback quantities are only defined when `C(W) > 0`; otherwise
//! [`Error::ZeroCapacityChannel`] is returned.

use alloc::vec;
use alloc::vec::Vec;

use libm::log2;
use num_bigint::BigUint;

use crate::channel::AveragedDmc;
use crate::estimation::DistortionProfile;
use crate::{Error, Result, DERIVED_TOLERANCE, FEASIBILITY_SLACK};

mod blahut;
mod bounds;
mod conditional_gradient;

pub use blahut::{capacity_exceeds, shannon_capacity};
pub use bounds::{image_size_bound, BoundParams, ImageSizeVariant};

/// Default solver tolerance in bits.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Below this Shannon capacity the channel counts as useless.
pub const ZERO_CAPACITY_THRESHOLD: f64 = 1e-9;

/// Relative tolerance for treating two entropies as tied.
const ARGMAX_TIE: f64 = 1e-12;

/// A probability vector over the input alphabet.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct InputDistribution(Vec<f64>);

impl InputDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_distribution(&p)?;
        Ok(Self(p))
    }

    pub fn point_mass(size: usize, x: usize) -> Result<Self> {
        crate::channel::check_index("input", x, size)?;
        let mut p = vec![0.0; size];
        p[x] = 1.0;
        Ok(Self(p))
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet("input"));
        }
        Ok(Self(vec![1.0 / size as f64; size]))
    }

    pub(crate) fn from_weights_unchecked(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inputs with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&x| self.0[x] > 0.0).collect()
    }
}

fn check_distribution(q: &[f64]) -> Result<()> {
    let sum: f64 = q.iter().sum();
    if q.is_empty() || q.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > DERIVED_TOLERANCE {
        return Err(Error::NotADistribution { sum });
    }
    Ok(())
}

/// What attains a capacity value.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Maximizer {
    Symbol(usize),
    Distribution(InputDistribution),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CapacityResult {
    /// Bits per channel use.
    pub value: f64,
    pub maximizer: Maximizer,
    /// Certified bound on the distance to the true optimum, in bits.
    pub optimality_gap: f64,
    pub iterations: usize,
}

/// Deterministic (single input per pilot symbol) or randomized (input distribution) schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    Deterministic,
    Randomized,
}

/// Shannon entropy in bits with `0·log 0 = 0`.
pub fn entropy(q: &[f64]) -> Result<f64> {
    check_distribution(q)?;
    Ok(entropy_of(q))
}

pub(crate) fn entropy_of(q: &[f64]) -> f64 {
    q.iter().filter(|&&p| p > 0.0).map(|&p| -p * log2(p)).sum()
}

/// Lowest index whose value is within a relative tie tolerance of the maximum.
fn lowest_argmax(values: &[(usize, f64)]) -> (usize, f64) {
    let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let slack = ARGMAX_TIE * max.abs().max(1.0);
    let &(x, _) = values.iter().find(|v| v.1 >= max - slack).expect("nonempty candidate set");
    (x, max)
}

fn ensure_positive_capacity(channel: &AveragedDmc) -> Result<()> {
    if capacity_exceeds(channel, ZERO_CAPACITY_THRESHOLD) {
        Ok(())
    } else {
        Err(Error::ZeroCapacityChannel)
    }
}

fn best_row(channel: &AveragedDmc, inputs: &[usize]) -> CapacityResult {
    let values: Vec<_> = inputs.iter().map(|&x| (x, entropy_of(channel.row(x)))).collect();
    let (x, value) = lowest_argmax(&values);
    CapacityResult {
        value,
        maximizer: Maximizer::Symbol(x),
        optimality_gap: 0.0,
        iterations: 0,
    }
}

fn point_mass_vertices(size: usize, inputs: &[usize]) -> Vec<Vec<f64>> {
    inputs
        .iter()
        .map(|&x| {
            let mut v = vec![0.0; size];
            v[x] = 1.0;
            v
        })
        .collect()
}

/// Vertices of `{P : Σ_x P(x)·d*(x) ≤ D}`: feasible point masses and the two-point
/// mixtures that saturate the budget between a cheap and an expensive input.
fn budget_vertices(profile: &DistortionProfile, budget: f64) -> Vec<Vec<f64>> {
    let size = profile.len();
    let cheap = profile.feasible_inputs(budget);
    let mut vertices = point_mass_vertices(size, &cheap);
    for &x in &cheap {
        for costly in 0..size {
            let (lo, hi) = (profile.get(x), profile.get(costly));
            if hi <= budget + FEASIBILITY_SLACK || lo >= budget {
                continue;
            }
            let theta = (budget - lo) / (hi - lo);
            let mut v = vec![0.0; size];
            v[x] = 1.0 - theta;
            v[costly] = theta;
            vertices.push(v);
        }
    }
    vertices
}

fn mixture_result(channel: &AveragedDmc, vertices: &[Vec<f64>], tol: f64) -> Result<CapacityResult> {
    let sol = conditional_gradient::maximize_mixture_entropy(channel, vertices, tol)?;
    Ok(CapacityResult {
        value: sol.value,
        maximizer: Maximizer::Distribution(InputDistribution::from_weights_unchecked(sol.weights)),
        optimality_gap: sol.gap,
        iterations: sol.iterations,
    })
}

/// Deterministic ID feedback capacity `max_x H(q_x)`.
pub fn det_feedback_capacity(channel: &AveragedDmc) -> Result<CapacityResult> {
    ensure_positive_capacity(channel)?;
    let inputs: Vec<usize> = (0..channel.input_size()).collect();
    Ok(best_row(channel, &inputs))
}

/// Randomized ID feedback capacity `max_P H(Σ_x P(x)·q_x)`, within `tol` bits.
pub fn rand_feedback_capacity(channel: &AveragedDmc, tol: f64) -> Result<CapacityResult> {
    ensure_positive_capacity(channel)?;
    let inputs: Vec<usize> = (0..channel.input_size()).collect();
    mixture_result(channel, &point_mass_vertices(channel.input_size(), &inputs), tol)
}

fn check_profile(channel: &AveragedDmc, profile: &DistortionProfile) -> Result<()> {
    if profile.len() == channel.input_size() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: "distortion profile",
            expected: channel.input_size(),
            found: profile.len(),
        })
    }
}

/// Deterministic ID capacity-distortion function `max_{x ∈ X_D} H(q_x)`.
pub fn det_capacity_distortion(
    channel: &AveragedDmc,
    profile: &DistortionProfile,
    budget: f64,
) -> Result<CapacityResult> {
    check_profile(channel, profile)?;
    profile.require_feasible(budget)?;
    ensure_positive_capacity(channel)?;
    Ok(best_row(channel, &profile.feasible_inputs(budget)))
}

/// Randomized ID capacity-distortion function `max_{P : d*(P) ≤ D} H(Σ_x P(x)·q_x)`.
pub fn rand_capacity_distortion(
    channel: &AveragedDmc,
    profile: &DistortionProfile,
    budget: f64,
    tol: f64,
) -> Result<CapacityResult> {
    check_profile(channel, profile)?;
    profile.require_feasible(budget)?;
    ensure_positive_capacity(channel)?;
    mixture_result(channel, &budget_vertices(profile, budget), tol)
}

/// One point of a capacity-distortion curve; `result` is `None` when the budget is infeasible.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub budget: f64,
    pub result: Option<CapacityResult>,
}

impl CurvePoint {
    pub fn value(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.value)
    }

    pub fn is_feasible(&self) -> bool {
        self.result.is_some()
    }
}

/// Evaluates the capacity-distortion function at each budget of an ascending grid.
/// Infeasible budgets are flagged, never interpolated.
pub fn tradeoff_curve(
    channel: &AveragedDmc,
    profile: &DistortionProfile,
    grid: &[f64],
    mode: Mode,
    tol: f64,
) -> Result<Vec<CurvePoint>> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("distortion grid must be ascending"));
    }
    check_profile(channel, profile)?;
    ensure_positive_capacity(channel)?;
    grid.iter()
        .map(|&budget| {
            if profile.require_feasible(budget).is_err() {
                return Ok(CurvePoint { budget, result: None });
            }
            let result = match mode {
                Mode::Deterministic => best_row(channel, &profile.feasible_inputs(budget)),
                Mode::Randomized => mixture_result(channel, &budget_vertices(profile, budget), tol)?,
            };
            Ok(CurvePoint {
                budget,
                result: Some(result),
            })
        })
        .collect()
}

pub(crate) fn max_row_entropy(channel: &AveragedDmc, inputs: &[usize]) -> f64 {
    best_row(channel, inputs).value
}

pub(crate) fn max_mixture_entropy(
    channel: &AveragedDmc,
    constraint: Option<(&DistortionProfile, f64)>,
    tol: f64,
) -> Result<f64> {
    let vertices = match constraint {
        Some((profile, budget)) => {
            profile.require_feasible(budget)?;
            budget_vertices(profile, budget)
        }
        None => {
            let inputs: Vec<usize> = (0..channel.input_size()).collect();
            point_mass_vertices(channel.input_size(), &inputs)
        }
    };
    Ok(conditional_gradient::maximize_mixture_entropy(channel, &vertices, tol)?.value)
}

/// `log2 N` for an arbitrarily large integer.
pub fn log2_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        let small = n.iter_u64_digits().next().unwrap_or(0);
        return log2(small as f64);
    }
    let shift = bits - 64;
    let top = (n >> shift).iter_u64_digits().next().unwrap_or(0);
    log2(top as f64) + shift as f64
}

/// ID rate `log2(log2 N) / m` of a code with `N` identities and blocklength `m`.
pub fn rate_of_code(identities: &BigUint, blocklength: usize) -> Result<f64> {
    if *identities < BigUint::from(2u32) {
        return Err(Error::DegenerateCode);
    }
    if blocklength == 0 {
        return Err(Error::InvalidParameter("blocklength must be positive"));
    }
    Ok(log2(log2_big(identities)) / blocklength as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fixtures::{flip_bsc, sensor};
    use crate::estimation::DistortionMatrix;

    fn sensor_profile() -> DistortionProfile {
        DistortionProfile::compute(&sensor(), &DistortionMatrix::hamming(2)).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((entropy(&[0.9, 0.1]).unwrap() - 0.468996).abs() < 1e-6);
        assert!(matches!(entropy(&[0.5, 0.4]), Err(Error::NotADistribution { .. })));
        assert!(matches!(entropy(&[1.5, -0.5]), Err(Error::NotADistribution { .. })));
    }

    #[test]
    fn deterministic_feedback_capacity_examples() {
        let flip = det_feedback_capacity(flip_bsc().averaged()).unwrap();
        assert!((flip.value - 0.468996).abs() < 1e-6);
        assert_eq!(flip.maximizer, Maximizer::Symbol(0));
        assert_eq!(flip.optimality_gap, 0.0);

        let s = det_feedback_capacity(sensor().averaged()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.maximizer, Maximizer::Symbol(0));

        let uniform = AveragedDmc::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(det_feedback_capacity(&uniform), Err(Error::ZeroCapacityChannel));
        assert_eq!(rand_feedback_capacity(&uniform, 1e-9), Err(Error::ZeroCapacityChannel));
    }

    #[test]
    fn randomized_feedback_capacity_examples() {
        let flip = rand_feedback_capacity(flip_bsc().averaged(), 1e-9).unwrap();
        assert!((flip.value - 1.0).abs() < 1e-9);
        let Maximizer::Distribution(p) = &flip.maximizer else { panic!() };
        assert!((p.probs()[0] - 0.5).abs() < 1e-4);

        let s = rand_feedback_capacity(sensor().averaged(), 1e-9).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let Maximizer::Distribution(p) = &s.maximizer else { panic!() };
        assert_eq!(p.probs(), &[1.0, 0.0]);
        assert!(s.optimality_gap <= 1e-9);
    }

    #[test]
    fn single_input_channel_has_zero_gap() {
        // One input means C(W) = 0, so only the unchecked solver applies.
        let ch = AveragedDmc::from_rows(&[vec![0.25, 0.75]]).unwrap();
        assert_eq!(rand_feedback_capacity(&ch, 1e-9), Err(Error::ZeroCapacityChannel));
        let v = max_mixture_entropy(&ch, None, 1e-9).unwrap();
        assert!((v - entropy_of(&[0.25, 0.75])).abs() < 1e-15);
    }

    #[test]
    fn deterministic_capacity_distortion_examples() {
        let avg = sensor().averaged().clone();
        let profile = sensor_profile();
        assert_eq!(det_capacity_distortion(&avg, &profile, 0.3).unwrap().value, 1.0);
        assert_eq!(
            det_capacity_distortion(&avg, &profile, 0.05),
            Err(Error::InfeasibleDistortion {
                budget: 0.05,
                min_feasible: profile.min()
            })
        );
        let inactive = det_capacity_distortion(&avg, &profile, 0.7).unwrap();
        assert_eq!(inactive.value, det_feedback_capacity(&avg).unwrap().value);
    }

    #[test]
    fn randomized_capacity_distortion_examples() {
        let avg = sensor().averaged().clone();
        let profile = sensor_profile();
        let tight = rand_capacity_distortion(&avg, &profile, 0.1, 1e-9).unwrap();
        assert!((tight.value - 1.0).abs() < 1e-12);
        let Maximizer::Distribution(p) = &tight.maximizer else { panic!() };
        assert!((p.probs()[0] - 1.0).abs() < 1e-12);

        let inactive = rand_capacity_distortion(&avg, &profile, 0.9, 1e-9).unwrap();
        let free = rand_feedback_capacity(&avg, 1e-9).unwrap();
        assert_eq!(inactive.value, free.value);
        assert!(matches!(
            rand_capacity_distortion(&avg, &profile, 0.0, 1e-9),
            Err(Error::InfeasibleDistortion { .. })
        ));
    }

    #[test]
    fn budget_vertices_saturate_the_constraint() {
        let profile = DistortionProfile::new(vec![0.1, 0.5, 0.3]);
        for v in budget_vertices(&profile, 0.2) {
            let d: f64 = v.iter().zip(profile.per_input()).map(|(a, b)| a * b).sum();
            assert!(d <= 0.2 + 1e-12);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // point mass on 0, plus mixtures with inputs 1 and 2
        assert_eq!(budget_vertices(&profile, 0.2).len(), 3);
    }

    #[test]
    fn tradeoff_curve_examples() {
        let avg = sensor().averaged().clone();
        let profile = sensor_profile();
        let curve = tradeoff_curve(&avg, &profile, &[0.05, 0.3, 0.6], Mode::Deterministic, 1e-9).unwrap();
        let values: Vec<_> = curve.iter().map(CurvePoint::value).collect();
        assert_eq!(values, vec![None, Some(1.0), Some(1.0)]);
        assert!(tradeoff_curve(&avg, &profile, &[0.3, 0.1], Mode::Deterministic, 1e-9).is_err());
    }

    #[test]
    fn flat_profile_gives_step_curve() {
        let avg = flip_bsc().averaged().clone();
        let profile = DistortionProfile::compute(&flip_bsc(), &DistortionMatrix::hamming(2)).unwrap();
        let curve = tradeoff_curve(&avg, &profile, &[0.1, 0.44, 0.45, 0.8], Mode::Randomized, 1e-9).unwrap();
        assert!(!curve[0].is_feasible() && !curve[1].is_feasible());
        assert!((curve[2].value().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(curve[2].value(), curve[3].value());
    }

    #[test]
    fn rate_examples() {
        let n = BigUint::from(1u32) << 64usize;
        assert!((rate_of_code(&n, 6).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rate_of_code(&BigUint::from(16u32), 8).unwrap(), 0.25);
        assert_eq!(rate_of_code(&BigUint::from(2u32), 5).unwrap(), 0.0);
        assert_eq!(rate_of_code(&BigUint::from(1u32), 5), Err(Error::DegenerateCode));
        let huge = BigUint::from(1u32) << 4000usize;
        assert!((log2_big(&huge) - 4000.0).abs() < 1e-9);
    }
}
