//! Optimal per-letter state estimation and minimal distortion profiles.
//!
//! The sender sees `(x_t, y_t)` through the feedback link and estimates the state
//! with `h*(x, y) = argmin_ŝ E[d(S, ŝ) | X=x, Y=y]`. The resulting expected
//! distortion per input symbol, `d*(x)`, decides which inputs fit a budget `D`.

use alloc::vec::Vec;

use crate::capacity::InputDistribution;
use crate::channel::{check_index, StateDmc};
use crate::{Error, Result, FEASIBILITY_SLACK};

/// Relative tolerance under which two estimator costs count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Distortion `d(s, ŝ)`, indexed `[s][ŝ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::EmptyAlphabet("state"));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    what: "distortion columns",
                    expected: size,
                    found: row.len(),
                });
            }
            for (s_hat, &value) in row.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::InvalidDistortion { s, s_hat, value });
                }
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { size, entries })
    }

    /// `d(s, ŝ) = 1{s ≠ ŝ}`.
    pub fn hamming(size: usize) -> Self {
        let entries = (0..size * size)
            .map(|i| if i / size == i % size { 0.0 } else { 1.0 })
            .collect();
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, s: usize, s_hat: usize) -> f64 {
        self.entries[s * self.size + s_hat]
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    fn check_for(&self, ch: &StateDmc) -> Result<()> {
        if self.size == ch.state_size() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: "distortion matrix",
                expected: ch.state_size(),
                found: self.size,
            })
        }
    }
}

/// Deterministic estimator table `h[x][y] ∈ S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorTable {
    input_size: usize,
    output_size: usize,
    entries: Vec<usize>,
}

impl EstimatorTable {
    pub fn new(input_size: usize, output_size: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() != input_size * output_size {
            return Err(Error::DimensionMismatch {
                what: "estimator table",
                expected: input_size * output_size,
                found: entries.len(),
            });
        }
        Ok(Self {
            input_size,
            output_size,
            entries,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.entries[x * self.output_size + y]
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        self.entries.chunks(self.output_size).map(<[usize]>::to_vec).collect()
    }
}

/// `P(s | x, y)`.
pub fn posterior_state(ch: &StateDmc, x: usize, y: usize) -> Result<Vec<f64>> {
    ch.check_input(x)?;
    ch.check_output(y)?;
    let joint = joint_state_output(ch, x, y);
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityObservation { x, y });
    }
    Ok(joint.into_iter().map(|p| p / total).collect())
}

/// `P_S(s)·W(y|x,s)` for every state.
fn joint_state_output(ch: &StateDmc, x: usize, y: usize) -> Vec<f64> {
    (0..ch.state_size())
        .map(|s| ch.state_prior()[s] * ch.kernel(x, s, y))
        .collect()
}

/// Expected distortion `Σ_s joint[s]·d(s, ŝ)` for every candidate `ŝ`.
fn estimate_costs(joint: &[f64], dist: &DistortionMatrix) -> Vec<f64> {
    (0..dist.size())
        .map(|s_hat| joint.iter().enumerate().map(|(s, &p)| p * dist.get(s, s_hat)).sum())
        .collect()
}

/// Lowest index whose cost is within the tie tolerance of the minimum.
fn lowest_argmin(costs: &[f64]) -> usize {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_TOLERANCE * min.abs().max(1e-300);
    costs.iter().position(|&c| c <= min + slack).unwrap_or(0)
}

/// The Bayes-optimal estimator `h*` for `dist`. Ties go to the lowest state index;
/// unreachable `(x, y)` pairs map to state 0.
pub fn optimal_estimator(ch: &StateDmc, dist: &DistortionMatrix) -> Result<EstimatorTable> {
    dist.check_for(ch)?;
    let mut entries = Vec::with_capacity(ch.input_size() * ch.output_size());
    for x in 0..ch.input_size() {
        for y in 0..ch.output_size() {
            let joint = joint_state_output(ch, x, y);
            let reachable = joint.iter().sum::<f64>() > 0.0;
            entries.push(if reachable {
                lowest_argmin(&estimate_costs(&joint, dist))
            } else {
                0
            });
        }
    }
    EstimatorTable::new(ch.input_size(), ch.output_size(), entries)
}

/// Expected distortion `E[d(S, h(x, Y)) | X = x]` of an arbitrary table.
pub fn table_distortion(ch: &StateDmc, dist: &DistortionMatrix, table: &EstimatorTable, x: usize) -> Result<f64> {
    dist.check_for(ch)?;
    ch.check_input(x)?;
    Ok((0..ch.output_size())
        .map(|y| {
            let s_hat = table.get(x, y);
            joint_state_output(ch, x, y)
                .iter()
                .enumerate()
                .map(|(s, &p)| p * dist.get(s, s_hat))
                .sum::<f64>()
        })
        .sum())
}

/// `d*(x)`: the expected distortion of the optimal estimator when `x` is sent.
pub fn min_distortion_input(ch: &StateDmc, dist: &DistortionMatrix, x: usize) -> Result<f64> {
    let table = optimal_estimator(ch, dist)?;
    table_distortion(ch, dist, &table, x)
}

/// `d*(x)` for every input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionProfile {
    per_input: Vec<f64>,
}

impl DistortionProfile {
    pub fn new(per_input: Vec<f64>) -> Self {
        Self { per_input }
    }

    pub fn compute(ch: &StateDmc, dist: &DistortionMatrix) -> Result<Self> {
        let table = optimal_estimator(ch, dist)?;
        let per_input = (0..ch.input_size())
            .map(|x| table_distortion(ch, dist, &table, x))
            .collect::<Result<_>>()?;
        Ok(Self { per_input })
    }

    pub fn per_input(&self) -> &[f64] {
        &self.per_input
    }

    pub fn get(&self, x: usize) -> f64 {
        self.per_input[x]
    }

    pub fn len(&self) -> usize {
        self.per_input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_input.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.per_input.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.per_input.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `d*(P) = Σ_x P(x)·d*(x)`.
    pub fn for_distribution(&self, p: &InputDistribution) -> Result<f64> {
        if p.len() != self.per_input.len() {
            return Err(Error::DimensionMismatch {
                what: "input distribution",
                expected: self.per_input.len(),
                found: p.len(),
            });
        }
        Ok(p.probs().iter().zip(&self.per_input).map(|(w, d)| w * d).sum())
    }

    /// `X_D = {x : d*(x) ≤ D}`, ascending.
    pub fn feasible_inputs(&self, budget: f64) -> Vec<usize> {
        (0..self.per_input.len())
            .filter(|&x| self.per_input[x] <= budget + FEASIBILITY_SLACK)
            .collect()
    }

    pub fn admits(&self, p: &InputDistribution, budget: f64) -> Result<bool> {
        Ok(self.for_distribution(p)? <= budget + FEASIBILITY_SLACK)
    }

    /// `InfeasibleDistortion` unless some input meets the budget.
    pub fn require_feasible(&self, budget: f64) -> Result<()> {
        if self.min() <= budget + FEASIBILITY_SLACK {
            Ok(())
        } else {
            Err(Error::InfeasibleDistortion {
                budget,
                min_feasible: self.min(),
            })
        }
    }
}

/// `d*(P)`.
pub fn min_distortion_dist(ch: &StateDmc, dist: &DistortionMatrix, p: &InputDistribution) -> Result<f64> {
    DistortionProfile::compute(ch, dist)?.for_distribution(p)
}

/// `X_D`.
pub fn feasible_inputs(ch: &StateDmc, dist: &DistortionMatrix, budget: f64) -> Result<Vec<usize>> {
    Ok(DistortionProfile::compute(ch, dist)?.feasible_inputs(budget))
}

/// Whether `P ∈ P_D`.
pub fn feasible_distribution(
    ch: &StateDmc,
    dist: &DistortionMatrix,
    budget: f64,
    p: &InputDistribution,
) -> Result<bool> {
    DistortionProfile::compute(ch, dist)?.admits(p, budget)
}

/// Letterwise `ŝ_t = h(x_t, y_t)`.
pub fn estimate_sequence(h: &EstimatorTable, x_seq: &[usize], y_seq: &[usize]) -> Result<Vec<usize>> {
    if x_seq.len() != y_seq.len() {
        return Err(Error::LengthMismatch {
            left: x_seq.len(),
            right: y_seq.len(),
        });
    }
    x_seq
        .iter()
        .zip(y_seq)
        .map(|(&x, &y)| {
            check_index("input", x, h.input_size)?;
            check_index("output", y, h.output_size)?;
            Ok(h.get(x, y))
        })
        .collect()
}

/// Estimator table plus the distortion it is scored with; what the sender's sensing side runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingModel {
    pub estimator: EstimatorTable,
    pub distortion: DistortionMatrix,
    pub profile: DistortionProfile,
}

impl SensingModel {
    pub fn new(ch: &StateDmc, distortion: DistortionMatrix) -> Result<Self> {
        let estimator = optimal_estimator(ch, &distortion)?;
        let profile = DistortionProfile::compute(ch, &distortion)?;
        Ok(Self {
            estimator,
            distortion,
            profile,
        })
    }
}
