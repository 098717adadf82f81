//! Conditional-gradient ascent of `P ↦ H(Σ_x P(x)·q_x)` over a polytope given by its vertices.
//!
//! Uses away steps and an exact line search (the objective is concave along every
//! segment, so the derivative is bisected). Termination is certified by the
//! Frank-Wolfe duality gap `max_v ⟨∇, v − P⟩ ≥ H* − H(P)`.

use alloc::vec;
use alloc::vec::Vec;

use libm::log2;

use super::entropy_of;
use crate::channel::AveragedDmc;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100_000;
const LINE_SEARCH_STEPS: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub weights: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// `g_x = −Σ_y q_x(y)·log2 r(y)`: the gradient up to a constant shared by all inputs.
fn gradient(channel: &AveragedDmc, output: &[f64]) -> Vec<f64> {
    channel
        .rows()
        .map(|row| {
            row.iter()
                .zip(output)
                .filter(|(&q, _)| q > 0.0)
                .map(|(&q, &r)| if r > 0.0 { -q * log2(r) } else { f64::INFINITY })
                .sum()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(&x, _)| x != 0.0)
        .map(|(x, y)| x * y)
        .sum()
}

/// Derivative of `γ ↦ H(r + γ·dr)` in bits.
fn slope(output: &[f64], direction: &[f64], step: f64) -> f64 {
    let mut total = 0.0;
    for (&r, &d) in output.iter().zip(direction) {
        if d == 0.0 {
            continue;
        }
        let at = r + step * d;
        total -= if at > 0.0 { d * log2(at) } else { d * f64::NEG_INFINITY };
    }
    total
}

/// Maximizer of a concave function on `[0, max_step]` from its derivative.
fn line_search(output: &[f64], direction: &[f64], max_step: f64) -> f64 {
    if slope(output, direction, max_step) >= 0.0 {
        return max_step;
    }
    let (mut lo, mut hi) = (0.0, max_step);
    for _ in 0..LINE_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(output, direction, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub(crate) fn maximize_mixture_entropy(
    channel: &AveragedDmc,
    vertices: &[Vec<f64>],
    tol: f64,
) -> Result<Solution> {
    if vertices.is_empty() {
        return Err(Error::InvalidParameter("feasible polytope has no vertices"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive"));
    }
    let outputs: Vec<Vec<f64>> = vertices.iter().map(|v| channel.mix(v)).collect();

    // Start from the best vertex.
    let start = (0..vertices.len())
        .map(|v| (v, entropy_of(&outputs[v])))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let mut active = vec![0.0; vertices.len()];
    active[start] = 1.0;
    let mut weights = vertices[start].clone();
    let mut output = outputs[start].clone();

    for iteration in 0..=MAX_ITERATIONS {
        let grad = gradient(channel, &output);
        let scores: Vec<f64> = vertices.iter().map(|v| dot(v, &grad)).collect();
        let current = dot(&weights, &grad);
        let (toward, best) = scores
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let gap = (best - current).max(0.0);
        if gap <= tol {
            return Ok(Solution {
                value: entropy_of(&output),
                weights,
                gap,
                iterations: iteration,
            });
        }
        if iteration == MAX_ITERATIONS {
            break;
        }

        let (away, worst) = scores
            .iter()
            .copied()
            .enumerate()
            .filter(|&(v, _)| active[v] > 0.0)
            .fold((start, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        let away_gap = current - worst;

        if gap >= away_gap || active[away] >= 1.0 {
            let dir: Vec<f64> = outputs[toward].iter().zip(&output).map(|(a, b)| a - b).collect();
            let step = line_search(&output, &dir, 1.0);
            for w in active.iter_mut() {
                *w *= 1.0 - step;
            }
            active[toward] += step;
            if step >= 1.0 {
                active.iter_mut().for_each(|w| *w = 0.0);
                active[toward] = 1.0;
            }
        } else {
            let max_step = active[away] / (1.0 - active[away]);
            let dir: Vec<f64> = output.iter().zip(&outputs[away]).map(|(a, b)| a - b).collect();
            let step = line_search(&output, &dir, max_step);
            for w in active.iter_mut() {
                *w *= 1.0 + step;
            }
            active[away] -= step;
            if step >= max_step || active[away] <= 0.0 {
                active[away] = 0.0;
            }
        }

        let total: f64 = active.iter().sum();
        active.iter_mut().for_each(|w| *w /= total);
        weights.iter_mut().for_each(|w| *w = 0.0);
        output.iter_mut().for_each(|r| *r = 0.0);
        for (v, &a) in active.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            weights.iter_mut().zip(&vertices[v]).for_each(|(w, x)| *w += a * x);
            output.iter_mut().zip(&outputs[v]).for_each(|(r, x)| *r += a * x);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_masses(k: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|x| (0..k).map(|i| if i == x { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn symmetric_mixture_reaches_one_bit() {
        let ch = AveragedDmc::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let sol = maximize_mixture_entropy(&ch, &point_masses(2), 1e-12).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.weights[0] - 0.5).abs() < 1e-6);
        assert!(sol.gap <= 1e-12);
    }

    #[test]
    fn boundary_output_is_left_immediately() {
        // Starting vertex 1 has zero mass on output 0; the gradient there is infinite.
        let ch = AveragedDmc::from_rows(&[vec![0.2, 0.8], vec![0.0, 1.0]]).unwrap();
        let sol = maximize_mixture_entropy(&ch, &point_masses(2), 1e-12).unwrap();
        assert!((sol.value - crate::capacity::entropy_of(&[0.2, 0.8])).abs() < 1e-12);
    }

    #[test]
    fn interior_optimum_of_three_inputs_converges_tightly() {
        let ch = AveragedDmc::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let sol = maximize_mixture_entropy(&ch, &point_masses(3), 1e-11).unwrap();
        assert!(sol.gap <= 1e-11);
        assert!(sol.value <= log2(3.0) + 1e-12);
    }
}
