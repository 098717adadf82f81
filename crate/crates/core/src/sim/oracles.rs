use alloc::vec;
use alloc::vec::Vec;

use libm::pow;

use crate::capacity::entropy;
use crate::channel::{AveragedDmc, StateDmc};
use crate::estimation::{DistortionMatrix, DistortionProfile, EstimatorTable};
use crate::{Error, Result, ENUMERATION_LIMIT, FEASIBILITY_SLACK};

/// Largest input alphabet the grid oracle accepts.
pub const GRID_ALPHABET_LIMIT: usize = 3;

/// Largest number of grid steps per simplex dimension.
pub const GRID_RESOLUTION_LIMIT: usize = 400;

/// Relative tolerance for calling two table scores equal.
const TIE_TOLERANCE: f64 = 1e-12;

/// Result of the exhaustive estimator search.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceEstimator {
    /// `min_h Σ_{y,s} P(s) W(y|x,s) d(s, h(x,y))` for each `x`.
    pub per_input: Vec<f64>,
    /// First minimizing table in lexicographic order.
    pub table: EstimatorTable,
    /// Every table whose uniform-weighted score ties the minimum.
    pub minimizers: Vec<EstimatorTable>,
}

/// Minimizes `(1/|X|)·Σ_x d(x, h)` over all `|S|^(|X||Y|)` estimator tables.
pub fn brute_force_estimator_distortion(ch: &StateDmc, dist: &DistortionMatrix) -> Result<BruteForceEstimator> {
    let (nx, ny, ns) = (ch.input_size(), ch.output_size(), ch.state_size());
    if dist.size() != ns {
        return Err(Error::DimensionMismatch {
            what: "distortion matrix",
            expected: ns,
            found: dist.size(),
        });
    }
    let cells = nx * ny;
    let size = pow(ns as f64, cells as f64);
    if size > ENUMERATION_LIMIT as f64 {
        return Err(Error::TooLargeToEnumerate {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    // cost[(x·|Y| + y)·|S| + ŝ] = Σ_s P(s) W(y|x,s) d(s, ŝ)
    let prior = ch.state_prior();
    let mut cost = vec![0.0; cells * ns];
    for x in 0..nx {
        for y in 0..ny {
            for s_hat in 0..ns {
                cost[(x * ny + y) * ns + s_hat] =
                    (0..ns).map(|s| prior[s] * ch.kernel(x, s, y) * dist.get(s, s_hat)).sum();
            }
        }
    }
    let score = |entries: &[usize]| -> Vec<f64> {
        (0..nx)
            .map(|x| (0..ny).map(|y| cost[(x * ny + y) * ns + entries[x * ny + y]]).sum())
            .collect()
    };
    let mut entries = vec![0usize; cells];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut minimizers: Vec<Vec<usize>> = Vec::new();
    loop {
        let per_input = score(&entries);
        let total = per_input.iter().sum::<f64>() / nx as f64;
        match &best {
            Some((b, _)) if total > *b + TIE_TOLERANCE * b.abs().max(1e-300) => {}
            Some((b, _)) if total >= *b - TIE_TOLERANCE * b.abs().max(1e-300) => minimizers.push(entries.clone()),
            _ => {
                best = Some((total, per_input));
                minimizers.clear();
                minimizers.push(entries.clone());
            }
        }
        // odometer over tables, first cell most significant
        let mut i = cells;
        loop {
            if i == 0 {
                let (_, per_input) = best.expect("at least one table");
                let minimizers = minimizers
                    .into_iter()
                    .map(|e| EstimatorTable::new(nx, ny, e))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(BruteForceEstimator {
                    per_input,
                    table: minimizers[0].clone(),
                    minimizers,
                });
            }
            i -= 1;
            entries[i] += 1;
            if entries[i] < ns {
                break;
            }
            entries[i] = 0;
        }
    }
}

/// Exhaustive grid maximum of `H(Σ_x P(x) q_x)` over distributions with entries in
/// multiples of `1/resolution`, optionally restricted to `d*(P) ≤ D`.
pub fn grid_capacity_oracle(
    channel: &AveragedDmc,
    constraint: Option<(&DistortionProfile, f64)>,
    resolution: usize,
) -> Result<f64> {
    let nx = channel.input_size();
    if nx > GRID_ALPHABET_LIMIT {
        return Err(Error::AlphabetTooLarge {
            size: nx,
            limit: GRID_ALPHABET_LIMIT,
        });
    }
    if resolution == 0 || resolution > GRID_RESOLUTION_LIMIT {
        return Err(Error::InvalidParameter("grid resolution must lie in 1..=400"));
    }
    if let Some((profile, budget)) = constraint {
        if profile.len() != nx {
            return Err(Error::DimensionMismatch {
                what: "distortion profile",
                expected: nx,
                found: profile.len(),
            });
        }
        profile.require_feasible(budget)?;
    }
    let r = resolution as f64;
    let mut best: f64 = f64::NEG_INFINITY;
    let mut counts = vec![0usize; nx];
    compositions(&mut counts, 0, resolution, &mut |counts| {
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / r).collect();
        if let Some((profile, budget)) = constraint {
            let d: f64 = p.iter().zip(profile.per_input()).map(|(w, d)| w * d).sum();
            if d > budget + FEASIBILITY_SLACK {
                return;
            }
        }
        let h = entropy(&channel.mix(&p)).unwrap_or(f64::NEG_INFINITY);
        best = best.max(h);
    });
    Ok(best)
}

/// Calls `f` on every way to write `remaining` as an ordered sum into `counts[index..]`.
fn compositions(counts: &mut [usize], index: usize, remaining: usize, f: &mut impl FnMut(&[usize])) {
    if index + 1 == counts.len() {
        counts[index] = remaining;
        f(counts);
        return;
    }
    for c in 0..=remaining {
        counts[index] = c;
        compositions(counts, index + 1, remaining - c, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{det_capacity_distortion, det_feedback_capacity};
    use crate::channel::fixtures::{flip_bsc, sensor};
    use crate::estimation::min_distortion_input;

    #[test]
    fn brute_force_matches_profile_on_fixtures() {
        for ch in [flip_bsc(), sensor()] {
            let dist = DistortionMatrix::hamming(ch.state_size());
            let oracle = brute_force_estimator_distortion(&ch, &dist).unwrap();
            for x in 0..ch.input_size() {
                assert_eq!(oracle.per_input[x], min_distortion_input(&ch, &dist, x).unwrap());
            }
        }
    }

    #[test]
    fn single_state_has_zero_distortion() {
        let ch = StateDmc::stateless(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        let oracle = brute_force_estimator_distortion(&ch, &DistortionMatrix::hamming(1)).unwrap();
        assert_eq!(oracle.per_input, vec![0.0, 0.0]);
        assert_eq!(oracle.minimizers.len(), 1);
    }

    #[test]
    fn tied_tables_share_the_profile() {
        // Uniform prior, state-blind outputs: every table scores 1/2 per input.
        let ch = StateDmc::new(
            vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![vec![1.0, 0.0], vec![1.0, 0.0]]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let dist = DistortionMatrix::hamming(2);
        let oracle = brute_force_estimator_distortion(&ch, &dist).unwrap();
        assert!(oracle.minimizers.len() > 1);
        for table in &oracle.minimizers {
            for x in 0..2 {
                let d = crate::estimation::table_distortion(&ch, &dist, table, x).unwrap();
                assert!((d - oracle.per_input[x]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn grid_oracle_on_flip_bsc() {
        let ch = flip_bsc();
        let unconstrained = grid_capacity_oracle(ch.averaged(), None, 400).unwrap();
        assert!((unconstrained - 1.0).abs() < 1e-12);
        let det = det_feedback_capacity(ch.averaged()).unwrap().value;
        assert!((grid_capacity_oracle(ch.averaged(), None, 1).unwrap() - det).abs() < 1e-12);
    }

    #[test]
    fn grid_oracle_resolution_one_is_the_deterministic_value() {
        let ch = sensor();
        let profile = DistortionProfile::compute(&ch, &DistortionMatrix::hamming(2)).unwrap();
        let det = det_capacity_distortion(ch.averaged(), &profile, 0.3).unwrap().value;
        let grid = grid_capacity_oracle(ch.averaged(), Some((&profile, 0.3)), 1).unwrap();
        assert!((grid - det).abs() < 1e-12);
        assert!(matches!(
            grid_capacity_oracle(ch.averaged(), Some((&profile, 0.05)), 10),
            Err(Error::InfeasibleDistortion { .. })
        ));
    }

    #[test]
    fn grid_oracle_guards() {
        let rows = vec![vec![1.0, 0.0]; 4];
        let avg = AveragedDmc::from_rows(&rows).unwrap();
        assert_eq!(
            grid_capacity_oracle(&avg, None, 10),
            Err(Error::AlphabetTooLarge { size: 4, limit: 3 })
        );
        let avg = AveragedDmc::from_rows(&rows[..2]).unwrap();
        assert!(grid_capacity_oracle(&avg, None, 401).is_err());
    }
}
