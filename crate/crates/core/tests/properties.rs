use idsense_core::capacity::{
    det_capacity_distortion, rand_capacity_distortion, rand_feedback_capacity, tradeoff_curve, InputDistribution,
    Mode,
};
use idsense_core::channel::{AveragedDmc, StateDmc};
use idsense_core::coding::coloring;
use idsense_core::estimation::{optimal_estimator, table_distortion, DistortionMatrix, DistortionProfile};
use idsense_core::sim::{brute_force_estimator_distortion, grid_capacity_oracle};
use idsense_core::typicality::{all_sequences, pilot_output_typical, typical_membership};
use idsense_core::coding::Pilot;
use num_bigint::BigUint;
use proptest::prelude::*;

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.into_iter().map(|w| w / total).collect()
}

fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(normalize)
}

/// Random `W[x][s][y]` with prior, all entries strictly positive.
fn state_channel(nx: usize, ns: usize, ny: usize) -> impl Strategy<Value = StateDmc> {
    (
        prop::collection::vec(prop::collection::vec(simplex(ny), ns), nx),
        simplex(ns),
    )
        .prop_map(|(kernel, prior)| StateDmc::new(kernel, prior).unwrap())
}

fn any_small_channel() -> impl Strategy<Value = StateDmc> {
    (1usize..=3, 1usize..=3, 2usize..=3).prop_flat_map(|(nx, ns, ny)| state_channel(nx, ns, ny))
}

fn averaged(rows: usize, cols: usize) -> impl Strategy<Value = AveragedDmc> {
    prop::collection::vec(simplex(cols), rows).prop_map(|r| AveragedDmc::from_rows(&r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequence_likelihoods_sum_to_one(ch in any_small_channel(), seed in 0u64..1000) {
        let n = 4;
        let x: Vec<usize> = (0..n).map(|t| (seed as usize >> t) % ch.input_size()).collect();
        let total: f64 = all_sequences(ch.output_size(), n)
            .map(|y| ch.sequence_likelihood(&x, &y).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_estimator_matches_exhaustive_search(ch in any_small_channel()) {
        let dist = DistortionMatrix::hamming(ch.state_size());
        let table = optimal_estimator(&ch, &dist).unwrap();
        let oracle = brute_force_estimator_distortion(&ch, &dist).unwrap();
        for x in 0..ch.input_size() {
            let d = table_distortion(&ch, &dist, &table, x).unwrap();
            prop_assert!((d - oracle.per_input[x]).abs() <= 1e-12);
        }
    }

    #[test]
    fn feasible_sets_grow_with_the_budget(ch in any_small_channel(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let profile = DistortionProfile::compute(&ch, &DistortionMatrix::hamming(ch.state_size())).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = profile.feasible_inputs(lo);
        let large = profile.feasible_inputs(hi);
        prop_assert!(small.iter().all(|x| large.contains(x)));
    }

    #[test]
    fn distribution_distortion_is_linear(ch in any_small_channel(), t in 0.0f64..1.0, seed in 0usize..100) {
        let nx = ch.input_size();
        let profile = DistortionProfile::compute(&ch, &DistortionMatrix::hamming(ch.state_size())).unwrap();
        let p = InputDistribution::point_mass(nx, seed % nx).unwrap();
        let q = InputDistribution::uniform(nx).unwrap();
        let mix: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let mix = InputDistribution::new(mix).unwrap();
        let lhs = profile.for_distribution(&mix).unwrap();
        let rhs = t * profile.for_distribution(&p).unwrap() + (1.0 - t) * profile.for_distribution(&q).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn randomized_curve_dominates_and_is_concave(ch in state_channel(3, 2, 2)) {
        let profile = DistortionProfile::compute(&ch, &DistortionMatrix::hamming(2)).unwrap();
        let avg = ch.averaged();
        let grid: Vec<f64> = (0..=10).map(|k| profile.min() + (profile.max() - profile.min()) * k as f64 / 10.0).collect();
        let det = tradeoff_curve(avg, &profile, &grid, Mode::Deterministic, 1e-9);
        let rand = tradeoff_curve(avg, &profile, &grid, Mode::Randomized, 1e-9);
        let (Ok(det), Ok(rand)) = (det, rand) else { return Ok(()) };
        let values: Vec<f64> = rand.iter().map(|p| p.value().unwrap()).collect();
        for (d, r) in det.iter().zip(&values) {
            prop_assert!(*r >= d.value().unwrap() - 1e-9);
        }
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        for w in values.windows(3) {
            prop_assert!(2.0 * w[1] >= w[0] + w[2] - 1e-7);
        }
        let unconstrained = rand_feedback_capacity(avg, 1e-9).unwrap().value;
        prop_assert!((values[10] - unconstrained).abs() < 1e-8);
    }

    #[test]
    fn conditional_gradient_agrees_with_grid(avg in averaged(3, 2)) {
        let Ok(cg) = rand_feedback_capacity(&avg, 1e-9) else { return Ok(()) };
        let grid = grid_capacity_oracle(&avg, None, 200).unwrap();
        prop_assert!(cg.value >= grid - 1e-9);
        prop_assert!(cg.value <= grid + 1e-3);
    }

    #[test]
    fn typicality_is_permutation_invariant(
        avg in averaged(2, 3),
        pairs in prop::collection::vec((0usize..2, 0usize..3), 6),
        rot in 0usize..6,
        eps in 0.05f64..0.4,
    ) {
        let (x, y): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let mut xr = x.clone();
        let mut yr = y.clone();
        xr.rotate_left(rot);
        yr.rotate_left(rot);
        prop_assert_eq!(
            typical_membership(&avg, &x, &y, eps).unwrap(),
            typical_membership(&avg, &xr, &yr, eps).unwrap()
        );
        let pilot = Pilot::Symbol(0);
        prop_assert_eq!(
            pilot_output_typical(&avg, &pilot, &y, eps).unwrap(),
            pilot_output_typical(&avg, &pilot, &yr, eps).unwrap()
        );
    }

    #[test]
    fn coloring_is_deterministic(seed: u64, id in 1u64..u64::MAX, y in prop::collection::vec(0usize..4, 0..12), m in 1usize..50) {
        let id = BigUint::from(id);
        let a = coloring(seed, &id, &y, m);
        prop_assert!(a < m);
        prop_assert_eq!(a, coloring(seed, &id, &y, m));
    }
}

#[test]
fn deterministic_capacity_distortion_is_a_step_function() {
    let ch = idsense_core::channel::fixtures::sensor();
    let profile = DistortionProfile::compute(&ch, &DistortionMatrix::hamming(2)).unwrap();
    let lo = det_capacity_distortion(ch.averaged(), &profile, 0.1);
    let hi = det_capacity_distortion(ch.averaged(), &profile, 0.5).unwrap();
    let rand = rand_capacity_distortion(ch.averaged(), &profile, 0.5, 1e-9).unwrap();
    assert!(lo.unwrap().value <= hi.value);
    assert!(rand.value >= hi.value - 1e-9);
}

#[test]
fn collision_rate_respects_the_hoeffding_band() {
    // All binary pilot blocks of length 10 for fixed i ≠ j.
    let (i, j) = (BigUint::from(5u32), BigUint::from(6u32));
    for m in [2usize, 4, 8] {
        let blocks: Vec<Vec<usize>> = all_sequences(2, 10).collect();
        let hits = blocks
            .iter()
            .filter(|y| coloring(17, &i, y, m) == coloring(17, &j, y, m))
            .count();
        let p = 1.0 / m as f64;
        let bound = p + 3.0 * (p * (1.0 - p) / blocks.len() as f64).sqrt();
        assert!((hits as f64 / blocks.len() as f64) <= bound, "M = {m}");
    }
}
