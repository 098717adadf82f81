//! Keyed pseudorandom coloring functions `F_i : Y^n → {0, …, M−1}`.
//!
//! Sender and receiver share only the master seed; each evaluates
//! `F_i(y^n)` as SHA-256 over `(seed, i, y^n)` reduced to `M` colors by
//! rejection sampling, so every color is equally likely.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

const LABEL: &[u8] = b"idsense/coloring/v1";

pub fn coloring(master_seed: u64, identity: &BigUint, y_pilot: &[usize], colors: usize) -> usize {
    assert!(colors > 0, "coloring needs at least one color");
    let colors = colors as u64;
    let zone = (u64::MAX / colors) * colors;
    let id_bytes = identity.to_bytes_le();
    for counter in 0u64.. {
        let mut hasher = Sha256::new();
        hasher.update(LABEL);
        hasher.update(master_seed.to_le_bytes());
        hasher.update((id_bytes.len() as u64).to_le_bytes());
        hasher.update(&id_bytes);
        hasher.update((y_pilot.len() as u64).to_le_bytes());
        for &y in y_pilot {
            hasher.update((y as u64).to_le_bytes());
        }
        hasher.update(counter.to_le_bytes());
        let digest = hasher.finalize();
        for word in digest.chunks_exact(8) {
            let w = u64::from_le_bytes(word.try_into().expect("8-byte chunk"));
            if w < zone {
                return (w % colors) as usize;
            }
        }
    }
    unreachable!("rejection sampling terminates with probability one")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typicality::all_sequences;
    use alloc::vec;

    #[test]
    fn deterministic_and_in_range() {
        let id = BigUint::from(7u32);
        let a = coloring(42, &id, &[0, 1, 1, 0], 5);
        assert_eq!(a, coloring(42, &id, &[0, 1, 1, 0], 5));
        for y in all_sequences(2, 8) {
            assert!(coloring(42, &id, &y, 5) < 5);
        }
    }

    #[test]
    fn inputs_are_unambiguous() {
        // (id, y) boundaries are length-prefixed.
        let a = coloring(1, &BigUint::from(1u32), &[0, 0], 1 << 20);
        let b = coloring(1, &BigUint::from(1u32), &[0, 0, 0], 1 << 20);
        let c = coloring(1, &BigUint::from(256u32), &[0, 0], 1 << 20);
        assert!(a != b || a != c);
    }

    #[test]
    fn colors_are_uniform_chi_square() {
        // 10^5 distinct pilot blocks, 8 colors: 7 degrees of freedom, 0.999 quantile 24.32.
        let m = 8usize;
        let id = BigUint::from(3u32);
        let mut counts = vec![0u64; m];
        for y in all_sequences(2, 17).take(100_000) {
            counts[coloring(9, &id, &y, m)] += 1;
        }
        let expected = 100_000.0 / m as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 24.322, "chi2 = {chi2}");
    }
}
