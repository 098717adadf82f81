use libm::{log2, sqrt};

use super::{max_mixture_entropy, max_row_entropy, DEFAULT_TOLERANCE};
use crate::channel::AveragedDmc;
use crate::estimation::DistortionProfile;
use crate::{Error, Result};

/// Parameters of the image-size bounds `log2 K = n·H_max + α·√n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundParams {
    pub n: usize,
    /// Tail mass `μ ∈ (0, 1)`.
    pub mu: f64,
    /// `α = √(β/μ)`.
    pub alpha: f64,
    /// `β = max(log2²3, log2²|Y|)`.
    pub beta: f64,
    /// Error budget `λ ∈ (0, 1/2)`.
    pub lambda: f64,
    /// Typicality radius.
    pub eps: f64,
    pub delta: f64,
    pub delta_prime: f64,
}

fn beta_for(output_size: usize) -> f64 {
    let a = log2(3.0);
    let b = log2(output_size as f64);
    (a * a).max(b * b)
}

impl BoundParams {
    pub fn new(n: usize, mu: f64, output_size: usize) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidParameter("mu must lie in (0, 1)"));
        }
        let beta = beta_for(output_size);
        Ok(Self {
            n,
            mu,
            alpha: sqrt(beta / mu),
            beta,
            lambda: 0.25,
            eps: 0.1,
            delta: 0.0,
            delta_prime: 0.0,
        })
    }

    pub fn with_error_budget(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_typicality(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_exponents(mut self, delta: f64, delta_prime: f64) -> Self {
        self.delta = delta;
        self.delta_prime = delta_prime;
        self
    }

    /// Checks the stored `α`, `β` against `(μ, |Y|)` and the parameter ranges.
    pub fn validate(&self, output_size: usize) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidParameter("mu must lie in (0, 1)"));
        }
        if !(self.lambda > 0.0 && self.lambda < 0.5) {
            return Err(Error::InvalidParameter("lambda must lie in (0, 1/2)"));
        }
        let beta = beta_for(output_size);
        if (beta - self.beta).abs() > 1e-12 || (sqrt(beta / self.mu) - self.alpha).abs() > 1e-12 {
            return Err(Error::InvalidParameter("alpha/beta inconsistent with mu and |Y|"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ImageSizeVariant {
    /// Any deterministic feedback strategy: `max_x H(q_x)`.
    K1,
    /// Any randomized feedback strategy: `max_P H(Σ P q)`.
    K2,
    /// Deterministic under a per-symbol budget: `max_{x ∈ X_D} H(q_x)`.
    K3,
    /// Randomized under a per-symbol budget: `max_{P ∈ P_D} H(Σ P q)`.
    K4,
}

/// `log2 K = n·H_max + α·√n`, the log-size of the smallest output set carrying mass `1 − μ`
/// that any strategy of the given class can need.
pub fn image_size_bound(
    params: &BoundParams,
    channel: &AveragedDmc,
    constraint: Option<(&DistortionProfile, f64)>,
    variant: ImageSizeVariant,
) -> Result<f64> {
    params.validate(channel.output_size())?;
    let all: alloc::vec::Vec<usize> = (0..channel.input_size()).collect();
    let h_max = match variant {
        ImageSizeVariant::K1 => max_row_entropy(channel, &all),
        ImageSizeVariant::K2 => max_mixture_entropy(channel, None, DEFAULT_TOLERANCE)?,
        ImageSizeVariant::K3 => {
            let (profile, budget) =
                constraint.ok_or(Error::InvalidParameter("K3 needs a distortion budget"))?;
            profile.require_feasible(budget)?;
            max_row_entropy(channel, &profile.feasible_inputs(budget))
        }
        ImageSizeVariant::K4 => {
            let constraint = constraint.ok_or(Error::InvalidParameter("K4 needs a distortion budget"))?;
            max_mixture_entropy(channel, Some(constraint), DEFAULT_TOLERANCE)?
        }
    };
    let n = params.n as f64;
    Ok(n * h_max + params.alpha * sqrt(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fixtures::flip_bsc;
    use crate::estimation::DistortionMatrix;

    #[test]
    fn k1_for_flip_bsc() {
        let ch = flip_bsc();
        let params = BoundParams::new(100, 0.1, 2).unwrap();
        assert!((params.beta - 2.512_107).abs() < 1e-6);
        let k1 = image_size_bound(&params, ch.averaged(), None, ImageSizeVariant::K1).unwrap();
        // 100·0.468996 + √(2.512107/0.1)·10
        assert!((k1 - 97.0205).abs() < 1e-3, "{k1}");
    }

    #[test]
    fn zero_blocklength_gives_zero() {
        let params = BoundParams::new(0, 0.999, 2).unwrap();
        let k1 = image_size_bound(&params, flip_bsc().averaged(), None, ImageSizeVariant::K1).unwrap();
        assert_eq!(k1, 0.0);
    }

    #[test]
    fn constrained_bounds_match_unconstrained_when_inactive() {
        let ch = flip_bsc();
        let profile = DistortionProfile::compute(&ch, &DistortionMatrix::hamming(2)).unwrap();
        let params = BoundParams::new(50, 0.2, 2).unwrap();
        let k1 = image_size_bound(&params, ch.averaged(), None, ImageSizeVariant::K1).unwrap();
        let k3 = image_size_bound(&params, ch.averaged(), Some((&profile, 0.6)), ImageSizeVariant::K3).unwrap();
        assert_eq!(k1, k3);
        let k2 = image_size_bound(&params, ch.averaged(), None, ImageSizeVariant::K2).unwrap();
        let k4 = image_size_bound(&params, ch.averaged(), Some((&profile, 0.6)), ImageSizeVariant::K4).unwrap();
        assert_eq!(k2, k4);
        assert!(k2 >= k1);
        assert!(matches!(
            image_size_bound(&params, ch.averaged(), Some((&profile, 0.2)), ImageSizeVariant::K3),
            Err(Error::InfeasibleDistortion { .. })
        ));
        assert!(image_size_bound(&params, ch.averaged(), None, ImageSizeVariant::K4).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(BoundParams::new(10, 1.0, 2).is_err());
        assert!(BoundParams::new(10, 0.0, 2).is_err());
        let p = BoundParams::new(10, 0.5, 4).unwrap();
        assert!((p.beta - 4.0).abs() < 1e-12);
        assert!(p.validate(4).is_ok());
        assert!(p.validate(2).is_err());
        assert!(p.clone().with_error_budget(0.5).validate(4).is_err());
    }
}
