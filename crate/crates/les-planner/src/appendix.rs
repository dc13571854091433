//! Monte-Carlo check of the curse-of-dimensionality bound for random local
//! search on the quadratic objective x^T x.
//!
//! Starting from a point at distance 1 from the optimum, a uniform sample
//! in the eps-ball around it improves the objective exactly when it lands
//! inside the unit sphere. The lens formed by the two spheres fits inside
//! a cap-covering ball, which bounds the improvement probability by
//! `(1 - eps^2 / 4)^(d/2)`; the measured probability must stay below that
//! and decay with the dimension.

use rand::Rng;

use crate::error::{Error, Result};
use crate::samplers::sample_in_ball;
use crate::space::State;

/// Radius of the ball covering the intersection of the eps-ball around the
/// start point with the improvement sphere:
/// `eps * sqrt(1 - eps^2 / (4 dist^2))`.
pub fn cap_cover_radius(epsilon: f64, center_distance: f64) -> f64 {
    epsilon * (1.0 - epsilon * epsilon / (4.0 * center_distance * center_distance)).sqrt()
}

/// Volume-ratio bound `(1 - ratio^2 / 4)^(d/2)` on the probability that a
/// uniform local sample improves the quadratic objective.
pub fn improvement_bound(dimension: usize, ratio: f64) -> f64 {
    (1.0 - ratio * ratio / 4.0).powf(dimension as f64 / 2.0)
}

#[derive(Clone, Copy, Debug)]
pub struct AppendixReport {
    pub dimension: usize,
    pub ratio: f64,
    pub samples: u64,
    /// Measured fraction of local samples that improve the objective.
    pub empirical_p: f64,
    /// The analytic over-approximation.
    pub bound: f64,
    /// Cap-covering radius for this ratio (start point at distance 1).
    pub r_c: f64,
    /// Binomial standard error of the measurement.
    pub std_err: f64,
}

impl AppendixReport {
    /// The measurement must not exceed the bound beyond Monte-Carlo noise.
    pub fn passes(&self) -> bool {
        self.empirical_p < self.bound + 3.0 * self.std_err
    }
}

/// Estimate the improvement probability in `dimension` dimensions with the
/// ball radius set to `ratio` times the start point's distance from the
/// optimum. Requires `0 < ratio < 1` and at least 10^4 samples.
pub fn appendix_verify<R: Rng + ?Sized>(
    dimension: usize,
    ratio: f64,
    samples: u64,
    rng: &mut R,
) -> Result<AppendixReport> {
    if dimension < 2 {
        return Err(Error::InvalidConfig("dimension must be at least 2".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(
            "ratio must lie strictly between 0 and 1".into(),
        ));
    }
    if samples < 10_000 {
        return Err(Error::InvalidConfig(
            "at least 10000 samples are required".into(),
        ));
    }
    let mut start = vec![0.0; dimension];
    start[0] = 1.0;
    let start = State::new(start);
    let mut improving = 0u64;
    for _ in 0..samples {
        let x = sample_in_ball(&start, ratio, rng);
        let norm2: f64 = x.coords().iter().map(|c| c * c).sum();
        if norm2 < 1.0 {
            improving += 1;
        }
    }
    let empirical_p = improving as f64 / samples as f64;
    let std_err = (empirical_p * (1.0 - empirical_p) / samples as f64).sqrt();
    Ok(AppendixReport {
        dimension,
        ratio,
        samples,
        empirical_p,
        bound: improvement_bound(dimension, ratio),
        r_c: cap_cover_radius(ratio, 1.0),
        std_err,
    })
}

/// Same measurement with a self-contained deterministic stream.
pub fn appendix_verify_seeded(
    dimension: usize,
    ratio: f64,
    samples: u64,
    seed: u64,
) -> Result<AppendixReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    appendix_verify(dimension, ratio, samples, &mut rng)
}
