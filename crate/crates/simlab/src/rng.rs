//! Deterministic random streams and the data-generating process.
//!
//! Every replication owns an independent `Xoshiro256PlusPlus` generator whose
//! 64-bit seed is a SplitMix64 mix of `(seed, scenario index, replication
//! index)`. Standard normals come from `rand_distr::StandardNormal`
//! (ziggurat). Results therefore never depend on thread count or execution
//! order.

use dta_core::{Dataset, Sym2, Vec2};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Result, SimError};

pub type SimRng = Xoshiro256PlusPlus;

/// Inclusive truncation interval for simulated within-study variances.
pub const WITHIN_VAR_RANGE: (f64, f64) = (0.009, 0.6);
/// Scale applied to a `χ²₁` draw.
pub const WITHIN_VAR_SCALE: f64 = 0.25;
const MAX_REJECTIONS: usize = 10_000;

/// How draws of `0.25·χ²₁` are confined to [`WITHIN_VAR_RANGE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Out-of-range draws are redrawn. Mean ≈ 0.173.
    #[default]
    Reject,
    /// Out-of-range draws are set to the nearest bound. Mean ≈ 0.200.
    Clip,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for one replication of one scenario.
pub fn stream_seed(seed: u64, scenario: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ scenario) ^ rep)
}

pub fn stream(seed: u64, scenario: u64, rep: u64) -> SimRng {
    SimRng::seed_from_u64(stream_seed(seed, scenario, rep))
}

pub fn standard_normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

/// One within-study variance `0.25·Z²`, confined to `[0.009, 0.6]`.
pub fn draw_within_variance(mode: Truncation, rng: &mut SimRng) -> Result<f64> {
    let (lo, hi) = WITHIN_VAR_RANGE;
    if mode == Truncation::Clip {
        let z = standard_normal(rng);
        return Ok((WITHIN_VAR_SCALE * z * z).clamp(lo, hi));
    }
    for _ in 0..MAX_REJECTIONS {
        let z = standard_normal(rng);
        let v = WITHIN_VAR_SCALE * z * z;
        if (lo..=hi).contains(&v) {
            return Ok(v);
        }
    }
    Err(SimError::RejectionExhausted(MAX_REJECTIONS))
}

/// `n` independent `(s_a, s_b)` pairs, truncated by rejection.
pub fn gen_within_variances(n: usize, rng: &mut SimRng) -> Result<Vec<Vec2>> {
    gen_within_variances_with(n, Truncation::Reject, rng)
}

pub fn gen_within_variances_with(n: usize, mode: Truncation, rng: &mut SimRng) -> Result<Vec<Vec2>> {
    (0..n).map(|_| Ok([draw_within_variance(mode, rng)?, draw_within_variance(mode, rng)?])).collect()
}

/// Draws `y_i ~ N₂(beta, sigma + S_i)` for each frozen within-study variance
/// pair, using the Cholesky factor of `sigma + S_i`.
pub fn draw_outcomes(beta: Vec2, sigma: &Sym2, within: &[Vec2], rng: &mut SimRng) -> Result<Vec<Vec2>> {
    within
        .iter()
        .map(|s| {
            let l = (*sigma + Sym2::diag(s[0], s[1])).cholesky()?;
            let z = [standard_normal(rng), standard_normal(rng)];
            let e = l.mul_vec(z);
            Ok([beta[0] + e[0], beta[1] + e[1]])
        })
        .collect()
}

/// Full draw for one replication: within-study variances first, then outcomes.
pub fn draw_dataset(
    beta: Vec2,
    sigma: &Sym2,
    n: usize,
    mode: Truncation,
    rng: &mut SimRng,
) -> Result<Dataset> {
    let within = gen_within_variances_with(n, mode, rng)?;
    let ys = draw_outcomes(beta, sigma, &within, rng)?;
    Ok(Dataset::from_pairs(&ys, &within)?)
}
