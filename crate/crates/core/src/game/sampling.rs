//! Monte-Carlo score-function estimate of the generator gradient.
//!
//! Sample `i` reads word pair `2i` of a ChaCha8 stream keyed by the seed, so
//! the draw for a given sample index does not depend on how samples are split
//! across workers. Outcomes are then tallied; since a single-sample estimate
//! depends only on the drawn outcome, mean and variance follow exactly from
//! the integer counts.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Discriminator;
use crate::models::{check_len, softmax_probs, weighted_score_sum, DistributionTable, ParamVector};

use super::GeneratorCostVariant;

const CHUNK: usize = 1 << 16;

/// Sample mean of `f(a(x))·score(θ_g, x)` and the per-sample variance
/// (mean squared Euclidean distance to that mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub gradient: Vec<f64>,
    pub per_sample_variance: f64,
}

fn unit_uniform(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF lookup: first index whose cumulative mass exceeds `u·total`.
fn invert(cdf: &[f64], u: f64) -> usize {
    let total = cdf[cdf.len() - 1];
    let target = u * total;
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Outcome counts for samples `0..n` drawn from `p`.
pub fn sample_counts(p: &DistributionTable, n_samples: usize, seed: u64) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &pi in p.probs() {
        acc += pi;
        cdf.push(acc);
    }
    let n_chunks = n_samples.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n_samples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_word_pos(2 * start as u128);
            let mut counts = vec![0u64; cdf.len()];
            for _ in start..end {
                counts[invert(&cdf, unit_uniform(rng.next_u64()))] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; cdf.len()],
            |mut acc, part| {
                acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
                acc
            },
        )
}

/// Score-function estimate of `∇_θ E_{x∼p_g} f(a(x))` from `n_samples`
/// draws of `softmax(theta_g)`.
pub fn mc_generator_gradient(
    variant: GeneratorCostVariant,
    disc: &Discriminator,
    theta_g: &ParamVector,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidSampleCount(n_samples));
    }
    check_len(theta_g.len(), disc.len())?;
    let p_g = softmax_probs(theta_g)?;
    let counts = sample_counts(&p_g, n_samples, seed);
    let n = n_samples as f64;
    let costs: Vec<f64> = disc.logits().iter().map(|&a| variant.eval(a)).collect();

    let weights: Vec<f64> = counts
        .iter()
        .zip(&costs)
        .map(|(&c, f)| c as f64 / n * f)
        .collect();
    let mean = weighted_score_sum(&p_g, &weights)?;

    // ‖f_x (e_x − p) − m‖² for each observed outcome x.
    let mut variance = 0.0;
    for (x, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let f = costs[x];
        let sq: f64 = p_g
            .probs()
            .iter()
            .zip(&mean)
            .enumerate()
            .map(|(j, (pj, mj))| {
                let s = if j == x { 1.0 - pj } else { -pj };
                let d = f * s - mj;
                d * d
            })
            .sum();
        variance += c as f64 / n * sq;
    }

    Ok(McEstimate {
        gradient: mean,
        per_sample_variance: variance,
    })
}
