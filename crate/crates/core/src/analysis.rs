//! Independent oracles and the Monte-Carlo variance study.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Discriminator;
use crate::game::{
    generator_gradient_exact, mc_generator_gradient, optimal_discriminator, CostKind,
    GeneratorCostVariant,
};
use crate::models::{softmax_probs, DistributionTable, ParamVector, ONE_HOT_EPSILON};

/// Floor on the reference magnitude in relative differences.
pub const REL_DENOMINATOR_FLOOR: f64 = 1e-12;

/// Central-difference gradient of `objective` at `theta`.
pub fn finite_difference_gradient<F>(objective: F, theta: &ParamVector, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "step h must be positive, got {h}"
        )));
    }
    let base = theta.as_slice();
    let mut grad = Vec::with_capacity(base.len());
    for j in 0..base.len() {
        let mut plus = base.to_vec();
        let mut minus = base.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let f_plus = objective(&ParamVector::new(plus)?)?;
        let f_minus = objective(&ParamVector::new(minus)?)?;
        if !(f_plus.is_finite() && f_minus.is_finite()) {
            return Err(Error::NonFinite(format!(
                "objective at θ ± h·e_{j}: {f_plus}, {f_minus}"
            )));
        }
        grad.push((f_plus - f_minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Outcome of comparing a candidate vector against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub candidate: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// Per-component `|c − r| / max(|r|, 1e-12)`. Components where both `|c|`
/// and `|r|` are below `1e-12` are treated as equal (relative difference 0).
pub fn compare_gradients(
    candidate: &[f64],
    reference: &[f64],
    tolerance: f64,
) -> Result<GradientReport> {
    if candidate.len() != reference.len() {
        return Err(Error::LengthMismatch(candidate.len(), reference.len()));
    }
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut saw_nan = false;
    for (&c, &r) in candidate.iter().zip(reference) {
        let abs = (c - r).abs();
        let rel = if c.abs() < REL_DENOMINATOR_FLOOR && r.abs() < REL_DENOMINATOR_FLOOR {
            0.0
        } else {
            abs / r.abs().max(REL_DENOMINATOR_FLOOR)
        };
        saw_nan |= rel.is_nan();
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
    }
    if saw_nan {
        max_abs = f64::NAN;
        max_rel = f64::NAN;
    }
    Ok(GradientReport {
        candidate: candidate.to_vec(),
        reference: reference.to_vec(),
        max_abs_diff: max_abs,
        max_rel_diff: max_rel,
        pass: max_rel <= tolerance,
        tolerance,
    })
}

/// Like [`compare_gradients`] but every component is scaled by `‖r‖∞`
/// (floored at 1e-12): `max_rel_diff = ‖c − r‖∞ / ‖r‖∞`.
///
/// Finite differences carry an absolute error of order `ε·|objective|/h`
/// regardless of how small an individual component is, so gradient checks
/// against them use this norm-wise measure.
pub fn compare_gradients_normwise(
    candidate: &[f64],
    reference: &[f64],
    tolerance: f64,
) -> Result<GradientReport> {
    if candidate.len() != reference.len() {
        return Err(Error::LengthMismatch(candidate.len(), reference.len()));
    }
    let scale = reference
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
        .max(REL_DENOMINATOR_FLOOR);
    let mut max_abs = 0.0f64;
    let mut saw_nan = false;
    for (c, r) in candidate.iter().zip(reference) {
        let d = (c - r).abs();
        saw_nan |= d.is_nan();
        max_abs = max_abs.max(d);
    }
    if saw_nan {
        max_abs = f64::NAN;
    }
    let max_rel = max_abs / scale;
    Ok(GradientReport {
        candidate: candidate.to_vec(),
        reference: reference.to_vec(),
        max_abs_diff: max_abs,
        max_rel_diff: max_rel,
        pass: max_rel <= tolerance,
        tolerance,
    })
}

/// Random logits with entries uniform in `[-3, 3]`.
pub fn random_theta<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ParamVector {
    ParamVector::new((0..k).map(|_| rng.random_range(-3.0..=3.0)).collect())
        .expect("bounded logits are finite")
}

/// Random strictly positive table: softmax of [`random_theta`].
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, k: usize) -> DistributionTable {
    softmax_probs(&random_theta(rng, k)).expect("softmax of finite logits")
}

/// The fixed high-variance setting: `K = 128`, data an ε-smoothed one-hot on
/// outcome 0, uniform generator, optimal discriminator.
#[derive(Debug, Clone)]
pub struct ConcentratedScenario {
    pub p_d: DistributionTable,
    pub theta_g: ParamVector,
    pub disc: Discriminator,
}

pub const CONCENTRATED_K: usize = 128;

pub fn concentrated_scenario() -> ConcentratedScenario {
    let p_d = DistributionTable::smoothed_one_hot(CONCENTRATED_K, 0, ONE_HOT_EPSILON)
        .expect("valid one-hot");
    let theta_g = ParamVector::zeros(CONCENTRATED_K);
    let p_g = softmax_probs(&theta_g).expect("uniform");
    let disc = optimal_discriminator(&p_d, &p_g).expect("same support");
    ConcentratedScenario { p_d, theta_g, disc }
}

/// Closed-form per-sample variance of the score-function estimator,
/// `Σ_x p_g(x) ‖f(a(x))·score(x) − g*‖²` with `g*` the exact gradient.
pub fn exact_per_sample_variance(
    variant: GeneratorCostVariant,
    disc: &Discriminator,
    theta_g: &ParamVector,
) -> Result<f64> {
    let exact = generator_gradient_exact(variant, disc, theta_g)?;
    let p_g = softmax_probs(theta_g)?;
    let p = p_g.probs();
    Ok(p.iter()
        .zip(disc.logits())
        .enumerate()
        .map(|(x, (px, &a))| {
            let f = variant.eval(a);
            let sq: f64 = p
                .iter()
                .zip(&exact)
                .enumerate()
                .map(|(j, (pj, gj))| {
                    let s = if j == x { 1.0 - pj } else { -pj };
                    (f * s - gj).powi(2)
                })
                .sum();
            px * sq
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudyRow {
    pub variant: CostKind,
    pub n_samples: usize,
    pub per_sample_variance: f64,
    pub grad_error_norm: f64,
}

/// Monte-Carlo estimates for every cost kind and sample size on the
/// concentrated scenario, sorted by `(variant, n_samples)`.
pub fn variance_study(n_samples_list: &[usize], seed: u64) -> Result<Vec<VarianceStudyRow>> {
    if let Some(&bad) = n_samples_list.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidSampleCount(bad));
    }
    let scenario = concentrated_scenario();
    let cells: Vec<(CostKind, usize)> = CostKind::ALL
        .iter()
        .flat_map(|&k| n_samples_list.iter().map(move |&n| (k, n)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(kind, n)| {
            let variant = GeneratorCostVariant::new(kind);
            let exact = generator_gradient_exact(variant, &scenario.disc, &scenario.theta_g)?;
            let est = mc_generator_gradient(variant, &scenario.disc, &scenario.theta_g, n, seed)?;
            let err = est
                .gradient
                .iter()
                .zip(&exact)
                .map(|(e, x)| (e - x).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(VarianceStudyRow {
                variant: kind,
                n_samples: n,
                per_sample_variance: est.per_sample_variance,
                grad_error_norm: err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.variant, r.n_samples));
    Ok(rows)
}
