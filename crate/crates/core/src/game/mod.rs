//! Generator side of the distinguishability game.
//!
//! A generator step decreases `E_{x∼p_g} f(a(x))` where `a` is the
//! discriminator's log-odds and `f` is one of three pointwise costs:
//!
//! | kind                | f(a)        |
//! |---------------------|-------------|
//! | `Minimax`           | −ζ(a)       |
//! | `Heuristic`         | −log σ(a)   |
//! | `MaximumLikelihood` | −exp(a)     |
//!
//! With the discriminator at its optimum `a* = log p_d − log p_g`, only the
//! `MaximumLikelihood` cost turns the generator gradient into the (negated)
//! log-likelihood gradient.

pub mod dynamics;
pub mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{log_ratio, Discriminator};
use crate::models::{check_len, softmax_probs, weighted_score_sum, DistributionTable, ParamVector};
use crate::special::{sigmoid, softplus};

pub use dynamics::{
    diagnose_trajectory, simulate, simulate_bilinear, simulate_dynamics, BilinearGame,
    DynamicsConfig, DynamicsReport, Game, GameTrajectory, Snapshot, TabularGame, UpdateMode,
    Verdict, DIVERGENCE_CAP, OSCILLATION_VARIANCE_FLOOR,
};
pub use sampling::{mc_generator_gradient, McEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Minimax,
    Heuristic,
    MaximumLikelihood,
}

impl CostKind {
    pub const ALL: [CostKind; 3] = [
        CostKind::Minimax,
        CostKind::Heuristic,
        CostKind::MaximumLikelihood,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Minimax => "minimax",
            CostKind::Heuristic => "heuristic",
            CostKind::MaximumLikelihood => "maximum_likelihood",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimax" => Ok(CostKind::Minimax),
            "heuristic" => Ok(CostKind::Heuristic),
            "maximum_likelihood" | "mle" => Ok(CostKind::MaximumLikelihood),
            other => Err(Error::InvalidConfig(format!("unknown cost kind {other:?}"))),
        }
    }
}

/// Pointwise generator cost `f(a) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCostVariant {
    pub kind: CostKind,
    pub offset: f64,
}

impl GeneratorCostVariant {
    pub fn new(kind: CostKind) -> Self {
        Self { kind, offset: 0.0 }
    }

    pub fn with_offset(kind: CostKind, offset: f64) -> Self {
        Self { kind, offset }
    }

    pub fn eval(&self, a: f64) -> f64 {
        let base = match self.kind {
            CostKind::Minimax => -softplus(a),
            CostKind::Heuristic => softplus(-a),
            CostKind::MaximumLikelihood => -a.exp(),
        };
        base + self.offset
    }

    /// `df/da`; negative everywhere.
    pub fn slope(&self, a: f64) -> f64 {
        match self.kind {
            CostKind::Minimax => -sigmoid(a),
            CostKind::Heuristic => -sigmoid(-a),
            CostKind::MaximumLikelihood => -a.exp(),
        }
    }
}

impl From<CostKind> for GeneratorCostVariant {
    fn from(kind: CostKind) -> Self {
        Self::new(kind)
    }
}

/// Discriminator maximizing `V` for fixed `p_d`, `p_g`: `σ(a*) = p_d / (p_d + p_g)`.
pub fn optimal_discriminator(
    p_d: &DistributionTable,
    p_g: &DistributionTable,
) -> Result<Discriminator> {
    log_ratio(p_d, p_g)
}

pub fn generator_cost(variant: GeneratorCostVariant, a: f64) -> f64 {
    variant.eval(a)
}

/// Exact `∇_θ E_{x∼p_g(θ)} f(a(x)) = Σ_x f(a(x)) p_g(x; θ) score(θ, x)`.
pub fn generator_gradient_exact(
    variant: GeneratorCostVariant,
    disc: &Discriminator,
    theta_g: &ParamVector,
) -> Result<Vec<f64>> {
    check_len(theta_g.len(), disc.len())?;
    let p_g = softmax_probs(theta_g)?;
    let weights: Vec<f64> = disc
        .logits()
        .iter()
        .zip(p_g.probs())
        .map(|(&a, pg)| variant.eval(a) * pg)
        .collect();
    weighted_score_sum(&p_g, &weights)
}

/// Generator objective `Σ_x f(a(x)) p_g(x; θ)`.
pub fn generator_objective(
    variant: GeneratorCostVariant,
    disc: &Discriminator,
    theta_g: &ParamVector,
) -> Result<f64> {
    check_len(theta_g.len(), disc.len())?;
    let p_g = softmax_probs(theta_g)?;
    Ok(disc
        .logits()
        .iter()
        .zip(p_g.probs())
        .map(|(&a, pg)| variant.eval(a) * pg)
        .sum())
}

/// `∂V/∂a(x) = p_d(x) σ(−a(x)) − p_g(x) σ(a(x))`.
pub fn discriminator_gradient(
    disc: &Discriminator,
    p_d: &DistributionTable,
    p_g: &DistributionTable,
) -> Result<Vec<f64>> {
    let k = disc.len();
    p_d.check_same_support(k)?;
    p_g.check_same_support(k)?;
    Ok(disc
        .logits()
        .iter()
        .zip(p_d.probs())
        .zip(p_g.probs())
        .map(|((&a, pd), pg)| pd * sigmoid(-a) - pg * sigmoid(a))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCurveRow {
    pub a: f64,
    pub f_minimax: f64,
    pub f_heuristic: f64,
    pub f_mle: f64,
}

/// The three pointwise costs on `n_points` evenly spaced logits in `[a_min, a_max]`.
pub fn cost_curve(a_min: f64, a_max: f64, n_points: usize) -> Result<Vec<CostCurveRow>> {
    if !(a_min.is_finite() && a_max.is_finite()) || a_min >= a_max {
        return Err(Error::InvalidRange(format!(
            "need finite a_min < a_max, got [{a_min}, {a_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidRange(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    let span = a_max - a_min;
    let last = (n_points - 1) as f64;
    let minimax = GeneratorCostVariant::new(CostKind::Minimax);
    let heuristic = GeneratorCostVariant::new(CostKind::Heuristic);
    let mle = GeneratorCostVariant::new(CostKind::MaximumLikelihood);
    Ok((0..n_points)
        .map(|i| {
            let a = if i + 1 == n_points {
                a_max
            } else {
                a_min + span * i as f64 / last
            };
            CostCurveRow {
                a,
                f_minimax: minimax.eval(a),
                f_heuristic: heuristic.eval(a),
                f_mle: mle.eval(a),
            }
        })
        .collect())
}
