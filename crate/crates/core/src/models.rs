//! Finite-support softmax families.
//!
//! Every model in the crate is a tabular softmax over `K` outcomes: one logit
//! per outcome, probabilities `p(x) = exp(θ_x) / Σ_j exp(θ_j)`. The family is
//! strictly positive by construction and its score function has the closed
//! form `∂/∂θ log p(x) = onehot(x) − p`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::log_sum_exp;

/// Tolerance on `|Σ p − 1|` accepted by [`DistributionTable::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Mass spread over the cold outcomes of a smoothed one-hot table.
pub const ONE_HOT_EPSILON: f64 = 1e-9;

/// Ordered set of distinct outcome labels; position is the outcome index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    outcomes: Vec<String>,
}

impl Support {
    pub fn new<I, S>(outcomes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let outcomes: Vec<String> = outcomes.into_iter().map(Into::into).collect();
        if outcomes.len() < 2 {
            return Err(Error::SupportTooSmall(outcomes.len()));
        }
        let mut seen = HashSet::with_capacity(outcomes.len());
        for o in &outcomes {
            if !seen.insert(o.as_str()) {
                return Err(Error::DuplicateOutcome(o.clone()));
            }
        }
        Ok(Self { outcomes })
    }

    /// Support labelled `"0"`, `"1"`, ..., `"k-1"`.
    pub fn indexed(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.outcomes.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }
}

/// Real vector of logits. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    logits: Vec<f64>,
}

impl ParamVector {
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::InvalidConfig("parameter vector is empty".into()));
        }
        if let Some((index, &value)) = logits.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter { index, value });
        }
        Ok(Self { logits })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            logits: vec![0.0; k.max(1)],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.logits
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.logits
    }

    pub fn norm_inf(&self) -> f64 {
        self.logits.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.logits.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Strictly positive probability table over `K ≥ 2` outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    probs: Vec<f64>,
}

impl DistributionTable {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::SupportTooSmall(probs.len()));
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::NotPositive { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        Ok(Self { probs })
    }

    /// Normalizes strictly positive weights into a table.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::NotPositive { index, value });
        }
        let total: f64 = weights.iter().sum();
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::SupportTooSmall(k));
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    /// One-hot table on `hot` relaxed so that `epsilon` total mass is spread
    /// uniformly over the other `k − 1` outcomes.
    pub fn smoothed_one_hot(k: usize, hot: usize, epsilon: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::SupportTooSmall(k));
        }
        if hot >= k {
            return Err(Error::IndexOutOfRange { index: hot, k });
        }
        let cold = epsilon / (k - 1) as f64;
        let mut probs = vec![cold; k];
        probs[hot] = 1.0 - epsilon;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn log_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.ln()).collect()
    }

    pub(crate) fn check_same_support(&self, k: usize) -> Result<()> {
        check_len(k, self.len())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::SupportMismatch { expected, found })
    }
}

/// `log softmax(θ)` via max-subtracted log-sum-exp.
pub fn log_softmax(theta: &ParamVector) -> Vec<f64> {
    let lse = log_sum_exp(theta.as_slice());
    theta.as_slice().iter().map(|t| t - lse).collect()
}

/// Softmax probabilities of `theta`.
pub fn softmax_probs(theta: &ParamVector) -> Result<DistributionTable> {
    if theta.len() < 2 {
        return Err(Error::SupportTooSmall(theta.len()));
    }
    let s = theta.as_slice();
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = s.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|e| e / total).collect();
    DistributionTable::new(probs)
}

/// Score `∂/∂θ log p(x; θ)`, component `j` equal to `[j = x] − p_j`.
pub fn softmax_score(theta: &ParamVector, x: usize) -> Result<Vec<f64>> {
    let p = softmax_probs(theta)?;
    score_at(&p, x)
}

/// Score of outcome `x` given the softmax probabilities it was built from.
pub fn score_at(p: &DistributionTable, x: usize) -> Result<Vec<f64>> {
    let k = p.len();
    if x >= k {
        return Err(Error::IndexOutOfRange { index: x, k });
    }
    let mut s: Vec<f64> = p.probs().iter().map(|pj| -pj).collect();
    s[x] += 1.0;
    Ok(s)
}

/// `Σ_x w_x · score(x)` for a softmax with probabilities `p`.
///
/// Collapses to `w − (Σ w)·p`, so every expectation of a weighted score costs
/// O(K) instead of O(K²).
pub fn weighted_score_sum(p: &DistributionTable, weights: &[f64]) -> Result<Vec<f64>> {
    check_len(p.len(), weights.len())?;
    let total: f64 = weights.iter().sum();
    Ok(weights
        .iter()
        .zip(p.probs())
        .map(|(w, pj)| w - total * pj)
        .collect())
}
