//! Value function of the distinguishability game and the MLE, NCE and SCE
//! gradients, all computed exactly over a finite support.
//!
//! Data enter as an exact table `p_d` (the infinite-sample regime), so every
//! expectation here is a finite sum and the identities relating the
//! estimators hold up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{check_len, softmax_probs, weighted_score_sum, DistributionTable, ParamVector};
use crate::special::{log_sigmoid, sigmoid};

/// Tabular classifier: one log-odds value `a(x)` per outcome, with
/// `p_c(y = 1 | x) = σ(a(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    logit_table: Vec<f64>,
}

impl Discriminator {
    pub fn new(logit_table: Vec<f64>) -> Result<Self> {
        if logit_table.is_empty() {
            return Err(Error::InvalidConfig("discriminator table is empty".into()));
        }
        if let Some((index, &value)) = logit_table.iter().enumerate().find(|(_, a)| !a.is_finite())
        {
            return Err(Error::InvalidParameter { index, value });
        }
        Ok(Self { logit_table })
    }

    /// Discriminator with `a ≡ c`.
    pub fn constant(k: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; k])
    }

    pub fn logits(&self) -> &[f64] {
        &self.logit_table
    }

    pub fn len(&self) -> usize {
        self.logit_table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logit_table.is_empty()
    }

    /// `p_c(y = 1 | x)` for every outcome.
    pub fn classifier_probs(&self) -> Vec<f64> {
        self.logit_table.iter().map(|&a| sigmoid(a)).collect()
    }

    pub fn norm2(&self) -> f64 {
        self.logit_table.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `V = Σ_x p_d(x) log σ(a(x)) + Σ_x p_g(x) log σ(−a(x))`.
pub fn value_function(
    p_d: &DistributionTable,
    p_g: &DistributionTable,
    disc: &Discriminator,
) -> Result<f64> {
    let k = p_d.len();
    p_g.check_same_support(k)?;
    check_len(k, disc.len())?;
    Ok(p_d
        .probs()
        .iter()
        .zip(p_g.probs())
        .zip(disc.logits())
        .map(|((pd, pg), &a)| pd * log_sigmoid(a) + pg * log_sigmoid(-a))
        .sum())
}

/// NCE classifier `σ(a) = p_m / (p_m + p_g)`, i.e. `a = log p_m − log p_g`.
pub fn nce_discriminator(
    p_m: &DistributionTable,
    p_g: &DistributionTable,
) -> Result<Discriminator> {
    log_ratio(p_m, p_g)
}

pub(crate) fn log_ratio(num: &DistributionTable, den: &DistributionTable) -> Result<Discriminator> {
    num.check_same_support(den.len())?;
    Discriminator::new(
        num.probs()
            .iter()
            .zip(den.probs())
            .map(|(n, d)| n.ln() - d.ln())
            .collect(),
    )
}

/// NCE objective: `V` with the classifier induced by `softmax(θ)` against `p_g`.
pub fn nce_objective(
    theta: &ParamVector,
    p_g: &DistributionTable,
    p_d: &DistributionTable,
) -> Result<f64> {
    p_g.check_same_support(theta.len())?;
    p_d.check_same_support(theta.len())?;
    let p_m = softmax_probs(theta)?;
    let disc = nce_discriminator(&p_m, p_g)?;
    value_function(p_d, p_g, &disc)
}

/// Exact gradient of [`nce_objective`] in `θ`, holding `p_g` fixed:
/// `Σ_x p_d(x) σ(−a(x)) score(x) − Σ_x p_g(x) σ(a(x)) score(x)`.
pub fn nce_gradient(
    theta: &ParamVector,
    p_g: &DistributionTable,
    p_d: &DistributionTable,
) -> Result<Vec<f64>> {
    p_g.check_same_support(theta.len())?;
    p_d.check_same_support(theta.len())?;
    let p_m = softmax_probs(theta)?;
    let disc = nce_discriminator(&p_m, p_g)?;
    let weights: Vec<f64> = p_d
        .probs()
        .iter()
        .zip(p_g.probs())
        .zip(disc.logits())
        .map(|((pd, pg), &a)| pd * sigmoid(-a) - pg * sigmoid(a))
        .collect();
    weighted_score_sum(&p_m, &weights)
}

/// Log-likelihood gradient `Σ_x p_d(x) score(θ, x)`.
pub fn mle_gradient(theta: &ParamVector, p_d: &DistributionTable) -> Result<Vec<f64>> {
    p_d.check_same_support(theta.len())?;
    let p_m = softmax_probs(theta)?;
    weighted_score_sum(&p_m, p_d.probs())
}

/// Expected log-likelihood `Σ_x p_d(x) log p_m(x; θ)`.
pub fn log_likelihood(theta: &ParamVector, p_d: &DistributionTable) -> Result<f64> {
    p_d.check_same_support(theta.len())?;
    let lp = crate::models::log_softmax(theta);
    Ok(p_d.probs().iter().zip(&lp).map(|(p, l)| p * l).sum())
}

/// Snapshot of the current model used as SCE noise. Holds only numbers, so
/// differentiating through it is impossible by construction.
fn frozen_copy(theta: &ParamVector) -> Result<DistributionTable> {
    let p = softmax_probs(theta)?;
    DistributionTable::new(p.probs().to_vec())
}

/// Self-contrastive gradient: NCE against a frozen copy of the current model.
/// Equals half the MLE gradient.
pub fn sce_gradient(theta: &ParamVector, p_d: &DistributionTable) -> Result<Vec<f64>> {
    p_d.check_same_support(theta.len())?;
    let p_g = frozen_copy(theta)?;
    nce_gradient(theta, &p_g, p_d)
}

/// SCE objective at the point where the noise was copied. Always `−2 ln 2`.
pub fn sce_objective_value(theta: &ParamVector, p_d: &DistributionTable) -> Result<f64> {
    p_d.check_same_support(theta.len())?;
    let p_g = frozen_copy(theta)?;
    nce_objective(theta, &p_g, p_d)
}

/// `E_{x∼p_g} ∂/∂θ log(p_m(x) + p_g(x))` with `p_g` the frozen copy, i.e.
/// `Σ_x p_g(x) p_m(x) score(x) / (p_m(x) + p_g(x))`. Identically zero.
pub fn vanishing_term(theta: &ParamVector) -> Result<Vec<f64>> {
    let p_m = softmax_probs(theta)?;
    let p_g = frozen_copy(theta)?;
    let weights: Vec<f64> = p_g
        .probs()
        .iter()
        .zip(p_m.probs())
        .map(|(pg, pm)| pg * pm / (pm + pg))
        .collect();
    weighted_score_sum(&p_m, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn table(v: &[f64]) -> DistributionTable {
        DistributionTable::new(v.to_vec()).unwrap()
    }

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn value_at_indistinguishable_point() {
        let p = table(&[0.2, 0.3, 0.5]);
        let v = value_function(&p, &p, &Discriminator::constant(3, 0.0).unwrap()).unwrap();
        assert!((v + 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn value_perfect_classifier_limit() {
        // Strict positivity rules out disjoint supports; 1e-15 of leaked mass
        // keeps the limit below 1e-12.
        let p_d = table(&[1.0 - 1e-15, 1e-15]);
        let p_g = table(&[1e-15, 1.0 - 1e-15]);
        let disc = Discriminator::new(vec![30.0, -30.0]).unwrap();
        let v = value_function(&p_d, &p_g, &disc).unwrap();
        assert!(v <= 0.0 && v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn value_hand_example() {
        let l3 = 3f64.ln();
        let v = value_function(
            &table(&[0.75, 0.25]),
            &table(&[0.25, 0.75]),
            &Discriminator::new(vec![l3, -l3]).unwrap(),
        )
        .unwrap();
        let expected = 2.0 * (0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((v - expected).abs() < 1e-15);
        assert!((v + 1.1246).abs() < 1e-4);
    }

    #[test]
    fn value_support_mismatch() {
        let err = value_function(
            &table(&[0.5, 0.5]),
            &table(&[0.2, 0.3, 0.5]),
            &Discriminator::constant(2, 0.0).unwrap(),
        );
        assert_eq!(
            err,
            Err(Error::SupportMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn nce_discriminator_examples() {
        let p = table(&[0.1, 0.9]);
        assert_eq!(nce_discriminator(&p, &p).unwrap().logits(), &[0.0, 0.0]);

        let d = nce_discriminator(&table(&[0.75, 0.25]), &table(&[0.5, 0.5])).unwrap();
        assert!((d.classifier_probs()[0] - 0.6).abs() < 1e-15);

        let d = nce_discriminator(&table(&[0.75, 0.25]), &table(&[0.25, 0.75])).unwrap();
        assert!((d.logits()[0] - 3f64.ln()).abs() < 1e-15);
        assert!((d.logits()[1] + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn nce_objective_examples() {
        let half = table(&[0.5, 0.5]);
        let v = nce_objective(&pv(&[3f64.ln(), 0.0]), &half, &half).unwrap();
        let expected = 0.5 * 0.6f64.ln()
            + 0.5 * (1.0f64 / 3.0).ln()
            + 0.5 * 0.4f64.ln()
            + 0.5 * (2.0f64 / 3.0).ln();
        assert!((v - expected).abs() < 1e-15);
        assert!((v + 1.4656).abs() < 1e-4);

        let theta = pv(&[0.4, -0.3, 1.1]);
        let p_g = softmax_probs(&theta).unwrap();
        let v = nce_objective(&theta, &p_g, &table(&[0.7, 0.2, 0.1])).unwrap();
        assert!((v + 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradients_vanish_at_data_distribution() {
        let theta = pv(&[0.4, -0.3, 1.1]);
        let p = softmax_probs(&theta).unwrap();
        for g in [
            nce_gradient(&theta, &p, &p).unwrap(),
            mle_gradient(&theta, &p).unwrap(),
            sce_gradient(&theta, &p).unwrap(),
        ] {
            assert!(g.iter().all(|c| c.abs() < 1e-15), "{g:?}");
        }
    }

    #[test]
    fn nce_gradient_components_sum_to_zero() {
        let theta = pv(&[2.0, -0.3, 0.0, 1.0]);
        let g = nce_gradient(
            &theta,
            &table(&[0.1, 0.2, 0.3, 0.4]),
            &table(&[0.4, 0.3, 0.2, 0.1]),
        )
        .unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn mle_and_sce_near_one_hot() {
        let theta = pv(&[0.0, 0.0]);
        let p_d = DistributionTable::smoothed_one_hot(2, 0, 1e-9).unwrap();
        let mle = mle_gradient(&theta, &p_d).unwrap();
        assert!((mle[0] - 0.5).abs() < 1e-8 && (mle[1] + 0.5).abs() < 1e-8);
        let sce = sce_gradient(&theta, &p_d).unwrap();
        assert!((sce[0] - 0.25).abs() < 1e-8 && (sce[1] + 0.25).abs() < 1e-8);
    }

    #[test]
    fn sce_objective_examples() {
        let p_d = table(&[0.05, 0.15, 0.8]);
        for theta in [pv(&[0.0, 0.0, 0.0]), pv(&[5.0, -3.0, 0.2])] {
            let v = sce_objective_value(&theta, &p_d).unwrap();
            assert!((v + 2.0 * LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_term_examples() {
        assert_eq!(vanishing_term(&pv(&[0.0, 0.0])).unwrap(), vec![0.0, 0.0]);
        let v = vanishing_term(&pv(&[3f64.ln(), 0.0])).unwrap();
        assert!(v.iter().all(|c| c.abs() <= 1e-14), "{v:?}");
    }

    #[test]
    fn errors_on_mismatch() {
        let theta = pv(&[0.0, 0.0, 0.0]);
        let two = table(&[0.5, 0.5]);
        assert!(matches!(
            mle_gradient(&theta, &two),
            Err(Error::SupportMismatch { .. })
        ));
        assert!(matches!(
            sce_gradient(&theta, &two),
            Err(Error::SupportMismatch { .. })
        ));
        assert!(matches!(
            sce_objective_value(&theta, &two),
            Err(Error::SupportMismatch { .. })
        ));
        assert!(matches!(
            nce_gradient(&theta, &two, &two),
            Err(Error::SupportMismatch { .. })
        ));
    }
}
