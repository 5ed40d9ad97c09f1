//! # distgame
//!
//! Exact, finite-support versions of four estimators that share the
//! distinguishability-game value function
//!
//! ```text
//! V(p_c, p_g) = E_{x∼p_d} log p_c(y=1|x) + E_{x∼p_g} log p_c(y=0|x)
//! ```
//!
//! - maximum likelihood (MLE),
//! - noise-contrastive estimation (NCE) against a fixed noise table,
//! - self-contrastive estimation (SCE), i.e. NCE whose noise is a frozen copy
//!   of the current model,
//! - the GAN generator/discriminator game with three generator costs.
//!
//! Models are tabular softmax families, data are exact probability tables, so
//! every expectation is a finite sum. That turns the relationships between
//! the estimators into checkable equalities:
//!
//! | identity | where |
//! |----------|-------|
//! | SCE gradient = ½ · MLE gradient | [`estimators::sce_gradient`] |
//! | SCE objective ≡ −2 ln 2 | [`estimators::sce_objective_value`] |
//! | generator gradient with `f = −exp(a*)` = −MLE gradient | [`game::generator_gradient_exact`] |
//! | cost offsets do not change the generator gradient | [`game::GeneratorCostVariant`] |
//!
//! [`game::dynamics`] simulates simultaneous and alternating gradient play,
//! including the bilinear game `V(u, v) = u·v`, and [`analysis`] holds the
//! finite-difference oracle and the Monte-Carlo variance study.

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod game;
pub mod models;
pub mod special;
pub mod suites;

pub use error::{Error, Result};
pub use estimators::Discriminator;
pub use game::{CostKind, GeneratorCostVariant};
pub use models::{DistributionTable, ParamVector, Support};
