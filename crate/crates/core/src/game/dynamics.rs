//! Two-player gradient dynamics.
//!
//! The discriminator ascends `V`; the generator descends its expected cost.
//! Players either step together from the same snapshot or alternate, with
//! several discriminator steps per generator step. The tabular softmax game
//! and the bilinear game `V(u, v) = u·v` share the same driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{value_function, Discriminator};
use crate::models::{check_len, softmax_probs, DistributionTable, ParamVector};

use super::{discriminator_gradient, generator_gradient_exact, GeneratorCostVariant};

/// `‖θ‖∞` (or `|V|`) beyond which a trajectory counts as diverging.
pub const DIVERGENCE_CAP: f64 = 1e6;

/// Minimum tail variance of `θ_g` for an `Oscillating` verdict.
pub const OSCILLATION_VARIANCE_FLOOR: f64 = 1e-12;

/// Gradient oracle for a two-player game.
pub trait Game {
    fn value(&self, gen: &ParamVector, disc: &Discriminator) -> Result<f64>;

    /// Gradient of the generator's cost; the generator steps against it.
    fn generator_gradient(&self, gen: &ParamVector, disc: &Discriminator) -> Result<Vec<f64>>;

    /// Gradient of `V` in the discriminator parameters; the discriminator steps along it.
    fn discriminator_gradient(&self, gen: &ParamVector, disc: &Discriminator) -> Result<Vec<f64>>;
}

/// Softmax generator against a tabular discriminator on a fixed data table.
#[derive(Debug, Clone)]
pub struct TabularGame {
    pub p_d: DistributionTable,
    pub cost: GeneratorCostVariant,
}

impl Game for TabularGame {
    fn value(&self, gen: &ParamVector, disc: &Discriminator) -> Result<f64> {
        value_function(&self.p_d, &softmax_probs(gen)?, disc)
    }

    fn generator_gradient(&self, gen: &ParamVector, disc: &Discriminator) -> Result<Vec<f64>> {
        generator_gradient_exact(self.cost, disc, gen)
    }

    fn discriminator_gradient(&self, gen: &ParamVector, disc: &Discriminator) -> Result<Vec<f64>> {
        discriminator_gradient(disc, &self.p_d, &softmax_probs(gen)?)
    }
}

/// `V(u, v) = u·v`; `u` minimizes, `v` maximizes.
#[derive(Debug, Clone, Copy, Default)]
pub struct BilinearGame;

impl BilinearGame {
    fn scalars(gen: &ParamVector, disc: &Discriminator) -> Result<(f64, f64)> {
        check_len(1, gen.len())?;
        check_len(1, disc.len())?;
        Ok((gen.as_slice()[0], disc.logits()[0]))
    }
}

impl Game for BilinearGame {
    fn value(&self, gen: &ParamVector, disc: &Discriminator) -> Result<f64> {
        let (u, v) = Self::scalars(gen, disc)?;
        Ok(u * v)
    }

    fn generator_gradient(&self, gen: &ParamVector, disc: &Discriminator) -> Result<Vec<f64>> {
        let (_, v) = Self::scalars(gen, disc)?;
        Ok(vec![v])
    }

    fn discriminator_gradient(&self, gen: &ParamVector, disc: &Discriminator) -> Result<Vec<f64>> {
        let (u, _) = Self::scalars(gen, disc)?;
        Ok(vec![u])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    Simultaneous,
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub eta_g: f64,
    pub eta_c: f64,
    pub mode: UpdateMode,
    pub disc_steps_per_gen_step: usize,
    pub iterations: usize,
    pub init_theta_g: ParamVector,
    pub init_disc: Discriminator,
    pub cost: GeneratorCostVariant,
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("eta_g", self.eta_g), ("eta_c", self.eta_c)] {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {eta}"
                )));
            }
        }
        if self.disc_steps_per_gen_step == 0 {
            return Err(Error::InvalidConfig(
                "disc_steps_per_gen_step must be at least 1".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub theta_g: ParamVector,
    pub disc: Discriminator,
    pub value: f64,
    pub grad_norm_g: f64,
    pub grad_norm_c: f64,
}

impl Snapshot {
    /// Euclidean norm of the joint state `(θ_g, a)`.
    pub fn joint_norm(&self) -> f64 {
        self.theta_g.norm2().hypot(self.disc.norm2())
    }
}

/// Recorded run. `truncated` is set when a step produced a non-finite
/// quantity; the offending state is not recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub truncated: bool,
}

impl GameTrajectory {
    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn step(params: &[f64], grad: &[f64], eta: f64) -> Vec<f64> {
    params.iter().zip(grad).map(|(p, g)| p + eta * g).collect()
}

struct Evaluated {
    value: f64,
    grad_g: Vec<f64>,
    grad_c: Vec<f64>,
}

fn evaluate<G: Game>(game: &G, gen: &ParamVector, disc: &Discriminator) -> Result<Evaluated> {
    let value = game.value(gen, disc)?;
    let grad_g = game.generator_gradient(gen, disc)?;
    let grad_c = game.discriminator_gradient(gen, disc)?;
    if !value.is_finite() || grad_g.iter().chain(&grad_c).any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("value or gradient".into()));
    }
    Ok(Evaluated {
        value,
        grad_g,
        grad_c,
    })
}

/// Runs `cfg` on an arbitrary game.
pub fn simulate<G: Game>(game: &G, cfg: &DynamicsConfig) -> Result<GameTrajectory> {
    cfg.validate()?;
    let mut gen = cfg.init_theta_g.clone();
    let mut disc = cfg.init_disc.clone();
    let mut current = evaluate(game, &gen, &disc)?;
    let mut snapshots = Vec::with_capacity(cfg.iterations + 1);
    let record =
        |iteration: usize, gen: &ParamVector, disc: &Discriminator, e: &Evaluated| Snapshot {
            iteration,
            theta_g: gen.clone(),
            disc: disc.clone(),
            value: e.value,
            grad_norm_g: norm2(&e.grad_g),
            grad_norm_c: norm2(&e.grad_c),
        };
    snapshots.push(record(0, &gen, &disc, &current));

    for iteration in 1..=cfg.iterations {
        let next = advance(game, cfg, &gen, &disc, &current);
        let Some((next_gen, next_disc, eval)) = next else {
            return Ok(GameTrajectory {
                snapshots,
                truncated: true,
            });
        };
        gen = next_gen;
        disc = next_disc;
        current = eval;
        snapshots.push(record(iteration, &gen, &disc, &current));
    }
    Ok(GameTrajectory {
        snapshots,
        truncated: false,
    })
}

/// One iteration; `None` when the new state is not finite.
fn advance<G: Game>(
    game: &G,
    cfg: &DynamicsConfig,
    gen: &ParamVector,
    disc: &Discriminator,
    current: &Evaluated,
) -> Option<(ParamVector, Discriminator, Evaluated)> {
    let (new_gen, new_disc) = match cfg.mode {
        UpdateMode::Simultaneous => {
            let d = Discriminator::new(step(disc.logits(), &current.grad_c, cfg.eta_c)).ok()?;
            let g = ParamVector::new(step(gen.as_slice(), &current.grad_g, -cfg.eta_g)).ok()?;
            (g, d)
        }
        UpdateMode::Alternating => {
            let mut d = disc.clone();
            for _ in 0..cfg.disc_steps_per_gen_step {
                let grad_c = game.discriminator_gradient(gen, &d).ok()?;
                d = Discriminator::new(step(d.logits(), &grad_c, cfg.eta_c)).ok()?;
            }
            let grad_g = game.generator_gradient(gen, &d).ok()?;
            let g = ParamVector::new(step(gen.as_slice(), &grad_g, -cfg.eta_g)).ok()?;
            (g, d)
        }
    };
    let eval = evaluate(game, &new_gen, &new_disc).ok()?;
    Some((new_gen, new_disc, eval))
}

/// Tabular softmax game against the data table `p_d`.
pub fn simulate_dynamics(p_d: &DistributionTable, cfg: &DynamicsConfig) -> Result<GameTrajectory> {
    check_len(p_d.len(), cfg.init_theta_g.len())?;
    check_len(p_d.len(), cfg.init_disc.len())?;
    let game = TabularGame {
        p_d: p_d.clone(),
        cost: cfg.cost,
    };
    simulate(&game, cfg)
}

/// Bilinear game from `(u, v) = (init_theta_g[0], init_disc[0])`; `cost` is ignored.
pub fn simulate_bilinear(cfg: &DynamicsConfig) -> Result<GameTrajectory> {
    simulate(&BilinearGame, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Oscillating,
    Diverging,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub verdict: Verdict,
    pub final_value: f64,
    pub final_grad_norms: (f64, f64),
    pub oscillation_score: f64,
}

fn strictly_increasing(xs: impl Iterator<Item = f64>) -> bool {
    let xs: Vec<f64> = xs.collect();
    xs.len() >= 2 && xs.windows(2).all(|w| w[1] > w[0])
}

/// Fraction of sign flips between consecutive non-zero value increments.
fn sign_change_fraction(values: &[f64]) -> f64 {
    let signs: Vec<bool> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(|d| d > 0.0)
        .collect();
    if signs.len() < 2 {
        return 0.0;
    }
    let flips = signs.windows(2).filter(|s| s[0] != s[1]).count();
    flips as f64 / (signs.len() - 1) as f64
}

/// Sum over components of the variance of `θ_g` across the window.
fn parameter_variance(window: &[Snapshot]) -> f64 {
    let n = window.len() as f64;
    let k = window[0].theta_g.len();
    (0..k)
        .map(|j| {
            let mean = window.iter().map(|s| s.theta_g.as_slice()[j]).sum::<f64>() / n;
            window
                .iter()
                .map(|s| (s.theta_g.as_slice()[j] - mean).powi(2))
                .sum::<f64>()
                / n
        })
        .sum()
}

/// Classifies a trajectory.
///
/// Checked in order: truncation or the cap on `‖θ‖∞`, `‖a‖∞`, `|V|` gives
/// `Diverging`; both final gradient norms `≤ tol` gives `Converged`; joint
/// parameter norm and joint gradient norm both strictly increasing over the
/// tail gives `Diverging`; tail mean gradient norm `≥ 10·tol` with tail `θ_g`
/// variance above [`OSCILLATION_VARIANCE_FLOOR`] gives `Oscillating`. The tail
/// is the last half of the snapshots.
pub fn diagnose_trajectory(traj: &GameTrajectory, tol: f64) -> Result<DynamicsReport> {
    let last = traj.last().ok_or(Error::EmptyTrajectory)?;
    let n = traj.snapshots.len();
    let tail = &traj.snapshots[n / 2..];

    let report = |verdict| DynamicsReport {
        verdict,
        final_value: last.value,
        final_grad_norms: (last.grad_norm_g, last.grad_norm_c),
        oscillation_score: sign_change_fraction(&tail.iter().map(|s| s.value).collect::<Vec<_>>()),
    };

    let blown_up = traj.snapshots.iter().any(|s| {
        s.theta_g.norm_inf() > DIVERGENCE_CAP
            || s.disc.logits().iter().any(|a| a.abs() > DIVERGENCE_CAP)
            || s.value.abs() > DIVERGENCE_CAP
    });
    if traj.truncated || blown_up {
        return Ok(report(Verdict::Diverging));
    }
    if last.grad_norm_g <= tol && last.grad_norm_c <= tol {
        return Ok(report(Verdict::Converged));
    }
    if strictly_increasing(tail.iter().map(Snapshot::joint_norm))
        && strictly_increasing(tail.iter().map(|s| s.grad_norm_g.hypot(s.grad_norm_c)))
    {
        return Ok(report(Verdict::Diverging));
    }
    let mean_grad = tail
        .iter()
        .map(|s| s.grad_norm_g + s.grad_norm_c)
        .sum::<f64>()
        / tail.len() as f64;
    if mean_grad >= 10.0 * tol && parameter_variance(tail) > OSCILLATION_VARIANCE_FLOOR {
        return Ok(report(Verdict::Oscillating));
    }
    Ok(report(Verdict::Undetermined))
}
