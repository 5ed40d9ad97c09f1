//! Trajectory-level checks for the game simulator.

use distgame::analysis::{random_table, random_theta};
use distgame::game::{
    diagnose_trajectory, simulate_bilinear, simulate_dynamics, DynamicsConfig, UpdateMode, Verdict,
};
use distgame::models::softmax_probs;
use distgame::suites::{alternating_k2_config, alternating_k2_data};
use distgame::{CostKind, Discriminator, ParamVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simultaneous(theta: ParamVector, disc: Discriminator, iterations: usize) -> DynamicsConfig {
    DynamicsConfig {
        eta_g: 0.1,
        eta_c: 0.1,
        mode: UpdateMode::Simultaneous,
        disc_steps_per_gen_step: 1,
        iterations,
        init_theta_g: theta,
        init_disc: disc,
        cost: CostKind::Minimax.into(),
    }
}

#[test]
fn equilibrium_is_a_fixed_point_for_every_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in CostKind::ALL {
        let theta = random_theta(&mut rng, 6);
        let p_d = softmax_probs(&theta).unwrap();
        let mut cfg = simultaneous(
            theta.clone(),
            Discriminator::constant(6, 0.0).unwrap(),
            1000,
        );
        cfg.cost = kind.into();
        let traj = simulate_dynamics(&p_d, &cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 1001);
        for s in &traj.snapshots {
            assert!(
                s.grad_norm_g <= 1e-12 && s.grad_norm_c <= 1e-12,
                "{kind} at {}",
                s.iteration
            );
        }
        let last = traj.last().unwrap();
        assert_eq!(last.theta_g, theta);
        let verdict = diagnose_trajectory(&traj, 1e-8).unwrap().verdict;
        assert_eq!(verdict, Verdict::Converged);
    }
}

#[test]
fn bilinear_radius_follows_recurrence() {
    for eta in [0.01, 0.1, 0.3] {
        let mut cfg = simultaneous(
            ParamVector::new(vec![0.8]).unwrap(),
            Discriminator::new(vec![-0.6]).unwrap(),
            150,
        );
        cfg.eta_g = eta;
        cfg.eta_c = eta;
        let traj = simulate_bilinear(&cfg).unwrap();
        for s in &traj.snapshots {
            let (u, v) = (s.theta_g.as_slice()[0], s.disc.logits()[0]);
            let r2 = u * u + v * v;
            let expected = (1.0 + eta * eta).powi(s.iteration as i32);
            assert!(
                (r2 - expected).abs() <= 1e-12 * expected,
                "eta {eta} t {}",
                s.iteration
            );
        }
        let report = diagnose_trajectory(&traj, 1e-8).unwrap();
        assert_eq!(report.verdict, Verdict::Diverging);
    }
}

#[test]
fn bilinear_reference_radius() {
    let cfg = simultaneous(
        ParamVector::new(vec![1.0]).unwrap(),
        Discriminator::new(vec![0.0]).unwrap(),
        100,
    );
    let last = simulate_bilinear(&cfg).unwrap().last().unwrap().clone();
    let r2 = last.grad_norm_g.powi(2) + last.grad_norm_c.powi(2);
    assert!((r2 - 2.7048138294215).abs() < 1e-9, "{r2}");
}

#[test]
fn alternating_updates_reach_data_on_two_outcomes() {
    let traj = simulate_dynamics(&alternating_k2_data(), &alternating_k2_config()).unwrap();
    assert!(!traj.truncated);
    let p_g = softmax_probs(&traj.last().unwrap().theta_g).unwrap();
    for (g, d) in p_g.probs().iter().zip(alternating_k2_data().probs()) {
        assert!((g - d).abs() <= 1e-3, "{g} vs {d}");
    }
}

#[test]
fn simultaneous_tabular_run_stays_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p_d = random_table(&mut rng, 4);
    let cfg = simultaneous(
        ParamVector::zeros(4),
        Discriminator::constant(4, 0.0).unwrap(),
        2000,
    );
    let traj = simulate_dynamics(&p_d, &cfg).unwrap();
    assert!(!traj.truncated);
    assert!(traj
        .snapshots
        .iter()
        .all(|s| s.value.is_finite() && s.value <= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), k in 2usize..8, alt in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p_d = random_table(&mut rng, k);
        let mut cfg = simultaneous(
            random_theta(&mut rng, k),
            Discriminator::new(random_theta(&mut rng, k).into_vec()).unwrap(),
            50,
        );
        if alt {
            cfg.mode = UpdateMode::Alternating;
            cfg.disc_steps_per_gen_step = 3;
        }
        let a = simulate_dynamics(&p_d, &cfg).unwrap();
        let b = simulate_dynamics(&p_d, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
