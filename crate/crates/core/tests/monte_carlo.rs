//! Statistical checks on the score-function estimator and the variance study.

use std::path::PathBuf;

use distgame::analysis::{concentrated_scenario, exact_per_sample_variance, variance_study};
use distgame::game::{generator_gradient_exact, mc_generator_gradient};
use distgame::models::softmax_probs;
use distgame::{CostKind, Discriminator, GeneratorCostVariant, ParamVector};
use serde_json::{json, Value};

fn fixture() -> (ParamVector, Discriminator) {
    (
        ParamVector::new(vec![0.4, -1.1, 0.9, 0.0]).unwrap(),
        Discriminator::new(vec![1.3, -0.6, 0.2, -2.0]).unwrap(),
    )
}

/// Closed-form per-sample variance, one outcome at a time.
fn oracle_variance(kind: CostKind, disc: &Discriminator, theta: &ParamVector) -> f64 {
    let p = softmax_probs(theta).unwrap().probs().to_vec();
    let k = p.len();
    let f: Vec<f64> = disc
        .logits()
        .iter()
        .map(|&a| GeneratorCostVariant::new(kind).eval(a))
        .collect();
    let single = |x: usize| -> Vec<f64> {
        (0..k)
            .map(|j| f[x] * (if j == x { 1.0 } else { 0.0 } - p[j]))
            .collect()
    };
    let mut mean = vec![0.0; k];
    for (x, px) in p.iter().enumerate() {
        for (m, s) in mean.iter_mut().zip(single(x)) {
            *m += px * s;
        }
    }
    (0..k)
        .map(|x| {
            p[x] * single(x)
                .iter()
                .zip(&mean)
                .map(|(s, m)| (s - m).powi(2))
                .sum::<f64>()
        })
        .sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn estimator_is_unbiased_over_seeds() {
    let (theta, disc) = fixture();
    let seeds = 1000u64;
    for kind in CostKind::ALL {
        let variant = GeneratorCostVariant::new(kind);
        let exact = generator_gradient_exact(variant, &disc, &theta).unwrap();
        let draws: Vec<Vec<f64>> = (0..seeds)
            .map(|s| {
                mc_generator_gradient(variant, &disc, &theta, 50, s)
                    .unwrap()
                    .gradient
            })
            .collect();
        for j in 0..exact.len() {
            let m = draws.iter().map(|d| d[j]).sum::<f64>() / seeds as f64;
            let var = draws.iter().map(|d| (d[j] - m).powi(2)).sum::<f64>() / (seeds - 1) as f64;
            let se = (var / seeds as f64).sqrt();
            assert!(
                (m - exact[j]).abs() <= 3.0 * se,
                "{kind} component {j}: {m} vs {}",
                exact[j]
            );
        }
    }
}

#[test]
fn constant_logits_average_to_zero() {
    let theta = ParamVector::new(vec![0.4, -1.1, 0.9, 0.0]).unwrap();
    let disc = Discriminator::constant(4, 0.7).unwrap();
    for kind in CostKind::ALL {
        let variant = GeneratorCostVariant::new(kind);
        let draws: Vec<Vec<f64>> = (0..1000)
            .map(|s| {
                mc_generator_gradient(variant, &disc, &theta, 20, s)
                    .unwrap()
                    .gradient
            })
            .collect();
        for j in 0..4 {
            let m = draws.iter().map(|d| d[j]).sum::<f64>() / 1000.0;
            let var = draws.iter().map(|d| (d[j] - m).powi(2)).sum::<f64>() / 999.0;
            assert!(m.abs() <= 3.0 * (var / 1000.0).sqrt(), "{kind} {j}: {m}");
        }
    }
}

#[test]
fn large_samples_concentrate_around_exact() {
    let (theta, disc) = fixture();
    let n = 1_000_000;
    let variant = GeneratorCostVariant::new(CostKind::Minimax);
    let exact = generator_gradient_exact(variant, &disc, &theta).unwrap();
    let within = (0..100u64)
        .filter(|&s| {
            let est = mc_generator_gradient(variant, &disc, &theta, n, s).unwrap();
            let bound = 3.0 * (est.per_sample_variance / n as f64).sqrt();
            est.gradient
                .iter()
                .zip(&exact)
                .all(|(e, x)| (e - x).abs() <= bound)
        })
        .count();
    assert!(within >= 99, "{within}/100 seeds within bound");
}

#[test]
fn library_closed_form_matches_test_oracle() {
    let (theta, disc) = fixture();
    for kind in CostKind::ALL {
        let lib = exact_per_sample_variance(kind.into(), &disc, &theta).unwrap();
        let oracle = oracle_variance(kind, &disc, &theta);
        assert!(
            (lib - oracle).abs() <= 1e-12 * oracle,
            "{kind}: {lib} vs {oracle}"
        );
    }
}

#[test]
fn empirical_variance_converges_to_closed_form() {
    let s = concentrated_scenario();
    for kind in CostKind::ALL {
        let oracle = oracle_variance(kind, &s.disc, &s.theta_g);
        let med = median(
            (0..10)
                .map(|seed| {
                    mc_generator_gradient(kind.into(), &s.disc, &s.theta_g, 100_000, seed)
                        .unwrap()
                        .per_sample_variance
                })
                .collect(),
        );
        assert!(
            (med - oracle).abs() <= 0.05 * oracle,
            "{kind}: {med} vs {oracle}"
        );
    }
}

#[test]
fn likelihood_cost_has_higher_variance_at_every_n() {
    for seed in 0..10 {
        let rows = variance_study(&[100, 1_000, 10_000, 100_000], seed).unwrap();
        for n in [100, 1_000, 10_000, 100_000] {
            let get = |k| {
                rows.iter()
                    .find(|r| r.variant == k && r.n_samples == n)
                    .unwrap()
                    .per_sample_variance
            };
            assert!(
                get(CostKind::MaximumLikelihood) > get(CostKind::Minimax),
                "seed {seed}, n {n}"
            );
        }
    }
}

#[test]
fn median_error_shrinks_with_n() {
    let ns = [100, 1_000, 10_000, 100_000];
    let runs: Vec<_> = (0..10)
        .map(|seed| variance_study(&ns, seed).unwrap())
        .collect();
    for kind in CostKind::ALL {
        let medians: Vec<f64> = ns
            .iter()
            .map(|&n| {
                median(
                    runs.iter()
                        .map(|rows| {
                            rows.iter()
                                .find(|r| r.variant == kind && r.n_samples == n)
                                .unwrap()
                                .grad_error_norm
                        })
                        .collect(),
                )
            })
            .collect();
        assert!(
            medians.windows(2).all(|w| w[1] < w[0]),
            "{kind}: {medians:?}"
        );
    }
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/variance_regression.json")
}

/// Frozen regression numbers: closed-form variances from the oracle above and
/// the empirical ratio at n = 10³, seed 0. Regenerate with `DISTGAME_BLESS=1`.
#[test]
fn variance_ratio_regression() {
    let s = concentrated_scenario();
    let mle = oracle_variance(CostKind::MaximumLikelihood, &s.disc, &s.theta_g);
    let minimax = oracle_variance(CostKind::Minimax, &s.disc, &s.theta_g);
    let rows = variance_study(&[1_000], 0).unwrap();
    let get = |k| {
        rows.iter()
            .find(|r| r.variant == k)
            .unwrap()
            .per_sample_variance
    };
    let current = json!({
        "closed_form_variance_maximum_likelihood": mle,
        "closed_form_variance_minimax": minimax,
        "closed_form_ratio": mle / minimax,
        "empirical_ratio_n1000_seed0": get(CostKind::MaximumLikelihood) / get(CostKind::Minimax),
    });
    if std::env::var_os("DISTGAME_BLESS").is_some() {
        std::fs::create_dir_all(golden_path().parent().unwrap()).unwrap();
        std::fs::write(
            golden_path(),
            serde_json::to_string_pretty(&current).unwrap() + "\n",
        )
        .unwrap();
    }
    let golden: Value =
        serde_json::from_str(&std::fs::read_to_string(golden_path()).unwrap()).unwrap();
    for key in current.as_object().unwrap().keys() {
        let want = golden[key].as_f64().unwrap();
        let got = current[key].as_f64().unwrap();
        assert!(
            (got - want).abs() <= 1e-12 * want.abs(),
            "{key}: {got} vs golden {want}"
        );
    }
    assert!(golden["closed_form_ratio"].as_f64().unwrap() > 1.0);
}
