use medbounds::oracle::cun::{cross_world_counterexample, cun_like_scm};
use medbounds::oracle::random::{per_mille_f64, random_scm, random_theta, RandomScmShape};
use medbounds::oracle::{
    enumerate_counterfactuals, observational_theta, psi_sweep_bounds, sample_dataset, true_effects,
    ScmConfig, StructuralModel,
};
use medbounds::{effect_bounds, expit, logit, point_effects, Error, Level, ThetaBundle};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn big_per_mille(k: u32) -> BigRational {
    big(i64::from(k), 1000)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn counterexample_separates_the_cross_world_assumptions() {
    let scm = cross_world_counterexample(big);
    let law = enumerate_counterfactuals(&scm, &scm.contrast(1, 0, 0)).unwrap();
    let exact = BigRational::zero();
    assert!(law.pc_cwd_holds(&exact));
    assert!(!law.cwi_holds(&exact));
}

#[test]
fn deterministic_mechanisms_compose() {
    // M copies X; Y = X xor M.
    let scm = StructuralModel::from_fn(
        Vec::new(),
        vec![(Vec::new(), 1.0)],
        vec![1.0],
        vec![1.0],
        vec![0.0, 1.0],
        |_, _| vec![0.5, 0.5],
        |x, _, _| x as f64,
        |x, m, _, _, _| if (x == 1) != m { 1.0 } else { 0.0 },
    )
    .unwrap();
    let law = enumerate_counterfactuals(&scm, &scm.contrast(1, 0, 0)).unwrap();
    assert_eq!(*law.mediator(Level::Active), 1.0);
    assert_eq!(*law.mediator(Level::Reference), 0.0);
    assert_eq!(*law.crossed(Level::Active, Level::Reference), 1.0);
    assert_eq!(*law.crossed(Level::Reference, Level::Active), 1.0);
    assert_eq!(*law.crossed(Level::Active, Level::Active), 0.0);
    assert_eq!(*law.crossed(Level::Reference, Level::Reference), 0.0);
}

#[test]
fn independent_noise_gives_cross_world_independence() {
    let mut r = rng(5);
    let shape = RandomScmShape {
        u1_levels: 3,
        ..RandomScmShape::default()
    };
    for _ in 0..50 {
        let scm = random_scm(&mut r, shape, per_mille_f64);
        for c in 0..scm.c_support().len() {
            let law = enumerate_counterfactuals(&scm, &scm.contrast(2, 0, c)).unwrap();
            assert!(law.cwi_holds(&1e-12));
        }
    }
}

#[test]
fn mediator_confounding_breaks_cross_world_independence() {
    let mut r = rng(6);
    let shape = RandomScmShape {
        u2_levels: 3,
        ..RandomScmShape::default()
    };
    let broken = (0..50)
        .map(|_| random_scm(&mut r, shape, per_mille_f64))
        .filter(|scm| {
            !enumerate_counterfactuals(scm, &scm.contrast(2, 0, 0))
                .unwrap()
                .cwi_holds(&1e-9)
        })
        .count();
    assert!(
        broken > 40,
        "only {broken} of 50 models violate independence"
    );
}

#[test]
fn composition_holds_exactly_with_latents() {
    let mut r = rng(7);
    let shape = RandomScmShape {
        u1_levels: 2,
        u2_levels: 2,
        ..RandomScmShape::default()
    };
    for _ in 0..30 {
        let scm = random_scm(&mut r, shape, big_per_mille);
        let law = enumerate_counterfactuals(&scm, &scm.contrast(2, 1, 1)).unwrap();
        for a in 0..2 {
            assert_eq!(law.total[a], law.crossed[a][a]);
        }
        for p in law.crossed.iter().flatten().chain(&law.mediator) {
            assert!(*p >= BigRational::zero() && *p <= BigRational::one());
        }
    }
}

#[test]
fn equal_levels_give_null_effects() {
    let mut r = rng(8);
    for _ in 0..20 {
        let scm = random_scm(&mut r, RandomScmShape::default(), per_mille_f64);
        let e = true_effects(&scm, &scm.contrast(1, 1, 0)).unwrap();
        assert_eq!(e.components(), [0.0; 3]);
    }
}

#[test]
fn exposure_free_mediator_has_no_indirect_effect() {
    let scm = StructuralModel::from_fn(
        vec!["C".into()],
        vec![(vec![0.0], 0.3), (vec![1.0], 0.7)],
        vec![1.0],
        vec![1.0],
        vec![0.0, 1.0, 2.0],
        |_, _| vec![0.2, 0.3, 0.5],
        |_, c, _| 0.3 + 0.2 * c as f64,
        |x, m, c, _, _| {
            expit(-1.0 + 0.5 * x as f64 + 0.8 * f64::from(u8::from(m)) + 0.1 * c as f64)
        },
    )
    .unwrap();
    let e = true_effects(&scm, &scm.contrast(2, 0, 1)).unwrap();
    assert!(e.nie.abs() < 1e-14);
    assert!(e.nde > 0.0);
}

#[test]
fn total_effect_decomposes() {
    let mut r = rng(9);
    for _ in 0..100 {
        let scm = random_scm(&mut r, RandomScmShape::default(), per_mille_f64);
        let e = true_effects(&scm, &scm.contrast(2, 0, 0)).unwrap();
        assert!((e.te - e.nde - e.nie).abs() < 1e-12);
    }
}

#[test]
fn off_grid_level_is_rejected() {
    let scm = cun_like_scm();
    let mut contrast = scm.contrast(4, 0, 0);
    contrast.x = 55.0;
    assert!(
        matches!(enumerate_counterfactuals(&scm, &contrast), Err(Error::OffGrid(v)) if v == 55.0)
    );
}

#[test]
fn logistic_mechanisms_are_recovered_as_theta() {
    let cfg = ScmConfig::from_toml_str(
        r#"
covariates = ["Gender"]
exposure_grid = [0.0, 1.0, 2.0]
[[profile]]
values = [0.0]
prob = 0.5
[[profile]]
values = [1.0]
prob = 0.5
[exposure]
table = [[0.2, 0.3, 0.5]]
[mediator.logistic]
intercept = -0.4
exposure = 0.6
covariates = { Gender = 0.3 }
[outcome.logistic]
intercept = -1.2
exposure = 0.25
mediator = 0.9
covariates = { Gender = -0.2 }
"#,
    )
    .unwrap();
    let scm = cfg.build().unwrap();
    let t = observational_theta(&scm, &scm.contrast(2, 0, 1))
        .unwrap()
        .theta;
    let expected = [
        -1.2 + 0.5 - 0.2,
        -1.2 - 0.2,
        -1.2 + 0.5 + 0.9 - 0.2,
        -1.2 + 0.9 - 0.2,
        -0.4 + 1.2 + 0.3,
        -0.4 + 0.3,
    ];
    for (a, b) in t.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{t:?}");
    }
}

#[test]
fn mediation_formula_matches_crossed_counterfactual() {
    let mut r = rng(10);
    for _ in 0..100 {
        let scm = random_scm(&mut r, RandomScmShape::default(), per_mille_f64);
        for c in 0..scm.c_support().len() {
            let contrast = scm.contrast(2, 0, c);
            let formula = scm.mediation_formula(&contrast).unwrap();
            let law = enumerate_counterfactuals(&scm, &contrast).unwrap();
            assert!((formula - law.crossed(Level::Active, Level::Reference)).abs() < 1e-10);
        }
    }
}

#[test]
fn point_effects_recover_truth_on_logistic_cohort_model() {
    let scm = cun_like_scm();
    for c in [0, 5, 9, 13] {
        let contrast = scm.contrast(6, 0, c);
        let truth = true_effects(&scm, &contrast).unwrap();
        let theta = observational_theta(&scm, &contrast).unwrap();
        for (p, t) in point_effects(&theta)
            .components()
            .iter()
            .zip(truth.components())
        {
            assert!((p - t).abs() < 1e-9);
        }
        for (b, t) in effect_bounds(&theta)
            .components()
            .iter()
            .zip(truth.components())
        {
            assert!(b.contains(t, 1e-9));
        }
    }
}

#[test]
fn scm_example_asset_builds() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/scm_example.toml");
    let scm = ScmConfig::from_path(path).unwrap().build().unwrap();
    assert_eq!(scm.u1_probs().len(), 2);
    assert!(!scm.is_latent_free());
    let law = enumerate_counterfactuals(&scm, &scm.contrast(2, 0, 1)).unwrap();
    assert!(law.cwi_holds(&1e-12));
}

#[test]
fn sampling_is_seeded() {
    let scm = cun_like_scm();
    let a = sample_dataset(&scm, 500, 3).unwrap();
    assert_eq!(a, sample_dataset(&scm, 500, 3).unwrap());
    assert_ne!(a, sample_dataset(&scm, 500, 4).unwrap());
    assert!(sample_dataset(&scm, 0, 3).is_err());
}

#[test]
fn sampled_mediator_prevalence_within_three_sigma() {
    let scm = cun_like_scm();
    let n = 1_000_000;
    let data = sample_dataset(&scm, n, 12).unwrap();
    let p = scm.marginal_mediator();
    let hits = data.records().iter().filter(|r| r.mediator).count() as f64;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!(
        (hits - n as f64 * p).abs() < 3.0 * sigma,
        "{hits} vs {}",
        n as f64 * p
    );
    let py = scm.marginal_outcome();
    let y_hits = data.records().iter().filter(|r| r.outcome).count() as f64;
    assert!((y_hits - n as f64 * py).abs() < 3.0 * (n as f64 * py * (1.0 - py)).sqrt());
}

#[test]
fn cohort_model_prevalences_resemble_the_cohort() {
    let scm = cun_like_scm();
    assert!((scm.marginal_mediator() - 0.245).abs() < 0.01);
    assert!((scm.marginal_outcome() - 0.020).abs() < 0.005);
}

fn theta_strategy() -> impl Strategy<Value = ThetaBundle<f64>> {
    any::<u64>().prop_map(|s| random_theta(&mut rng(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn narrow_sweep_hugs_point_effects(theta in theta_strategy()) {
        let s = psi_sweep_bounds(&theta, (-0.01, 0.01), 201).unwrap();
        for (b, p) in s.components().iter().zip(point_effects(&theta).components()) {
            prop_assert!(b.lower <= p + 1e-12 && p <= b.upper + 1e-12);
            prop_assert!(b.upper - b.lower < 0.02);
        }
    }

    #[test]
    fn widening_the_sweep_never_shrinks_it(theta in theta_strategy(), half in 0.1f64..5.0) {
        // Nested grids: the inner grid's points all lie on the outer one.
        let inner = psi_sweep_bounds(&theta, (-half, half), 101).unwrap();
        let outer = psi_sweep_bounds(&theta, (-3.0 * half, 3.0 * half), 301).unwrap();
        for (i, o) in inner.components().iter().zip(outer.components()) {
            prop_assert!(o.lower <= i.lower + 1e-12 && i.upper <= o.upper + 1e-12);
        }
    }

    #[test]
    fn observational_theta_components_are_probabilities(seed in any::<u64>()) {
        let shape = RandomScmShape { u1_levels: 2, u2_levels: 2, ..RandomScmShape::default() };
        let scm = random_scm(&mut rng(seed), shape, per_mille_f64);
        let t = observational_theta(&scm, &scm.contrast(2, 0, 0)).unwrap();
        for v in t.theta {
            let p = expit(v);
            prop_assert!(p > 0.0 && p < 1.0);
            prop_assert!((logit(p) - v).abs() < 1e-9);
        }
    }
}
