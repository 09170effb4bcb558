//! Random thetas and random finite structural models for property checks.

use rand::Rng;

use crate::theta::ThetaBundle;

use super::scm::{Probability, StructuralModel};

/// Predictors drawn uniformly from `[-4, 4]`, zero covariance.
pub fn random_theta<R: Rng + ?Sized>(rng: &mut R) -> ThetaBundle<f64> {
    ThetaBundle::from_predictors(std::array::from_fn(|_| rng.random_range(-4.0..=4.0)))
}

/// Predictors as in [`random_theta`] with a random positive definite
/// covariance `A A^T / 6`, entries of `A` uniform in `[-0.5, 0.5]`.
pub fn random_theta_with_covariance<R: Rng + ?Sized>(rng: &mut R) -> ThetaBundle<f64> {
    let base = random_theta(rng);
    let a: [[f64; 6]; 6] =
        std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-0.5..=0.5)));
    let sigma = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..6).map(|k| a[i][k] * a[j][k]).sum::<f64>() / 6.0 + if i == j { 1e-3 } else { 0.0 }
        })
    });
    ThetaBundle::new(base.theta, sigma).expect("finite symmetric covariance")
}

/// Shape of a random structural model. Latent supports of size one mean no
/// latent confounding of that kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomScmShape {
    pub covariate_levels: usize,
    pub exposure_levels: usize,
    pub u1_levels: usize,
    pub u2_levels: usize,
}

impl Default for RandomScmShape {
    fn default() -> Self {
        RandomScmShape {
            covariate_levels: 2,
            exposure_levels: 3,
            u1_levels: 1,
            u2_levels: 1,
        }
    }
}

/// Splits `total` into `parts` positive integers.
fn composition<R: Rng + ?Sized>(rng: &mut R, total: u32, parts: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = Vec::with_capacity(parts + 1);
    while cuts.len() < parts - 1 {
        let c = rng.random_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.push(0);
    cuts.push(total);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

/// A random model whose probabilities are multiples of 1/1000, converted by
/// `per_mille`. Mediator probabilities lie in `[0.05, 0.95]`, outcome
/// probabilities in `[0.02, 0.98]`; every distribution has full support.
pub fn random_scm<T: Probability, R: Rng + ?Sized>(
    rng: &mut R,
    shape: RandomScmShape,
    per_mille: impl Fn(u32) -> T,
) -> StructuralModel<T> {
    let RandomScmShape {
        covariate_levels: nc,
        exposure_levels: nx,
        u1_levels: nu1,
        u2_levels: nu2,
    } = shape;
    assert!(
        nc >= 1 && nx >= 1 && nu1 >= 1 && nu2 >= 1,
        "empty support in {shape:?}"
    );
    let dist = |rng: &mut R, n: usize| composition(rng, 1000, n);
    let c_probs = dist(rng, nc);
    let u1 = dist(rng, nu1);
    let u2 = dist(rng, nu2);
    let x_rows: Vec<Vec<u32>> = (0..nc * nu1).map(|_| dist(rng, nx)).collect();
    let m: Vec<u32> = (0..nx * nc * nu2)
        .map(|_| rng.random_range(50..=950))
        .collect();
    let y: Vec<u32> = (0..nx * 2 * nc * nu1 * nu2)
        .map(|_| rng.random_range(20..=980))
        .collect();

    StructuralModel::from_fn(
        vec!["C".into()],
        c_probs
            .iter()
            .enumerate()
            .map(|(i, &k)| (vec![i as f64], per_mille(k)))
            .collect(),
        u1.iter().map(|&k| per_mille(k)).collect(),
        u2.iter().map(|&k| per_mille(k)).collect(),
        (0..nx).map(|i| i as f64).collect(),
        |c, a| x_rows[c * nu1 + a].iter().map(|&k| per_mille(k)).collect(),
        |x, c, b| per_mille(m[(x * nc + c) * nu2 + b]),
        |x, mm, c, a, b| per_mille(y[((((x * 2 + mm as usize) * nc + c) * nu1 + a) * nu2) + b]),
    )
    .expect("random model tables are valid by construction")
}

pub fn per_mille_f64(k: u32) -> f64 {
    f64::from(k) / 1000.0
}
