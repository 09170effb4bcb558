//! Monte Carlo draws from a structural model.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Record};
use crate::error::{Error, Result};

use super::scm::StructuralModel;

/// Derives an independent child seed (splitmix64 finalizer).
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs)
        .map_err(|e| Error::InvalidModel(format!("cannot sample from {probs:?}: {e}")))
}

/// `n` i.i.d. units; the stream depends only on `scm` and `seed`.
pub fn sample_dataset(scm: &StructuralModel<f64>, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidData("sample size must be at least 1".into()));
    }
    let nu1 = scm.u1_probs().len();
    let c_dist = weighted(
        &(0..scm.c_support().len())
            .map(|c| *scm.c_prob(c))
            .collect::<Vec<_>>(),
    )?;
    let u1_dist = weighted(scm.u1_probs())?;
    let u2_dist = weighted(scm.u2_probs())?;
    let grid = scm.exposure_grid();
    let x_dists = (0..scm.c_support().len())
        .flat_map(|c| (0..nu1).map(move |u1| (c, u1)))
        .map(|(c, u1)| {
            weighted(
                &(0..grid.len())
                    .map(|x| *scm.px(x, c, u1))
                    .collect::<Vec<_>>(),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let c = c_dist.sample(&mut rng);
            let u1 = u1_dist.sample(&mut rng);
            let u2 = u2_dist.sample(&mut rng);
            let x = x_dists[c * nu1 + u1].sample(&mut rng);
            let mediator = rng.random::<f64>() < *scm.pm(x, c, u2);
            let outcome = rng.random::<f64>() < *scm.py(x, mediator, c, u1, u2);
            Record {
                outcome,
                mediator,
                exposure: grid[x],
                covariates: scm.c_support()[c].clone(),
            }
        })
        .collect();
    Dataset::new(scm.covariate_names().to_vec(), records)
}
