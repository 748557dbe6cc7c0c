#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqplane_core::{map_fit, Dataset, FitConfig, FittedModel, KernelHyperparams, ParamVector, SearchSpace};

pub fn pv(c: &[f64]) -> ParamVector {
    ParamVector::new(c.to_vec()).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> ParamVector {
    pv(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
}

/// A fitted model on preferences generated by a smooth bump at 0.3.
pub fn fitted_model(seed: u64, n: usize, records: usize) -> FittedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let goodness = |x: &[f64]| -x.iter().map(|c| (c - 0.3) * (c - 0.3)).sum::<f64>();
    let mut data = Dataset::new(SearchSpace::new(n).unwrap());
    for _ in 0..records {
        let mut set: Vec<ParamVector> = (0..3).map(|_| random_point(&mut rng, n)).collect();
        set.sort_by(|a, b| goodness(b).partial_cmp(&goodness(a)).unwrap());
        data.add_preference(&set[0], &set[1..]).unwrap();
    }
    map_fit(&data, &FitConfig::default()).unwrap()
}

/// Model conditioned directly on given latent values.
pub fn model_with(points: &[&[f64]], latent: &[f64], amplitude: f64, jitter_factor: f64) -> FittedModel {
    let n = points[0].len();
    let mut data = Dataset::new(SearchSpace::new(n).unwrap());
    for p in points {
        data.add_point(&pv(p)).unwrap();
    }
    let h = KernelHyperparams::new(amplitude, vec![0.5; n]).unwrap();
    FittedModel::new(data, h, latent.to_vec(), 0.01, jitter_factor).unwrap()
}
