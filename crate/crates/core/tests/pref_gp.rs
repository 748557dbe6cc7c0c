use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqplane_core::{
    map_fit, map_objective, BestMode, Dataset, FitConfig, ParamVector, PreferenceRecord, SearchSpace,
};

fn pv(c: &[f64]) -> ParamVector {
    ParamVector::new(c.to_vec()).unwrap()
}

fn random_dataset(seed: u64, dim: usize, records: usize, losers: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset::new(SearchSpace::new(dim).unwrap());
    let mut pool: Vec<ParamVector> = Vec::new();
    for _ in 0..records {
        let fresh = |rng: &mut ChaCha8Rng| pv(&(0..dim).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let winner = if pool.is_empty() || rng.random_bool(0.5) { fresh(&mut rng) } else { pool[rng.random_range(0..pool.len())].clone() };
        let ls: Vec<ParamVector> = (0..losers).map(|_| fresh(&mut rng)).collect();
        data.add_preference(&winner, &ls).unwrap();
        pool.push(winner);
        pool.extend(ls);
    }
    data
}

#[test]
fn winner_is_ranked_above_loser() {
    let mut data = Dataset::new(SearchSpace::new(2).unwrap());
    data.add_preference(&pv(&[0.2, 0.3]), &[pv(&[0.8, 0.6])]).unwrap();
    let m = map_fit(&data, &FitConfig::default()).unwrap();
    let g = m.latent_goodness();
    assert!(g[0] > g[1], "{g:?}");

    data.add_preference(&pv(&[0.2, 0.3]), &[pv(&[0.8, 0.6])]).unwrap();
    let m2 = map_fit(&data, &FitConfig::default()).unwrap();
    let g2 = m2.latent_goodness();
    assert!(g2[0] > g2[1]);
}

#[test]
fn fit_requires_data() {
    let mut data = Dataset::new(SearchSpace::new(2).unwrap());
    assert!(map_fit(&data, &FitConfig::default()).is_err());
    data.add_point(&pv(&[0.1, 0.1])).unwrap();
    data.add_point(&pv(&[0.2, 0.1])).unwrap();
    assert!(map_fit(&data, &FitConfig::default()).is_err());
}

#[test]
fn gradient_vanishes_at_the_solution() {
    for (seed, dim) in [(1, 2), (2, 5), (3, 10)] {
        let data = random_dataset(seed, dim, 8, 4);
        let config = FitConfig::default();
        let m = map_fit(&data, &config).unwrap();
        let (_, grad) =
            map_objective(&data, &config, m.latent_goodness(), &m.hyperparams().to_log()).unwrap();
        let max = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max <= 1e-4, "seed {seed}: gradient max-norm {max}");
    }
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let data = random_dataset(7, 3, 4, 2);
    let config = FitConfig { btl_scale: 0.1, ..FitConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g: Vec<f64> = (0..data.len()).map(|_| rng.random_range(-0.2..0.2)).collect();
    let eta = vec![0.2f64.ln() + 0.05, 0.5f64.ln() - 0.1, 0.4f64.ln(), 0.7f64.ln()];
    let (_, grad) = map_objective(&data, &config, &g, &eta).unwrap();
    let mut x: Vec<f64> = g.iter().chain(&eta).copied().collect();
    let split = g.len();
    for k in 0..x.len() {
        let h = 1e-6;
        let orig = x[k];
        x[k] = orig + h;
        let fp = map_objective(&data, &config, &x[..split], &x[split..]).unwrap().0;
        x[k] = orig - h;
        let fm = map_objective(&data, &config, &x[..split], &x[split..]).unwrap().0;
        x[k] = orig;
        let fd = (fp - fm) / (2.0 * h);
        assert!((fd - grad[k]).abs() <= 1e-5 * (1.0 + fd.abs()), "component {k}: fd {fd} vs {}", grad[k]);
    }
}

#[test]
fn fit_improves_on_initial_guess() {
    for seed in 0..4 {
        let data = random_dataset(100 + seed, 4, 6, 3);
        let config = FitConfig::default();
        let m = map_fit(&data, &config).unwrap();
        let zero = vec![0.0; data.len()];
        let start = config.prior.medians(4).to_log();
        let (f0, _) = map_objective(&data, &config, &zero, &start).unwrap();
        let (f1, _) = map_objective(&data, &config, m.latent_goodness(), &m.hyperparams().to_log()).unwrap();
        assert!(f1 >= f0, "{f1} < {f0}");
    }
}

#[test]
fn fit_is_deterministic_and_record_order_independent() {
    let data = random_dataset(11, 3, 5, 3);
    let a = map_fit(&data, &FitConfig::default()).unwrap();
    let b = map_fit(&data, &FitConfig::default()).unwrap();
    assert_eq!(a.latent_goodness(), b.latent_goodness());

    let mut shuffled = Dataset::new(data.space());
    for p in data.points() {
        shuffled.add_point(p).unwrap();
    }
    for r in data.records().iter().rev() {
        shuffled.push_record(r.clone()).unwrap();
    }
    let c = map_fit(&shuffled, &FitConfig::default()).unwrap();
    assert_eq!(a.latent_goodness(), c.latent_goodness());
    assert_eq!(
        a.current_best(BestMode::PosteriorMean).unwrap(),
        c.current_best(BestMode::PosteriorMean).unwrap()
    );
}

#[test]
fn posterior_interpolates_fitted_values() {
    let data = random_dataset(5, 3, 6, 4);
    let m = map_fit(&data, &FitConfig::default()).unwrap();
    for (p, g) in data.points().iter().zip(m.latent_goodness()) {
        let post = m.posterior(p).unwrap();
        assert!((post.mean - g).abs() <= 1e-4);
        assert!(post.variance >= 0.0 && post.variance <= 1e-4 * m.hyperparams().amplitude);
    }
}

#[test]
fn posterior_mean_best_follows_latent_ordering() {
    let data = random_dataset(21, 2, 5, 2);
    let m = map_fit(&data, &FitConfig::default()).unwrap();
    let best = m.current_best(BestMode::PosteriorMean).unwrap();
    let g = m.latent_goodness();
    let argmax = (0..g.len()).fold(0, |b, i| if g[i] > g[b] { i } else { b });
    assert_eq!(best, argmax);
    assert_eq!(m.current_best(BestMode::LastChosen).unwrap(), data.records().last().unwrap().winner());
}

/// Brute-force oracle: maximize the fixed-hyperparameter objective on a dense
/// grid using an independently written kernel, inverse and likelihood.
#[test]
fn latent_values_match_grid_search_oracle() {
    let pts = [[0.2, 0.3], [0.7, 0.4], [0.45, 0.9]];
    let mut data = Dataset::new(SearchSpace::new(2).unwrap());
    for p in &pts {
        data.add_point(&pv(p)).unwrap();
    }
    data.push_record(PreferenceRecord::new(0, vec![1]).unwrap()).unwrap();
    data.push_record(PreferenceRecord::new(2, vec![0, 1]).unwrap()).unwrap();
    let config = FitConfig { optimize_hyperparams: false, ..FitConfig::default() };
    let m = map_fit(&data, &config).unwrap();

    let (amp, ls, scale) = (0.2, 0.5, config.btl_scale);
    let k = |a: &[f64; 2], b: &[f64; 2]| {
        let r = (((a[0] - b[0]) / ls).powi(2) + ((a[1] - b[1]) / ls).powi(2)).sqrt();
        let s5 = 5f64.sqrt();
        amp * (1.0 + s5 * r + 5.0 * r * r / 3.0) * (-s5 * r).exp()
    };
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = k(&pts[i], &pts[j]) + if i == j { 1e-8 * amp } else { 0.0 };
        }
    }
    let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
        + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ([0, 0, 1][j], [1, 2, 2][j]);
            let (c0, c1) = ([0, 0, 1][i], [1, 2, 2][i]);
            let minor = c[r0][c0] * c[r1][c1] - c[r0][c1] * c[r1][c0];
            inv[i][j] = if (i + j) % 2 == 0 { minor } else { -minor } / det;
        }
    }
    let objective = |g: [f64; 3]| {
        let ll1 = g[0] / scale - ((g[0] / scale).exp() + (g[1] / scale).exp()).ln();
        let ll2 = g[2] / scale - ((g[0] / scale).exp() + (g[1] / scale).exp() + (g[2] / scale).exp()).ln();
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                quad += g[i] * inv[i][j] * g[j];
            }
        }
        ll1 + ll2 - 0.5 * quad
    };
    let steps: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
    let mut best = ([0.0; 3], f64::NEG_INFINITY);
    for &a in &steps {
        for &b in &steps {
            for &c in &steps {
                let v = objective([a, b, c]);
                if v > best.1 {
                    best = ([a, b, c], v);
                }
            }
        }
    }
    for (fit, oracle) in m.latent_goodness().iter().zip(best.0) {
        assert!((fit - oracle).abs() <= 0.02, "fit {:?} vs oracle {:?}", m.latent_goodness(), best.0);
    }
}
