use seqplane_bench::experiment::{compare, read_csv, write_csv};
use seqplane_bench::{
    run_experiment, run_trial, run_trial_observed, ExperimentConfig, FunctionKind, Method, Simulation, Subspace,
    SyntheticFunction, TrialConfig,
};
use seqplane_core::{GridSpec, SearchSpace};

fn gaussian(n: usize) -> SyntheticFunction {
    SyntheticFunction::new(FunctionKind::IsotropicGaussian, n).unwrap()
}

#[test]
fn rows_are_complete_and_gaps_nonincreasing() {
    for method in Method::ALL {
        let result = run_trial(&TrialConfig::new(method, gaussian(3), 6, 11));
        assert!(result.failure.is_none(), "{:?}", result.failure);
        assert_eq!(result.rows.len(), 6);
        for (k, w) in result.rows.windows(2).enumerate() {
            assert_eq!(w[0].iteration, k + 1);
            assert!(w[1].optimality_gap <= w[0].optimality_gap);
        }
        assert!(result.rows.iter().all(|r| r.optimality_gap >= 0.0));
    }
}

#[test]
fn trials_are_deterministic() {
    let config = TrialConfig::new(Method::SpsBo, gaussian(3), 4, 5);
    assert_eq!(run_trial(&config), run_trial(&config));
}

#[test]
fn plane_search_improves_on_a_2d_gaussian() {
    for seed in [0, 1, 2] {
        let result = run_trial(&TrialConfig::new(Method::SpsBo, gaussian(2), 15, seed));
        let (first, last) = (result.rows[0].optimality_gap, result.rows[14].optimality_gap);
        assert!(last < first, "seed {seed}: {first} -> {last}");
    }
}

#[test]
fn constructed_planes_satisfy_invariants_every_iteration() {
    let space = SearchSpace::new(4).unwrap();
    for seed in 0..3 {
        let mut planes = 0;
        let config = TrialConfig::new(Method::SpsBo, gaussian(4), 8, seed);
        let result = run_trial_observed(&config, |_, sub| {
            let Subspace::Plane(p) = sub else { panic!("plane method produced a line") };
            assert!(p.orthogonality_error() <= 1e-9);
            for v in p.vertices() {
                assert!(space.contains(&v));
            }
            planes += 1;
        });
        assert!(result.failure.is_none());
        assert_eq!(planes, 8);
    }
}

#[test]
fn sls_first_line_starts_at_the_center() {
    let mut first = None;
    run_trial_observed(&TrialConfig::new(Method::Sls, gaussian(3), 2, 9), |it, sub| {
        if it == 1 {
            first = Some(sub.clone());
        }
    });
    let Some(Subspace::Line(line)) = first else { panic!("expected a line") };
    assert_eq!(line.start.as_slice(), &[0.5, 0.5, 0.5]);
}

#[test]
fn continuous_simulation_runs() {
    let mut config = TrialConfig::new(Method::SpsRandom, gaussian(3), 3, 2);
    config.simulation = Simulation::Continuous { side: 129 };
    let result = run_trial(&config);
    assert_eq!(result.rows.len(), 3);
}

fn small_experiment() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Method::ALL.to_vec(), vec![FunctionKind::IsotropicGaussian], vec![2], 2, 5);
    c.base_seed = 40;
    c.grid = GridSpec::new(3, 2, 2.0).unwrap();
    c
}

#[test]
fn experiment_rows_sorted_and_csv_reproducible() {
    let rows = run_experiment(&small_experiment()).unwrap();
    assert_eq!(rows.len(), 30);
    let keys: Vec<_> = rows.iter().map(|r| (r.method, r.function, r.dim, r.trial, r.iteration)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(rows.iter().all(|r| r.seed == 40 + r.trial as u64 && r.error.is_empty()));

    let mut first = Vec::new();
    write_csv(&rows, &mut first).unwrap();
    let mut second = Vec::new();
    write_csv(&run_experiment(&small_experiment()).unwrap(), &mut second).unwrap();
    assert_eq!(first, second);

    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("method,function,dim,trial,seed,iteration,best_value,optimality_gap,error\n"));
    let value = text.lines().nth(1).unwrap().split(',').nth(6).unwrap();
    let mantissa = value.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{value}");

    let parsed = read_csv(first.as_slice()).unwrap();
    assert_eq!(parsed, rows);

    let cmp = compare(&parsed, 5, 0.05).unwrap();
    assert_eq!(cmp.len(), 1);
    assert_eq!(cmp[0].methods.len(), 3);
    assert_eq!(cmp[0].pairs.len(), 3);
    assert!((cmp[0].pairs[0].alpha - 0.05 / 3.0).abs() < 1e-18);
}

#[test]
fn failures_become_error_rows() {
    let mut config = small_experiment();
    config.methods = vec![Method::SpsRandom];
    config.dims = vec![1];
    // a one-dimensional space admits no random plane, so iteration 2 fails
    let rows = run_experiment(&config).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].error.is_empty() && rows[0].optimality_gap.is_some());
    assert_eq!(rows[1].iteration, 2);
    assert!(rows[1].optimality_gap.is_none());
    assert!(rows[1].error.contains("iteration 2"), "{}", rows[1].error);
}
