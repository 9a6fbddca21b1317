//! Monte-Carlo behaviour of the robustness engine: noise-floor scaling,
//! schedule independence, and the escaping-atom signature at moderate cost.

use qrob_core::estimators::{Estimator, FunctionalSpec};
use qrob_core::metrics::prohorov;
use qrob_core::models::{ModelSpec, ParametricFamily};
use qrob_core::robustness::sampling_law;
use qrob_core::SeedSpec;

fn mean_plugin() -> Estimator {
    Estimator::PlugIn {
        functional: FunctionalSpec::Mean,
    }
}

fn noise_floor(model: &ModelSpec, n: usize, r: usize, seed: u64) -> f64 {
    let a = sampling_law(model, &mean_plugin(), n, r, SeedSpec::new(seed, 1)).unwrap();
    let b = sampling_law(model, &mean_plugin(), n, r, SeedSpec::new(seed, 2)).unwrap();
    prohorov(&a.law, &b.law)
}

#[test]
fn noise_floor_shrinks_when_replications_grow() {
    let model = ModelSpec::IidParametric {
        family: ParametricFamily::Normal { sigma2: 1.0 },
        theta: 0.0,
    };
    let mut small = Vec::new();
    let mut large = Vec::new();
    for seed in 0..10u64 {
        small.push(noise_floor(&model, 20, 1_000, seed));
        large.push(noise_floor(&model, 20, 10_000, seed));
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let m_small = median(&mut small);
    let m_large = median(&mut large);
    assert!(
        m_large < m_small,
        "noise floor did not shrink: {m_small} -> {m_large}"
    );
}

#[test]
fn sampling_law_is_schedule_independent() {
    let model = ModelSpec::IidParametric {
        family: ParametricFamily::Exponential,
        theta: 1.5,
    };
    let seed = SeedSpec::new(4711, 0);
    let serial_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let wide_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap();
    let a = serial_pool
        .install(|| sampling_law(&model, &mean_plugin(), 15, 500, seed))
        .unwrap();
    let b = wide_pool
        .install(|| sampling_law(&model, &mean_plugin(), 15, 500, seed))
        .unwrap();
    assert_eq!(a.law, b.law);
}

#[test]
fn bernoulli_mle_shift_classifies_as_robust() {
    // Small exact laws at small n, CLT-scale spread at large n: the MLE
    // surface stays below a 0.25 target along the parameter-shift path.
    let path = qrob_core::robustness::ContaminationPath::ParamShift {
        family: ParametricFamily::Bernoulli,
        theta1: 0.5,
        direction: 1.0,
    };
    let est = Estimator::Mle {
        family: ParametricFamily::Bernoulli,
    };
    let surface = qrob_core::robustness::robustness_surface(
        &path,
        &est,
        &[0.0, 0.01, 0.05, 0.1],
        &[1, 10, 100],
        1_500,
        SeedSpec::new(161803, 0),
    )
    .unwrap();
    let verdict = qrob_core::robustness::classify(&surface, Some(0.25), 100).unwrap();
    assert!(verdict.finite_sample_ok, "{verdict:?}");
    assert!(verdict.asymptotic_ok, "{verdict:?}");
}

#[test]
fn replication_errors_carry_the_index() {
    // Samples from {0, 1} eventually hit an all-zero vector, on which the
    // exponential MLE is undefined.
    let model = ModelSpec::IidParametric {
        family: ParametricFamily::Bernoulli,
        theta: 0.5,
    };
    let est = Estimator::Mle {
        family: ParametricFamily::Exponential,
    };
    let err = sampling_law(&model, &est, 2, 5_000, SeedSpec::new(3, 0)).unwrap_err();
    match err {
        qrob_core::robustness::RobustnessError::Replication { index, .. } => {
            assert!(index < 5_000);
        }
        other => panic!("unexpected error {other}"),
    }
}
