use approx::assert_relative_eq;
use cascade_risk::assess::{assess, prepare_scenario, validate_gradient, AssessConfig, Assessment, StorageMode};
use cascade_risk::cases;
use cascade_risk::gradient::*;
use cascade_risk::tree::{Policy, SearchBudget};
use cascade_risk::{Matrix, NetworkCase};
use nalgebra::{dvector, DVector};

fn exhaustive(levels: usize) -> AssessConfig {
    AssessConfig {
        budget: SearchBudget {
            attempts: usize::MAX,
            policy: Policy::Exhaustive { reverse: false },
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(levels)
}

fn run(case: &NetworkCase, outages: &[usize], cfg: &AssessConfig) -> Assessment {
    let s = prepare_scenario(case, outages, cfg).unwrap();
    assess(case, &s, &s.default_target, cfg).unwrap()
}

fn assert_vec_close(a: &DVector<f64>, b: &DVector<f64>, rel: f64) {
    let scale = a.amax().max(b.amax()).max(1e-12);
    assert!((a - b).amax() <= rel * scale, "{a} vs {b}");
}

#[test]
fn convergence_index_examples() {
    let reference = dvector![1.0, 0.0];
    let history = [dvector![3.0, 0.0], dvector![2.0, 0.0], reference.clone()];
    let idx = convergence_indices(&history, &reference);
    assert_eq!(idx.magnitude, vec![Some(1.0), Some(0.5), Some(0.0)]);
    // same direction throughout
    for d in &idx.direction {
        assert!(d.unwrap().abs() < 1e-15);
    }
    let orth = direction_distance(&dvector![0.0, 1.0], &reference).unwrap();
    assert_relative_eq!(orth, 2f64.sqrt(), max_relative = 1e-15);
}

#[test]
fn direction_distance_ignores_scale() {
    let a = dvector![1.0, -2.0, 0.5];
    let b = dvector![0.3, 0.1, 4.0];
    let d = direction_distance(&a, &b).unwrap();
    assert_relative_eq!(direction_distance(&(a.clone() * 7.5), &(b.clone() * 0.01)).unwrap(), d, max_relative = 1e-12);
    assert_eq!(direction_distance(&a, &a).unwrap(), 0.0);
    assert_eq!(direction_distance(&DVector::zeros(3), &b), None);
}

#[test]
fn magnitude_index_undefined_when_first_equals_reference() {
    let r = dvector![1.0, 1.0];
    let idx = convergence_indices(&[r.clone(), r.clone()], &r);
    assert_eq!(idx.magnitude, vec![None, None]);
}

#[test]
fn settling_attempt() {
    let v = [Some(0.5), Some(0.05), Some(0.2), Some(0.09), Some(0.01)];
    assert_eq!(settles_below(&v, 0.1), Some(3));
    assert_eq!(settles_below(&[Some(0.05), None], 0.1), None);
    assert_eq!(settles_below(&[Some(0.5)], 0.1), None);
}

#[test]
fn compression_drops_small_entries() {
    let m = Matrix::from_row_slice(2, 2, &[1e-6, 0.5, 2e-5, -3e-6]);
    let c = compress(&m, 1e-5);
    assert_eq!(c.nnz(), 2);
    assert_eq!(c.dense_len(), 4);
    assert_eq!(c.to_dense(), Matrix::from_row_slice(2, 2, &[0.0, 0.5, 2e-5, 0.0]));
    let lossless = compress(&m, 0.0);
    assert_eq!(lossless.nnz(), 4);
    assert_eq!(lossless.to_dense(), m);
}

#[test]
fn backward_update_matches_recursion() {
    let case = cases::ring6();
    let full = run(&case, &[], &exhaustive(2));
    assert_vec_close(full.tree.root_gradient(), &recursive_gradient(&full.tree), 1e-9);
    let partial_cfg = AssessConfig {
        budget: SearchBudget {
            attempts: 15,
            policy: Policy::Sampled,
            seed: 3,
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(4);
    let partial = run(&case, &[cases::RING6_OVERLOAD_OUTAGE], &partial_cfg);
    assert!(!partial.tree.is_complete());
    assert_vec_close(partial.tree.root_gradient(), &recursive_gradient(&partial.tree), 1e-9);
}

#[test]
fn control_gradient_equals_state_gradient_along_balanced_moves() {
    let case = cases::ring6();
    let a = run(&case, &[], &exhaustive(2));
    let gamma = a.control_gradient().unwrap();
    let s = a.state_gradient().unwrap();
    let d = &a.root_execution.d_target;
    // one load and one generator moving together keep the island balanced
    for (load, gen) in [(0, 4), (2, 5), (3, 4)] {
        let mut v = DVector::zeros(case.state_dim());
        v[load] = 1.0;
        v[gen] = 1.0;
        assert_eq!(&(d * &v), &v);
        assert_relative_eq!(gamma.dot(&v), s.dot(&v), max_relative = 1e-12);
    }
}

#[test]
fn lossless_compression_matches_dense() {
    let case = cases::ring6();
    let dense = run(&case, &[], &AssessConfig { storage: StorageMode::Dense, ..exhaustive(2) });
    let zero = run(
        &case,
        &[],
        &AssessConfig {
            storage: StorageMode::Compressed { threshold: 0.0 },
            ..exhaustive(2)
        },
    );
    assert_vec_close(dense.tree.root_gradient(), zero.tree.root_gradient(), 1e-12);
    let coarse = run(
        &case,
        &[],
        &AssessConfig {
            storage: StorageMode::Compressed { threshold: 1e-5 },
            ..exhaustive(2)
        },
    );
    let stats = coarse.tree.storage_stats();
    assert!(stats.stored <= stats.dense);
    let d = direction_distance(&control_gradient_of(&dense), &control_gradient_of(&coarse)).unwrap();
    assert!(d < 1e-2, "direction error {d}");
}

fn control_gradient_of(a: &Assessment) -> DVector<f64> {
    a.control_gradient().unwrap()
}

#[test]
fn gradient_agrees_with_finite_differences() {
    let case = cases::ring6();
    let cfg = exhaustive(2);
    let s = prepare_scenario(&case, &[], &cfg).unwrap();
    let v = validate_gradient(&case, &s, &s.default_target, &cfg, 0.2).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.unflagged_fraction >= 0.8);
    for c in v.components.iter().filter(|c| c.checked) {
        assert!(c.relative_error <= 0.05, "{c:?}");
    }
}

#[test]
fn validation_refuses_sampled_search() {
    let case = cases::ring6();
    let cfg = AssessConfig {
        budget: SearchBudget {
            policy: Policy::Sampled,
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(2);
    let s = prepare_scenario(&case, &[], &cfg).unwrap();
    assert!(validate_gradient(&case, &s, &s.default_target, &cfg, 0.2).is_err());
}
