mod common;

use common::props::sparse_problem;
use common::*;
use proptest::prelude::*;
use sparse_tucker::augment::{augment, detect_ambiguous_cluster, dilate_support};
use sparse_tucker::fista::{effective_support, fista_recover, objective};
use sparse_tucker::pipeline::{four_stage_trace, recover, Method};
use sparse_tucker::postprocess::{iterative_postprocess, kronecker_least_squares};
use sparse_tucker::projected::{fista_with_projection, PruneTracker, NO_PRUNING};
use sparse_tucker::synthetic::{generate_instance, ExperimentSpec};
use sparse_tucker::{DenseTensor, RecoveryConfig, SupportSet};

fn dist2(a: &[usize], b: &[usize]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum()
}

/// Band-heavy tensors: entries drawn from {0, small, in-band, large}.
fn banded_tensor() -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(2usize..=5, 1..=3).prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        let entry = prop_oneof![
            3 => Just(0.0),
            1 => -0.04f64..0.04,
            3 => prop_oneof![0.06f64..0.49, -0.49f64..-0.06],
            1 => prop_oneof![0.5f64..2.0, -2.0f64..-0.5],
        ];
        prop::collection::vec(entry, n).prop_map(move |d| DenseTensor::new(shape.clone(), d).unwrap())
    })
}

proptest! {
    #[test]
    fn soft_threshold_is_the_l1_prox(case in (any_tensor(), 0.0f64..5.0)) {
        props::soft_threshold_optimality(case)?;
    }

    #[test]
    fn soft_threshold_is_nonexpansive(case in (props::tensor_pair(), 0.0f64..5.0)) {
        props::soft_threshold_nonexpansive(case)?;
    }

    #[test]
    fn cluster_matches_pair_scan(x in banded_tensor(), gamma in 0.5f64..3.0) {
        let (a, b) = (0.05, 0.5);
        let got = detect_ambiguous_cluster(&x, a, b, gamma).unwrap();
        let band: Vec<Vec<usize>> = all_indices(x.shape())
            .into_iter()
            .filter(|i| { let m = x.get(i).abs(); a < m && m < b })
            .collect();
        for idx in all_indices(x.shape()) {
            let want = band.contains(&idx)
                && band.iter().any(|o| o != &idx && dist2(o, &idx) < gamma * gamma);
            prop_assert_eq!(got.contains_tuple(&idx), want, "index {:?}", idx);
        }
    }

    #[test]
    fn dilation_is_the_union_of_closed_balls(x in banded_tensor(), r in 0.5f64..2.5) {
        let cluster = detect_ambiguous_cluster(&x, 0.05, 0.5, 2.0).unwrap();
        let grown = dilate_support(&cluster, r).unwrap();
        prop_assert!(cluster.is_subset(&grown));
        let centres: Vec<Vec<usize>> = cluster.tuples().collect();
        for idx in all_indices(x.shape()) {
            let want = centres.iter().any(|c| dist2(c, &idx) <= r * r + 1e-9);
            prop_assert_eq!(grown.contains_tuple(&idx), want);
        }
    }

    #[test]
    fn augmentation_keeps_support_values(x in banded_tensor()) {
        let cfg = RecoveryConfig::default();
        let aug = augment(&x, &cfg).unwrap();
        let base = effective_support(&x, cfg.tol);
        prop_assert_eq!(&aug.support, &base.union(&aug.candidates));
        let mut mags: Vec<f64> = base.iter().map(|k| x.data()[k].abs()).collect();
        mags.sort_by(f64::total_cmp);
        let alpha = match mags.len() {
            0 => 0.5 * (cfg.a + cfg.b),
            n if n % 2 == 1 => mags[n / 2],
            n => 0.5 * (mags[n / 2 - 1] + mags[n / 2]),
        };
        for k in 0..x.len() {
            let want = if aug.candidates.contains(k) && !base.contains(k) { alpha } else { x.data()[k] };
            prop_assert_eq!(aug.estimate.data()[k], want);
        }
    }

    #[test]
    fn projection_keeps_iterates_on_the_working_support(case in props::projected_case()) {
        props::projection_support_invariant(case)?;
    }

    #[test]
    fn pruning_follows_the_window(case in props::projected_case()) {
        props::pruning_window_audit(case)?;
    }

    #[test]
    fn full_support_without_pruning_is_plain_fista((f, seed) in factor_problem()) {
        let (_, y) = sparse_problem(&f, 2, 0.02, seed);
        let cfg = RecoveryConfig { prune_window: NO_PRUNING, max_iters: 60, ..Default::default() };
        let full = SupportSet::full(&f.core_shape());
        let projected = fista_with_projection(&y, &f, &full, &cfg).unwrap();
        let plain = fista_recover(&y, &f, &cfg).unwrap();
        prop_assert_eq!(projected.result.estimate, plain.estimate);
        prop_assert_eq!(projected.result.stages[0].iterations, plain.stages[0].iterations);
    }
}

#[test]
fn fista_iterates_track_vectorised_oracle() {
    for seed in 0..6u64 {
        let f = factor_set(&[5, 4, 3], &[3, 3, 2], seed);
        let (_, y) = sparse_problem(&f, 2, 0.05, seed);
        let phi = brute_sensing(&f);
        let oracle = vector_fista(&phi, &vec_of(&y), 500.0, 1.0, 50);
        for t in [1usize, 2, 3, 10, 50] {
            let cfg = RecoveryConfig { max_iters: t, change_tol: 0.0, ..Default::default() };
            let got = fista_recover(&y, &f, &cfg).unwrap();
            assert_eq!(got.stages[0].iterations, t);
            let want = &oracle[t - 1];
            let err = (vec_of(&got.estimate) - want).norm();
            assert!(err <= 1e-8 * want.norm().max(1e-300), "seed {seed} t {t}: {err}");
        }
    }
}

#[test]
fn objective_trace_records_each_pass() {
    let f = factor_set(&[4, 4, 4], &[3, 3, 3], 3);
    let (_, y) = sparse_problem(&f, 2, 0.0, 3);
    let cfg = RecoveryConfig { record_objective: true, max_iters: 25, change_tol: 0.0, ..Default::default() };
    let res = fista_recover(&y, &f, &cfg).unwrap();
    assert_eq!(res.objective_trace.len(), res.stages[0].iterations);
    let last = *res.objective_trace.last().unwrap();
    assert!((last - objective(&res.estimate, &y, &f, cfg.lambda).unwrap()).abs() < 1e-12);
    let start = objective(&f.adjoint(&y).unwrap(), &y, &f, cfg.lambda).unwrap();
    assert!(last <= start);
}

#[test]
fn change_tolerance_is_relative_to_the_observation() {
    let f = factor_set(&[5, 5, 5], &[4, 4, 4], 8);
    let (_, y) = sparse_problem(&f, 3, 0.01, 8);
    let cfg = RecoveryConfig::default();
    let a = fista_recover(&y, &f, &cfg).unwrap();
    let scaled = y.map(|v| 1000.0 * v);
    let scaled_cfg = RecoveryConfig { lambda: cfg.lambda / 1000.0, ..cfg.clone() };
    let b = fista_recover(&scaled, &f, &scaled_cfg).unwrap();
    // with λ rescaled the problem is an exact scaling, so the stopping pass must agree
    assert_eq!(a.stages[0].iterations, b.stages[0].iterations);
}

#[test]
fn pruned_index_starts_a_fresh_window_when_readded() {
    let shape = [4];
    let mut support = SupportSet::from_linear(&shape, [1]).unwrap();
    let mut tracker = PruneTracker::new();
    let quiet = DenseTensor::new(vec![4], vec![0.0; 4]).unwrap();
    for _ in 0..2 {
        assert!(tracker.prune(&mut support, &quiet, 0.05, 3).is_empty());
    }
    assert_eq!(tracker.count(1), 2);
    assert_eq!(tracker.prune(&mut support, &quiet, 0.05, 3), vec![1]);
    assert!(!support.contains(1));
    assert_eq!(tracker.tracked(), 0);

    support.insert(1);
    for _ in 0..2 {
        assert!(tracker.prune(&mut support, &quiet, 0.05, 3).is_empty());
    }
    let loud = DenseTensor::new(vec![4], vec![0.0, 0.3, 0.0, 0.0]).unwrap();
    assert!(tracker.prune(&mut support, &loud, 0.05, 3).is_empty());
    assert_eq!(tracker.count(1), 0);
    assert!(support.contains(1));
}

#[test]
fn projected_solver_readds_strong_indices() {
    let f = factor_set(&[5, 5, 5], &[4, 4, 4], 11);
    let (x, y) = sparse_problem(&f, 3, 0.0, 11);
    let truth = effective_support(&x, 0.5);
    let cfg = RecoveryConfig { prune_window: 1, ..Default::default() };
    let empty = SupportSet::empty(&f.core_shape());
    let out = fista_with_projection(&y, &f, &empty, &cfg).unwrap();
    assert!(truth.is_subset(&out.working_support));
    assert!(out.result.support.is_subset(&out.working_support));
}

#[test]
fn dispatch_identities() {
    let spec = ExperimentSpec { seed: 4, support_size: 5, ..ExperimentSpec::cube(3, 8, 6) };
    let inst = generate_instance(&spec, 0).unwrap();
    let cfg = RecoveryConfig::default();
    let (y, f) = (&inst.y, &inst.factors);

    let plain = fista_recover(y, f, &cfg).unwrap();
    let via = recover(y, f, &cfg, Method::Fista).unwrap();
    assert_eq!(plain.estimate, via.estimate);

    let pp = iterative_postprocess(y, f, &plain.estimate, &plain.support, &cfg).unwrap();
    let via_pp = recover(y, f, &cfg, Method::FistaPp).unwrap();
    assert_eq!(pp.estimate, via_pp.estimate);

    let mv = recover(y, f, &cfg, Method::FistaMvpp).unwrap();
    // unique restricted minimiser, so both solvers land on it
    assert!(!kronecker_least_squares(y, f, &plain.support, cfg.kron_guard).unwrap().rank_deficient);
    assert!(mv.estimate.sub(&via_pp.estimate).unwrap().frobenius_norm() < 1e-6);

    let trace = four_stage_trace(y, f, &cfg).unwrap();
    assert_eq!(trace.stage1.estimate, plain.estimate);
    assert!(trace.stage3.result.support.is_subset(&trace.stage3.working_support));
    assert!(trace.result.support.is_subset(&trace.stage3.working_support));
    let four = recover(y, f, &cfg, Method::FourStage).unwrap();
    assert_eq!(four.estimate, trace.result.estimate);
    let names: Vec<_> = four.stages.iter().map(|s| s.stage).collect();
    assert_eq!(names.len(), 4);
}

#[test]
fn methods_parse_by_name() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("fista_mv".parse::<Method>().is_err());
}
