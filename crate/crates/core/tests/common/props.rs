//! Property checks shared by the proptest suites and the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sparse_tucker::fista::{effective_support, soft_threshold};
use sparse_tucker::projected::ProjectedFista;
use sparse_tucker::{DenseTensor, FactorSet, RecoveryConfig, SupportSet};

use super::*;

type Check = Result<(), TestCaseError>;

/// Observation of a 0/1 sparse core plus Gaussian noise, on the given factors.
pub fn sparse_problem(f: &FactorSet, k: usize, noise: f64, seed: u64) -> (DenseTensor, DenseTensor) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let shape = f.core_shape();
    let mut x = DenseTensor::zeros(&shape).unwrap();
    let n = x.len();
    for j in rand::seq::index::sample(&mut rng, n, k.min(n)) {
        x.data_mut()[j] = 1.0;
    }
    let mut y = f.forward(&x).unwrap();
    let e = gaussian_tensor(y.shape(), &mut rng);
    y.axpy(noise, &e).unwrap();
    (x, y)
}

pub fn tensor_and_mode() -> impl Strategy<Value = (DenseTensor, usize)> {
    any_tensor().prop_flat_map(|t| {
        let n = t.order();
        (Just(t), 0..n)
    })
}

pub fn tensor_pair() -> impl Strategy<Value = (DenseTensor, DenseTensor)> {
    small_shape().prop_flat_map(|s| (tensor_of(s.clone()), tensor_of(s)))
}

/// A Stage III run: factors, data seed, pruning window and a random initial support.
#[derive(Debug, Clone)]
pub struct ProjectedCase {
    pub factors: FactorSet,
    pub seed: u64,
    pub window: usize,
    pub omega0: Vec<bool>,
}

pub fn projected_case() -> impl Strategy<Value = ProjectedCase> {
    (factor_problem(), 1usize..6, prop::collection::vec(any::<bool>(), 125)).prop_map(|((factors, seed), window, omega0)| {
        ProjectedCase { factors, seed, window, omega0 }
    })
}

pub fn unfold_fold_round_trip((t, mode): (DenseTensor, usize)) -> Check {
    let m = t.unfold(mode).unwrap();
    prop_assert_eq!(m.nrows(), t.shape()[mode]);
    prop_assert_eq!(m.nrows() * m.ncols(), t.len());
    prop_assert_eq!(DenseTensor::fold(&m, mode, t.shape()).unwrap(), t);
    Ok(())
}

pub fn adjointness((f, seed): (FactorSet, u64)) -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 1);
    let x = gaussian_tensor(&f.core_shape(), &mut rng);
    let y = gaussian_tensor(&f.observed_shape(), &mut rng);
    let lhs = f.forward(&x).unwrap().inner(&y).unwrap();
    let rhs = x.inner(&f.adjoint(&y).unwrap()).unwrap();
    prop_assert!((lhs - rhs).abs() <= 1e-10 * x.frobenius_norm() * y.frobenius_norm());
    Ok(())
}

/// `x = soft(u, α)` satisfies `u − x ∈ α·∂‖x‖₁`, entry by entry.
pub fn soft_threshold_optimality((t, alpha): (DenseTensor, f64)) -> Check {
    let x = soft_threshold(&t, alpha).unwrap();
    for (&u, &v) in t.data().iter().zip(x.data()) {
        if v != 0.0 {
            prop_assert!((u - v - alpha * v.signum()).abs() <= 1e-12 * (1.0 + u.abs()));
        } else {
            prop_assert!(u.abs() <= alpha);
        }
        prop_assert_eq!(v, soft(u, alpha));
    }
    Ok(())
}

pub fn soft_threshold_nonexpansive(((a, b), alpha): ((DenseTensor, DenseTensor), f64)) -> Check {
    let d_in = a.sub(&b).unwrap().frobenius_norm();
    let sa = soft_threshold(&a, alpha).unwrap();
    let sb = soft_threshold(&b, alpha).unwrap();
    prop_assert!(sa.sub(&sb).unwrap().frobenius_norm() <= d_in * (1.0 + 1e-12) + 1e-15);
    Ok(())
}

const PASSES: usize = 40;

fn solver_for<'a>(case: &'a ProjectedCase, y: &'a DenseTensor, cfg: &'a RecoveryConfig) -> ProjectedFista<'a> {
    let f = &case.factors;
    let shape = f.core_shape();
    let n: usize = shape.iter().product();
    let omega0 = SupportSet::from_linear(&shape, (0..n).filter(|&k| case.omega0[k])).unwrap();
    ProjectedFista::new(y, f, omega0, f.adjoint(y).unwrap(), cfg).unwrap().keep_unprojected(true)
}

/// After every pass the iterate vanishes off the working support, and the
/// support grew by exactly the new `|x| > tol` indices before pruning.
pub fn projection_support_invariant(case: ProjectedCase) -> Check {
    let (_, y) = sparse_problem(&case.factors, 3, 0.01, case.seed);
    let cfg = RecoveryConfig { prune_window: case.window, ..Default::default() };
    let mut solver = solver_for(&case, &y, &cfg);
    let mut prev = solver.support().clone();
    for _ in 0..PASSES {
        let rep = solver.step().unwrap();
        let raw = rep.unprojected.as_ref().unwrap();
        let support = solver.support();
        for (k, &v) in solver.iterate().data().iter().enumerate() {
            if support.contains(k) {
                prop_assert_eq!(v, raw.data()[k]);
            } else {
                prop_assert_eq!(v, 0.0);
            }
        }
        let grown = prev.union(&effective_support(raw, cfg.tol));
        prop_assert_eq!(rep.added, grown.len() - prev.len());
        prop_assert!(support.is_subset(&grown));
        prev = support.clone();
    }
    Ok(())
}

/// An index leaves the working support exactly when it has spent `R`
/// consecutive passes in it with `|x| < tol`.
pub fn pruning_window_audit(case: ProjectedCase) -> Check {
    let (_, y) = sparse_problem(&case.factors, 3, 0.01, case.seed);
    let window = case.window;
    let cfg = RecoveryConfig { prune_window: window, ..Default::default() };
    let mut solver = solver_for(&case, &y, &cfg);
    let n = case.factors.core_shape().iter().product::<usize>();
    let mut prev = solver.support().clone();
    // member[t][k]: k was in the working support when pass t pruned
    let mut below: Vec<Vec<bool>> = Vec::new();
    let mut member: Vec<Vec<bool>> = Vec::new();
    for _ in 0..PASSES {
        let rep = solver.step().unwrap();
        let raw = rep.unprojected.clone().unwrap();
        let support = solver.support().clone();
        let grown = prev.union(&effective_support(&raw, cfg.tol));
        below.push(raw.data().iter().map(|v| v.abs() < cfg.tol).collect());
        member.push(grown.mask().to_vec());
        let t = below.len();
        let removed = grown.difference(&support);
        prop_assert_eq!(removed.iter().collect::<Vec<_>>(), rep.pruned.clone());
        for k in 0..n {
            let mut run = 0;
            while run < t && member[t - 1 - run][k] && below[t - 1 - run][k] {
                run += 1;
            }
            if removed.contains(k) {
                prop_assert_eq!(run, window, "index {} pruned after {} passes", k, run);
            } else if support.contains(k) {
                prop_assert!(run < window, "index {} kept after {} passes", k, run);
            }
        }
        // a pruned index that returns starts a fresh window
        for k in removed.iter() {
            for m in member.iter_mut() {
                m[k] = false;
            }
        }
        prev = support;
    }
    Ok(())
}
