//! Writes the neighbour-leakage instance used by the acceptance suite.
//!
//! Row 4 of the mode-0 factor is planted as `0.45·(row 2 + row 3) + 0.1·v`
//! before orthonormalisation. Row relations survive the QR step, so the
//! sensing column of a core entry at mode-0 index 4 is nearly spanned by
//! its two grid neighbours and ℓ1 recovery prefers spreading mass onto them.
//!
//! Usage: `cargo run --example leakage_fixture -- <out-dir>`

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_tucker::bench::write_instance;
use sparse_tucker::synthetic::{random_orthonormal_matrix, ExperimentSpec, Instance};
use sparse_tucker::{DenseTensor, FactorSet, SupportSet};

const J: usize = 10;
const I: usize = 7;
const SEED: u64 = 2;
const MIX: f64 = 0.9;
const OFFSET: f64 = 0.1;

fn planted_factor(rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let mut b = DMatrix::from_fn(J, I, |_, _| StandardNormal.sample(rng));
    let v = DMatrix::from_fn(1, I, |_, _| StandardNormal.sample(rng));
    let row = (b.row(2) + b.row(3)) * (MIX / 2.0) + v * OFFSET;
    b.set_row(4, &row);
    b.qr().q()
}

fn main() -> sparse_tucker::Result<()> {
    let out: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("tests/fixtures/neighbour_leakage"));
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let a0 = planted_factor(&mut rng);
    let a1 = random_orthonormal_matrix(J, I, &mut rng)?;
    let a2 = random_orthonormal_matrix(J, I, &mut rng)?;
    let factors = FactorSet::new(vec![a0, a1, a2])?;

    let shape = [J; 3];
    let entries: [([usize; 3], f64); 3] = [([4, 3, 3], 1.0), ([0, J - 1, 1], 1.05), ([J - 1, 0, J - 2], 0.95)];
    let mut x_true = DenseTensor::zeros(&shape)?;
    for (idx, v) in &entries {
        x_true.set(idx, *v);
    }
    let support = SupportSet::from_tuples(&shape, entries.iter().map(|(idx, _)| &idx[..]))?;
    let y = factors.forward(&x_true)?;

    let spec = ExperimentSpec {
        support_size: entries.len(),
        noise_spread: 0.0,
        seed: SEED,
        replicates: 1,
        ..ExperimentSpec::cube(3, J, I)
    };
    let inst = Instance {
        replicate: 0,
        x_true,
        support,
        factors,
        y,
    };
    for p in write_instance(&out, &spec, &inst)? {
        println!("{}", p.display());
    }
    Ok(())
}
