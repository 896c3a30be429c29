//! Sparse Tucker core recovery.
//!
//! Recovers a sparse core `X` from `Y = X ×₀ A₀ᵀ ×₁ A₁ᵀ … + ε`, where every
//! factor `Aₙ` (`Jₙ × Iₙ`, `Iₙ ≤ Jₙ`) has orthonormal columns, in four stages:
//!
//! 1. N-mode FISTA ([`fista::fista_recover`]),
//! 2. support augmentation around ambiguous clusters ([`augment::augment`]),
//! 3. FISTA with support projections and pruning ([`projected::fista_with_projection`]),
//! 4. support-restricted least squares ([`postprocess::iterative_postprocess`]).
//!
//! All operators stay in Tucker form, so memory for the sensing operator is
//! `Σ JₙIₙ`. The explicit Kronecker operator in [`kron`] exists for oracle checks
//! and the matrix-vector baseline only.

pub mod augment;
pub mod bench;
pub mod config;
pub mod dtf;
pub mod error;
pub mod factors;
pub mod fista;
pub mod kron;
pub mod metrics;
pub mod pipeline;
pub mod postprocess;
pub mod projected;
pub mod support;
pub mod synthetic;
pub mod tensor;

pub use config::{AlphaPolicy, RecoveryConfig};
pub use error::{Error, Result};
pub use factors::FactorSet;
pub use fista::{RecoveryResult, Stage};
pub use pipeline::{recover, Method};
pub use support::SupportSet;
pub use tensor::DenseTensor;
