//! Metrological usefulness of multipartite quantum states, alone and in the
//! multicopy setting where every party holds `M` copies of its subsystem and
//! local Hamiltonians may act jointly on those copies.
//!
//! The crate is organised bottom-up:
//!
//! - [`qtensor`]: Hermitian operators, density matrices and tensor-product
//!   bookkeeping.
//! - [`states`]: the state families (diagonal-subspace, GHZ with noise,
//!   isotropic, ring cluster, W mixtures, two-copy Bell mixture).
//! - [`metrology`]: quantum Fisher information, skew information, separable
//!   bound, metrological gain and the analytic usefulness criteria.
//! - [`multicopy`]: tensor-power evaluators, closed forms and no-go bounds.
//! - [`optimizer`]: multi-start ascent of the gain over local Hamiltonians.

pub mod error;
pub mod metrology;
pub mod multicopy;
pub mod optimizer;
pub mod qtensor;
pub mod states;
#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
pub use metrology::{gain_for, qfi, separable_bound, skew_information, variance_bound, GainReport};
pub use qtensor::{DensityMatrix, Eigensystem, HermitianOperator, PartitionLayout};
