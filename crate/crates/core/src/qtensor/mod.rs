//! Dense complex linear algebra on tensor-product spaces: Hermitian
//! operators and density matrices, eigendecomposition, Kronecker products,
//! site-addressed embedding, partial trace and local-dimension embedding.

mod eigen;
mod layout;
mod operator;
mod ops;

pub use eigen::{eigh, Eigensystem};
pub use layout::{PartitionLayout, MAX_DENSE_DIM};
pub use operator::{
    c, re, CMatrix, CVector, DensityMatrix, HermitianOperator, MatrixDoc, C64, EIGEN_CLAMP,
    HERMITIAN_TOL, PSD_TOL, TRACE_TOL,
};
pub use ops::{
    embed_local_dim, embed_local_dim_vector, embed_on_sites, partial_trace, tensor_product,
};

#[cfg(test)]
pub(crate) use operator::max_abs;
pub(crate) use eigen::eigh_matrix;
pub(crate) use ops::{apply_on_sites_into, SiteMap};
