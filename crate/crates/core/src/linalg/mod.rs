//! Dense complex linear algebra: matrices, spectra, norms and subspace
//! arithmetic under the Hilbert–Schmidt inner product.

mod eig;
mod mat;
mod subspace;

pub use eig::{herm_eig, null_space, null_space_real, op_norm, sym_eig_real, top_singular, Eigen};
pub(crate) use eig::herm_eig_unchecked;
pub use mat::{hs_inner, kron, Mat, C64};
pub(crate) use subspace::span_of_unchecked;
pub use subspace::{span_of, subspace_contains, subspace_equal, MatSubspace};
