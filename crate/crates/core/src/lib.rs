//! Computable C*-envelopes of finite-dimensional operator systems.
//!
//! An operator system here is a unital, adjoint-closed subspace `E ⊆ M_n`.
//! The crate computes the generated C*-algebra `C*(E)`, its Wedderburn block
//! structure, the boundary representations of `E`, the Šilov boundary ideal
//! (by two independent routes), the C*-envelope, minimal tensor products and
//! propagation numbers.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the command
//! line front-end live in the `silov-cli` crate.
#![no_std]

extern crate alloc;

pub mod boundary;
pub mod choi;
pub mod error;
pub mod linalg;
pub mod opsys;
pub mod propagation;
pub mod rng;
pub mod sdp;
pub mod tensor;
pub mod tol;
pub mod wedderburn;

pub use error::{Error, Result};
pub use linalg::{Mat, MatSubspace, C64};
pub use opsys::{CStarAlgebra, OperatorSystem};
pub use tol::Tolerances;
pub use wedderburn::{BlockIdeal, QuotientMap, WedderburnData};
