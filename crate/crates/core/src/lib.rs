//! Numerical laboratory for the linearized elastic inverse boundary value
//! problem at a homogeneous isotropic background.
//!
//! The crate builds complex geometrical optics (CGO) solutions of the
//! Navier system, evaluates the linearized Dirichlet-to-Neumann bilinear
//! form by quadrature (with closed-form oracles for constant perturbations),
//! verifies the large-parameter expansions with a truncated Laurent-series
//! engine, and runs a staged Fourier-domain reconstruction of a transversely
//! isotropic stiffness perturbation and, with two frequencies, of a
//! transversely isotropic density perturbation.

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::len_without_is_empty
)]

pub mod cgo;
pub mod combo;
pub mod config;
pub mod dn_form;
pub mod error;
pub mod field_io;
pub mod linalg;
pub mod phantom;
pub mod pipeline;
pub mod quadrature;
pub mod recon;
pub mod report;
pub mod series;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
