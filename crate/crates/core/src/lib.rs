//! Matrix integrable PDEs solved by linearisation: exact spectral evolution of
//! a Hankel symbol, quadrature assembly of the Fredholm kernel and a dense
//! Nyström solve, with finite-difference certification of the results.

// `!(a <= b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod companion;
pub mod dispersion;
pub mod equations;
pub mod error;
pub mod field;
pub mod fredholm;
pub mod gridkernel;
pub mod identities;
pub mod linalg;
pub mod quadrature;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
