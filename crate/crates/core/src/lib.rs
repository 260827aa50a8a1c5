//! Spectral kernels, transforms and decay estimates for the Schrödinger
//! operator `-d²/dx² + α/x²` on the half-line with a Dirichlet condition at 0.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod hankel;
pub mod operator;
pub mod oracle;
pub mod propagator;
pub mod quadrature;
pub mod specfun;

pub use error::{Checked, Error, Result, Warning};
pub use operator::{Grid, KernelMatrix, OperatorParams, WaveFunction};
