//! Simulation and optimization kernels for RIS-assisted terahertz MIMO links.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: complex matrices, SVD, Kronecker/vec helpers, log-determinants
//! - [`channel`]: sparse geometric channel synthesis for the BS-RIS, RIS-MS and direct hops
//! - [`ris`]: discrete phase sets, quantization, the reflection matrix and graphene element physics
//! - [`beamforming`]: SVD beamformers, achievable rate and its trace upper bound
//! - [`gd`]: adaptive- and fixed-step gradient descent on the RIS phases
//! - [`ao`]: column-by-column hybrid factorization and one-vs-rest phase search, alternated
//! - [`complexity`]: closed-form multiplication counts of every optimizer

pub mod ao;
pub mod beamforming;
pub mod channel;
pub mod complexity;
pub mod error;
pub mod gd;
pub mod numerics;
pub mod ris;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, C64};
