//! Brownian motion confined to the Weyl chambers of the classical root systems
//! `A_{n-1}`, `B_n` and `D_n`.
//!
//! The crate evaluates absorbed and reflected transition densities (signed
//! reflection sums and their determinant/permanent specializations), the
//! large-time survival asymptotics, and simulates both the killed process and
//! the process conditioned to stay in the chamber (the Doob h-transform by the
//! product of positive roots). Random-matrix sampling on `u(n)` and `so(N)`
//! and a set of brute-force oracles provide independent cross-checks.

pub mod asymptotics;
pub mod density;
pub mod error;
pub mod kernels;
mod linalg;
pub mod montecarlo;
pub mod oracle;
pub mod quad;
pub mod randmat;
pub mod rootsys;
pub mod stats;

pub use asymptotics::{bessel_dimension, schur_constant, selberg_constant, survival_asymptote, AsymptoticLaw};
pub use density::{Boundary, Density, DensityRequest, Method};
pub use error::{Error, Result};
pub use kernels::{CustomKernel, GaussKernel, TransitionKernel};
pub use montecarlo::{DriftSpec, SimConfig, SurvivalEstimate};
pub use randmat::{Algebra, MatrixSample};
pub use rootsys::{ChamberPoint, Family, GroupElement, Root, RootSystem};
pub use stats::KsResult;
