//! Brute-force cross-checks: chamber quadrature, exact lattice-walk counts,
//! and harmonicity of `h`.

pub mod harmonic;
pub mod lattice;
pub mod quadrature;

pub use harmonic::{check_harmonic_continuous, check_harmonic_discrete, ContinuousReport, DiscreteReport, Polynomial};
pub use lattice::{lattice_walk_dp, lattice_walk_reflection, StepSet};
pub use quadrature::{chamber_integral, conditioned_mass, quadrature_survival, reflecting_mass};
