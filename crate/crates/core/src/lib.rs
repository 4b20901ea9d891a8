//! Thermodynamics of multipartite mean-field ferromagnets.
//!
//! Spins are split into `nu` parties of relative sizes `alpha`; spins interact
//! only across parties. The crate computes the limiting pressure, equilibrium
//! magnetisations, critical temperatures and bipartite phase diagrams, and
//! checks the limit theorems against exact finite-size enumeration.

pub mod bipartite;
pub mod criticality;
pub mod error;
pub mod exactfinite;
pub mod numeric;
pub mod genferro;
pub mod model;
pub mod solver;
pub mod spins;
pub mod verification;

pub use error::{Error, Result};
pub use model::{hamiltonian, interaction_matrices, InteractionDecomposition, MagnetisationVector, ModelSpec};
pub use spins::{CgfEval, SpinFamily, ValidationFailure, ValidationReport};

#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/spin_laws.md")]
    pub mod spin_laws {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/criticality.md")]
    pub mod criticality {}
    #[doc = include_str!("../../../book/src/pressure.md")]
    pub mod pressure {}
    #[doc = include_str!("../../../book/src/phase_diagram.md")]
    pub mod phase_diagram {}
    #[doc = include_str!("../../../book/src/finite_size.md")]
    pub mod finite_size {}
    #[doc = include_str!("../../../book/src/command_line.md")]
    pub mod command_line {}
}
