//! Partitioned fluid-structure interaction on 2D triangular meshes with
//! adjoint shape sensitivities.
//!
//! The crate couples three single-discipline solvers — incompressible
//! SUPG/PSPG-stabilized flow, total-Lagrangian hyperelasticity and
//! pseudo-elastic mesh motion — through non-matching interface mapping
//! operators, runs the Dirichlet-Neumann fixed-point loop with Aitken
//! relaxation, and mirrors it with a partitioned adjoint loop that yields
//! complete or reduced three-field shape gradients verifiable against a
//! central-difference oracle.

pub mod cases;
pub mod coupling;
pub mod error;
pub mod fluid;
pub mod mapping;
pub mod meshkit;
pub mod meshmotion;
pub mod numkit;
pub mod objectives;
pub mod structure;
pub mod verify;

pub use error::{FsiError, Result};
