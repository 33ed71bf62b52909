//! Information geometry of Delzant polytopes.
//!
//! A Delzant polytope `P` with a symplectic potential `φ` carries a dually
//! flat structure on its interior: mixture coordinates `x = ξ`, dual
//! coordinates `y = ∇φ(ξ)`, Hessian metric `Hess φ`, and the Bregman
//! divergence of `φ`. This crate computes these objects, extends them to the
//! faces of `P`, and relates them to KL divergences of the categorical
//! families that zero-sum polytopes define.
//!
//! ```
//! use delzant_core::{dually_flat, polytope::shapes, potential::SymplecticPotential};
//!
//! let triangle = shapes::triangle();
//! let phi = SymplecticPotential::guillemin(&triangle, 1.0);
//! let d = dually_flat::bregman(&phi, &[0.25, 0.25], &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
//! assert!((d - 0.058892).abs() < 1e-6);
//! ```

pub mod boundary;
pub mod dually_flat;
pub mod error;
pub mod exact;
pub mod face;
pub mod lattice;
pub mod linalg;
pub mod mixture;
pub mod polynomial;
pub mod polytope;
pub mod potential;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
