//! Rigidity and expansive-motion analysis for d-periodic bar-and-joint
//! frameworks.
//!
//! * [`framework`]: quotient graphs with lattice-shift labels, placements.
//! * [`rigidity`]: periodic rigidity matrix, flexes, stresses, DOF.
//! * [`cones`]: vertex stars, positive dependence, lineality, pointedness.
//! * [`expansive`]: truncated infinitesimal expansive cone and its rays.
//! * [`constructions`]: the simplex family and the stressed cubic example.
//! * [`motion`]: predictor–corrector continuation and expansion audits.

pub mod cones;
pub mod constructions;
pub mod error;
pub mod expansive;
pub mod framework;
pub mod io;
pub mod linalg;
pub mod motion;
pub mod rigidity;

pub use error::{Error, Result};
pub use framework::{EdgeOrbit, PeriodicFramework, Placement, QuotientGraph};
pub use rigidity::{analyze, RigidityReport};
