//! Radiation-reaction position shift of a charge linearly accelerated by a
//! static step potential.
//!
//! The shift is computed along several independent routes: the classical
//! work-energy double integral, the Green's function of the linearized
//! motion, a brute-force forced linear-response integration, and the
//! QED-derived forms (the reduced one-dimensional integral and the
//! solid-angle integral over retarded-time kinematics). Supporting checks
//! cover symplectic conservation, Jacobi-field antisymmetry, the emission
//! amplitude's integration-by-parts identity, its soft limit, and the
//! radiated-energy balance.

pub mod cli;
pub mod config;
pub mod error;
pub mod jacobi;
pub mod ldforce;
pub mod model;
pub mod ode;
pub mod output;
pub mod qshift;
pub mod quad;
pub mod report;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ParticleParams, PotentialProfile, SimulationConfig};
pub use trajectory::Trajectory;
