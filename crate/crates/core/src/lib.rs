//! Solver and verification toolkit for the two-species Vlasov-Poisson-Landau
//! system linearized around a global Maxwellian, on a periodic torus and on
//! a channel with specularly reflecting walls.

pub mod collision;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod io;
pub mod macroscopic;
pub mod velocity;

pub use error::{Error, Result};
pub use evolution::{Solver, SolverConfig, SpectralState};
pub use velocity::{VelocityField, VelocityGrid, C64};
