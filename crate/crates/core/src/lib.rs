//! Asymmetric Bell functionals, the Khot-Vishnoi game and its asymmetric
//! variant, with exact and heuristic solvers for classical and quantum values.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod gf2kit;
pub mod kvfactory;
pub mod numeric;
pub mod rng;
pub mod scenario;
pub mod solve;

pub use error::{Error, Result};
