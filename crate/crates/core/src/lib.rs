//! Exact computation of spin states extracted from closed-shell fermionic states.

pub mod census;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod json;
pub mod nbrdm;
pub mod rdo;
pub mod sco;
pub mod spin;
pub mod verify;

pub use error::{Error, Result};
