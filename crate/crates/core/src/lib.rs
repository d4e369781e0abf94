//! Heralded generation of entangled vacuum-evacuated coherent states from a
//! cascade of two beam splitters fed by a squeezed vacuum and two coherent
//! beams.

pub mod error;
pub mod fit;
pub mod fock;
pub mod io;
pub mod network;
pub mod oracle;
pub mod search;
pub mod simulator;

pub use error::{Error, Result};
