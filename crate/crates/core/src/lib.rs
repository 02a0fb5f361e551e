//! Finite-depth constructions of a Peano curve whose footprints are bounded by
//! smooth curves.

pub mod assembly;
pub mod cantor;
pub mod ceiling_field;
pub mod error;
pub mod lune;
pub mod peano;
pub mod smoothfn;
pub mod subdivision;

pub use error::{Error, Result};
