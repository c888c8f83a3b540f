//! Harmonic fields on a warped hyperbolic half-disk: geometry of the warped
//! metric, the reduced boundary value problem on the strip, and the
//! numerical checks built on top of them.

pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod inequality;
pub mod nonuniqueness;
pub mod output;
pub mod quadrature;
pub mod sobolev;
pub mod strip;

pub use error::{Error, Result};

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
