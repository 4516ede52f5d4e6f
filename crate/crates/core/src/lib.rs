//! Stochastic separation in high dimensions: probability bounds, seeded samplers,
//! the separability census, and one-trial correctors for legacy classifiers.
pub mod bounds;
pub mod corrector;
pub mod error;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod separability;
pub use error::{Result, SepError};
