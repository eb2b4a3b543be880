//! Automatic mapping of source-code entities to the modules of an intended
//! architecture.
//!
//! The crate implements the iterative orphan-adoption loop together with four
//! attraction functions (dependency counting, vector-space similarity, latent
//! semantic indexing and multinomial naive Bayes), dependency-derived terms
//! for the text-based functions, a seeded experiment harness, and the
//! statistics used to compare the functions.

pub mod analysis;
pub mod attract;
pub mod cda;
pub mod error;
pub mod experiment;
pub mod gaopt;
pub mod hugme;
pub mod model;
pub mod stats;
pub mod svg;
pub mod synth;
pub mod textgen;

pub use error::{Error, Result};
