//! Cancellative spin systems on `Z^d` and their parity-preserving duals.
//!
//! The crate covers the whole pipeline: lattice configurations, the mod-2
//! rule algebra and model tables, an exact event-driven simulator, an exact
//! finite-state oracle (uniformization) for duality checks, oriented
//! percolation with renormalized "good point" statistics, and scripted
//! studies.
//!
//! Rates are generic over [`Scalar`]; the aliases below fix the common
//! choices.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod oracle;
pub mod percolation;
pub mod rng;
pub mod rules;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{LatticeShape, Site, SiteOffset, SpinConfig};
pub use scalar::{Rational, Scalar};

/// Rule set with `f64` rates.
pub type RuleSet64 = rules::RuleSet<f64>;
/// Rule set with `f32` rates.
pub type RuleSet32 = rules::RuleSet<f32>;
/// Rule set with exact rational rates.
pub type ExactRuleSet = rules::RuleSet<Rational>;
/// Model parameters with `f64` competition parameter.
pub type ModelSpec64 = rules::ModelSpec<f64>;
/// Model parameters with exact competition parameter.
pub type ExactModelSpec = rules::ModelSpec<Rational>;
/// Generator with `f64` entries.
pub type Generator64 = oracle::GeneratorMatrix<f64>;
/// Generator with exact rational entries.
pub type ExactGenerator = oracle::GeneratorMatrix<Rational>;
