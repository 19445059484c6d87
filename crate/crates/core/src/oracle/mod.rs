//! Ground-truth oracles: exactly enumerable discrete models, closed-form
//! Gaussian models, the canonical synthetic generators, and the
//! context-specific dependence demonstration.

pub mod bayesnet;
pub mod enumerate;
pub mod generators;
pub mod geweke;
pub mod marks;
pub mod models;

pub use bayesnet::{BnNode, DiscreteBayesNet};
pub use models::{BivariateGaussian, DiscreteJoint, Product};

/// Largest joint configuration count the enumerating oracles accept.
pub const MAX_STATE_SPACE: u128 = 1_000_000;
