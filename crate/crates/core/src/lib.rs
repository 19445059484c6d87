//! Posterior conditional mutual information over ensembles of
//! non-parametric Bayesian joint-density models.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation over in-memory values: the tabular data model, the
//! generative population model ([`Gpm`]) interface with its Monte Carlo CMI
//! estimator, a collapsed Dirichlet process mixture ([`dpmm`]), the CrossCat
//! variable-partition layer ([`crosscat`]), ensemble-level CMI posteriors
//! ([`cmi`]), the query language ([`query`]) and exact discrete oracles
//! ([`oracle`]). File formats, CSV ingestion and the command line live in the
//! `depmi` crate.
//!
//! Randomness is always passed in explicitly. A single `u64` seed derives
//! every child stream through [`rng::child_seed`], so serial and parallel
//! drivers produce identical numbers.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cmi;
pub mod crosscat;
pub mod data;
pub mod dpmm;
mod error;
pub mod gpm;
pub mod math;
pub mod oracle;
pub mod query;
pub mod rng;
pub mod stats;

pub use crate::cmi::{CmiPosterior, CmiQuery, Comparator, Threshold};
pub use crate::crosscat::{CrossCatState, Ensemble, FitConfig, Structure};
pub use crate::data::{Assignment, Condition, Dataset, Schema, StatType, Value, VarId, VarSet, Variable};
pub use crate::dpmm::DpmmState;
pub use crate::error::{Error, Result};
pub use crate::gpm::{gpm_cmi, Gpm};
