//! Dirichlet process mixture model with conjugate, collapsed components.
//!
//! Numerical variables use a Normal likelihood with a Normal-Gamma prior
//! on (mean, precision), equivalently Normal-Inverse-Gamma on
//! (mean, variance); nominal variables use a Categorical likelihood with a
//! symmetric Dirichlet prior. Component parameters are always integrated
//! out: every likelihood factor is a closed-form posterior predictive given
//! the cluster's sufficient statistics.

mod component;
mod grid;
mod state;

pub use component::{ComponentHypers, DirichletHypers, NormalGammaHypers, SuffStat};
pub use grid::{ColumnGrid, HyperGrids, GRID_POINTS};
pub use state::{ClusterId, ClusterStats, DpmmState};
