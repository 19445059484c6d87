//! Std companion to `depmi-core`: CSV ingest, on-disk workspaces, parallel
//! fitting and querying, baselines, experiments and output formatting.

pub mod baselines;
pub mod bench;
pub mod format;
pub mod ingest;
pub mod parallel;
pub mod workspace;
