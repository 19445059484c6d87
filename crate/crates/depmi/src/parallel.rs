//! Multi-threaded drivers. Every result is identical to the serial
//! functions in `depmi-core`: each chain and each member query runs on its
//! own derived random stream and results are collected in member order.

use depmi_core::cmi::{member_cmi, CmiPosterior, CmiQuery};
use depmi_core::crosscat::{assemble, fit_member, FitConfig};
use depmi_core::dpmm::HyperGrids;
use depmi_core::rng::child_stream;
use depmi_core::{Dataset, Ensemble, Error, Result};
use rayon::prelude::*;

fn pool(jobs: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().expect("thread pool")
}

/// Fits `config.members` chains using at most `jobs` threads (all cores
/// when `None`).
pub fn fit_ensemble(data: &Dataset, config: &FitConfig, jobs: Option<usize>) -> Result<Ensemble> {
    if data.n_rows() == 0 || data.n_vars() == 0 {
        return Err(Error::EmptyDataset);
    }
    if config.members == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let grids = HyperGrids::new(data);
    let members = pool(jobs).install(|| {
        (0..config.members)
            .into_par_iter()
            .map(|i| fit_member(data, &grids, config, i))
            .collect::<Result<Vec<_>>>()
    })?;
    assemble(data, config, members)
}

/// Parallel [`depmi_core::cmi::cmi_posterior_seeded`].
pub fn cmi_posterior(ensemble: &Ensemble, q: &CmiQuery, seed: u64) -> Result<CmiPosterior> {
    q.validate(ensemble.schema())?;
    let estimates = ensemble
        .members()
        .par_iter()
        .enumerate()
        .map(|(h, m)| member_cmi(m, q, &mut child_stream(seed, h as u64)).map(|x| (h, x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CmiPosterior { estimates })
}
