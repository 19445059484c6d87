//! Joint-distribution test of the collapsed row kernel.
//!
//! Forward draws sample a partition from the CRP and then data given the
//! partition. The successive-conditional chain alternates one Gibbs row
//! sweep with a fresh data draw given the current partition. Both leave the
//! joint distribution of (partition, data) invariant, so any partition
//! statistic must have the same law under the two schemes.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::{Dataset, Schema, Value, Variable};
use crate::dpmm::{ComponentHypers, DpmmState, SuffStat};
use crate::math::sample_crp;

/// Fixed model for the test: concentration and one hyperparameter set per
/// variable.
#[derive(Clone, Debug, PartialEq)]
pub struct GewekeModel {
    pub rows: usize,
    pub alpha: f64,
    pub hypers: Vec<ComponentHypers>,
}

/// Number of clusters and size of the largest one.
pub type PartitionStats = (usize, usize);

fn partition_stats(partition: &[usize]) -> PartitionStats {
    let k = partition.iter().max().map_or(0, |m| m + 1);
    let mut sizes = alloc::vec![0usize; k];
    for &c in partition {
        sizes[c] += 1;
    }
    (k, sizes.into_iter().max().unwrap_or(0))
}

impl GewekeModel {
    fn schema(&self) -> Schema {
        let vars = self
            .hypers
            .iter()
            .enumerate()
            .map(|(j, h)| match h {
                ComponentHypers::Numerical(_) => Variable::numerical(format!("v{j}")),
                ComponentHypers::Nominal(d) => Variable::nominal(format!("v{j}"), d.categories as usize),
            })
            .collect();
        Schema::new(vars).expect("distinct generated names")
    }

    /// Data given a partition, drawn cluster by cluster from the sequential
    /// collapsed predictive.
    pub fn sample_data<R: Rng + ?Sized>(&self, partition: &[usize], rng: &mut R) -> Dataset {
        let k = partition.iter().max().map_or(0, |m| m + 1);
        let mut stats: Vec<Vec<SuffStat>> = (0..k)
            .map(|_| self.hypers.iter().map(SuffStat::empty).collect())
            .collect();
        let rows: Vec<Vec<Option<Value>>> = partition
            .iter()
            .map(|&c| {
                self.hypers
                    .iter()
                    .zip(stats[c].iter_mut())
                    .map(|(h, st)| {
                        let x = h.sample_predictive(st, rng);
                        st.observe(x);
                        Some(x)
                    })
                    .collect()
            })
            .collect();
        Dataset::new(self.schema(), rows).expect("predictive draws are admissible")
    }

    fn state(&self, data: &Dataset, partition: &[usize]) -> DpmmState {
        let vars = (0..self.hypers.len()).collect();
        DpmmState::new(data, vars, self.hypers.clone(), self.alpha, partition).expect("valid model")
    }

    /// Independent draws of the partition statistics from the prior.
    pub fn forward<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<PartitionStats> {
        (0..count)
            .map(|_| partition_stats(&sample_crp(rng, self.alpha, self.rows)))
            .collect()
    }

    /// `count` states of the successive-conditional chain, keeping every
    /// `thin`-th.
    pub fn successive<R: Rng + ?Sized>(&self, count: usize, thin: usize, rng: &mut R) -> Vec<PartitionStats> {
        let mut partition = sample_crp(rng, self.alpha, self.rows);
        let mut out = Vec::with_capacity(count);
        for i in 0..count * thin.max(1) {
            let data = self.sample_data(&partition, rng);
            let mut state = self.state(&data, &partition);
            state.gibbs_sweep_rows(&data, rng);
            partition = state.partition();
            if (i + 1) % thin.max(1) == 0 {
                out.push(partition_stats(&partition));
            }
        }
        out
    }
}
