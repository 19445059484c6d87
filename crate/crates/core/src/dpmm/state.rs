use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::component::{ComponentHypers, SuffStat};
use super::grid::{ColumnGrid, HyperGrids};
use crate::data::{keys, Assignment, Dataset, StatType, Value, VarId, VarSet};
use crate::error::{Error, Result};
use crate::gpm::Gpm;
use crate::math::{logsumexp, normalize_log_weights, sample_crp, sample_log_weights};

/// Identifier of a mixture component. Ids are never reused within a
/// state's lifetime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ClusterId(pub u32);

/// Row count and per-variable sufficient statistics of one cluster.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ClusterStats {
    pub count: u32,
    /// Aligned with [`DpmmState::vars`]; only observed cells are counted.
    pub stats: Vec<SuffStat>,
}

/// One posterior sample of a Dirichlet process mixture over a subset of a
/// dataset's variables.
///
/// The state holds assignments and sufficient statistics but not the data
/// itself; inference methods take the [`Dataset`] they were built from.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DpmmState {
    vars: Vec<VarId>,
    hypers: Vec<ComponentHypers>,
    alpha: f64,
    assignments: Vec<ClusterId>,
    clusters: BTreeMap<ClusterId, ClusterStats>,
    next_cluster: u32,
}

fn hypers_match(var: VarId, ty: &StatType, h: &ComponentHypers) -> Result<()> {
    match (ty, h) {
        (StatType::Numerical, ComponentHypers::Numerical(_)) => Ok(()),
        (StatType::Nominal { labels }, ComponentHypers::Nominal(d)) if labels.len() == d.categories as usize => Ok(()),
        _ => Err(Error::TypeMismatch {
            var: format!("#{var}"),
            reason: "hyperparameters do not match the variable's type".into(),
        }),
    }
}

impl DpmmState {
    /// Builds a state from an explicit partition given as dense labels
    /// (`partition[i]` is row `i`'s cluster). Label `k` becomes
    /// `ClusterId(k)`.
    pub fn new(
        data: &Dataset,
        vars: Vec<VarId>,
        hypers: Vec<ComponentHypers>,
        alpha: f64,
        partition: &[usize],
    ) -> Result<Self> {
        if vars.len() != hypers.len() {
            return Err(Error::InvalidDataset(
                "one hyperparameter set per variable required".into(),
            ));
        }
        if partition.len() != data.n_rows() {
            return Err(Error::InvalidDataset(format!(
                "partition covers {} rows, dataset has {}",
                partition.len(),
                data.n_rows()
            )));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidDataset(format!("concentration {alpha} must be positive")));
        }
        let mut pairs: Vec<(VarId, ComponentHypers)> = vars.into_iter().zip(hypers).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::OverlappingVarSets(w[0].0));
            }
        }
        for (v, h) in &pairs {
            data.schema().check_var(*v)?;
            hypers_match(*v, data.schema().stat_type(*v), h)?;
        }
        let (vars, hypers) = pairs.into_iter().unzip();
        let mut state = DpmmState {
            vars,
            hypers,
            alpha,
            assignments: partition.iter().map(|&k| ClusterId(k as u32)).collect(),
            clusters: BTreeMap::new(),
            next_cluster: partition.iter().map(|&k| k as u32 + 1).max().unwrap_or(0),
        };
        state.rebuild(data);
        Ok(state)
    }

    /// Draws a state from the prior: concentration from the grid prior,
    /// hyperparameters uniformly from their grids, partition from the CRP.
    pub fn from_prior<R: Rng + ?Sized>(
        data: &Dataset,
        vars: Vec<VarId>,
        grids: &HyperGrids,
        rng: &mut R,
    ) -> Result<Self> {
        let alpha = grids.sample_alpha(rng);
        let hypers = vars.iter().map(|&v| grids.column(v).sample(rng)).collect();
        let partition = sample_crp(rng, alpha, data.n_rows());
        DpmmState::new(data, vars, hypers, alpha, &partition)
    }

    /// Like [`DpmmState::from_prior`] but with every row in its own
    /// cluster.
    pub fn singletons<R: Rng + ?Sized>(
        data: &Dataset,
        vars: Vec<VarId>,
        grids: &HyperGrids,
        rng: &mut R,
    ) -> Result<Self> {
        let alpha = grids.sample_alpha(rng);
        let hypers = vars.iter().map(|&v| grids.column(v).sample(rng)).collect();
        let partition: Vec<usize> = (0..data.n_rows()).collect();
        DpmmState::new(data, vars, hypers, alpha, &partition)
    }

    /// Recomputes all cluster statistics from the assignments.
    pub fn rebuild(&mut self, data: &Dataset) {
        let mut clusters: BTreeMap<ClusterId, ClusterStats> = BTreeMap::new();
        for (row, &id) in self.assignments.iter().enumerate() {
            let c = clusters.entry(id).or_insert_with(|| ClusterStats {
                count: 0,
                stats: self.hypers.iter().map(SuffStat::empty).collect(),
            });
            c.count += 1;
            for (j, &var) in self.vars.iter().enumerate() {
                if let Some(x) = data.cell(row, var) {
                    c.stats[j].observe(x);
                }
            }
        }
        self.clusters = clusters;
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn var_set(&self) -> VarSet {
        self.vars.iter().copied().collect()
    }

    pub fn hypers(&self) -> &[ComponentHypers] {
        &self.hypers
    }

    pub fn hypers_of(&self, var: VarId) -> Option<&ComponentHypers> {
        self.local(var).map(|j| &self.hypers[j])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        assert!(alpha > 0.0, "concentration must be positive");
        self.alpha = alpha;
    }

    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn assignments(&self) -> &[ClusterId] {
        &self.assignments
    }

    pub fn clusters(&self) -> impl Iterator<Item = (ClusterId, &ClusterStats)> {
        self.clusters.iter().map(|(&id, c)| (id, c))
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.values().map(|c| c.count as usize).collect()
    }

    /// Assignments relabeled densely in order of first appearance.
    pub fn partition(&self) -> Vec<usize> {
        let mut map: BTreeMap<ClusterId, usize> = BTreeMap::new();
        self.assignments
            .iter()
            .map(|id| {
                let next = map.len();
                *map.entry(*id).or_insert(next)
            })
            .collect()
    }

    #[inline]
    fn local(&self, var: VarId) -> Option<usize> {
        self.vars.binary_search(&var).ok()
    }

    fn locals(&self, assignment: &Assignment) -> Result<Vec<(usize, Value)>> {
        assignment
            .iter()
            .map(|(&var, &x)| {
                let j = self
                    .local(var)
                    .ok_or_else(|| Error::UnknownVariable(format!("#{var}")))?;
                if !self.hypers[j].accepts(x) {
                    return Err(Error::TypeMismatch {
                        var: format!("#{var}"),
                        reason: format!("value {x} is not admissible"),
                    });
                }
                Ok((j, x))
            })
            .collect()
    }

    fn ln_likelihood(&self, stats: &[SuffStat], cells: &[(usize, Value)]) -> f64 {
        cells
            .iter()
            .map(|&(j, x)| self.hypers[j].ln_predictive(&stats[j], x))
            .sum()
    }

    fn empty_stats(&self) -> Vec<SuffStat> {
        self.hypers.iter().map(SuffStat::empty).collect()
    }

    /// Unnormalized log cluster weights given observed cells, live clusters
    /// in id order followed by the fresh cluster.
    fn log_weights(&self, cells: &[(usize, Value)]) -> Vec<f64> {
        let mut lw: Vec<f64> = self
            .clusters
            .values()
            .map(|c| f64::from(c.count).ln() + self.ln_likelihood(&c.stats, cells))
            .collect();
        lw.push(self.alpha.ln() + self.ln_likelihood(&self.empty_stats(), cells));
        lw
    }

    /// Posterior over which cluster a new row joins given `given`:
    /// `K + 1` probabilities, live clusters in id order then the fresh one.
    pub fn cluster_posterior(&self, given: &Assignment) -> Result<Vec<f64>> {
        let cells = self.locals(given)?;
        let mut w = self.log_weights(&cells);
        normalize_log_weights(&mut w);
        Ok(w)
    }

    /// Live cluster ids in the order used by [`DpmmState::cluster_posterior`].
    pub fn cluster_ids(&self) -> Vec<ClusterId> {
        self.clusters.keys().copied().collect()
    }

    fn stats_at(&self, k: usize) -> Option<&[SuffStat]> {
        self.clusters.values().nth(k).map(|c| c.stats.as_slice())
    }

    /// One collapsed Gibbs scan over rows: each row is removed and
    /// reassigned with weight `n_k * p(row | cluster k)` or
    /// `alpha * p(row | prior)` for a fresh cluster. Clusters that empty out
    /// are dropped.
    pub fn gibbs_sweep_rows<R: Rng + ?Sized>(&mut self, data: &Dataset, rng: &mut R) {
        let mut cells: Vec<(usize, Value)> = Vec::with_capacity(self.vars.len());
        let mut ids: Vec<ClusterId> = Vec::new();
        let mut lw: Vec<f64> = Vec::new();
        let empty = self.empty_stats();
        for row in 0..self.assignments.len() {
            cells.clear();
            cells.extend(
                self.vars
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &v)| data.cell(row, v).map(|x| (j, x))),
            );
            self.detach(row, &cells);
            ids.clear();
            lw.clear();
            for (&id, c) in &self.clusters {
                ids.push(id);
                lw.push(f64::from(c.count).ln() + self.ln_likelihood(&c.stats, &cells));
            }
            lw.push(self.alpha.ln() + self.ln_likelihood(&empty, &cells));
            let k = sample_log_weights(rng, &lw);
            let id = if k < ids.len() {
                ids[k]
            } else {
                let id = ClusterId(self.next_cluster);
                self.next_cluster += 1;
                self.clusters.insert(
                    id,
                    ClusterStats {
                        count: 0,
                        stats: empty.clone(),
                    },
                );
                id
            };
            self.attach(row, id, &cells);
        }
    }

    fn detach(&mut self, row: usize, cells: &[(usize, Value)]) {
        let id = self.assignments[row];
        let c = self.clusters.get_mut(&id).expect("row points at a live cluster");
        c.count -= 1;
        if c.count == 0 {
            self.clusters.remove(&id);
            return;
        }
        for &(j, x) in cells {
            c.stats[j].forget(x);
        }
    }

    fn attach(&mut self, row: usize, id: ClusterId, cells: &[(usize, Value)]) {
        self.assignments[row] = id;
        let c = self.clusters.get_mut(&id).expect("target cluster exists");
        c.count += 1;
        for &(j, x) in cells {
            c.stats[j].observe(x);
        }
    }

    /// Griddy-Gibbs update of the concentration and of every variable's
    /// hyperparameters, one coordinate at a time, given the assignments.
    pub fn infer_hypers<R: Rng + ?Sized>(&mut self, grids: &HyperGrids, rng: &mut R) {
        let sizes = self.cluster_sizes();
        self.alpha = grids.resample_alpha(&sizes, rng);
        for j in 0..self.vars.len() {
            let grid = grids.column(self.vars[j]);
            let stats: Vec<&SuffStat> = self.clusters.values().map(|c| &c.stats[j]).collect();
            let score = |h: &ComponentHypers| -> f64 { stats.iter().map(|s| h.ln_marginal(s)).sum() };
            let mut h = self.hypers[j];
            match (&mut h, grid) {
                (ComponentHypers::Numerical(ng), ColumnGrid::Numerical { m, r, s, nu }) => {
                    type Field = fn(&mut super::component::NormalGammaHypers) -> &mut f64;
                    let fields: [(Field, &Vec<f64>); 4] = [
                        (|p| &mut p.m, m),
                        (|p| &mut p.r, r),
                        (|p| &mut p.s, s),
                        (|p| &mut p.nu, nu),
                    ];
                    for (field, values) in fields {
                        let lw: Vec<f64> = values
                            .iter()
                            .map(|&g| {
                                let mut cand = *ng;
                                *field(&mut cand) = g;
                                score(&ComponentHypers::Numerical(cand))
                            })
                            .collect();
                        *field(ng) = values[sample_log_weights(rng, &lw)];
                    }
                }
                (ComponentHypers::Nominal(d), ColumnGrid::Nominal { beta, .. }) => {
                    let lw: Vec<f64> = beta
                        .iter()
                        .map(|&b| {
                            let mut cand = *d;
                            cand.beta = b;
                            score(&ComponentHypers::Nominal(cand))
                        })
                        .collect();
                    d.beta = beta[sample_log_weights(rng, &lw)];
                }
                _ => panic!("grid type does not match hyperparameters"),
            }
            self.hypers[j] = h;
        }
    }

    /// Sum over clusters of the log marginal likelihood of column `var`
    /// under `hypers` and this state's row partition.
    pub fn column_ln_marginal(&self, data: &Dataset, var: VarId, hypers: &ComponentHypers) -> f64 {
        let index: BTreeMap<ClusterId, usize> = self.clusters.keys().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut stats = vec![SuffStat::empty(hypers); index.len()];
        for (row, x) in data.column(var) {
            stats[index[&self.assignments[row]]].observe(x);
        }
        stats.iter().map(|s| hypers.ln_marginal(s)).sum()
    }

    /// Adds a variable's column to every cluster.
    pub fn add_var(&mut self, data: &Dataset, var: VarId, hypers: ComponentHypers) {
        let j = match self.vars.binary_search(&var) {
            Ok(_) => panic!("variable {var} already modeled"),
            Err(j) => j,
        };
        self.vars.insert(j, var);
        self.hypers.insert(j, hypers);
        for c in self.clusters.values_mut() {
            c.stats.insert(j, SuffStat::empty(&hypers));
        }
        for (row, x) in data.column(var) {
            let id = self.assignments[row];
            self.clusters.get_mut(&id).expect("live cluster").stats[j].observe(x);
        }
    }

    /// Removes a variable's column, returning its hyperparameters.
    pub fn remove_var(&mut self, var: VarId) -> ComponentHypers {
        let j = self.local(var).expect("variable is modeled by this state");
        self.vars.remove(j);
        for c in self.clusters.values_mut() {
            c.stats.remove(j);
        }
        self.hypers.remove(j)
    }

    /// Compares incremental statistics with a from-scratch rebuild: counts
    /// must match exactly and running sums to `1e-8` relative.
    pub fn check_consistency(&self, data: &Dataset) -> core::result::Result<(), String> {
        let total: u32 = self.clusters.values().map(|c| c.count).sum();
        if total as usize != self.assignments.len() {
            return Err(format!("cluster counts sum to {total}, not {}", self.assignments.len()));
        }
        if self.assignments.iter().any(|id| !self.clusters.contains_key(id)) {
            return Err("assignment points at a dead cluster".into());
        }
        if self.clusters.values().any(|c| c.count == 0) {
            return Err("empty cluster kept alive".into());
        }
        if self.clusters.keys().any(|id| id.0 >= self.next_cluster) {
            return Err("cluster id at or beyond the id counter".into());
        }
        let mut fresh = self.clone();
        fresh.rebuild(data);
        for ((id, a), b) in self.clusters.iter().zip(fresh.clusters.values()) {
            if a.count != b.count {
                return Err(format!("cluster {id:?} count drifted"));
            }
            for (sa, sb) in a.stats.iter().zip(&b.stats) {
                let ok = match (sa, sb) {
                    (
                        SuffStat::Numerical { n, sum, sum_sq },
                        SuffStat::Numerical {
                            n: n2,
                            sum: s2,
                            sum_sq: q2,
                        },
                    ) => n == n2 && close(*sum, *s2) && close(*sum_sq, *q2),
                    (x, y) => x == y,
                };
                if !ok {
                    return Err(format!("cluster {id:?} statistics drifted: {sa:?} vs {sb:?}"));
                }
            }
        }
        Ok(())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0)
}

impl Gpm for DpmmState {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        let cells = self.locals(given)?;
        let targets: Vec<usize> = query
            .iter()
            .map(|v| self.local(v).ok_or_else(|| Error::UnknownVariable(format!("#{v}"))))
            .collect::<Result<_>>()?;
        if let Some(v) = query.overlap(&keys(given)) {
            return Err(Error::OverlappingVarSets(v));
        }
        if targets.is_empty() {
            return Ok(Assignment::new());
        }
        let lw = self.log_weights(&cells);
        let k = sample_log_weights(rng, &lw);
        let empty;
        let stats = match self.stats_at(k) {
            Some(s) => s,
            None => {
                empty = self.empty_stats();
                &empty
            }
        };
        Ok(targets
            .into_iter()
            .map(|j| (self.vars[j], self.hypers[j].sample_predictive(&stats[j], rng)))
            .collect())
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        let cond = self.locals(given)?;
        let tgt = self.locals(target)?;
        if let Some(v) = keys(target).overlap(&keys(given)) {
            return Err(Error::OverlappingVarSets(v));
        }
        let mut lw = self.log_weights(&cond);
        let z = logsumexp(&lw);
        for (w, c) in lw.iter_mut().zip(self.clusters.values()) {
            *w += self.ln_likelihood(&c.stats, &tgt) - z;
        }
        let fresh = lw.last_mut().expect("fresh cluster weight");
        *fresh += self.ln_likelihood(&self.empty_stats(), &tgt) - z;
        Ok(logsumexp(&lw))
    }
}
