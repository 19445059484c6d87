//! CrossCat: an outer Chinese restaurant process over variables groups the
//! columns into structurally independent blocks, and each block is a
//! [`DpmmState`] over its own row partition.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::{restrict, Assignment, Dataset, Schema, VarId, VarSet};
use crate::dpmm::{ComponentHypers, DpmmState, HyperGrids};
use crate::error::{Error, Result};
use crate::gpm::{check_cmi_args, gpm_cmi_estimate, CallCounts, CmiEstimate, Gpm, Instrumented};
use crate::math::{sample_crp, sample_log_weights};
use crate::rng::child_stream;

/// Identifier of a variable block. Ids are never reused within a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct BlockId(pub u32);

/// How the variable partition is treated during fitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Structure {
    /// Variable partition inferred by Gibbs sampling.
    #[default]
    CrossCat,
    /// All variables kept in one block: a plain DPMM over the full table.
    SingleBlock,
}

/// How each block's row partition starts a chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RowInit {
    /// Every row in its own cluster. Chains started this way leave the
    /// uninformative few-large-clusters region much sooner.
    #[default]
    Singletons,
    /// A draw from the CRP prior.
    Prior,
}

/// One CrossCat posterior sample.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CrossCatState {
    alpha_v: f64,
    block_of: Vec<BlockId>,
    blocks: BTreeMap<BlockId, DpmmState>,
    next_block: u32,
}

impl CrossCatState {
    /// Builds a state from a dense variable partition and one block state
    /// per label; `blocks[k]` must model exactly the variables labelled `k`.
    pub fn new(alpha_v: f64, partition: &[usize], blocks: Vec<DpmmState>) -> Result<Self> {
        if alpha_v.is_nan() || alpha_v <= 0.0 {
            return Err(Error::InvalidDataset(alloc::format!(
                "outer concentration {alpha_v} must be positive"
            )));
        }
        let mut seen = vec![Vec::new(); blocks.len()];
        for (var, &k) in partition.iter().enumerate() {
            let slot = seen
                .get_mut(k)
                .ok_or_else(|| Error::InvalidDataset(alloc::format!("variable {var} assigned to missing block {k}")))?;
            slot.push(var);
        }
        for (k, (vars, block)) in seen.iter().zip(&blocks).enumerate() {
            if vars.is_empty() || vars.as_slice() != block.vars() {
                return Err(Error::InvalidDataset(alloc::format!(
                    "block {k} does not model exactly its assigned variables"
                )));
            }
        }
        let rows = blocks.first().map(DpmmState::n_rows);
        if blocks.iter().any(|b| Some(b.n_rows()) != rows) {
            return Err(Error::InvalidDataset("blocks disagree on the row count".into()));
        }
        Ok(CrossCatState {
            alpha_v,
            block_of: partition.iter().map(|&k| BlockId(k as u32)).collect(),
            next_block: blocks.len() as u32,
            blocks: blocks
                .into_iter()
                .enumerate()
                .map(|(k, b)| (BlockId(k as u32), b))
                .collect(),
        })
    }

    /// Draws a state from the prior. Under [`Structure::SingleBlock`] the
    /// variable partition is the trivial one.
    pub fn from_prior<R: Rng + ?Sized>(
        data: &Dataset,
        grids: &HyperGrids,
        structure: Structure,
        rng: &mut R,
    ) -> Result<Self> {
        CrossCatState::initialize(data, grids, structure, RowInit::Prior, rng)
    }

    /// Chain starting point: concentrations, hyperparameters and the
    /// variable partition from the prior, row partitions per `rows`.
    pub fn initialize<R: Rng + ?Sized>(
        data: &Dataset,
        grids: &HyperGrids,
        structure: Structure,
        rows: RowInit,
        rng: &mut R,
    ) -> Result<Self> {
        let d = data.n_vars();
        let alpha_v = grids.sample_alpha(rng);
        let partition = match structure {
            Structure::CrossCat => sample_crp(rng, alpha_v, d),
            Structure::SingleBlock => vec![0; d],
        };
        let k = partition.iter().max().map_or(0, |m| m + 1);
        let mut blocks = Vec::with_capacity(k);
        for label in 0..k {
            let vars: Vec<VarId> = (0..d).filter(|&v| partition[v] == label).collect();
            blocks.push(match rows {
                RowInit::Prior => DpmmState::from_prior(data, vars, grids, rng)?,
                RowInit::Singletons => DpmmState::singletons(data, vars, grids, rng)?,
            });
        }
        CrossCatState::new(alpha_v, &partition, blocks)
    }

    pub fn alpha_v(&self) -> f64 {
        self.alpha_v
    }

    pub fn n_vars(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_rows(&self) -> usize {
        self.blocks.values().next().map_or(0, DpmmState::n_rows)
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, var: VarId) -> BlockId {
        self.block_of[var]
    }

    pub fn block(&self, id: BlockId) -> Option<&DpmmState> {
        self.blocks.get(&id)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (BlockId, &DpmmState)> {
        self.blocks.iter().map(|(&id, b)| (id, b))
    }

    /// Variable partition relabeled densely in order of first appearance.
    pub fn partition(&self) -> Vec<usize> {
        let mut map: BTreeMap<BlockId, usize> = BTreeMap::new();
        self.block_of
            .iter()
            .map(|id| {
                let next = map.len();
                *map.entry(*id).or_insert(next)
            })
            .collect()
    }

    /// Whether two variables share a block.
    pub fn same_block(&self, i: VarId, j: VarId) -> bool {
        self.block_of[i] == self.block_of[j]
    }

    fn check_vars(&self, vars: impl IntoIterator<Item = VarId>) -> Result<()> {
        for v in vars {
            if v >= self.block_of.len() {
                return Err(Error::UnknownVariable(alloc::format!("#{v}")));
            }
        }
        Ok(())
    }

    /// One Gibbs scan over variables. Each variable leaves its block and
    /// rejoins an existing block `b` with weight
    /// `|b| * p(column | b's row partition)` or a single auxiliary block with
    /// weight `alpha_v * p(column | auxiliary partition)`.
    ///
    /// When the variable was alone in its block, that block's partition is
    /// the auxiliary one; otherwise the auxiliary partition is a fresh draw
    /// from the inner CRP prior.
    pub fn gibbs_sweep_variables<R: Rng + ?Sized>(
        &mut self,
        data: &Dataset,
        grids: &HyperGrids,
        rng: &mut R,
    ) -> Result<()> {
        for var in 0..self.block_of.len() {
            let old = self.block_of[var];
            let block = self.blocks.get_mut(&old).expect("live block");
            let hypers: ComponentHypers = block.remove_var(var);
            let aux = if block.vars().is_empty() {
                self.blocks.remove(&old).expect("live block")
            } else {
                let alpha = grids.sample_alpha(rng);
                let partition = sample_crp(rng, alpha, data.n_rows());
                DpmmState::new(data, Vec::new(), Vec::new(), alpha, &partition)?
            };
            let ids: Vec<BlockId> = self.blocks.keys().copied().collect();
            let mut lw: Vec<f64> = self
                .blocks
                .values()
                .map(|b| (b.vars().len() as f64).ln() + b.column_ln_marginal(data, var, &hypers))
                .collect();
            lw.push(self.alpha_v.ln() + aux.column_ln_marginal(data, var, &hypers));
            let k = sample_log_weights(rng, &lw);
            let id = if k < ids.len() {
                ids[k]
            } else {
                let id = BlockId(self.next_block);
                self.next_block += 1;
                self.blocks.insert(id, aux);
                id
            };
            self.blocks
                .get_mut(&id)
                .expect("target block")
                .add_var(data, var, hypers);
            self.block_of[var] = id;
        }
        Ok(())
    }

    /// One full transition: variables (unless the structure is fixed), then
    /// rows in every block, then hyperparameters.
    pub fn sweep<R: Rng + ?Sized>(
        &mut self,
        data: &Dataset,
        grids: &HyperGrids,
        structure: Structure,
        rng: &mut R,
    ) -> Result<()> {
        if structure == Structure::CrossCat {
            self.gibbs_sweep_variables(data, grids, rng)?;
        }
        for block in self.blocks.values_mut() {
            block.gibbs_sweep_rows(data, rng);
        }
        for block in self.blocks.values_mut() {
            block.infer_hypers(grids, rng);
        }
        if structure == Structure::CrossCat {
            let sizes: Vec<usize> = self.blocks.values().map(|b| b.vars().len()).collect();
            self.alpha_v = grids.resample_alpha(&sizes, rng);
        }
        Ok(())
    }

    /// Checks the block bookkeeping and every block's statistics.
    pub fn check_consistency(&self, data: &Dataset) -> core::result::Result<(), alloc::string::String> {
        for (var, id) in self.block_of.iter().enumerate() {
            match self.blocks.get(id) {
                Some(b) if b.vars().binary_search(&var).is_ok() => {}
                _ => return Err(alloc::format!("variable {var} not modeled by its block")),
            }
        }
        let modeled: usize = self.blocks.values().map(|b| b.vars().len()).sum();
        if modeled != self.block_of.len() {
            return Err("blocks model variables outside the partition".into());
        }
        if self.blocks.keys().any(|id| id.0 >= self.next_block) {
            return Err("block id at or beyond the id counter".into());
        }
        for b in self.blocks.values() {
            b.check_consistency(data)?;
        }
        Ok(())
    }

    /// Splits a variable set by block, in block-id order.
    fn split(&self, vars: &VarSet) -> BTreeMap<BlockId, VarSet> {
        let mut out: BTreeMap<BlockId, VarSet> = BTreeMap::new();
        for v in vars.iter() {
            out.entry(self.block_of[v]).or_default().insert(v);
        }
        out
    }
}

impl Gpm for CrossCatState {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        self.check_vars(query.iter())?;
        self.check_vars(given.keys().copied())?;
        let mut out = Assignment::new();
        for (id, part) in self.split(query) {
            let block = &self.blocks[&id];
            let local = restrict(given, &block.var_set());
            out.append(&mut block.simulate(&part, &local, rng)?);
        }
        Ok(out)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        self.check_vars(target.keys().copied())?;
        self.check_vars(given.keys().copied())?;
        let mut total = 0.0;
        for (id, part) in self.split(&target.keys().copied().collect()) {
            let block = &self.blocks[&id];
            let local = restrict(given, &block.var_set());
            total += block.logpdf(&restrict(target, &part), &local)?;
        }
        Ok(total)
    }
}

/// Per-block interface calls made by one CMI evaluation.
pub type BlockCalls = Vec<(BlockId, CallCounts)>;

/// CMI under one CrossCat state, summing Monte Carlo estimates over blocks
/// that intersect both `a` and `b`. Blocks missing either side contribute
/// exactly zero without being queried.
pub fn crosscat_cmi<R: Rng + ?Sized>(
    state: &CrossCatState,
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
    t: usize,
    rng: &mut R,
) -> Result<f64> {
    crosscat_cmi_estimate(state, a, b, given, t, rng).map(|e| e.mean)
}

/// [`crosscat_cmi`] with a standard error combined over active blocks.
pub fn crosscat_cmi_estimate<R: Rng + ?Sized>(
    state: &CrossCatState,
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
    t: usize,
    rng: &mut R,
) -> Result<CmiEstimate> {
    run_blocks(state, a, b, given, t, rng, |block, a, b, c, rng| {
        gpm_cmi_estimate(block, a, b, c, t, rng)
    })
}

/// [`crosscat_cmi`] that also reports the calls made into each active
/// block.
pub fn crosscat_cmi_instrumented<R: Rng + ?Sized>(
    state: &CrossCatState,
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
    t: usize,
    rng: &mut R,
) -> Result<(f64, BlockCalls)> {
    let mut calls = BlockCalls::new();
    let est = run_blocks(state, a, b, given, t, rng, |block, a, b, c, rng| {
        let probe = Instrumented::new(block);
        let e = gpm_cmi_estimate(&probe, a, b, c, t, rng);
        let id = state.block_of(a.iter().next().expect("non-empty"));
        calls.push((id, probe.counts()));
        e
    })?;
    Ok((est.mean, calls))
}

fn run_blocks<R: Rng + ?Sized>(
    state: &CrossCatState,
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
    t: usize,
    rng: &mut R,
    mut per_block: impl FnMut(&DpmmState, &VarSet, &VarSet, &Assignment, &mut R) -> Result<CmiEstimate>,
) -> Result<CmiEstimate> {
    check_cmi_args(a, b, given, t)?;
    state.check_vars(a.iter().chain(b.iter()).chain(given.keys().copied()))?;
    let a_parts = state.split(a);
    let b_parts = state.split(b);
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    for (id, a_part) in &a_parts {
        let Some(b_part) = b_parts.get(id) else { continue };
        let block = &state.blocks[id];
        let local = restrict(given, &block.var_set());
        let e = per_block(block, a_part, b_part, &local, rng)?;
        mean += e.mean;
        var += e.std_error * e.std_error;
        samples = e.samples;
    }
    Ok(CmiEstimate {
        mean,
        std_error: var.sqrt(),
        samples,
    })
}

/// Where an ensemble came from.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Provenance {
    pub seed: u64,
    pub sweeps: usize,
    pub structure: Structure,
    pub row_init: RowInit,
    pub dataset_fingerprint: u64,
}

/// Fitting parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitConfig {
    /// Number of independent chains, one member each.
    pub members: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub structure: Structure,
    pub row_init: RowInit,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            members: 16,
            sweeps: 200,
            seed: 0,
            structure: Structure::CrossCat,
            row_init: RowInit::Singletons,
        }
    }
}

/// A set of posterior samples over a shared schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    schema: Schema,
    members: Vec<CrossCatState>,
    provenance: Provenance,
}

impl Ensemble {
    pub fn new(schema: Schema, members: Vec<CrossCatState>, provenance: Provenance) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if let Some(m) = members.iter().find(|m| m.n_vars() != schema.len()) {
            return Err(Error::InvalidSchema(alloc::format!(
                "member models {} variables, schema has {}",
                m.n_vars(),
                schema.len()
            )));
        }
        Ok(Ensemble {
            schema,
            members,
            provenance,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn members(&self) -> &[CrossCatState] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

fn check_fit(data: &Dataset, config: &FitConfig) -> Result<()> {
    if data.n_rows() == 0 || data.n_vars() == 0 {
        return Err(Error::EmptyDataset);
    }
    if config.members == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(())
}

/// Runs chain `index` of a fit: a prior draw advanced `config.sweeps` full
/// transitions on the stream derived from `(config.seed, index)`.
pub fn fit_member(data: &Dataset, grids: &HyperGrids, config: &FitConfig, index: usize) -> Result<CrossCatState> {
    check_fit(data, config)?;
    let mut rng = child_stream(config.seed, index as u64);
    let mut state = CrossCatState::initialize(data, grids, config.structure, config.row_init, &mut rng)?;
    for _ in 0..config.sweeps {
        state.sweep(data, grids, config.structure, &mut rng)?;
    }
    Ok(state)
}

/// Assembles fitted members into an ensemble with provenance.
pub fn assemble(data: &Dataset, config: &FitConfig, members: Vec<CrossCatState>) -> Result<Ensemble> {
    Ensemble::new(
        data.schema().clone(),
        members,
        Provenance {
            seed: config.seed,
            sweeps: config.sweeps,
            structure: config.structure,
            row_init: config.row_init,
            dataset_fingerprint: data.fingerprint(),
        },
    )
}

/// Fits `config.members` independent chains one after another.
pub fn fit_ensemble(data: &Dataset, config: &FitConfig) -> Result<Ensemble> {
    check_fit(data, config)?;
    let grids = HyperGrids::new(data);
    let members = (0..config.members)
        .map(|i| fit_member(data, &grids, config, i))
        .collect::<Result<Vec<_>>>()?;
    assemble(data, config, members)
}

/// Fraction of members that place `i` and `j` in the same block, an upper
/// bound on the posterior probability that they are dependent.
pub fn dependence_probability_bound(ensemble: &Ensemble, i: VarId, j: VarId) -> Result<f64> {
    if i == j {
        return Err(Error::SameVariable(i));
    }
    ensemble.schema.check_var(i)?;
    ensemble.schema.check_var(j)?;
    let together = ensemble.members.iter().filter(|m| m.same_block(i, j)).count();
    Ok(together as f64 / ensemble.members.len() as f64)
}

/// All pairwise dependence bounds as a symmetric matrix with unit diagonal.
#[allow(clippy::needless_range_loop)]
pub fn pairwise_dependence_matrix(ensemble: &Ensemble) -> Vec<Vec<f64>> {
    let d = ensemble.schema.len();
    let h = ensemble.members.len() as f64;
    let mut m = vec![vec![1.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let together = ensemble.members.iter().filter(|s| s.same_block(i, j)).count();
            m[i][j] = together as f64 / h;
            m[j][i] = m[i][j];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Schema, Value, Variable};
    use crate::dpmm::DirichletHypers;
    use crate::gpm::{gpm_cmi, gpm_cmi_estimate};
    use crate::oracle::enumerate::{cardinalities, enumerated_cmi, random_nominal_state};
    use crate::rng::stream;

    fn toy(cols: usize, rows: usize, seed: u64) -> Dataset {
        let mut rng = stream(seed);
        let schema = Schema::new(
            (0..cols)
                .map(|j| Variable::nominal(alloc::format!("c{j}"), 3))
                .collect(),
        )
        .unwrap();
        let rows = (0..rows)
            .map(|i| {
                (0..cols)
                    .map(|_| Some(Value::Category(if i < 3 { i as u32 } else { rng.random_range(0..3) })))
                    .collect()
            })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn block(data: &Dataset, vars: Vec<VarId>, rows: &[usize]) -> DpmmState {
        let hypers = vars
            .iter()
            .map(|_| {
                ComponentHypers::Nominal(DirichletHypers {
                    categories: 3,
                    beta: 0.8,
                })
            })
            .collect();
        DpmmState::new(data, vars, hypers, 1.3, rows).unwrap()
    }

    fn split_rows(n: usize) -> Vec<usize> {
        (0..n).map(|i| i % 2).collect()
    }

    fn cat(pairs: &[(VarId, u32)]) -> Assignment {
        pairs.iter().map(|&(v, c)| (v, Value::Category(c))).collect()
    }

    fn two_blocks(data: &Dataset) -> CrossCatState {
        let rows = split_rows(data.n_rows());
        let thirds: Vec<usize> = (0..data.n_rows()).map(|i| i % 3).collect();
        CrossCatState::new(
            1.0,
            &[0, 0, 1, 1],
            vec![block(data, vec![0, 1], &rows), block(data, vec![2, 3], &thirds)],
        )
        .unwrap()
    }

    #[test]
    fn singleton_blocks_factorize() {
        let data = toy(2, 20, 1);
        let rows = split_rows(20);
        let b0 = block(&data, vec![0], &rows);
        let b1 = block(&data, vec![1], &rows);
        let s = CrossCatState::new(1.0, &[0, 1], vec![b0.clone(), b1.clone()]).unwrap();
        let t = cat(&[(0, 2), (1, 0)]);
        let sum = b0.logpdf(&cat(&[(0, 2)]), &Assignment::new()).unwrap()
            + b1.logpdf(&cat(&[(1, 0)]), &Assignment::new()).unwrap();
        assert_eq!(s.logpdf(&t, &Assignment::new()).unwrap(), sum);
    }

    #[test]
    fn other_blocks_ignore_the_condition() {
        let data = toy(4, 20, 2);
        let s = two_blocks(&data);
        let t = cat(&[(2, 1)]);
        assert_eq!(
            s.logpdf(&t, &cat(&[(0, 0), (1, 2)])).unwrap(),
            s.logpdf(&t, &Assignment::new()).unwrap()
        );
        assert_eq!(
            s.logpdf(&t, &cat(&[(0, 0), (3, 2)])).unwrap(),
            s.logpdf(&t, &cat(&[(3, 2)])).unwrap()
        );
    }

    #[test]
    fn single_block_state_is_the_dpmm() {
        let data = toy(3, 20, 3);
        let b = block(&data, vec![0, 1, 2], &split_rows(20));
        let s = CrossCatState::new(1.0, &[0, 0, 0], vec![b.clone()]).unwrap();
        let t = cat(&[(0, 1), (2, 2)]);
        let g = cat(&[(1, 0)]);
        assert!((s.logpdf(&t, &g).unwrap() - b.logpdf(&t, &g).unwrap()).abs() < 1e-12);
        let (a, bb) = (VarSet::from([0]), VarSet::from([2]));
        let x = crosscat_cmi(&s, &a, &bb, &g, 500, &mut stream(4)).unwrap();
        let y = gpm_cmi(&b, &a, &bb, &g, 500, &mut stream(4)).unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }

    #[test]
    fn disjoint_blocks_are_pruned_without_calls() {
        let data = toy(4, 20, 5);
        let s = two_blocks(&data);
        let (cmi, calls) = crosscat_cmi_instrumented(
            &s,
            &VarSet::from([0, 1]),
            &VarSet::from([2]),
            &cat(&[(3, 1)]),
            100,
            &mut stream(0),
        )
        .unwrap();
        assert_eq!(cmi, 0.0);
        assert!(calls.is_empty());
    }

    #[test]
    fn straddling_query_matches_unpruned_estimate() {
        let data = toy(4, 40, 6);
        let s = two_blocks(&data);
        // a = {0, 2} straddles both blocks, b = {1} lives in block 0
        let (a, b) = (VarSet::from([0, 2]), VarSet::from([1]));
        let g = cat(&[(3, 0)]);
        let (pruned, calls) = crosscat_cmi_instrumented(&s, &a, &b, &g, 10_000, &mut stream(7)).unwrap();
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].0, s.block_of(0));
        let full = gpm_cmi_estimate(&s, &a, &b, &g, 10_000, &mut stream(8)).unwrap();
        let pruned_se = crosscat_cmi_estimate(&s, &a, &b, &g, 10_000, &mut stream(7))
            .unwrap()
            .std_error;
        let se = (full.std_error.powi(2) + pruned_se.powi(2)).sqrt();
        assert!(
            (pruned - full.mean).abs() < 3.0 * se,
            "{pruned} vs {} +- {se}",
            full.mean
        );
    }

    #[test]
    fn block_decomposition_is_exact() {
        let mut rng = stream(10);
        for _ in 0..50 {
            let (data, s) = random_nominal_state(&mut rng, 6, 3, 3, 12);
            let d = s.n_vars();
            if d < 2 {
                continue;
            }
            let cards = cardinalities(&data);
            let a = VarSet::from([0]);
            let b = VarSet::from([d - 1]);
            let given = if d > 2 { cat(&[(1, 1)]) } else { Assignment::new() };
            let whole = enumerated_cmi(&s, &cards, &a, &b, &given).unwrap();
            let by_block: f64 = s
                .blocks()
                .filter(|(_, blk)| blk.var_set().contains(0) && blk.var_set().contains(d - 1))
                .map(|(_, blk)| enumerated_cmi(blk, &cards, &a, &b, &restrict(&given, &blk.var_set())).unwrap())
                .sum();
            assert!((whole - by_block).abs() < 1e-9, "{whole} vs {by_block}");
        }
    }

    fn ensemble_of(data: &Dataset, partitions: &[&[usize]]) -> Ensemble {
        let members = partitions
            .iter()
            .map(|p| {
                let k = p.iter().max().unwrap() + 1;
                let blocks = (0..k)
                    .map(|b| {
                        block(
                            data,
                            (0..p.len()).filter(|&v| p[v] == b).collect(),
                            &split_rows(data.n_rows()),
                        )
                    })
                    .collect();
                CrossCatState::new(1.0, p, blocks).unwrap()
            })
            .collect();
        assemble(data, &FitConfig::default(), members).unwrap()
    }

    #[test]
    fn dependence_bound_counts_co_assignment() {
        let data = toy(3, 10, 11);
        let together = ensemble_of(&data, &[&[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(dependence_probability_bound(&together, 0, 1).unwrap(), 1.0);
        let apart = ensemble_of(&data, &[&[0, 1, 1], &[0, 1, 0]]);
        assert_eq!(dependence_probability_bound(&apart, 0, 1).unwrap(), 0.0);
        assert_eq!(dependence_probability_bound(&apart, 1, 1), Err(Error::SameVariable(1)));
        let mut parts: Vec<&[usize]> = vec![&[0, 0, 1]; 37];
        parts.extend(vec![&[0, 1, 1][..]; 63]);
        let hundred = ensemble_of(&data, &parts);
        assert!((dependence_probability_bound(&hundred, 0, 1).unwrap() - 0.37).abs() < 1e-15);
        let m = pairwise_dependence_matrix(&hundred);
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[i], 1.0);
            for (j, &p) in row.iter().enumerate() {
                assert_eq!(p, m[j][i]);
            }
        }
        assert!((m[1][2] - 0.63).abs() < 1e-15);
    }

    #[test]
    fn one_variable_sweeps_keep_one_block() {
        let data = toy(1, 15, 12);
        let grids = HyperGrids::new(&data);
        let mut rng = stream(1);
        let mut s = CrossCatState::from_prior(&data, &grids, Structure::CrossCat, &mut rng).unwrap();
        for _ in 0..20 {
            s.sweep(&data, &grids, Structure::CrossCat, &mut rng).unwrap();
            assert_eq!(s.n_blocks(), 1);
            s.check_consistency(&data).unwrap();
        }
    }

    fn correlated_pair(seed: u64) -> Dataset {
        let mut rng = stream(seed);
        let schema = Schema::new(vec![
            Variable::nominal("a", 3),
            Variable::nominal("copy", 3),
            Variable::nominal("noise", 3),
        ])
        .unwrap();
        let rows = (0..200)
            .map(|_| {
                let x = rng.random_range(0..3);
                vec![
                    Some(Value::Category(x)),
                    Some(Value::Category(x)),
                    Some(Value::Category(rng.random_range(0..3))),
                ]
            })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    #[test]
    fn correlated_columns_end_up_together() {
        let together = (0..20)
            .filter(|&seed| {
                let data = correlated_pair(seed);
                let config = FitConfig {
                    members: 1,
                    sweeps: 100,
                    seed,
                    ..FitConfig::default()
                };
                let m = fit_member(&data, &HyperGrids::new(&data), &config, 0).unwrap();
                m.check_consistency(&data).unwrap();
                m.same_block(0, 1)
            })
            .count();
        assert!(together >= 18, "{together}/20");
    }

    #[test]
    fn fits_are_deterministic() {
        let data = correlated_pair(3);
        let config = FitConfig {
            members: 2,
            sweeps: 5,
            seed: 9,
            ..FitConfig::default()
        };
        assert_eq!(
            fit_ensemble(&data, &config).unwrap(),
            fit_ensemble(&data, &config).unwrap()
        );
        let other = FitConfig { seed: 10, ..config };
        assert_ne!(
            fit_ensemble(&data, &config).unwrap(),
            fit_ensemble(&data, &other).unwrap()
        );
    }

    #[test]
    fn prior_block_counts_match_crp_expectation() {
        let d = 6;
        let data = toy(d, 8, 13);
        let grids = HyperGrids::new(&data);
        // E[K] = sum_i alpha / (alpha + i - 1), averaged over the grid prior
        let weights: Vec<f64> = grids.alpha_log_prior.iter().map(|l| l.exp()).collect();
        let z: f64 = weights.iter().sum();
        let expected: f64 = grids
            .alpha
            .iter()
            .zip(&weights)
            .map(|(&a, w)| w / z * (0..d).map(|i| a / (a + i as f64)).sum::<f64>())
            .sum();
        let config = FitConfig {
            members: 1000,
            sweeps: 0,
            seed: 2,
            ..FitConfig::default()
        };
        let ens = fit_ensemble(&data, &config).unwrap();
        let ks: Vec<f64> = ens.members().iter().map(|m| m.n_blocks() as f64).collect();
        let mean = crate::stats::mean(&ks);
        let se = crate::stats::std_dev(&ks) / (ks.len() as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} +- {se}");
    }

    #[test]
    fn argument_errors() {
        let data = toy(4, 10, 14);
        let s = two_blocks(&data);
        let mut rng = stream(0);
        assert!(matches!(
            crosscat_cmi(
                &s,
                &VarSet::from([0]),
                &VarSet::from([9]),
                &Assignment::new(),
                10,
                &mut rng
            ),
            Err(Error::UnknownVariable(_))
        ));
        assert_eq!(
            crosscat_cmi(
                &s,
                &VarSet::from([0]),
                &VarSet::from([1]),
                &Assignment::new(),
                0,
                &mut rng
            ),
            Err(Error::AccuracyZero)
        );
        assert!(fit_ensemble(
            &data,
            &FitConfig {
                members: 0,
                ..FitConfig::default()
            }
        )
        .is_err());
    }
}
