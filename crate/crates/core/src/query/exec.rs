use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;

use super::ast::{Literal, MiSpec, Statement};
use crate::cmi::{
    cmi_posterior_seeded, prob_cmi_in, CmiPosterior, CmiQuery, Threshold, DEFAULT_ACCURACY, DEFAULT_OUTER,
};
use crate::crosscat::{dependence_probability_bound, Ensemble};
use crate::data::{Assignment, Condition, Schema, StatType, Value, VarId, VarSet};
use crate::error::{Error, Result};
use crate::gpm::Gpm;
use crate::rng::{child_seed, child_stream};

/// Budgets used when a statement does not give its own.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecOptions {
    pub accuracy: usize,
    pub t_outer: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            accuracy: DEFAULT_ACCURACY,
            t_outer: DEFAULT_OUTER,
        }
    }
}

/// A statement with every name resolved against a schema.
#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Posterior(CmiQuery),
    Probability(CmiQuery, Threshold),
    DependenceProbability(VarId, VarId),
    SimulateVars {
        /// `(target, mi threshold, probability threshold)`.
        filter: Option<(VarId, Threshold, Threshold)>,
        limit: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryResult {
    PosteriorSamples(CmiPosterior),
    Scalar(f64),
    Rows {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
}

fn resolve_all(schema: &Schema, names: &[String]) -> Result<VarSet> {
    names.iter().map(|n| schema.resolve(n)).collect()
}

/// Reads a `GIVEN` literal as a value of `var`.
fn resolve_value(schema: &Schema, var: VarId, lit: &Literal) -> Result<Value> {
    let mismatch = |reason: String| Error::TypeMismatch {
        var: schema.name(var).into(),
        reason,
    };
    match (schema.stat_type(var), lit) {
        (StatType::Numerical, Literal::Number(x)) => Ok(Value::Real(*x)),
        (StatType::Numerical, Literal::Text(s)) => Err(mismatch(alloc::format!("'{s}' is not a number"))),
        (StatType::Nominal { labels }, Literal::Text(s)) => labels
            .iter()
            .position(|l| l == s)
            .map(|i| Value::Category(i as u32))
            .ok_or_else(|| mismatch(alloc::format!("no category labelled '{s}'"))),
        (StatType::Nominal { labels }, Literal::Number(x)) => {
            if let Some(i) = labels.iter().position(|l| l.parse::<f64>().ok() == Some(*x)) {
                return Ok(Value::Category(i as u32));
            }
            if x.fract() == 0.0 && *x >= 0.0 && (*x as usize) < labels.len() {
                Ok(Value::Category(*x as u32))
            } else {
                Err(mismatch(alloc::format!("{x} is neither a label nor a category index")))
            }
        }
    }
}

fn plan_mi(mi: &MiSpec, schema: &Schema, opts: &ExecOptions) -> Result<CmiQuery> {
    let a = resolve_all(schema, &mi.a)?;
    let b = resolve_all(schema, &mi.b)?;
    let mut fixed = Assignment::new();
    let mut marginalized = VarSet::new();
    for g in &mi.given {
        let var = schema.resolve(&g.var)?;
        if fixed.contains_key(&var) || marginalized.contains(var) {
            return Err(Error::OverlappingVarSets(var));
        }
        match &g.value {
            Some(lit) => {
                fixed.insert(var, resolve_value(schema, var, lit)?);
            }
            None => {
                marginalized.insert(var);
            }
        }
    }
    let q = CmiQuery {
        a,
        b,
        condition: Condition::new(fixed, marginalized)?,
        t: mi.samples.map_or(opts.accuracy, |n| n as usize),
        t_outer: opts.t_outer,
    };
    q.validate(schema)?;
    Ok(q)
}

/// Resolves names and values. Model names are not checked: an ensemble is
/// always queried as a whole.
pub fn plan(stmt: &Statement, schema: &Schema, opts: &ExecOptions) -> Result<Plan> {
    Ok(match stmt {
        Statement::SimulateMi { mi, .. } => Plan::Posterior(plan_mi(mi, schema, opts)?),
        Statement::EstimateProbMi { mi, threshold, .. } => Plan::Probability(plan_mi(mi, schema, opts)?, *threshold),
        Statement::EstimateDepProb { i, j, .. } => {
            let (i, j) = (schema.resolve(i)?, schema.resolve(j)?);
            if i == j {
                return Err(Error::SameVariable(i));
            }
            Plan::DependenceProbability(i, j)
        }
        Statement::SimulateVars { filter, limit, .. } => Plan::SimulateVars {
            filter: match filter {
                Some(f) => Some((schema.resolve(&f.target)?, f.mi, f.prob)),
                None => None,
            },
            limit: *limit as usize,
        },
    })
}

/// Plans and runs `stmt` with a seed drawn from `rng`.
pub fn plan_and_execute<R: Rng + ?Sized>(
    stmt: &Statement,
    ensemble: &Ensemble,
    opts: &ExecOptions,
    rng: &mut R,
) -> Result<QueryResult> {
    plan_and_execute_with(stmt, ensemble, opts, rng.random(), &cmi_posterior_seeded)
}

/// Runs `stmt` deterministically from `seed`, computing CMI posteriors with
/// `posterior` (which must behave like [`cmi_posterior_seeded`]).
///
/// Seed use: posterior statements pass `seed` on directly; the variable
/// filter evaluates candidate `i` with `child_seed(seed, i)`; simulated rows
/// come from `child_stream(seed, u64::MAX)`, each from a member chosen
/// uniformly at random.
pub fn plan_and_execute_with(
    stmt: &Statement,
    ensemble: &Ensemble,
    opts: &ExecOptions,
    seed: u64,
    posterior: &dyn Fn(&Ensemble, &CmiQuery, u64) -> Result<CmiPosterior>,
) -> Result<QueryResult> {
    let schema = ensemble.schema();
    match plan(stmt, schema, opts)? {
        Plan::Posterior(q) => posterior(ensemble, &q, seed).map(QueryResult::PosteriorSamples),
        Plan::Probability(q, threshold) => {
            let post = posterior(ensemble, &q, seed)?;
            prob_cmi_in(&post, threshold).map(QueryResult::Scalar)
        }
        Plan::DependenceProbability(i, j) => dependence_probability_bound(ensemble, i, j).map(QueryResult::Scalar),
        Plan::SimulateVars { filter, limit } => {
            let mut keep = VarSet::new();
            for var in 0..schema.len() {
                let Some((target, mi, prob)) = filter else {
                    keep.insert(var);
                    continue;
                };
                if var == target {
                    continue;
                }
                let q =
                    CmiQuery::marginal(VarSet::singleton(var), VarSet::singleton(target)).with_accuracy(opts.accuracy);
                let post = posterior(ensemble, &q, child_seed(seed, var as u64))?;
                if prob.holds(prob_cmi_in(&post, mi)?) {
                    keep.insert(var);
                }
            }
            let columns: Vec<String> = keep.iter().map(|v| String::from(schema.name(v))).collect();
            let mut rows = Vec::with_capacity(limit);
            if !keep.is_empty() {
                let mut rng = child_stream(seed, u64::MAX);
                let members = ensemble.members();
                for _ in 0..limit {
                    let h = rng.random_range(0..members.len());
                    let rec = members[h].simulate(&keep, &Assignment::new(), &mut rng)?;
                    rows.push(rec.into_values().collect());
                }
            }
            Ok(QueryResult::Rows { columns, rows })
        }
    }
}
