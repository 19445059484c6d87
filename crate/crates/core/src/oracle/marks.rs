//! Context-specific dependence on hub-structured exam-score data: CMI of
//! `(vectors, analysis)` with the hub `algebra` fixed at two values and
//! with the hub marginalized.

use crate::cmi::{cmi_posterior_seeded, CmiPosterior, CmiQuery};
use crate::crosscat::Ensemble;
use crate::data::{Assignment, Condition, Value, VarSet};
use crate::error::Result;
use crate::rng::child_seed;
use crate::stats::{ks_two_sample, median};

/// The three posteriors and how they compare.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextDemo {
    /// Hub values used for the two fixed-context queries.
    pub contexts: [f64; 2],
    pub fixed: [CmiPosterior; 2],
    pub marginalized: CmiPosterior,
    /// Two-sample KS statistic and p-value between the fixed-context
    /// posteriors.
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Medians of `fixed[0]`, `fixed[1]` and `marginalized`.
    pub medians: [f64; 3],
}

impl ContextDemo {
    /// Index into `fixed` of the posterior with the larger median.
    pub fn stronger(&self) -> usize {
        usize::from(self.medians[1] > self.medians[0])
    }

    /// Whether the marginalized posterior's median is below the stronger
    /// fixed-context median.
    pub fn marginal_weaker(&self) -> bool {
        self.medians[2] < self.medians[self.stronger()]
    }
}

/// Runs the three queries on an ensemble whose schema has numerical
/// `vectors`, `analysis` and `algebra` variables.
pub fn context_specific_demo(
    ensemble: &Ensemble,
    contexts: [f64; 2],
    t: usize,
    t_outer: usize,
    seed: u64,
) -> Result<ContextDemo> {
    let schema = ensemble.schema();
    let vectors = schema.resolve("vectors")?;
    let analysis = schema.resolve("analysis")?;
    let algebra = schema.resolve("algebra")?;
    let base = |condition| {
        CmiQuery::new(VarSet::singleton(vectors), VarSet::singleton(analysis), condition)
            .with_accuracy(t)
            .with_outer(t_outer)
    };
    let at = |g: f64| -> Assignment { [(algebra, Value::Real(g))].into_iter().collect() };
    let lo = cmi_posterior_seeded(ensemble, &base(Condition::fixed(at(contexts[0]))), child_seed(seed, 0))?;
    let hi = cmi_posterior_seeded(ensemble, &base(Condition::fixed(at(contexts[1]))), child_seed(seed, 1))?;
    let marg_cond = Condition::new(Assignment::new(), VarSet::singleton(algebra))?;
    let marginalized = cmi_posterior_seeded(ensemble, &base(marg_cond), child_seed(seed, 2))?;
    let (ks_statistic, ks_p_value) = ks_two_sample(&lo.values(), &hi.values());
    let medians = [
        median(&lo.values()),
        median(&hi.values()),
        median(&marginalized.values()),
    ];
    Ok(ContextDemo {
        contexts,
        fixed: [lo, hi],
        marginalized,
        ks_statistic,
        ks_p_value,
        medians,
    })
}
