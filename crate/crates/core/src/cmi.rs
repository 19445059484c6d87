//! Posterior distributions of conditional mutual information over an
//! ensemble, threshold probabilities, and three-valued independence
//! verdicts.

use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::crosscat::{crosscat_cmi, CrossCatState, Ensemble};
use crate::data::{Assignment, Condition, Schema, VarSet};
use crate::error::{Error, Result};
use crate::gpm::{check_cmi_args, Gpm};
use crate::rng::child_stream;
use crate::stats::median;

pub const DEFAULT_ACCURACY: usize = 1000;
pub const DEFAULT_OUTER: usize = 100;
pub const DEFAULT_EPS: f64 = 0.05;
pub const DEFAULT_CONFIDENCE: f64 = 0.9;
/// Width of the undecided band just below the confidence level.
pub const UNDECIDED_BAND: f64 = 0.2;

/// `I(a : b | condition)` with its Monte Carlo budgets.
#[derive(Clone, Debug, PartialEq)]
pub struct CmiQuery {
    pub a: VarSet,
    pub b: VarSet,
    pub condition: Condition,
    /// Joint samples per inner estimate.
    pub t: usize,
    /// Draws of the marginalized condition variables.
    pub t_outer: usize,
}

impl CmiQuery {
    pub fn new(a: VarSet, b: VarSet, condition: Condition) -> Self {
        CmiQuery {
            a,
            b,
            condition,
            t: DEFAULT_ACCURACY,
            t_outer: DEFAULT_OUTER,
        }
    }

    pub fn marginal(a: VarSet, b: VarSet) -> Self {
        CmiQuery::new(a, b, Condition::none())
    }

    pub fn with_accuracy(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_outer(mut self, t_outer: usize) -> Self {
        self.t_outer = t_outer;
        self
    }

    /// Checks disjointness, budgets and variable types against `schema`.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        check_cmi_args(&self.a, &self.b, &self.condition.fixed, self.t)?;
        if self.t_outer == 0 {
            return Err(Error::AccuracyZero);
        }
        for v in self.a.iter().chain(self.b.iter()) {
            schema.check_var(v)?;
        }
        let m = &self.condition.marginalized;
        if let Some(v) = m.overlap(&self.a).or_else(|| m.overlap(&self.b)) {
            return Err(Error::OverlappingVarSets(v));
        }
        self.condition.validate(schema)
    }
}

/// One CMI estimate per ensemble member, in member order.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CmiPosterior {
    pub estimates: Vec<(usize, f64)>,
}

impl CmiPosterior {
    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.1).collect()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// `(min, median, max)` of the estimates.
    pub fn summary(&self) -> (f64, f64, f64) {
        let v = self.values();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, median(&v), max)
    }
}

/// CMI under one member. With marginalized condition variables, averages
/// `t_outer` inner estimates, each conditioned on the fixed values plus a
/// draw of the marginalized ones from the member's predictive given the
/// fixed values. Pairs that share no block return exactly zero before any
/// sampling.
pub fn member_cmi<R: Rng + ?Sized>(member: &CrossCatState, q: &CmiQuery, rng: &mut R) -> Result<f64> {
    let linked = q.a.iter().any(|i| q.b.iter().any(|j| member.same_block(i, j)));
    if !linked {
        check_cmi_args(&q.a, &q.b, &q.condition.fixed, q.t)?;
        return Ok(0.0);
    }
    let m = &q.condition.marginalized;
    if m.is_empty() {
        return crosscat_cmi(member, &q.a, &q.b, &q.condition.fixed, q.t, rng);
    }
    let mut total = 0.0;
    for _ in 0..q.t_outer {
        let mut given: Assignment = q.condition.fixed.clone();
        given.append(&mut member.simulate(m, &q.condition.fixed, rng)?);
        total += crosscat_cmi(member, &q.a, &q.b, &given, q.t, rng)?;
    }
    Ok(total / q.t_outer as f64)
}

/// Posterior over CMI with member `h` evaluated on the stream
/// `child_stream(seed, h)`, so any evaluation order gives the same result.
pub fn cmi_posterior_seeded(ensemble: &Ensemble, q: &CmiQuery, seed: u64) -> Result<CmiPosterior> {
    q.validate(ensemble.schema())?;
    let estimates = ensemble
        .members()
        .iter()
        .enumerate()
        .map(|(h, member)| {
            let mut rng = child_stream(seed, h as u64);
            member_cmi(member, q, &mut rng).map(|x| (h, x))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CmiPosterior { estimates })
}

/// [`cmi_posterior_seeded`] with the seed drawn from `rng`.
pub fn cmi_posterior<R: Rng + ?Sized>(ensemble: &Ensemble, q: &CmiQuery, rng: &mut R) -> Result<CmiPosterior> {
    cmi_posterior_seeded(ensemble, q, rng.random())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Comparator {
    Less,
    Greater,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Less => "<",
            Comparator::Greater => ">",
        }
    }
}

/// A strict comparison against a fixed value, such as `< 0.1`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Threshold {
    pub comparator: Comparator,
    pub value: f64,
}

impl Threshold {
    pub fn less(value: f64) -> Self {
        Threshold {
            comparator: Comparator::Less,
            value,
        }
    }

    pub fn greater(value: f64) -> Self {
        Threshold {
            comparator: Comparator::Greater,
            value,
        }
    }

    pub fn holds(&self, x: f64) -> bool {
        match self.comparator {
            Comparator::Less => x < self.value,
            Comparator::Greater => x > self.value,
        }
    }
}

/// Fraction of posterior samples satisfying `threshold`.
pub fn prob_cmi_in(posterior: &CmiPosterior, threshold: Threshold) -> Result<f64> {
    if posterior.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let hits = posterior.estimates.iter().filter(|e| threshold.holds(e.1)).count();
    Ok(hits as f64 / posterior.len() as f64)
}

/// Which independence notion a verdict is about; each requires a matching
/// condition shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum IndependenceKind {
    /// No condition at all.
    Marginal,
    /// Fixed condition values only.
    ContextSpecific,
    /// At least one marginalized condition variable.
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    ProbablyIndependent,
    Undecided,
    ProbablyDependent,
}

impl Verdict {
    /// Independent at `p >= confidence`, undecided within
    /// [`UNDECIDED_BAND`] below it, dependent otherwise.
    pub fn from_probability(p: f64, confidence: f64) -> Verdict {
        if p >= confidence {
            Verdict::ProbablyIndependent
        } else if p >= confidence - UNDECIDED_BAND {
            Verdict::Undecided
        } else {
            Verdict::ProbablyDependent
        }
    }
}

/// A verdict with everything it was derived from.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct VerdictReport {
    pub kind: IndependenceKind,
    pub eps: f64,
    pub confidence: f64,
    /// Posterior probability that the CMI is below `eps`.
    pub probability: f64,
    pub verdict: Verdict,
    pub posterior: CmiPosterior,
}

fn check_shape(kind: IndependenceKind, c: &Condition) -> Result<()> {
    let ok = match kind {
        IndependenceKind::Marginal => c.fixed.is_empty() && c.marginalized.is_empty(),
        IndependenceKind::ContextSpecific => !c.fixed.is_empty() && c.marginalized.is_empty(),
        IndependenceKind::Conditional => !c.marginalized.is_empty(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ConditionShapeMismatch(match kind {
            IndependenceKind::Marginal => "marginal independence takes no condition",
            IndependenceKind::ContextSpecific => "context-specific independence needs fixed values only",
            IndependenceKind::Conditional => "conditional independence needs marginalized variables",
        }))
    }
}

pub fn independence_verdict<R: Rng + ?Sized>(
    ensemble: &Ensemble,
    q: &CmiQuery,
    kind: IndependenceKind,
    eps: f64,
    confidence: f64,
    rng: &mut R,
) -> Result<VerdictReport> {
    check_shape(kind, &q.condition)?;
    let posterior = cmi_posterior(ensemble, q, rng)?;
    let probability = prob_cmi_in(&posterior, Threshold::less(eps))?;
    Ok(VerdictReport {
        kind,
        eps,
        confidence,
        probability,
        verdict: Verdict::from_probability(probability, confidence),
        posterior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(xs: &[f64]) -> CmiPosterior {
        CmiPosterior {
            estimates: xs.iter().copied().enumerate().collect(),
        }
    }

    #[test]
    fn threshold_counting() {
        assert_eq!(
            prob_cmi_in(&post(&[0.0, 0.05, 0.2, 0.3]), Threshold::less(0.1)).unwrap(),
            0.5
        );
        assert_eq!(prob_cmi_in(&post(&[0.0; 5]), Threshold::less(0.1)).unwrap(), 1.0);
        assert_eq!(prob_cmi_in(&post(&[0.0, 0.2]), Threshold::greater(0.0)).unwrap(), 0.5);
        assert!(matches!(
            prob_cmi_in(&post(&[]), Threshold::less(0.1)),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::from_probability(0.9, 0.9), Verdict::ProbablyIndependent);
        assert_eq!(Verdict::from_probability(0.75, 0.9), Verdict::Undecided);
        assert_eq!(Verdict::from_probability(0.69, 0.9), Verdict::ProbablyDependent);
    }

    #[test]
    fn condition_shapes() {
        let fixed: Assignment = [(2, crate::data::Value::Category(0))].into_iter().collect();
        assert!(check_shape(IndependenceKind::Marginal, &Condition::none()).is_ok());
        assert!(check_shape(IndependenceKind::Marginal, &Condition::fixed(fixed.clone())).is_err());
        assert!(check_shape(IndependenceKind::ContextSpecific, &Condition::fixed(fixed)).is_ok());
        let m = Condition::new(Assignment::new(), VarSet::from([2])).unwrap();
        assert!(check_shape(IndependenceKind::Conditional, &m).is_ok());
        assert!(check_shape(IndependenceKind::ContextSpecific, &m).is_err());
    }

    #[test]
    fn summary_of_samples() {
        assert_eq!(post(&[0.3, 0.1, 0.2]).summary(), (0.1, 0.2, 0.3));
    }

    mod ensembles {
        use super::*;
        use crate::crosscat::{assemble, crosscat_cmi, FitConfig};
        use crate::data::{Dataset, Schema, Value, Variable};
        use crate::dpmm::{ComponentHypers, DirichletHypers, DpmmState};
        use crate::oracle::enumerate::enumerated_cmi;
        use crate::rng::{child_stream, stream};
        use crate::stats::{mean, std_dev};
        use alloc::vec;
        use rand::Rng;

        fn data() -> Dataset {
            let mut rng = stream(3);
            let schema = Schema::new((0..3).map(|j| Variable::nominal(alloc::format!("v{j}"), 2)).collect()).unwrap();
            let rows = (0..24)
                .map(|i| {
                    let x = if i < 2 { i as u32 } else { rng.random_range(0..2) };
                    let y = if rng.random::<f64>() < 0.8 { x } else { 1 - x };
                    let z = if rng.random::<f64>() < 0.7 {
                        y
                    } else {
                        rng.random_range(0..2)
                    };
                    vec![
                        Some(Value::Category(x)),
                        Some(Value::Category(y)),
                        Some(Value::Category(z)),
                    ]
                })
                .collect();
            Dataset::new(schema, rows).unwrap()
        }

        fn blk(d: &Dataset, vars: Vec<usize>, rows: &[usize]) -> DpmmState {
            let h = vars
                .iter()
                .map(|_| {
                    ComponentHypers::Nominal(DirichletHypers {
                        categories: 2,
                        beta: 0.6,
                    })
                })
                .collect();
            DpmmState::new(d, vars, h, 0.9, rows).unwrap()
        }

        /// Member 0 keeps all variables in one three-cluster block; member 1
        /// separates variable 2.
        fn two_members(d: &Dataset) -> Ensemble {
            let thirds: Vec<usize> = (0..d.n_rows()).map(|i| i % 3).collect();
            let halves: Vec<usize> = (0..d.n_rows()).map(|i| i % 2).collect();
            let m0 = CrossCatState::new(1.0, &[0, 0, 0], vec![blk(d, vec![0, 1, 2], &thirds)]).unwrap();
            let m1 = CrossCatState::new(
                1.0,
                &[0, 0, 1],
                vec![blk(d, vec![0, 1], &halves), blk(d, vec![2], &thirds)],
            )
            .unwrap();
            assemble(d, &FitConfig::default(), vec![m0, m1]).unwrap()
        }

        #[test]
        fn single_member_matches_crosscat_cmi() {
            let d = data();
            let ens = two_members(&d);
            let q = CmiQuery::marginal(VarSet::from([0]), VarSet::from([2])).with_accuracy(200);
            let post = cmi_posterior_seeded(&ens, &q, 5).unwrap();
            let direct = crosscat_cmi(
                &ens.members()[0],
                &q.a,
                &q.b,
                &Assignment::new(),
                200,
                &mut child_stream(5, 0),
            )
            .unwrap();
            assert_eq!(post.estimates[0], (0, direct));
            assert_eq!(post.estimates[1], (1, 0.0));
        }

        #[test]
        fn separated_pairs_are_exactly_zero_even_when_marginalizing() {
            let d = data();
            let halves: Vec<usize> = (0..d.n_rows()).map(|i| i % 2).collect();
            let sep = CrossCatState::new(
                1.0,
                &[0, 1, 2],
                vec![
                    blk(&d, vec![0], &halves),
                    blk(&d, vec![1], &halves),
                    blk(&d, vec![2], &halves),
                ],
            )
            .unwrap();
            let ens = assemble(&d, &FitConfig::default(), vec![sep.clone(), sep]).unwrap();
            let cond = Condition::new(Assignment::new(), VarSet::from([2])).unwrap();
            let q = CmiQuery::new(VarSet::from([0]), VarSet::from([1]), cond);
            assert_eq!(cmi_posterior_seeded(&ens, &q, 1).unwrap().values(), vec![0.0, 0.0]);
        }

        #[test]
        fn marginalized_condition_matches_enumeration() {
            let d = data();
            let ens = two_members(&d);
            let cards = [2, 2, 2];
            let (a, b) = (VarSet::from([0]), VarSet::from([1]));
            let cond = Condition::new(Assignment::new(), VarSet::from([2])).unwrap();
            for (h, member) in ens.members().iter().enumerate() {
                let mut exact = 0.0;
                for c in 0..2 {
                    let g: Assignment = [(2, Value::Category(c))].into_iter().collect();
                    let w = member.logpdf(&g, &Assignment::new()).unwrap().exp();
                    exact += w * enumerated_cmi(member, &cards, &a, &b, &g).unwrap();
                }
                // ten replicates of 1000 outer draws give 10^4 in total
                let q = CmiQuery::new(a.clone(), b.clone(), cond.clone())
                    .with_accuracy(10)
                    .with_outer(1000);
                let reps: Vec<f64> = (0..10)
                    .map(|r| member_cmi(member, &q, &mut child_stream(40 + h as u64, r)).unwrap())
                    .collect();
                let se = std_dev(&reps) / (reps.len() as f64).sqrt();
                assert!(
                    (mean(&reps) - exact).abs() < 3.0 * se,
                    "member {h}: {} vs {exact} +- {se}",
                    mean(&reps)
                );
            }
        }

        #[test]
        fn posterior_is_symmetric_under_shared_seeds() {
            let d = data();
            let ens = two_members(&d);
            let g: Assignment = [(2, Value::Category(1))].into_iter().collect();
            let ab =
                CmiQuery::new(VarSet::from([0]), VarSet::from([1]), Condition::fixed(g.clone())).with_accuracy(300);
            let ba = CmiQuery::new(VarSet::from([1]), VarSet::from([0]), Condition::fixed(g)).with_accuracy(300);
            assert_eq!(
                cmi_posterior_seeded(&ens, &ab, 8).unwrap(),
                cmi_posterior_seeded(&ens, &ba, 8).unwrap()
            );
        }

        #[test]
        fn zero_tolerance_never_claims_independence() {
            let d = data();
            let ens = two_members(&d);
            let q = CmiQuery::marginal(VarSet::from([0]), VarSet::from([1])).with_accuracy(100);
            let r = independence_verdict(&ens, &q, IndependenceKind::Marginal, 0.0, 0.9, &mut stream(2)).unwrap();
            assert!(r.probability < 0.9);
            assert_ne!(r.verdict, Verdict::ProbablyIndependent);
            let bad = independence_verdict(&ens, &q, IndependenceKind::ContextSpecific, 0.05, 0.9, &mut stream(2));
            assert!(matches!(bad, Err(Error::ConditionShapeMismatch(_))));
        }
    }
}
