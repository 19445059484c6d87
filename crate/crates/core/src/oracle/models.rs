//! Small models with exact densities, used as estimator oracles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{keys, restrict, Assignment, Value, VarId, VarSet};
use crate::error::{Error, Result};
use crate::gpm::Gpm;
use crate::math::{sample_weights, LN_2PI};

use super::MAX_STATE_SPACE;

/// A full joint probability table over nominal variables.
///
/// `probs` is row-major in the order of `vars`: the last variable varies
/// fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteJoint {
    vars: Vec<VarId>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(vars_cards: Vec<(VarId, usize)>, probs: Vec<f64>) -> Result<Self> {
        let vars: Vec<VarId> = vars_cards.iter().map(|p| p.0).collect();
        let cards: Vec<usize> = vars_cards.iter().map(|p| p.1).collect();
        let distinct: VarSet = vars.iter().copied().collect();
        if distinct.len() != vars.len() {
            return Err(Error::InvalidNetwork("repeated variable in joint table".into()));
        }
        if cards.contains(&0) {
            return Err(Error::InvalidNetwork("zero-cardinality variable".into()));
        }
        let size = cards.iter().try_fold(1u128, |acc, &k| acc.checked_mul(k as u128));
        let size = match size {
            Some(s) if s <= MAX_STATE_SPACE => s as usize,
            Some(s) => return Err(Error::StateSpaceTooLarge(s)),
            None => return Err(Error::StateSpaceTooLarge(u128::MAX)),
        };
        if probs.len() != size {
            return Err(Error::InvalidNetwork(format!(
                "table has {} entries, expected {size}",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidNetwork("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNetwork(format!("table sums to {total}, not 1")));
        }
        let mut strides = vec![1usize; cards.len()];
        for i in (0..cards.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cards[i + 1];
        }
        Ok(DiscreteJoint {
            vars,
            cards,
            strides,
            probs,
        })
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    fn position(&self, var: VarId) -> Result<usize> {
        self.vars
            .iter()
            .position(|&v| v == var)
            .ok_or_else(|| Error::UnknownVariable(format!("#{var}")))
    }

    fn check(&self, assignment: &Assignment) -> Result<()> {
        for (&var, &value) in assignment {
            let pos = self.position(var)?;
            match value {
                Value::Category(c) if (c as usize) < self.cards[pos] => {}
                other => {
                    return Err(Error::TypeMismatch {
                        var: format!("#{var}"),
                        reason: format!("{other} is not one of {} categories", self.cards[pos]),
                    })
                }
            }
        }
        Ok(())
    }

    fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.cards[pos]
    }

    fn matches(&self, index: usize, assignment: &[(usize, usize)]) -> bool {
        assignment.iter().all(|&(pos, c)| self.digit(index, pos) == c)
    }

    fn positions(&self, assignment: &Assignment) -> Result<Vec<(usize, usize)>> {
        assignment
            .iter()
            .map(|(&v, &x)| Ok((self.position(v)?, x.as_category().unwrap_or(0) as usize)))
            .collect()
    }

    /// Unnormalized table of `p(query, given)` over query configurations
    /// (row-major in the order of `query`), plus `p(given)`.
    pub fn conditional_table(&self, query: &[VarId], given: &Assignment) -> Result<(Vec<f64>, f64)> {
        self.check(given)?;
        let qpos: Vec<usize> = query.iter().map(|&v| self.position(v)).collect::<Result<_>>()?;
        let gpos = self.positions(given)?;
        let qsize: usize = qpos.iter().map(|&p| self.cards[p]).product();
        let mut table = vec![0.0; qsize];
        let mut pg = 0.0;
        for (ix, &p) in self.probs.iter().enumerate() {
            if p == 0.0 || !self.matches(ix, &gpos) {
                continue;
            }
            pg += p;
            let mut q = 0;
            for &pos in &qpos {
                q = q * self.cards[pos] + self.digit(ix, pos);
            }
            table[q] += p;
        }
        Ok((table, pg))
    }

    /// Exact `I(x_a : x_b | x_c = given)` in nats by exhaustive summation.
    pub fn exact_cmi(&self, a: &VarSet, b: &VarSet, given: &Assignment) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyVarSet);
        }
        if let Some(v) = a.overlap(b).or_else(|| a.union(b).overlap(&keys(given))) {
            return Err(Error::OverlappingVarSets(v));
        }
        let av: Vec<VarId> = a.iter().collect();
        let bv: Vec<VarId> = b.iter().collect();
        let query: Vec<VarId> = av.iter().chain(bv.iter()).copied().collect();
        let (table, pg) = self.conditional_table(&query, given)?;
        if pg <= 0.0 {
            return Err(Error::ZeroProbabilityCondition);
        }
        let bsize: usize = bv.iter().map(|&v| self.cards[self.position(v).unwrap()]).product();
        let asize = table.len() / bsize;
        let mut pa = vec![0.0; asize];
        let mut pb = vec![0.0; bsize];
        for i in 0..asize {
            for j in 0..bsize {
                let p = table[i * bsize + j] / pg;
                pa[i] += p;
                pb[j] += p;
            }
        }
        let mut mi = 0.0;
        for i in 0..asize {
            for j in 0..bsize {
                let p = table[i * bsize + j] / pg;
                if p > 0.0 {
                    mi += p * (p / (pa[i] * pb[j])).ln();
                }
            }
        }
        Ok(mi)
    }
}

impl Gpm for DiscreteJoint {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        if query.is_empty() {
            return Ok(Assignment::new());
        }
        if let Some(v) = query.overlap(&keys(given)) {
            return Err(Error::OverlappingVarSets(v));
        }
        let qv: Vec<VarId> = query.iter().collect();
        let (table, pg) = self.conditional_table(&qv, given)?;
        if pg <= 0.0 {
            return Err(Error::ZeroProbabilityCondition);
        }
        let mut q = sample_weights(rng, &table);
        let mut out = Assignment::new();
        for &v in qv.iter().rev() {
            let k = self.cards[self.position(v)?];
            out.insert(v, Value::Category((q % k) as u32));
            q /= k;
        }
        Ok(out)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        if let Some(v) = keys(target).overlap(&keys(given)) {
            return Err(Error::OverlappingVarSets(v));
        }
        self.check(target)?;
        let mut joint = given.clone();
        joint.extend(target.iter().map(|(&k, &v)| (k, v)));
        let (_, p_joint) = self.conditional_table(&[], &joint)?;
        let (_, p_given) = self.conditional_table(&[], given)?;
        if p_given <= 0.0 {
            return Err(Error::ZeroProbabilityCondition);
        }
        Ok(p_joint.ln() - p_given.ln())
    }
}

/// Two models over disjoint variables glued as an independent product.
#[derive(Clone, Debug)]
pub struct Product<A, B> {
    left: A,
    left_vars: VarSet,
    right: B,
    right_vars: VarSet,
}

impl<A: Gpm, B: Gpm> Product<A, B> {
    pub fn new(left: A, left_vars: VarSet, right: B, right_vars: VarSet) -> Self {
        assert!(
            left_vars.is_disjoint(&right_vars),
            "product factors must not share variables"
        );
        Product {
            left,
            left_vars,
            right,
            right_vars,
        }
    }

    fn check(&self, vars: &VarSet) -> Result<()> {
        match vars
            .iter()
            .find(|&v| !self.left_vars.contains(v) && !self.right_vars.contains(v))
        {
            Some(v) => Err(Error::UnknownVariable(format!("#{v}"))),
            None => Ok(()),
        }
    }
}

impl<A: Gpm, B: Gpm> Gpm for Product<A, B> {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        self.check(query)?;
        self.check(&keys(given))?;
        let mut out = Assignment::new();
        let lq = query.intersection(&self.left_vars);
        if !lq.is_empty() {
            out.extend(self.left.simulate(&lq, &restrict(given, &self.left_vars), rng)?);
        }
        let rq = query.intersection(&self.right_vars);
        if !rq.is_empty() {
            out.extend(self.right.simulate(&rq, &restrict(given, &self.right_vars), rng)?);
        }
        Ok(out)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        self.check(&keys(target))?;
        self.check(&keys(given))?;
        let lt = restrict(target, &self.left_vars);
        let rt = restrict(target, &self.right_vars);
        let mut acc = 0.0;
        if !lt.is_empty() {
            acc += self.left.logpdf(&lt, &restrict(given, &self.left_vars))?;
        }
        if !rt.is_empty() {
            acc += self.right.logpdf(&rt, &restrict(given, &self.right_vars))?;
        }
        Ok(acc)
    }
}

/// A bivariate normal with fixed parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BivariateGaussian {
    pub vars: [VarId; 2],
    pub mean: [f64; 2],
    pub sd: [f64; 2],
    pub rho: f64,
}

impl BivariateGaussian {
    pub fn standard(vars: [VarId; 2], rho: f64) -> Self {
        BivariateGaussian {
            vars,
            mean: [0.0, 0.0],
            sd: [1.0, 1.0],
            rho,
        }
    }

    /// Closed-form mutual information `-ln(1 - rho^2) / 2`.
    pub fn mutual_information(&self) -> f64 {
        -0.5 * (1.0 - self.rho * self.rho).ln()
    }

    fn slot(&self, var: VarId) -> Result<usize> {
        self.vars
            .iter()
            .position(|&v| v == var)
            .ok_or_else(|| Error::UnknownVariable(format!("#{var}")))
    }

    fn real(var: VarId, value: Value) -> Result<f64> {
        value.as_real().ok_or_else(|| Error::TypeMismatch {
            var: format!("#{var}"),
            reason: "expected a real value".into(),
        })
    }

    /// Mean and sd of slot `i` given an optional value of the other slot.
    fn moments(&self, i: usize, other: Option<f64>) -> (f64, f64) {
        let j = 1 - i;
        match other {
            None => (self.mean[i], self.sd[i]),
            Some(xj) => (
                self.mean[i] + self.rho * self.sd[i] / self.sd[j] * (xj - self.mean[j]),
                self.sd[i] * (1.0 - self.rho * self.rho).sqrt(),
            ),
        }
    }

    fn given_other(&self, i: usize, given: &Assignment) -> Result<Option<f64>> {
        given
            .get(&self.vars[1 - i])
            .map(|&v| Self::real(self.vars[1 - i], v))
            .transpose()
    }
}

fn ln_normal(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

impl Gpm for BivariateGaussian {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        for &v in given.keys() {
            self.slot(v)?;
        }
        let mut out = Assignment::new();
        let slots: Vec<usize> = query.iter().map(|v| self.slot(v)).collect::<Result<_>>()?;
        if let Some(v) = query.overlap(&keys(given)) {
            return Err(Error::OverlappingVarSets(v));
        }
        let mut prev: Option<(usize, f64)> = None;
        for i in slots {
            let other = match prev {
                Some((_, x)) => Some(x),
                None => self.given_other(i, given)?,
            };
            let (mu, sd) = self.moments(i, other);
            let z: f64 = rng.sample(StandardNormal);
            let x = mu + sd * z;
            out.insert(self.vars[i], Value::Real(x));
            prev = Some((i, x));
        }
        Ok(out)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        for &v in given.keys() {
            self.slot(v)?;
        }
        if let Some(v) = keys(target).overlap(&keys(given)) {
            return Err(Error::OverlappingVarSets(v));
        }
        let mut acc = 0.0;
        let mut prev: Option<f64> = None;
        for (&v, &x) in target {
            let i = self.slot(v)?;
            let x = Self::real(v, x)?;
            let other = match prev {
                Some(p) => Some(p),
                None => self.given_other(i, given)?,
            };
            let (mu, sd) = self.moments(i, other);
            acc += ln_normal(x, mu, sd);
            prev = Some(x);
        }
        Ok(acc)
    }
}
