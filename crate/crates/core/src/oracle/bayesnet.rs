//! Discrete Bayesian networks with exact CMI by enumeration.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::{Assignment, Schema, VarSet, Variable};
use crate::error::{Error, Result};
use crate::gpm::Gpm;

use super::models::DiscreteJoint;
use super::MAX_STATE_SPACE;

/// One node: its parents (by node index) and a CPT with one row per parent
/// configuration. Parent configurations are mixed-radix with the first
/// parent most significant.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BnNode {
    pub name: String,
    pub cardinality: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub parents: Vec<usize>,
    pub cpt: Vec<Vec<f64>>,
}

/// A validated DAG of discrete nodes. Node `i` is variable `i`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct DiscreteBayesNet {
    nodes: Vec<BnNode>,
    #[cfg_attr(feature = "serde", serde(skip))]
    joint: DiscreteJoint,
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for DiscreteBayesNet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<BnNode>,
        }
        let raw = Raw::deserialize(de)?;
        DiscreteBayesNet::new(raw.nodes).map_err(serde::de::Error::custom)
    }
}

impl DiscreteBayesNet {
    pub fn new(nodes: Vec<BnNode>) -> Result<Self> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.cardinality == 0 {
                return Err(Error::InvalidNetwork(format!("node {} has no states", node.name)));
            }
            if let Some(&p) = node.parents.iter().find(|&&p| p >= n || p == i) {
                return Err(Error::InvalidNetwork(format!(
                    "node {} has invalid parent {p}",
                    node.name
                )));
            }
            let rows: usize = node.parents.iter().map(|&p| nodes[p].cardinality).product();
            if node.cpt.len() != rows {
                return Err(Error::InvalidNetwork(format!(
                    "node {} has {} CPT rows, expected {rows}",
                    node.name,
                    node.cpt.len()
                )));
            }
            for row in &node.cpt {
                if row.len() != node.cardinality || row.iter().any(|&p| p.is_nan() || p < 0.0) {
                    return Err(Error::InvalidNetwork(format!(
                        "node {} has a malformed CPT row",
                        node.name
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidNetwork(format!(
                        "node {} has a CPT row summing to {s}",
                        node.name
                    )));
                }
            }
        }
        let order = topological_order(&nodes)?;
        let size = nodes
            .iter()
            .try_fold(1u128, |acc, nd| acc.checked_mul(nd.cardinality as u128))
            .unwrap_or(u128::MAX);
        if size > MAX_STATE_SPACE {
            return Err(Error::StateSpaceTooLarge(size));
        }
        let joint = build_joint(&nodes, &order, size as usize)?;
        Ok(DiscreteBayesNet { nodes, joint })
    }

    pub fn nodes(&self) -> &[BnNode] {
        &self.nodes
    }

    pub fn joint(&self) -> &DiscreteJoint {
        &self.joint
    }

    /// Nominal schema with labels `0..k`.
    pub fn schema(&self) -> Schema {
        Schema::new(
            self.nodes
                .iter()
                .map(|n| Variable::nominal(n.name.clone(), n.cardinality))
                .collect(),
        )
        .expect("validated network has a valid schema")
    }

    /// Exact `I(x_a : x_b | x_c = given)` in nats; `0 ln 0` terms are 0.
    pub fn exact_cmi(&self, a: &VarSet, b: &VarSet, given: &Assignment) -> Result<f64> {
        self.joint.exact_cmi(a, b, given)
    }
}

fn topological_order(nodes: &[BnNode]) -> Result<Vec<usize>> {
    let n = nodes.len();
    let mut indegree: Vec<usize> = nodes.iter().map(|nd| nd.parents.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (i, nd) in nodes.iter().enumerate() {
        for &p in &nd.parents {
            children[p].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() != n {
        return Err(Error::InvalidNetwork("graph has a cycle".into()));
    }
    Ok(order)
}

fn build_joint(nodes: &[BnNode], _order: &[usize], size: usize) -> Result<DiscreteJoint> {
    let cards: Vec<usize> = nodes.iter().map(|n| n.cardinality).collect();
    let mut probs = vec![0.0; size];
    let mut digits = vec![0usize; nodes.len()];
    for (ix, slot) in probs.iter_mut().enumerate() {
        let mut rem = ix;
        for i in (0..nodes.len()).rev() {
            digits[i] = rem % cards[i];
            rem /= cards[i];
        }
        let mut p = 1.0;
        for (i, nd) in nodes.iter().enumerate() {
            let mut row = 0;
            for &q in &nd.parents {
                row = row * cards[q] + digits[q];
            }
            p *= nd.cpt[row][digits[i]];
        }
        *slot = p;
    }
    // renormalize away accumulated rounding so the table passes its own check
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    DiscreteJoint::new(cards.iter().copied().enumerate().collect(), probs)
}

impl Gpm for DiscreteBayesNet {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        self.joint.simulate(query, given, rng)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        self.joint.logpdf(target, given)
    }
}
