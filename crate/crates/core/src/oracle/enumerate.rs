//! Exact CMI of any model over nominal variables by summing over every
//! joint outcome, plus random small all-nominal CrossCat states to run it on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::MAX_STATE_SPACE;
use crate::crosscat::CrossCatState;
use crate::data::{restrict, Assignment, Dataset, Schema, Value, VarId, VarSet, Variable};
use crate::dpmm::{ComponentHypers, DirichletHypers, DpmmState};
use crate::error::{Error, Result};
use crate::gpm::Gpm;
use crate::math::sample_crp;

/// `I(a : b | given)` for a model whose variables in `a ∪ b` are nominal
/// with `cards[v]` categories, computed from `logpdf` alone.
pub fn enumerated_cmi<G: Gpm + ?Sized>(
    gpm: &G,
    cards: &[usize],
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
) -> Result<f64> {
    crate::gpm::check_cmi_args(a, b, given, 1)?;
    let vars: Vec<VarId> = a.union(b).iter().collect();
    let radix: Vec<usize> = vars
        .iter()
        .map(|&v| {
            cards
                .get(v)
                .copied()
                .ok_or_else(|| Error::UnknownVariable(format!("#{v}")))
        })
        .collect::<Result<_>>()?;
    let total = radix
        .iter()
        .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
        .unwrap_or(u128::MAX);
    if total > MAX_STATE_SPACE {
        return Err(Error::StateSpaceTooLarge(total));
    }
    let mut digits = vec![0usize; vars.len()];
    let mut sum = 0.0;
    for _ in 0..total {
        let joint: Assignment = vars
            .iter()
            .zip(&digits)
            .map(|(&v, &d)| (v, Value::Category(d as u32)))
            .collect();
        let l_ab = gpm.logpdf(&joint, given)?;
        let l_a = gpm.logpdf(&restrict(&joint, a), given)?;
        let l_b = gpm.logpdf(&restrict(&joint, b), given)?;
        sum += l_ab.exp() * (l_ab - l_a - l_b);
        for (d, &k) in digits.iter_mut().zip(&radix).rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok(sum)
}

/// A random all-nominal state: up to `max_vars` variables with 2 or
/// `max_card` categories, a CRP variable partition, and at most
/// `max_clusters` clusters per block over `rows` random rows.
pub fn random_nominal_state<R: Rng + ?Sized>(
    rng: &mut R,
    max_vars: usize,
    max_card: usize,
    max_clusters: usize,
    rows: usize,
) -> (Dataset, CrossCatState) {
    assert!(max_vars >= 1 && max_card >= 2 && max_clusters >= 1 && rows >= max_clusters);
    let d = rng.random_range(1..=max_vars);
    let cards: Vec<usize> = (0..d).map(|_| rng.random_range(2..=max_card)).collect();
    let schema = Schema::new(
        cards
            .iter()
            .enumerate()
            .map(|(v, &k)| Variable::nominal(format!("v{v}"), k))
            .collect(),
    )
    .expect("distinct generated names");
    let data_rows = (0..rows)
        .map(|i| {
            cards
                .iter()
                .map(|&k| {
                    Some(Value::Category(if i < k {
                        i as u32
                    } else {
                        rng.random_range(0..k as u32)
                    }))
                })
                .collect()
        })
        .collect();
    let data = Dataset::new(schema, data_rows).expect("every category in range");
    let alpha_v = rng.random_range(0.3..3.0);
    let partition = sample_crp(rng, alpha_v, d);
    let n_blocks = partition.iter().max().map_or(0, |m| m + 1);
    let blocks = (0..n_blocks)
        .map(|k| {
            let vars: Vec<VarId> = (0..d).filter(|&v| partition[v] == k).collect();
            let hypers = vars
                .iter()
                .map(|&v| {
                    ComponentHypers::Nominal(DirichletHypers {
                        categories: cards[v] as u32,
                        beta: rng.random_range(0.2..3.0),
                    })
                })
                .collect();
            let clusters = rng.random_range(1..=max_clusters);
            let rows: Vec<usize> = (0..rows)
                .map(|i| if i < clusters { i } else { rng.random_range(0..clusters) })
                .collect();
            DpmmState::new(&data, vars, hypers, rng.random_range(0.3..3.0), &rows).expect("valid block")
        })
        .collect();
    let state = CrossCatState::new(alpha_v, &partition, blocks).expect("valid state");
    (data, state)
}

/// Category counts of every variable in `data`, for [`enumerated_cmi`].
pub fn cardinalities(data: &Dataset) -> Vec<usize> {
    (0..data.n_vars())
        .map(|v| data.schema().stat_type(v).category_count().unwrap_or(0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::models::DiscreteJoint;
    use crate::rng::stream;

    #[test]
    fn agrees_with_table_oracle() {
        let joint = DiscreteJoint::new(
            vec![(0, 2), (1, 3), (2, 2)],
            vec![0.05, 0.1, 0.05, 0.1, 0.2, 0.05, 0.1, 0.05, 0.1, 0.05, 0.1, 0.05],
        )
        .unwrap();
        let cards = [2, 3, 2];
        let given: Assignment = [(2, Value::Category(1))].into_iter().collect();
        for g in [Assignment::new(), given] {
            let (a, b) = (VarSet::from([0]), VarSet::from([1]));
            let x = enumerated_cmi(&joint, &cards, &a, &b, &g).unwrap();
            let y = joint.exact_cmi(&a, &b, &g).unwrap();
            assert!((x - y).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn random_states_are_consistent() {
        let mut rng = stream(1);
        for _ in 0..50 {
            let (data, state) = random_nominal_state(&mut rng, 6, 3, 3, 10);
            state.check_consistency(&data).unwrap();
            assert!(state.blocks().all(|(_, b)| b.n_clusters() <= 3));
        }
    }
}
