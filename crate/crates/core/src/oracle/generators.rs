//! Synthetic data generators with known dependence structure.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::bayesnet::{BnNode, DiscreteBayesNet};
use crate::data::{Dataset, Schema, Value, Variable};

fn check_noise(noise: f64) {
    assert!(
        (0.0..0.5).contains(&noise) || noise == 0.5,
        "noise must lie in [0, 0.5]"
    );
}

fn fair(name: &str) -> BnNode {
    BnNode {
        name: name.into(),
        cardinality: 2,
        parents: vec![],
        cpt: vec![vec![0.5, 0.5]],
    }
}

fn noisy_copy(name: &str, parent: usize, noise: f64) -> BnNode {
    BnNode {
        name: name.into(),
        cardinality: 2,
        parents: vec![parent],
        cpt: vec![vec![1.0 - noise, noise], vec![noise, 1.0 - noise]],
    }
}

/// `x1, x2` fair bits and `x3 = x1 XOR x2` flipped with probability `noise`.
pub fn vstruct_net(noise: f64) -> DiscreteBayesNet {
    check_noise(noise);
    let (keep, flip) = (vec![1.0 - noise, noise], vec![noise, 1.0 - noise]);
    let x3 = BnNode {
        name: "x3".into(),
        cardinality: 2,
        parents: vec![0, 1],
        cpt: vec![keep.clone(), flip.clone(), flip, keep],
    };
    DiscreteBayesNet::new(vec![fair("x1"), fair("x2"), x3]).expect("valid v-structure")
}

/// `x1` a fair bit; `x2` and `x3` copies of `x1`, each flipped with
/// probability `noise`.
pub fn common_cause_net(noise: f64) -> DiscreteBayesNet {
    check_noise(noise);
    DiscreteBayesNet::new(vec![fair("x1"), noisy_copy("x2", 0, noise), noisy_copy("x3", 0, noise)])
        .expect("valid common-cause network")
}

fn bits_dataset(rows: Vec<[u32; 3]>) -> Dataset {
    let schema = Schema::new(vec![
        Variable::nominal("x1", 2),
        Variable::nominal("x2", 2),
        Variable::nominal("x3", 2),
    ])
    .expect("static schema");
    let rows = rows
        .into_iter()
        .map(|r| r.iter().map(|&c| Some(Value::Category(c))).collect())
        .collect();
    Dataset::new(schema, rows).expect("generated cells are valid")
}

fn flip<R: Rng + ?Sized>(rng: &mut R, bit: u32, noise: f64) -> u32 {
    if rng.random::<f64>() < noise {
        1 - bit
    } else {
        bit
    }
}

/// Samples `n` rows of the v-structure network.
pub fn gen_vstruct<R: Rng + ?Sized>(n: usize, noise: f64, rng: &mut R) -> Dataset {
    check_noise(noise);
    let rows = (0..n)
        .map(|_| {
            let x1 = rng.random_range(0..2u32);
            let x2 = rng.random_range(0..2u32);
            [x1, x2, flip(rng, x1 ^ x2, noise)]
        })
        .collect();
    bits_dataset(rows)
}

/// Samples `n` rows of the common-cause network.
pub fn gen_common_cause<R: Rng + ?Sized>(n: usize, noise: f64, rng: &mut R) -> Dataset {
    check_noise(noise);
    let rows = (0..n)
        .map(|_| {
            let x1 = rng.random_range(0..2u32);
            [x1, flip(rng, x1, noise), flip(rng, x1, noise)]
        })
        .collect();
    bits_dataset(rows)
}

/// Variable names of the exam-score style hub datasets, hub third.
pub const HUB_NAMES: [&str; 5] = ["mechanics", "vectors", "algebra", "analysis", "statistics"];

fn hub_schema() -> Schema {
    Schema::new(HUB_NAMES.iter().map(|&n| Variable::numerical(n)).collect()).expect("static schema")
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Linear-Gaussian scores in which `(mechanics, vectors)` and
/// `(analysis, statistics)` are conditionally independent given `algebra`.
///
/// Structural equations (all noises independent standard normals):
/// `G = z0`, `M = 0.6 G + 0.8 z1`, `V = 0.5 G + 0.4 M + 0.7 z2`,
/// `L = 0.7 G + 0.7 z3`, `S = 0.5 G + 0.4 L + 0.7 z4`.
pub fn gen_hub_linear<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Dataset {
    let rows = (0..n)
        .map(|_| {
            let g = normal(rng);
            let m = 0.6 * g + 0.8 * normal(rng);
            let v = 0.5 * g + 0.4 * m + 0.7 * normal(rng);
            let l = 0.7 * g + 0.7 * normal(rng);
            let s = 0.5 * g + 0.4 * l + 0.7 * normal(rng);
            [m, v, g, l, s].iter().map(|&x| Some(Value::Real(x))).collect()
        })
        .collect();
    Dataset::new(hub_schema(), rows).expect("generated cells are valid")
}

/// Upper quartile of the standard normal, the median of `|e|`.
const HALF_NORMAL_MEDIAN: f64 = 0.674_489_750_196_081_7;

/// Like [`gen_hub_linear`], but for `algebra > 0` the sign of the
/// `analysis` noise flags whether the `vectors` residual is small:
/// `V = 0.7 G + 0.7 e`, `L = 0.7 G + 0.2 z4 + q`, where
/// `q = (|e| < m ? 1 : -1) |z3|` if `G > 0` and `q = z3` otherwise, and
/// `m` is the median of `|e|`.
///
/// `q` is standard normal and uncorrelated with every other variable, and
/// `q^2` is independent of `e`, so linear partial correlations of
/// `(vectors, analysis)` are zero with the usual sampling spread. The
/// conditional mutual information given `algebra = g` is zero for `g < 0`
/// and large for `g > 0`.
pub fn gen_hub_context<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Dataset {
    let rows = (0..n)
        .map(|_| {
            let g = normal(rng);
            let m = 0.6 * g + 0.8 * normal(rng);
            let e = normal(rng);
            let v = 0.7 * g + 0.7 * e;
            let z: f64 = normal(rng);
            let q = if g > 0.0 {
                if e.abs() < HALF_NORMAL_MEDIAN {
                    z.abs()
                } else {
                    -z.abs()
                }
            } else {
                z
            };
            let l = 0.7 * g + 0.2 * normal(rng) + q;
            let s = 0.5 * g + 0.4 * l + 0.7 * normal(rng);
            [m, v, g, l, s].iter().map(|&x| Some(Value::Real(x))).collect()
        })
        .collect();
    Dataset::new(hub_schema(), rows).expect("generated cells are valid")
}

/// Five mutually independent standard normal scores.
pub fn gen_hub_free<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Dataset {
    let rows = (0..n)
        .map(|_| (0..5).map(|_| Some(Value::Real(normal(rng)))).collect())
        .collect();
    Dataset::new(hub_schema(), rows).expect("generated cells are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Assignment, VarSet};
    use crate::rng::stream;

    #[test]
    fn maximal_noise_makes_everything_independent() {
        for net in [vstruct_net(0.5), common_cause_net(0.5)] {
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let mi = net
                    .exact_cmi(&VarSet::from([a]), &VarSet::from([b]), &Assignment::new())
                    .unwrap();
                assert!(mi.abs() < 1e-15, "{a},{b}: {mi}");
            }
        }
    }

    #[test]
    fn noiseless_vstruct_rows_are_xor() {
        let d = gen_vstruct(200, 0.0, &mut stream(4));
        for r in 0..d.n_rows() {
            let c = |v| d.cell(r, v).unwrap().as_category().unwrap();
            assert_eq!(c(2), c(0) ^ c(1));
        }
    }

    #[test]
    fn common_cause_is_context_independent() {
        let net = common_cause_net(0.1);
        for c in 0..2 {
            let mut given = Assignment::new();
            given.insert(0, Value::Category(c));
            let mi = net.exact_cmi(&VarSet::from([1]), &VarSet::from([2]), &given).unwrap();
            assert!(mi.abs() < 1e-15);
        }
    }
}
