use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StudentT};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::Value;
use crate::math::{ln_gamma, ln_student_t, sample_weights, LN_PI};

/// Normal-Gamma prior: `mu | tau ~ N(m, 1/(r tau))`, `tau ~ Gamma(nu/2, rate s/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NormalGammaHypers {
    pub m: f64,
    pub r: f64,
    pub s: f64,
    pub nu: f64,
}

impl NormalGammaHypers {
    /// Conjugate update by a cluster's statistics. Empty or non-numerical
    /// statistics return the prior unchanged.
    pub fn posterior(&self, stat: &SuffStat) -> NormalGammaHypers {
        let (n, sum, sum_sq) = match *stat {
            SuffStat::Numerical { n, sum, sum_sq } if n > 0 => (n as f64, sum, sum_sq),
            _ => return *self,
        };
        let mean = sum / n;
        let centered = (sum_sq - sum * mean).max(0.0);
        let r_n = self.r + n;
        let dev = mean - self.m;
        NormalGammaHypers {
            m: (self.r * self.m + sum) / r_n,
            r: r_n,
            s: self.s + centered + self.r * n * dev * dev / r_n,
            nu: self.nu + n,
        }
    }

    /// Student-t posterior predictive as `(df, loc, scale)`.
    pub fn predictive(&self, stat: &SuffStat) -> (f64, f64, f64) {
        let p = self.posterior(stat);
        let scale = (p.s * (p.r + 1.0) / (p.r * p.nu)).sqrt();
        (p.nu, p.m, scale)
    }

    pub fn ln_marginal(&self, stat: &SuffStat) -> f64 {
        let n = stat.n();
        if n == 0 {
            return 0.0;
        }
        let p = self.posterior(stat);
        -0.5 * n as f64 * LN_PI + 0.5 * (self.r / p.r).ln() + 0.5 * self.nu * self.s.ln() - 0.5 * p.nu * p.s.ln()
            + ln_gamma(0.5 * p.nu)
            - ln_gamma(0.5 * self.nu)
    }
}

/// Symmetric Dirichlet prior over `categories` outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DirichletHypers {
    pub categories: u32,
    pub beta: f64,
}

/// Per-variable hyperparameters of the conjugate component family.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ComponentHypers {
    Numerical(NormalGammaHypers),
    Nominal(DirichletHypers),
}

/// Sufficient statistics of one variable over the observed cells of one
/// cluster.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SuffStat {
    Numerical { n: u32, sum: f64, sum_sq: f64 },
    Nominal { n: u32, counts: Vec<u32> },
}

impl SuffStat {
    pub fn empty(hypers: &ComponentHypers) -> SuffStat {
        match hypers {
            ComponentHypers::Numerical(_) => SuffStat::Numerical {
                n: 0,
                sum: 0.0,
                sum_sq: 0.0,
            },
            ComponentHypers::Nominal(h) => SuffStat::Nominal {
                n: 0,
                counts: vec![0; h.categories as usize],
            },
        }
    }

    pub fn n(&self) -> u32 {
        match self {
            SuffStat::Numerical { n, .. } | SuffStat::Nominal { n, .. } => *n,
        }
    }

    /// Adds an observation. The value must match the statistic's type.
    pub fn observe(&mut self, x: Value) {
        match (self, x) {
            (SuffStat::Numerical { n, sum, sum_sq }, Value::Real(x)) => {
                *n += 1;
                *sum += x;
                *sum_sq += x * x;
            }
            (SuffStat::Nominal { n, counts }, Value::Category(c)) => {
                *n += 1;
                counts[c as usize] += 1;
            }
            _ => panic!("observation type does not match statistic"),
        }
    }

    /// Removes an observation previously added with [`SuffStat::observe`].
    pub fn forget(&mut self, x: Value) {
        match (self, x) {
            (SuffStat::Numerical { n, sum, sum_sq }, Value::Real(x)) => {
                *n -= 1;
                if *n == 0 {
                    *sum = 0.0;
                    *sum_sq = 0.0;
                } else {
                    *sum -= x;
                    *sum_sq -= x * x;
                }
            }
            (SuffStat::Nominal { n, counts }, Value::Category(c)) => {
                *n -= 1;
                counts[c as usize] -= 1;
            }
            _ => panic!("observation type does not match statistic"),
        }
    }
}

impl ComponentHypers {
    pub fn accepts(&self, x: Value) -> bool {
        match (self, x) {
            (ComponentHypers::Numerical(_), Value::Real(v)) => v.is_finite(),
            (ComponentHypers::Nominal(h), Value::Category(c)) => c < h.categories,
            _ => false,
        }
    }

    /// Log posterior predictive of `x` given a cluster's statistics.
    pub fn ln_predictive(&self, stat: &SuffStat, x: Value) -> f64 {
        match (self, stat, x) {
            (ComponentHypers::Numerical(h), _, Value::Real(x)) => {
                let (df, loc, scale) = h.predictive(stat);
                ln_student_t(x, df, loc, scale)
            }
            (ComponentHypers::Nominal(h), SuffStat::Nominal { n, counts }, Value::Category(c)) => {
                let k = f64::from(h.categories);
                ((f64::from(counts[c as usize]) + h.beta) / (f64::from(*n) + k * h.beta)).ln()
            }
            _ => panic!("value type does not match component"),
        }
    }

    /// Log marginal likelihood of all observations summarized by `stat`.
    pub fn ln_marginal(&self, stat: &SuffStat) -> f64 {
        match (self, stat) {
            (ComponentHypers::Numerical(h), _) => h.ln_marginal(stat),
            (ComponentHypers::Nominal(h), SuffStat::Nominal { n, counts }) => {
                if *n == 0 {
                    return 0.0;
                }
                let kb = f64::from(h.categories) * h.beta;
                let lb = ln_gamma(h.beta);
                ln_gamma(kb) - ln_gamma(f64::from(*n) + kb)
                    + counts
                        .iter()
                        .filter(|&&c| c > 0)
                        .map(|&c| ln_gamma(f64::from(c) + h.beta) - lb)
                        .sum::<f64>()
            }
            _ => panic!("statistic type does not match component"),
        }
    }

    /// Draws from the posterior predictive given a cluster's statistics.
    pub fn sample_predictive<R: Rng + ?Sized>(&self, stat: &SuffStat, rng: &mut R) -> Value {
        match (self, stat) {
            (ComponentHypers::Numerical(h), _) => {
                let (df, loc, scale) = h.predictive(stat);
                let t = StudentT::new(df).expect("positive degrees of freedom").sample(rng);
                Value::Real(loc + scale * t)
            }
            (ComponentHypers::Nominal(h), SuffStat::Nominal { counts, .. }) => {
                let w: Vec<f64> = counts.iter().map(|&c| f64::from(c) + h.beta).collect();
                Value::Category(sample_weights(rng, &w) as u32)
            }
            _ => panic!("statistic type does not match component"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ng() -> ComponentHypers {
        ComponentHypers::Numerical(NormalGammaHypers {
            m: 0.5,
            r: 2.0,
            s: 1.5,
            nu: 3.0,
        })
    }

    #[test]
    fn predictive_is_ratio_of_marginals() {
        let h = ng();
        let mut stat = SuffStat::empty(&h);
        for x in [0.3, -1.2, 2.5, 0.9] {
            let before = h.ln_marginal(&stat);
            let pred = h.ln_predictive(&stat, Value::Real(x));
            stat.observe(Value::Real(x));
            let after = h.ln_marginal(&stat);
            assert!((after - before - pred).abs() < 1e-12, "{x}");
        }
        let d = ComponentHypers::Nominal(DirichletHypers {
            categories: 3,
            beta: 0.7,
        });
        let mut stat = SuffStat::empty(&d);
        for c in [0, 2, 2, 1, 2] {
            let before = d.ln_marginal(&stat);
            let pred = d.ln_predictive(&stat, Value::Category(c));
            stat.observe(Value::Category(c));
            assert!((d.ln_marginal(&stat) - before - pred).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_predictive_by_hand() {
        let d = ComponentHypers::Nominal(DirichletHypers {
            categories: 3,
            beta: 1.0,
        });
        let stat = SuffStat::Nominal {
            n: 2,
            counts: vec![2, 0, 0],
        };
        assert!((d.ln_predictive(&stat, Value::Category(0)) - (0.6f64).ln()).abs() < 1e-15);
        assert!((d.ln_predictive(&stat, Value::Category(1)) - (0.2f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn forgetting_restores_statistics() {
        let h = ng();
        let mut stat = SuffStat::empty(&h);
        stat.observe(Value::Real(1.0));
        stat.observe(Value::Real(2.0));
        stat.forget(Value::Real(2.0));
        stat.forget(Value::Real(1.0));
        assert_eq!(stat, SuffStat::empty(&h));
    }

    #[test]
    fn collapsed_predictive_matches_explicit_parameter_average() {
        use rand_distr::{Gamma, Normal};
        let h = ng();
        let ComponentHypers::Numerical(prior) = h else {
            unreachable!()
        };
        let mut stat = SuffStat::empty(&h);
        for x in [0.3, -1.2, 2.5] {
            stat.observe(Value::Real(x));
        }
        let post = prior.posterior(&stat);
        let mut rng = crate::rng::stream(11);
        let tau_dist = Gamma::new(post.nu / 2.0, 2.0 / post.s).unwrap();
        for x in [-1.0, 0.4, 3.0] {
            let n = 100_000;
            let draws: Vec<f64> = (0..n)
                .map(|_| {
                    let tau: f64 = tau_dist.sample(&mut rng);
                    let mu: f64 = Normal::new(post.m, (1.0 / (post.r * tau)).sqrt())
                        .unwrap()
                        .sample(&mut rng);
                    (tau / (2.0 * core::f64::consts::PI)).sqrt() * (-0.5 * tau * (x - mu) * (x - mu)).exp()
                })
                .collect();
            let mean = crate::stats::mean(&draws);
            let se = crate::stats::std_dev(&draws) / (n as f64).sqrt();
            let collapsed = h.ln_predictive(&stat, Value::Real(x)).exp();
            assert!(
                (collapsed - mean).abs() < 3.0 * se,
                "x={x}: {collapsed} vs {mean} +- {se}"
            );
        }
    }
}
