//! The generative population model interface and the generic Monte Carlo
//! estimator of conditional mutual information built on it.

use core::cell::Cell;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;

use crate::data::{keys, restrict, Assignment, VarSet};
use crate::error::{Error, Result};

/// A model that can simulate from, and assess the density of, its
/// conditional and marginal distributions over sub-vectors.
///
/// Implementations must be read-only under `simulate`/`logpdf` so a single
/// snapshot can serve concurrent queries.
pub trait Gpm {
    /// Draws `x_query ~ p(. | given)`. An empty query yields an empty record.
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment>;

    /// `ln p(target | given)`: a log-density for numerical variables, a
    /// log-mass for nominal ones, and the log of their product for a mix.
    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64>;
}

impl<G: Gpm + ?Sized> Gpm for &G {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        (**self).simulate(query, given, rng)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        (**self).logpdf(target, given)
    }
}

/// Monte Carlo CMI estimate together with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmiEstimate {
    /// Raw (unclipped) sample mean of the log-ratio, in nats.
    pub mean: f64,
    /// Sample standard deviation of the summand over `sqrt(samples)`.
    pub std_error: f64,
    pub samples: usize,
}

impl CmiEstimate {
    pub const ZERO: CmiEstimate = CmiEstimate {
        mean: 0.0,
        std_error: 0.0,
        samples: 0,
    };
}

pub(crate) fn check_cmi_args(a: &VarSet, b: &VarSet, given: &Assignment, t: usize) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyVarSet);
    }
    if let Some(v) = a.overlap(b) {
        return Err(Error::OverlappingVarSets(v));
    }
    let c = keys(given);
    if let Some(v) = a.overlap(&c).or_else(|| b.overlap(&c)) {
        return Err(Error::OverlappingVarSets(v));
    }
    if t == 0 {
        return Err(Error::AccuracyZero);
    }
    Ok(())
}

/// Estimates `I(x_a : x_b | x_c = given)` with `t` joint samples.
///
/// Each sample draws `(x_a, x_b)` jointly and scores
/// `ln p(x_a, x_b | c) - (ln p(x_a | c) + ln p(x_b | c))`. The average is
/// returned as is, so it can be slightly negative.
pub fn gpm_cmi<G: Gpm + ?Sized, R: Rng + ?Sized>(
    gpm: &G,
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
    t: usize,
    rng: &mut R,
) -> Result<f64> {
    gpm_cmi_estimate(gpm, a, b, given, t, rng).map(|e| e.mean)
}

/// [`gpm_cmi`] that also reports the standard error of the estimate.
pub fn gpm_cmi_estimate<G: Gpm + ?Sized, R: Rng + ?Sized>(
    gpm: &G,
    a: &VarSet,
    b: &VarSet,
    given: &Assignment,
    t: usize,
    rng: &mut R,
) -> Result<CmiEstimate> {
    check_cmi_args(a, b, given, t)?;
    let ab = a.union(b);
    let mut sum = 0.0;
    // Welford accumulators for the standard error only
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..t {
        let joint = gpm.simulate(&ab, given, rng)?;
        let m_ab = gpm.logpdf(&joint, given)?;
        let m_a = gpm.logpdf(&restrict(&joint, a), given)?;
        let m_b = gpm.logpdf(&restrict(&joint, b), given)?;
        let term = m_ab - (m_a + m_b);
        sum += term;
        let delta = term - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (term - mean);
    }
    let std_error = if t > 1 {
        (m2 / (t - 1) as f64 / t as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(CmiEstimate {
        mean: sum / t as f64,
        std_error,
        samples: t,
    })
}

/// Call counts recorded by [`Instrumented`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub simulate: u64,
    pub logpdf: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.simulate + self.logpdf
    }
}

impl core::ops::AddAssign for CallCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.simulate += rhs.simulate;
        self.logpdf += rhs.logpdf;
    }
}

/// Wraps a model and counts the interface calls made through it.
#[derive(Debug)]
pub struct Instrumented<'a, G: ?Sized> {
    inner: &'a G,
    simulate: Cell<u64>,
    logpdf: Cell<u64>,
}

impl<'a, G: ?Sized> Instrumented<'a, G> {
    pub fn new(inner: &'a G) -> Self {
        Instrumented {
            inner,
            simulate: Cell::new(0),
            logpdf: Cell::new(0),
        }
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            simulate: self.simulate.get(),
            logpdf: self.logpdf.get(),
        }
    }
}

impl<G: Gpm + ?Sized> Gpm for Instrumented<'_, G> {
    fn simulate<R: Rng + ?Sized>(&self, query: &VarSet, given: &Assignment, rng: &mut R) -> Result<Assignment> {
        self.simulate.set(self.simulate.get() + 1);
        self.inner.simulate(query, given, rng)
    }

    fn logpdf(&self, target: &Assignment, given: &Assignment) -> Result<f64> {
        self.logpdf.set(self.logpdf.get() + 1);
        self.inner.logpdf(target, given)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Value;
    use crate::oracle::models::{DiscreteJoint, Product};
    use crate::rng::stream;
    use alloc::vec;

    fn coin(var: usize, p1: f64) -> DiscreteJoint {
        DiscreteJoint::new(vec![(var, 2)], vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn product_of_independent_models_gives_exact_zero() {
        let g = Product::new(coin(0, 0.3), VarSet::from([0]), coin(1, 0.6), VarSet::from([1]));
        for t in [1, 7, 100] {
            let mut rng = stream(t as u64);
            let cmi = gpm_cmi(
                &g,
                &VarSet::from([0]),
                &VarSet::from([1]),
                &Assignment::new(),
                t,
                &mut rng,
            )
            .unwrap();
            assert_eq!(cmi, 0.0);
        }
    }

    #[test]
    fn argument_errors() {
        let g = coin(0, 0.5);
        let mut rng = stream(0);
        let a = VarSet::from([0]);
        assert_eq!(
            gpm_cmi(&g, &a, &a, &Assignment::new(), 10, &mut rng),
            Err(Error::OverlappingVarSets(0))
        );
        assert_eq!(
            gpm_cmi(&g, &a, &VarSet::from([1]), &Assignment::new(), 0, &mut rng),
            Err(Error::AccuracyZero)
        );
        let mut given = Assignment::new();
        given.insert(1, Value::Category(0));
        assert_eq!(
            gpm_cmi(&g, &a, &VarSet::from([1]), &given, 10, &mut rng),
            Err(Error::OverlappingVarSets(1))
        );
        assert_eq!(
            gpm_cmi(&g, &VarSet::new(), &a, &Assignment::new(), 10, &mut rng),
            Err(Error::EmptyVarSet)
        );
    }

    #[test]
    fn instrumented_counts_four_calls_per_sample() {
        let joint = DiscreteJoint::new(vec![(0, 2), (1, 2)], vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let counted = Instrumented::new(&joint);
        let mut rng = stream(1);
        gpm_cmi(
            &counted,
            &VarSet::from([0]),
            &VarSet::from([1]),
            &Assignment::new(),
            25,
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            counted.counts(),
            CallCounts {
                simulate: 25,
                logpdf: 75
            }
        );
    }
}
