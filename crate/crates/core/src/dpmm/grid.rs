use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;
use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::component::{ComponentHypers, DirichletHypers, NormalGammaHypers};
use crate::data::{Dataset, StatType, VarId};
use crate::math::{linspace, logspace, sample_log_weights};

/// Points per hyperparameter grid.
pub const GRID_POINTS: usize = 30;

/// Floor applied to the `s` grid so constant columns keep a proper predictive.
const MIN_SCALE: f64 = 1e-6;

/// Fixed griddy-Gibbs support for one variable's hyperparameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ColumnGrid {
    Numerical {
        m: Vec<f64>,
        r: Vec<f64>,
        s: Vec<f64>,
        nu: Vec<f64>,
    },
    Nominal {
        categories: u32,
        beta: Vec<f64>,
    },
}

impl ColumnGrid {
    /// Grids derived from the observed cells of `var`:
    ///
    /// * `m`: evenly spaced over `[min, max]` of the observed values
    /// * `r`: `logspace(1e-2, 1e2)`
    /// * `s`: `logspace(1e-2, 1e2)` times the observed variance, floored at `1e-6`
    /// * `nu`: `logspace(1e-1, 1e2)`
    /// * `beta`: `logspace(1e-2, 1e2)`
    ///
    /// An unobserved numerical column falls back to `m` on `[-1, 1]` and
    /// unit variance.
    pub fn for_column(data: &Dataset, var: VarId) -> ColumnGrid {
        match data.schema().stat_type(var) {
            StatType::Nominal { labels } => ColumnGrid::Nominal {
                categories: labels.len() as u32,
                beta: logspace(1e-2, 1e2, GRID_POINTS),
            },
            StatType::Numerical => {
                let xs: Vec<f64> = data.column(var).filter_map(|(_, v)| v.as_real()).collect();
                let (lo, hi, var_x) = if xs.is_empty() {
                    (-1.0, 1.0, 1.0)
                } else {
                    let n = xs.len() as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var_x = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi, var_x)
                };
                ColumnGrid::Numerical {
                    m: linspace(lo, hi, GRID_POINTS),
                    r: logspace(1e-2, 1e2, GRID_POINTS),
                    s: logspace(1e-2, 1e2, GRID_POINTS)
                        .into_iter()
                        .map(|g| (g * var_x).max(MIN_SCALE))
                        .collect(),
                    nu: logspace(1e-1, 1e2, GRID_POINTS),
                }
            }
        }
    }

    /// Uniform draw over the grid (the hyperprior).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComponentHypers {
        let mut pick = |g: &[f64]| g[rng.random_range(0..g.len())];
        match self {
            ColumnGrid::Numerical { m, r, s, nu } => ComponentHypers::Numerical(NormalGammaHypers {
                m: pick(m),
                r: pick(r),
                s: pick(s),
                nu: pick(nu),
            }),
            ColumnGrid::Nominal { categories, beta } => ComponentHypers::Nominal(DirichletHypers {
                categories: *categories,
                beta: pick(beta),
            }),
        }
    }
}

/// Grids for every variable of a dataset plus the concentration grid.
///
/// The concentration grid is `logspace(1e-2, 1e2)` with prior weights
/// from a Gamma(1, 1) density times the log-spacing Jacobian, i.e.
/// `ln w = ln(alpha) - alpha`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HyperGrids {
    pub alpha: Vec<f64>,
    pub alpha_log_prior: Vec<f64>,
    pub columns: Vec<ColumnGrid>,
}

impl HyperGrids {
    pub fn new(data: &Dataset) -> Self {
        let alpha = logspace(1e-2, 1e2, GRID_POINTS);
        let alpha_log_prior = alpha.iter().map(|&a| a.ln() - a).collect();
        HyperGrids {
            alpha,
            alpha_log_prior,
            columns: (0..data.n_vars()).map(|v| ColumnGrid::for_column(data, v)).collect(),
        }
    }

    pub fn column(&self, var: VarId) -> &ColumnGrid {
        &self.columns[var]
    }

    /// Draws a concentration from the grid prior.
    pub fn sample_alpha<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.alpha[sample_log_weights(rng, &self.alpha_log_prior)]
    }

    /// Griddy-Gibbs draw of a concentration given the block sizes of the
    /// partition it governs.
    pub fn resample_alpha<R: Rng + ?Sized>(&self, sizes: &[usize], rng: &mut R) -> f64 {
        let lw: Vec<f64> = self
            .alpha
            .iter()
            .zip(&self.alpha_log_prior)
            .map(|(&a, &p)| p + crate::math::ln_crp(a, sizes.iter().copied()))
            .collect();
        self.alpha[sample_log_weights(rng, &lw)]
    }
}
