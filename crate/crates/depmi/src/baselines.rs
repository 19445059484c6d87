//! Correlation baselines: pairwise R² on pairwise-complete rows and partial
//! correlations from the inverse correlation matrix, each with
//! Bonferroni-corrected significance.

use depmi_core::{Dataset, StatType, VarId};
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Family-wise significance level.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BaselineError {
    #[error("variable {0:?} is not numerical")]
    NotNumerical(String),
    #[error("need at least two numerical variables")]
    TooFewVariables,
    #[error("correlation matrix is singular or has too few complete rows")]
    Singular,
}

/// Number of pairwise tests among `d` variables.
pub fn bonferroni_tests(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// One tested pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStat {
    pub i: VarId,
    pub j: VarId,
    /// R² for the pairwise baseline, the partial correlation otherwise.
    pub statistic: f64,
    /// `None` when the pair is degenerate.
    pub p_value: Option<f64>,
    /// Rows used.
    pub n: usize,
    pub significant: bool,
    /// Fewer than three usable rows or zero variance: never rejected.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineReport {
    pub alpha: f64,
    pub tests: usize,
    pub entries: Vec<PairStat>,
}

impl BaselineReport {
    pub fn get(&self, i: VarId, j: VarId) -> Option<&PairStat> {
        let (i, j) = (i.min(j), i.max(j));
        self.entries.iter().find(|e| e.i == i && e.j == j)
    }

    pub fn threshold(&self) -> f64 {
        self.alpha / self.tests as f64
    }
}

fn check_numerical(data: &Dataset, var: VarId) -> Result<(), BaselineError> {
    match data.schema().stat_type(var) {
        StatType::Numerical => Ok(()),
        _ => Err(BaselineError::NotNumerical(data.schema().name(var).to_string())),
    }
}

fn real(data: &Dataset, row: usize, var: VarId) -> Option<f64> {
    data.cell(row, var).and_then(|v| v.as_real())
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a correlation `r` on `n` rows via the t transform.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

/// R² of `i` and `j` on rows where both are observed. `tests` is the
/// Bonferroni family size.
pub fn pearson_r2(data: &Dataset, i: VarId, j: VarId, tests: usize) -> Result<PairStat, BaselineError> {
    check_numerical(data, i)?;
    check_numerical(data, j)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..data.n_rows())
        .filter_map(|r| Some((real(data, r, i)?, real(data, r, j)?)))
        .unzip();
    let n = xs.len();
    let (i, j) = (i.min(j), i.max(j));
    let r = if n < 3 { None } else { pearson(&xs, &ys) };
    Ok(match r {
        None => PairStat {
            i,
            j,
            statistic: f64::NAN,
            p_value: None,
            n,
            significant: false,
            degenerate: true,
        },
        Some(r) => {
            let p = correlation_p_value(r, n);
            PairStat {
                i,
                j,
                statistic: r * r,
                p_value: Some(p),
                n,
                significant: p < ALPHA / tests as f64,
                degenerate: false,
            }
        }
    })
}

/// R² for every pair of numerical variables.
pub fn pairwise_r2(data: &Dataset) -> Result<BaselineReport, BaselineError> {
    let vars: Vec<VarId> = (0..data.n_vars())
        .filter(|&v| data.schema().stat_type(v) == &StatType::Numerical)
        .collect();
    if vars.len() < 2 {
        return Err(BaselineError::TooFewVariables);
    }
    let tests = bonferroni_tests(vars.len());
    let mut entries = Vec::with_capacity(tests);
    for (a, &i) in vars.iter().enumerate() {
        for &j in &vars[a + 1..] {
            entries.push(pearson_r2(data, i, j, tests)?);
        }
    }
    Ok(BaselineReport {
        alpha: ALPHA,
        tests,
        entries,
    })
}

/// Partial correlations of all variables (which must be numerical) given
/// the rest, from the inverse of the correlation matrix over complete rows.
/// P-values use Fisher's z with `sqrt(n - d - 1)` scaling.
pub fn partial_correlation(data: &Dataset) -> Result<(DMatrix<f64>, BaselineReport), BaselineError> {
    let d = data.n_vars();
    if d < 2 {
        return Err(BaselineError::TooFewVariables);
    }
    for v in 0..d {
        check_numerical(data, v)?;
    }
    let rows: Vec<Vec<f64>> = (0..data.n_rows())
        .filter_map(|r| (0..d).map(|v| real(data, r, v)).collect())
        .collect();
    let n = rows.len();
    if n < d + 2 {
        return Err(BaselineError::Singular);
    }
    let x = DMatrix::from_fn(n, d, |r, c| rows[r][c]);
    let means = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |r, c| x[(r, c)] - means[c]);
    let cov = centered.transpose() * &centered;
    let sd: Vec<f64> = (0..d).map(|i| cov[(i, i)].sqrt()).collect();
    if sd.contains(&0.0) {
        return Err(BaselineError::Singular);
    }
    let corr = DMatrix::from_fn(d, d, |i, j| cov[(i, j)] / (sd[i] * sd[j]));
    let prec = corr.try_inverse().ok_or(BaselineError::Singular)?;
    let partial = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else {
            (-prec[(i, j)] / (prec[(i, i)] * prec[(j, j)]).sqrt()).clamp(-1.0, 1.0)
        }
    });
    let tests = bonferroni_tests(d);
    let scale = (n as f64 - d as f64 - 1.0).sqrt();
    let normal = Normal::standard();
    let mut entries = Vec::with_capacity(tests);
    for i in 0..d {
        for j in i + 1..d {
            let r = partial[(i, j)];
            let p = if r.abs() >= 1.0 {
                0.0
            } else {
                (2.0 * normal.cdf(-(r.atanh() * scale).abs())).clamp(0.0, 1.0)
            };
            entries.push(PairStat {
                i,
                j,
                statistic: r,
                p_value: Some(p),
                n,
                significant: p < ALPHA / tests as f64,
                degenerate: false,
            });
        }
    }
    Ok((
        partial,
        BaselineReport {
            alpha: ALPHA,
            tests,
            entries,
        },
    ))
}
