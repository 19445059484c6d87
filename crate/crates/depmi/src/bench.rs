//! Reproducible experiments with markdown and CSV reports.
//!
//! * `fig2`: marginal and context-specific (in)dependence recovery on the
//!   v-structure and common-cause generators.
//! * `marks`: context-specific CMI on hub-structured scores next to the
//!   partial-correlation baseline.
//! * `runtime`: CMI query cost as the number of variables grows with block
//!   sizes held fixed.

use std::fmt::Write as _;
use std::time::Instant;

use depmi_core::cmi::{prob_cmi_in, CmiQuery, Threshold};
use depmi_core::crosscat::{crosscat_cmi_instrumented, FitConfig};
use depmi_core::dpmm::{ComponentHypers, DirichletHypers};
use depmi_core::oracle::generators::{common_cause_net, gen_common_cause, gen_hub_context, gen_vstruct, vstruct_net};
use depmi_core::oracle::marks::context_specific_demo;
use depmi_core::rng::{child_seed, stream};
use depmi_core::{Assignment, Condition, CrossCatState, Dataset, DpmmState, Schema, Value, VarSet, Variable};
use rand::Rng;

use crate::baselines::partial_correlation;
use crate::parallel;

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub seeds: Vec<u64>,
    pub members: usize,
    pub sweeps: usize,
    /// Inner Monte Carlo samples per CMI estimate.
    pub accuracy: usize,
    pub jobs: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            seeds: (0..5).collect(),
            members: 16,
            sweeps: 200,
            accuracy: 1000,
            jobs: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub name: &'static str,
    pub markdown: String,
    pub csv: String,
}

pub const EXPERIMENTS: [&str; 3] = ["fig2", "marks", "runtime"];

pub fn run(name: &str, opts: &BenchOptions) -> anyhow::Result<Report> {
    match name {
        "fig2" => Ok(fig2(opts)?.1),
        "marks" => Ok(marks(opts)?.1),
        "runtime" => Ok(runtime(&[10, 20, 50, 100, 200], opts.accuracy)?.1),
        other => anyhow::bail!("unknown experiment {other:?}; expected one of {EXPERIMENTS:?}"),
    }
}

/// One check of the dependence-recovery experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryRow {
    pub generator: &'static str,
    pub seed: u64,
    pub query: &'static str,
    pub predicate: Threshold,
    /// Fraction of members satisfying the predicate.
    pub fraction: f64,
    pub pass: bool,
}

/// Required fraction of members per check.
pub const RECOVERY_FRACTION: f64 = 0.9;
pub const NEAR_ZERO: f64 = 0.05;

fn bit(v: u32) -> Assignment {
    [(0usize, Value::Category(v))].into_iter().collect()
}

/// One query of the recovery experiment. Query `k` of a seed is evaluated
/// with posterior seed `child_seed(seed, 1 + k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryQuery {
    pub label: &'static str,
    pub query: CmiQuery,
    pub predicate: Threshold,
}

/// The two checks for `generator`. Thresholds for "dependent" checks are
/// half the exact CMI of the generating network.
pub fn recovery_queries(generator: &str, accuracy: usize) -> anyhow::Result<Vec<RecoveryQuery>> {
    let s = VarSet::singleton;
    let specs: Vec<(&'static str, VarSet, VarSet, Assignment, Threshold)> = match generator {
        "v-structure" => {
            let given: Assignment = [(2usize, Value::Category(0))].into_iter().collect();
            let target = vstruct_net(0.1).exact_cmi(&s(0), &s(1), &given)?;
            vec![
                ("I(x1:x2)", s(0), s(1), Assignment::new(), Threshold::less(NEAR_ZERO)),
                ("I(x1:x2|x3=0)", s(0), s(1), given, Threshold::greater(target / 2.0)),
            ]
        }
        "common-cause" => {
            let target = common_cause_net(0.1).exact_cmi(&s(1), &s(2), &Assignment::new())?;
            vec![
                (
                    "I(x2:x3)",
                    s(1),
                    s(2),
                    Assignment::new(),
                    Threshold::greater(target / 2.0),
                ),
                ("I(x2:x3|x1=0)", s(1), s(2), bit(0), Threshold::less(NEAR_ZERO)),
            ]
        }
        other => anyhow::bail!("unknown generator {other}"),
    };
    Ok(specs
        .into_iter()
        .map(|(label, a, b, given, predicate)| RecoveryQuery {
            label,
            query: CmiQuery::new(a, b, Condition::fixed(given)).with_accuracy(accuracy),
            predicate,
        })
        .collect())
}

/// Dataset, fit and checks for one generator and seed.
pub fn recovery_checks(
    generator: &'static str,
    seed: u64,
    opts: &BenchOptions,
) -> anyhow::Result<(Dataset, depmi_core::Ensemble, Vec<RecoveryRow>)> {
    let mut data_rng = stream(child_seed(seed, 0));
    let data = match generator {
        "v-structure" => gen_vstruct(500, 0.1, &mut data_rng),
        "common-cause" => gen_common_cause(500, 0.1, &mut data_rng),
        other => anyhow::bail!("unknown generator {other}"),
    };
    let config = FitConfig {
        members: opts.members,
        sweeps: opts.sweeps,
        seed,
        ..FitConfig::default()
    };
    let ens = parallel::fit_ensemble(&data, &config, opts.jobs)?;
    let mut rows = Vec::new();
    for (k, rq) in recovery_queries(generator, opts.accuracy)?.into_iter().enumerate() {
        let post = parallel::cmi_posterior(&ens, &rq.query, child_seed(seed, 1 + k as u64))?;
        let fraction = prob_cmi_in(&post, rq.predicate)?;
        rows.push(RecoveryRow {
            generator,
            seed,
            query: rq.label,
            predicate: rq.predicate,
            fraction,
            pass: fraction >= RECOVERY_FRACTION,
        });
    }
    Ok((data, ens, rows))
}

fn pred_text(t: Threshold) -> String {
    format!("{} {:.4}", t.comparator.symbol(), t.value)
}

pub fn fig2(opts: &BenchOptions) -> anyhow::Result<(Vec<RecoveryRow>, Report)> {
    let mut rows = Vec::new();
    for generator in ["v-structure", "common-cause"] {
        for &seed in &opts.seeds {
            rows.extend(recovery_checks(generator, seed, opts)?.2);
        }
    }
    let mut md = format!(
        "# Dependence recovery\n\nn = 500, noise = 0.1, H = {}, sweeps = {}, T = {}.\n\n\
         | generator | seed | query | predicate | fraction of members | pass |\n|---|---|---|---|---|---|\n",
        opts.members, opts.sweeps, opts.accuracy
    );
    let mut csv = String::from("generator,seed,query,predicate,fraction,pass\n");
    for r in &rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {:.3} | {} |",
            r.generator,
            r.seed,
            r.query,
            pred_text(r.predicate),
            r.fraction,
            r.pass
        );
        let _ = writeln!(
            csv,
            "{},{},\"{}\",\"{}\",{},{}",
            r.generator,
            r.seed,
            r.query,
            pred_text(r.predicate),
            r.fraction,
            r.pass
        );
    }
    Ok((
        rows,
        Report {
            name: "fig2",
            markdown: md,
            csv,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarksRow {
    pub seed: u64,
    pub partial_correlation: f64,
    pub partial_p_value: f64,
    pub partial_significant: bool,
    pub medians: [f64; 3],
    pub ks_p_value: f64,
    pub marginal_weaker: bool,
}

/// Hub contexts used for the fixed-value queries.
pub const HUB_CONTEXTS: [f64; 2] = [-1.0, 1.0];

pub fn marks_check(seed: u64, opts: &BenchOptions) -> anyhow::Result<MarksRow> {
    let data = gen_hub_context(400, &mut stream(child_seed(seed, 0)));
    let (_, report) = partial_correlation(&data)?;
    let schema = data.schema();
    let pair = report
        .get(schema.resolve("vectors")?, schema.resolve("analysis")?)
        .expect("pair present")
        .clone();
    let config = FitConfig {
        members: opts.members,
        sweeps: opts.sweeps,
        seed,
        ..FitConfig::default()
    };
    let ens = parallel::fit_ensemble(&data, &config, opts.jobs)?;
    let demo = context_specific_demo(&ens, HUB_CONTEXTS, opts.accuracy, 30, child_seed(seed, 1))?;
    Ok(MarksRow {
        seed,
        partial_correlation: pair.statistic,
        partial_p_value: pair.p_value.unwrap_or(1.0),
        partial_significant: pair.significant,
        medians: demo.medians,
        ks_p_value: demo.ks_p_value,
        marginal_weaker: demo.marginal_weaker(),
    })
}

pub fn marks(opts: &BenchOptions) -> anyhow::Result<(Vec<MarksRow>, Report)> {
    let rows = opts
        .seeds
        .iter()
        .map(|&s| marks_check(s, opts))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut md = format!(
        "# Context-specific dependence on hub-structured scores\n\n\
         Pair (vectors, analysis); hub algebra fixed at {} and {} or marginalized. H = {}, sweeps = {}.\n\n\
         | seed | partial r | p | significant | median CMI (algebra={}) | median CMI (algebra={}) | median CMI (marginalized) | KS p | marginalized weaker |\n\
         |---|---|---|---|---|---|---|---|---|\n",
        HUB_CONTEXTS[0], HUB_CONTEXTS[1], opts.members, opts.sweeps, HUB_CONTEXTS[0], HUB_CONTEXTS[1]
    );
    let mut csv = String::from(
        "seed,partial_r,partial_p,partial_significant,median_low,median_high,median_marginalized,ks_p,marginalized_weaker\n",
    );
    for r in &rows {
        let _ = writeln!(
            md,
            "| {} | {:.3} | {:.3} | {} | {:.3} | {:.3} | {:.3} | {:.2e} | {} |",
            r.seed,
            r.partial_correlation,
            r.partial_p_value,
            r.partial_significant,
            r.medians[0],
            r.medians[1],
            r.medians[2],
            r.ks_p_value,
            r.marginal_weaker
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.partial_correlation,
            r.partial_p_value,
            r.partial_significant,
            r.medians[0],
            r.medians[1],
            r.medians[2],
            r.ks_p_value,
            r.marginal_weaker
        );
    }
    Ok((
        rows,
        Report {
            name: "marks",
            markdown: md,
            csv,
        },
    ))
}

/// A random all-nominal state over `d` binary variables in blocks of
/// `block_size`, each block with two clusters.
pub fn blocked_state(d: usize, block_size: usize, rows: usize, seed: u64) -> anyhow::Result<(Dataset, CrossCatState)> {
    let mut rng = stream(seed);
    let schema = Schema::new((0..d).map(|v| Variable::nominal(format!("v{v}"), 2)).collect())?;
    let data_rows = (0..rows)
        .map(|_| (0..d).map(|_| Some(Value::Category(rng.random_range(0..2)))).collect())
        .collect();
    let data = Dataset::new(schema, data_rows)?;
    let partition: Vec<usize> = (0..d).map(|v| v / block_size).collect();
    let n_blocks = partition.last().map_or(0, |k| k + 1);
    let rows_split: Vec<usize> = (0..rows).map(|r| r % 2).collect();
    let blocks = (0..n_blocks)
        .map(|k| {
            let vars: Vec<usize> = (0..d).filter(|&v| partition[v] == k).collect();
            let hypers = vars
                .iter()
                .map(|_| {
                    ComponentHypers::Nominal(DirichletHypers {
                        categories: 2,
                        beta: 1.0,
                    })
                })
                .collect();
            DpmmState::new(&data, vars, hypers, 1.0, &rows_split)
        })
        .collect::<depmi_core::Result<Vec<_>>>()?;
    Ok((data, CrossCatState::new(1.0, &partition, blocks)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeRow {
    pub d: usize,
    pub simulate_calls: u64,
    pub logpdf_calls: u64,
    pub seconds: f64,
}

pub fn runtime(ds: &[usize], accuracy: usize) -> anyhow::Result<(Vec<RuntimeRow>, Report)> {
    let mut rows = Vec::new();
    for &d in ds {
        let (_, state) = blocked_state(d, 5, 100, d as u64)?;
        let a = VarSet::from([0, 1]);
        let b = VarSet::from([2]);
        let given: Assignment = [(3usize, Value::Category(1)), (d - 1, Value::Category(0))]
            .into_iter()
            .collect();
        let start = Instant::now();
        let (_, calls) = crosscat_cmi_instrumented(&state, &a, &b, &given, accuracy, &mut stream(7))?;
        let seconds = start.elapsed().as_secs_f64();
        rows.push(RuntimeRow {
            d,
            simulate_calls: calls.iter().map(|c| c.1.simulate).sum(),
            logpdf_calls: calls.iter().map(|c| c.1.logpdf).sum(),
            seconds,
        });
    }
    let mut md = format!(
        "# CMI query cost versus number of variables\n\nBlocks of 5 binary variables, T = {accuracy}; query I(v0,v1 : v2 | v3, v(D-1)).\n\n\
         | D | simulate calls | logpdf calls | seconds |\n|---|---|---|---|\n"
    );
    let mut csv = String::from("d,simulate_calls,logpdf_calls,seconds\n");
    for r in &rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {:.4} |",
            r.d, r.simulate_calls, r.logpdf_calls, r.seconds
        );
        let _ = writeln!(csv, "{},{},{},{}", r.d, r.simulate_calls, r.logpdf_calls, r.seconds);
    }
    Ok((
        rows,
        Report {
            name: "runtime",
            markdown: md,
            csv,
        },
    ))
}
