//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use depmi::baselines::{bonferroni_tests, pearson_r2};
use depmi::bench::{self, recovery_checks, recovery_queries, BenchOptions, RECOVERY_FRACTION};
use depmi::parallel::{cmi_posterior, fit_ensemble};
use depmi::workspace::Workspace;
use depmi_core::cmi::{cmi_posterior_seeded, prob_cmi_in};
use depmi_core::crosscat::{crosscat_cmi, crosscat_cmi_instrumented, dependence_probability_bound, Provenance};
use depmi_core::dpmm::{ComponentHypers, DirichletHypers, HyperGrids, NormalGammaHypers};
use depmi_core::gpm::gpm_cmi;
use depmi_core::oracle::enumerate::{cardinalities, enumerated_cmi, random_nominal_state};
use depmi_core::oracle::geweke::GewekeModel;
use depmi_core::oracle::models::{BivariateGaussian, DiscreteJoint};
use depmi_core::query::{parse, plan, plan_and_execute_with, ExecOptions, Plan, QueryResult};
use depmi_core::rng::{child_seed, child_stream, stream};
use depmi_core::stats::{adjusted_rand_index, ks_two_sample};
use depmi_core::{
    Assignment, CrossCatState, Dataset, DpmmState, Ensemble, FitConfig, Gpm, Schema, StatType, Value, VarSet, Variable,
};
use rand::Rng;
use rand_distr::StandardNormal;

type Outcome = anyhow::Result<(bool, String)>;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const GENERATORS: [&str; 2] = ["v-structure", "common-cause"];

struct Fig2Run {
    generator: &'static str,
    seed: u64,
    data: Dataset,
    ensemble: Ensemble,
    passed: bool,
    elapsed: Duration,
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn estimator_consistency() -> Outcome {
    let t = 100_000;
    let gauss = BivariateGaussian::standard([0, 1], 0.5);
    let gauss_target = -0.5 * 0.75f64.ln();
    let start = Instant::now();
    let g = gpm_cmi(
        &gauss,
        &VarSet::from([0]),
        &VarSet::from([1]),
        &Assignment::new(),
        t,
        &mut stream(1),
    )?;
    let g_time = start.elapsed();

    let joint = DiscreteJoint::new(vec![(0, 2), (1, 2)], vec![0.4, 0.1, 0.1, 0.4])?;
    // direct sum over the four cells with both marginals uniform
    let table_target = 2.0 * 0.4 * (0.4f64 / 0.25).ln() + 2.0 * 0.1 * (0.1f64 / 0.25).ln();
    let exact = joint.exact_cmi(&VarSet::from([0]), &VarSet::from([1]), &Assignment::new())?;
    let start = Instant::now();
    let d = gpm_cmi(
        &joint,
        &VarSet::from([0]),
        &VarSet::from([1]),
        &Assignment::new(),
        t,
        &mut stream(2),
    )?;
    let d_time = start.elapsed();

    let limit = Duration::from_secs(30);
    let pass = (g - gauss_target).abs() <= 0.01
        && (exact - table_target).abs() < 1e-12
        && (d - table_target).abs() <= 0.01
        && g_time < limit
        && d_time < limit;
    Ok((
        pass,
        format!(
            "gaussian {g:.5} vs {gauss_target:.5} in {}; table {d:.5} vs {table_target:.5} in {}",
            secs(g_time),
            secs(d_time)
        ),
    ))
}

fn block_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pruned = 0;
    let mut pruned_bad = 0;
    let mut states = 0;
    let mut seed = 0u64;
    while states < 50 {
        let mut rng = stream(child_seed(2, seed));
        seed += 1;
        let (data, state) = random_nominal_state(&mut rng, 6, 3, 3, 12);
        let d = state.n_vars();
        if d < 2 {
            continue;
        }
        states += 1;
        let cards = cardinalities(&data);
        let mut vars: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            vars.swap(i, rng.random_range(0..=i));
        }
        let split = rng.random_range(1..d);
        let a: VarSet = vars[..split].iter().copied().filter(|_| rng.random_bool(0.8)).collect();
        let b: VarSet = vars[split..].iter().copied().filter(|_| rng.random_bool(0.8)).collect();
        let a = if a.is_empty() { VarSet::from([vars[0]]) } else { a };
        let b = if b.is_empty() { VarSet::from([vars[d - 1]]) } else { b };
        let mut given = Assignment::new();
        for (v, &k) in cards.iter().enumerate() {
            if !a.contains(v) && !b.contains(v) && rng.random_bool(0.5) {
                given.insert(v, Value::Category(rng.random_range(0..k as u32)));
            }
        }
        let whole = enumerated_cmi(&state, &cards, &a, &b, &given)?;
        let mut parts = 0.0;
        let mut active = false;
        for (_, blk) in state.blocks() {
            let vs = blk.var_set();
            let (ab, bb) = (a.intersection(&vs), b.intersection(&vs));
            if !ab.is_empty() && !bb.is_empty() {
                active = true;
                let local: Assignment = given
                    .iter()
                    .filter(|(v, _)| vs.contains(**v))
                    .map(|(&v, &x)| (v, x))
                    .collect();
                parts += enumerated_cmi(blk, &cards, &ab, &bb, &local)?;
            }
        }
        worst = worst.max((whole - parts).abs());
        if !active {
            pruned += 1;
            let (cmi, calls) = crosscat_cmi_instrumented(&state, &a, &b, &given, 100, &mut rng)?;
            let total: u64 = calls.iter().map(|(_, c)| c.total()).sum();
            if cmi != 0.0 || total != 0 {
                pruned_bad += 1;
            }
        }
    }
    Ok((
        worst < 1e-9 && pruned_bad == 0 && pruned > 0,
        format!(
            "max |whole - sum of blocks| = {worst:.2e}; {pruned} pruned queries, {pruned_bad} with calls or non-zero"
        ),
    ))
}

fn fig2_runs(opts: &BenchOptions) -> anyhow::Result<Vec<Fig2Run>> {
    let mut runs = Vec::new();
    for generator in GENERATORS {
        for seed in SEEDS {
            let start = Instant::now();
            let (data, ensemble, rows) = recovery_checks(generator, seed, opts)?;
            let elapsed = start.elapsed();
            for r in &rows {
                println!(
                    "    {generator} seed {seed}: {} {:?} fraction {:.3}",
                    r.query, r.predicate, r.fraction
                );
            }
            runs.push(Fig2Run {
                generator,
                seed,
                data,
                ensemble,
                passed: rows.iter().all(|r| r.fraction >= RECOVERY_FRACTION),
                elapsed,
            });
        }
    }
    Ok(runs)
}

fn recovery(runs: &[Fig2Run]) -> Outcome {
    let limit = Duration::from_secs(300);
    let mut details = Vec::new();
    let mut pass = true;
    for generator in GENERATORS {
        let mine: Vec<&Fig2Run> = runs.iter().filter(|r| r.generator == generator).collect();
        let ok = mine.iter().filter(|r| r.passed && r.elapsed < limit).count();
        let slowest = mine.iter().map(|r| r.elapsed).max().unwrap_or_default();
        pass &= ok >= 4;
        details.push(format!(
            "{generator} {ok}/{} seeds (slowest {})",
            mine.len(),
            secs(slowest)
        ));
    }
    Ok((pass, details.join("; ")))
}

fn dominance(runs: &[Fig2Run]) -> Outcome {
    let thresholds = [1e-12, bench::NEAR_ZERO];
    let mut violations = 0;
    let mut checks = 0;
    for run in runs {
        let cards = cardinalities(&run.data);
        let d = run.data.n_vars();
        for i in 0..d {
            for j in i + 1..d {
                let bound = dependence_probability_bound(&run.ensemble, i, j)?;
                let k = (0..d).find(|&v| v != i && v != j).expect("three variables");
                let conditions: Vec<Assignment> = std::iter::once(Assignment::new())
                    .chain((0..cards[k] as u32).map(|c| [(k, Value::Category(c))].into_iter().collect()))
                    .collect();
                for given in &conditions {
                    let exact: Vec<f64> = run
                        .ensemble
                        .members()
                        .iter()
                        .map(|m| enumerated_cmi(m, &cards, &VarSet::from([i]), &VarSet::from([j]), given))
                        .collect::<Result<_, _>>()?;
                    for &t in &thresholds {
                        let frac = exact.iter().filter(|&&x| x > t).count() as f64 / exact.len() as f64;
                        checks += 1;
                        if frac > bound {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations in {checks} pair/condition/threshold checks"),
    ))
}

fn blobs(seed: u64) -> (Dataset, Vec<usize>) {
    let mut rng = stream(seed);
    let schema = Schema::new(vec![Variable::numerical("x")]).unwrap();
    let truth: Vec<usize> = (0..100).map(|i| i / 50).collect();
    let rows = truth
        .iter()
        .map(|&k| {
            let z: f64 = rng.sample(StandardNormal);
            vec![Some(Value::Real(if k == 0 { -100.0 } else { 100.0 } + z))]
        })
        .collect();
    (Dataset::new(schema, rows).unwrap(), truth)
}

fn inference_sanity() -> Outcome {
    let model = GewekeModel {
        rows: 6,
        alpha: 1.0,
        hypers: vec![
            ComponentHypers::Nominal(DirichletHypers {
                categories: 3,
                beta: 0.5,
            }),
            ComponentHypers::Numerical(NormalGammaHypers {
                m: 0.0,
                r: 1.0,
                s: 1.0,
                nu: 3.0,
            }),
        ],
    };
    let (mut fk, mut fm, mut sk, mut sm) = (vec![], vec![], vec![], vec![]);
    for seed in SEEDS {
        let mut rng = stream(child_seed(5, seed));
        for (k, m) in model.forward(600, &mut rng) {
            fk.push(k as f64);
            fm.push(m as f64);
        }
        for (k, m) in model.successive(600, 3, &mut rng) {
            sk.push(k as f64);
            sm.push(m as f64);
        }
    }
    let (_, pk) = ks_two_sample(&fk, &sk);
    let (_, pm) = ks_two_sample(&fm, &sm);

    let hits = (0..20u64)
        .filter(|&seed| {
            let (data, truth) = blobs(seed);
            let grids = HyperGrids::new(&data);
            let mut rng = stream(seed + 1000);
            let mut s = DpmmState::singletons(&data, vec![0], &grids, &mut rng).unwrap();
            for _ in 0..50 {
                s.gibbs_sweep_rows(&data, &mut rng);
                s.infer_hypers(&grids, &mut rng);
            }
            adjusted_rand_index(&s.partition(), &truth) == 1.0
        })
        .count();
    Ok((
        pk > 0.01 && pm > 0.01 && hits >= 19,
        format!("Geweke KS p: K {pk:.3}, max size {pm:.3}; two-blob ARI = 1 on {hits}/20 seeds"),
    ))
}

fn scaling() -> Outcome {
    let ds = [10, 20, 50, 100, 200];
    let (rows, _) = bench::runtime(&ds, 200)?;
    let first = (rows[0].simulate_calls, rows[0].logpdf_calls);
    let equal = rows.iter().all(|r| (r.simulate_calls, r.logpdf_calls) == first);
    let text: Vec<String> = rows
        .iter()
        .map(|r| format!("D={}: {}/{}", r.d, r.simulate_calls, r.logpdf_calls))
        .collect();
    Ok((
        equal && first.0 > 0,
        format!("simulate/logpdf calls {}", text.join(", ")),
    ))
}

const ROW1: &str = "SIMULATE MUTUAL INFORMATION OF\n  (x1, x2) WITH (x3) GIVEN (x4 = 14)\nFROM MODELS OF metamodel";
const ROW2: &str = "ESTIMATE PROBABILITY OF (\n  MUTUAL INFORMATION OF (x1, x2)\n  WITH (x3) GIVEN (x4 = 14, x5)\n  < 0.1 )\nBY MODELS OF metamodel";
const ROW3: &str = "SIMULATE (\n  SELECT * FROM VARIABLES OF metamodel\n  WHERE (PROBABILITY OF\n    (MUTUAL INFORMATION WITH x2) < 0.1))\n    > 0.9)\nFROM metamodel\nLIMIT 100;";

/// Two members over five nominal variables, `x4` with labels 13 and 14.
fn hand_ensemble() -> anyhow::Result<Ensemble> {
    let cards = [2usize, 2, 3, 2, 2];
    let mut vars: Vec<Variable> = cards
        .iter()
        .enumerate()
        .map(|(v, &k)| Variable::nominal(format!("x{}", v + 1), k))
        .collect();
    vars[3].stat_type = StatType::Nominal {
        labels: vec!["13".into(), "14".into()],
    };
    let schema = Schema::new(vars)?;
    let mut rng = stream(77);
    let rows = (0..12)
        .map(|_| {
            cards
                .iter()
                .map(|&k| Some(Value::Category(rng.random_range(0..k as u32))))
                .collect()
        })
        .collect();
    let data = Dataset::new(schema.clone(), rows)?;
    let hypers = |vs: &[usize]| -> Vec<ComponentHypers> {
        vs.iter()
            .map(|&v| {
                ComponentHypers::Nominal(DirichletHypers {
                    categories: cards[v] as u32,
                    beta: 0.5,
                })
            })
            .collect()
    };
    let all = [0, 1, 2, 3, 4];
    let split: Vec<usize> = (0..12).map(|r| r % 2).collect();
    let one_block = CrossCatState::new(
        1.0,
        &[0; 5],
        vec![DpmmState::new(&data, all.to_vec(), hypers(&all), 1.2, &split)?],
    )?;
    let three: Vec<usize> = (0..12).map(|r| r % 3).collect();
    let left = [0, 1, 2, 4];
    let two_blocks = CrossCatState::new(
        0.8,
        &[0, 0, 0, 1, 0],
        vec![
            DpmmState::new(&data, left.to_vec(), hypers(&left), 0.7, &three)?,
            DpmmState::new(&data, vec![3], hypers(&[3]), 1.0, &[0; 12])?,
        ],
    )?;
    let provenance = Provenance {
        seed: 0,
        sweeps: 0,
        structure: Default::default(),
        row_init: Default::default(),
        dataset_fingerprint: data.fingerprint(),
    };
    Ok(Ensemble::new(schema, vec![one_block, two_blocks], provenance)?)
}

/// Row 2 executed by hand: per member, average CMI over simulated values of
/// x5 given x4 = 14, then the fraction of members below 0.1.
fn row2_by_hand(ens: &Ensemble, seed: u64, t: usize, t_outer: usize) -> anyhow::Result<(Vec<f64>, f64)> {
    let fixed: Assignment = [(3usize, Value::Category(1))].into_iter().collect();
    let (a, b, x5) = (VarSet::from([0, 1]), VarSet::from([2]), VarSet::from([4]));
    let mut per_member = Vec::new();
    for (h, member) in ens.members().iter().enumerate() {
        let mut rng = child_stream(seed, h as u64);
        let mut total = 0.0;
        for _ in 0..t_outer {
            let mut given = fixed.clone();
            given.extend(member.simulate(&x5, &fixed, &mut rng)?);
            total += crosscat_cmi(member, &a, &b, &given, t, &mut rng)?;
        }
        per_member.push(total / t_outer as f64);
    }
    let below = per_member.iter().filter(|&&x| x < 0.1).count() as f64 / per_member.len() as f64;
    Ok((per_member, below))
}

fn fuzz_input(rng: &mut impl Rng) -> String {
    const TOKENS: &[&str] = &[
        "SIMULATE",
        "ESTIMATE",
        "MUTUAL",
        "INFORMATION",
        "OF",
        "WITH",
        "GIVEN",
        "FROM",
        "MODELS",
        "BY",
        "PROBABILITY",
        "DEPENDENCE",
        "SELECT",
        "*",
        "VARIABLES",
        "WHERE",
        "LIMIT",
        "USING",
        "SAMPLES",
        "(",
        ")",
        ",",
        "=",
        "<",
        ">",
        ";",
        "x1",
        "x2",
        "\"q\"\"x\"",
        "'t'",
        "'",
        "\"",
        "--",
        "\n",
        "0.1",
        "-3",
        "14",
        "1e999",
        "1e",
        ".5",
        "1.",
        "é",
    ];
    match rng.random_range(0..10) {
        0..=5 => {
            let n = rng.random_range(0..25);
            (0..n)
                .map(|_| TOKENS[rng.random_range(0..TOKENS.len())])
                .collect::<Vec<_>>()
                .join(" ")
        }
        6..=7 => {
            let n = rng.random_range(0..60);
            (0..n).map(|_| char::from(rng.random_range(0u8..128))).collect()
        }
        _ => {
            let mut s: Vec<char> = [ROW1, ROW2, ROW3][rng.random_range(0..3)].chars().collect();
            for _ in 0..rng.random_range(1..4) {
                let i = rng.random_range(0..s.len());
                match rng.random_range(0..3) {
                    0 => {
                        s.remove(i);
                    }
                    1 => s.insert(i, char::from(rng.random_range(32u8..127))),
                    _ => s.truncate(i),
                }
                if s.is_empty() {
                    break;
                }
            }
            s.into_iter().collect()
        }
    }
}

fn query_language() -> Outcome {
    let ens = hand_ensemble()?;
    let opts = ExecOptions {
        accuracy: 200,
        t_outer: 20,
    };
    let mut notes = Vec::new();
    let mut pass = true;
    for (k, text) in [ROW1, ROW2, ROW3].iter().enumerate() {
        let stmt = parse(text)?;
        let out = plan_and_execute_with(&stmt, &ens, &opts, 11, &cmi_posterior)?;
        let shape_ok = match (k, &out) {
            (0, QueryResult::PosteriorSamples(p)) => p.len() == 2,
            (1, QueryResult::Scalar(x)) => (0.0..=1.0).contains(x),
            (2, QueryResult::Rows { rows, .. }) => rows.len() == 100,
            _ => false,
        };
        pass &= shape_ok;
    }
    notes.push("three queries run".to_string());

    let seed = 12345;
    let stmt = parse(ROW2)?;
    let engine = plan_and_execute_with(&stmt, &ens, &opts, seed, &cmi_posterior_seeded)?;
    let Plan::Probability(q, _) = plan(&stmt, ens.schema(), &opts)? else {
        anyhow::bail!("row 2 did not plan as a probability query");
    };
    let engine_members = cmi_posterior_seeded(&ens, &q, seed)?.values();
    let (hand_members, hand_fraction) = row2_by_hand(&ens, seed, opts.accuracy, opts.t_outer)?;
    let bit_exact = engine == QueryResult::Scalar(hand_fraction)
        && engine_members
            .iter()
            .map(|x| x.to_bits())
            .eq(hand_members.iter().map(|x| x.to_bits()));
    pass &= bit_exact;
    notes.push(format!("row-2 trace bit-exact: {bit_exact} (members {hand_members:?})"));

    let mut rng = stream(7);
    let mut panics = 0;
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    for _ in 0..1_000_000 {
        let input = fuzz_input(&mut rng);
        if panic::catch_unwind(|| parse(&input)).is_err() {
            panics += 1;
        }
    }
    panic::set_hook(hook);
    pass &= panics == 0;
    notes.push(format!("fuzz: {panics} panics in 10^6 inputs"));
    Ok((pass, notes.join("; ")))
}

fn baselines(opts: &BenchOptions) -> Outcome {
    let count = bonferroni_tests(320);
    let schema = Schema::new(vec![Variable::numerical("a"), Variable::numerical("b")])?;
    let r = |x: Option<f64>| x.map(Value::Real);
    let rows = vec![
        vec![r(Some(1.0)), r(Some(2.0))],
        vec![r(Some(2.0)), r(Some(4.1))],
        vec![r(None), r(Some(3.0))],
        vec![r(Some(5.0)), r(None)],
    ];
    let sparse = Dataset::new(schema, rows)?;
    let pair = pearson_r2(&sparse, 0, 1, 1)?;
    let degenerate_ok = pair.degenerate && !pair.significant && pair.n == 2;

    let mut marks_ok = 0;
    let mut lines = Vec::new();
    for seed in SEEDS {
        let row = bench::marks_check(seed, opts)?;
        let ok = !row.partial_significant && row.ks_p_value < 0.01;
        marks_ok += usize::from(ok);
        lines.push(format!(
            "seed {seed}: partial p {:.3}, KS p {:.1e}",
            row.partial_p_value, row.ks_p_value
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    Ok((
        count == 51040 && degenerate_ok && marks_ok >= 4,
        format!("tests(320) = {count}; degenerate pair rule {degenerate_ok}; hub pattern on {marks_ok}/5 seeds"),
    ))
}

fn persistence(runs: &[Fig2Run], opts: &BenchOptions) -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut manifests_equal = true;
    let mut queries_equal = true;
    let mut queries = 0;
    for run in runs {
        let config = FitConfig {
            members: opts.members,
            sweeps: opts.sweeps,
            seed: run.seed,
            ..FitConfig::default()
        };
        let tag = format!("{}-{}", run.generator, run.seed);
        let ws = Workspace::create(dir.path().join(&tag), &run.data)?;
        ws.save_ensemble(&run.data, &run.ensemble)?;
        if run.seed == 0 {
            let refit = fit_ensemble(&run.data, &config, opts.jobs)?;
            let again = Workspace::create(dir.path().join(format!("{tag}-refit")), &run.data)?;
            again.save_ensemble(&run.data, &refit)?;
            manifests_equal &= std::fs::read(ws.manifest_path())? == std::fs::read(again.manifest_path())?;
        }
        let loaded = ws.load_ensemble()?;
        for (k, rq) in recovery_queries(run.generator, opts.accuracy)?.iter().enumerate() {
            let s = child_seed(run.seed, 1 + k as u64);
            let before = cmi_posterior(&run.ensemble, &rq.query, s)?;
            let after = cmi_posterior(&loaded, &rq.query, s)?;
            queries += 1;
            queries_equal &=
                before == after && prob_cmi_in(&before, rq.predicate)? == prob_cmi_in(&after, rq.predicate)?;
        }
    }
    Ok((
        manifests_equal && queries_equal,
        format!("refit manifests identical: {manifests_equal}; {queries} reloaded queries identical: {queries_equal}"),
    ))
}

fn main() {
    let opts = BenchOptions::default();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Ok((false, "panicked".into())));
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e:#}")));
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} ({name}): {} - {detail} [{}]",
            if pass { "PASS" } else { "FAIL" },
            secs(start.elapsed())
        );
    };
    report(1, "estimator consistency", &mut estimator_consistency);
    report(2, "block exactness", &mut block_exactness);
    let runs = match fig2_runs(&opts) {
        Ok(r) => r,
        Err(e) => {
            println!("recovery fits failed: {e:#}");
            Vec::new()
        }
    };
    report(3, "dependence recovery", &mut || recovery(&runs));
    report(4, "dependence bound dominance", &mut || dominance(&runs));
    report(5, "inference sanity", &mut inference_sanity);
    report(6, "call counts independent of D", &mut scaling);
    report(7, "query language", &mut query_language);
    report(8, "baselines", &mut || baselines(&opts));
    report(9, "determinism and persistence", &mut || persistence(&runs, &opts));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
