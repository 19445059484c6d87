//! Ingest, fit, persist and query through the library API.

use depmi::format::{dependence_matrix_csv, format_result, OutputMode};
use depmi::ingest::{ingest_reader, IngestOptions};
use depmi::parallel::{cmi_posterior, fit_ensemble};
use depmi::workspace::Workspace;
use depmi_core::crosscat::pairwise_dependence_matrix;
use depmi_core::oracle::generators::gen_hub_free;
use depmi_core::oracle::marks::context_specific_demo;
use depmi_core::query::{parse, plan_and_execute_with, ExecOptions, QueryResult};
use depmi_core::rng::stream;
use depmi_core::{Dataset, FitConfig, StatType};

const SURVEY: &str = "\
smoker,age,income,region
yes,34,3.5e2,north
no,NA,410,south
NA,51,,north
yes,29,NA,east
no,45,380,
yes,NA,295,south
no,38,NA,north
yes,62,505,east
NA,41,330,south
no,NA,NA,north
yes,57,470,east
no,33,NA,south
yes,48,390,north
no,NA,360,east
yes,39,415,south
no,44,NA,north
yes,NA,445,east
no,36,305,south
yes,53,NA,north
no,47,400,east
";

fn survey() -> Dataset {
    ingest_reader(SURVEY.as_bytes(), &IngestOptions::default())
        .unwrap()
        .dataset
}

fn small_fit(seed: u64) -> FitConfig {
    FitConfig {
        members: 4,
        sweeps: 10,
        seed,
        ..FitConfig::default()
    }
}

#[test]
fn ingest_types_missing_rates_and_exponents() {
    let ing = ingest_reader(SURVEY.as_bytes(), &IngestOptions::default()).unwrap();
    let schema = ing.dataset.schema();
    match schema.stat_type(0) {
        StatType::Nominal { labels } => assert_eq!(labels, &["no".to_string(), "yes".to_string()]),
        other => panic!("smoker typed as {other:?}"),
    }
    assert_eq!(schema.stat_type(1), &StatType::Numerical);
    assert_eq!(schema.stat_type(2), &StatType::Numerical);
    assert!(matches!(schema.stat_type(3), StatType::Nominal { .. }));
    assert_eq!(ing.dataset.cell(0, 2), Some(depmi_core::Value::Real(350.0)));
    let rate = |name: &str| ing.missing_rates.iter().find(|(n, _)| n == name).unwrap().1;
    assert!((rate("income") - 7.0 / 20.0).abs() < 1e-12);
    assert!((rate("smoker") - 2.0 / 20.0).abs() < 1e-12);
}

#[test]
fn fit_then_query_equals_reload_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let data = survey();
    let ws = Workspace::create(dir.path().join("ws"), &data).unwrap();
    let reloaded_data = ws.dataset().unwrap();
    assert_eq!(reloaded_data.fingerprint(), data.fingerprint());

    let ens = fit_ensemble(&data, &small_fit(7), Some(2)).unwrap();
    let m1 = ws.save_ensemble(&data, &ens).unwrap();
    let again = fit_ensemble(&data, &small_fit(7), Some(1)).unwrap();
    assert_eq!(again, ens);
    let other = Workspace::create(dir.path().join("other"), &data).unwrap();
    let m2 = other.save_ensemble(&data, &again).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(
        std::fs::read(ws.manifest_path()).unwrap(),
        std::fs::read(other.manifest_path()).unwrap()
    );

    let loaded = ws.load_ensemble().unwrap();
    assert_eq!(loaded, ens);
    let stmt = parse(
        "SIMULATE MUTUAL INFORMATION OF smoker WITH income GIVEN (region = 'north') \
         USING 200 SAMPLES FROM MODELS OF survey",
    )
    .unwrap();
    let opts = ExecOptions::default();
    let before = plan_and_execute_with(&stmt, &ens, &opts, 3, &cmi_posterior).unwrap();
    let after = plan_and_execute_with(&stmt, &loaded, &opts, 3, &cmi_posterior).unwrap();
    assert_eq!(before, after);

    let csv = format_result(&before, loaded.schema(), OutputMode::Csv);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("member_id,cmi_nats"));
    let ids: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ids, vec![0, 1, 2, 3]);
}

#[test]
fn tampered_members_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = survey();
    let ws = Workspace::create(dir.path(), &data).unwrap();
    assert!(ws.load_ensemble().is_err());
    let ens = fit_ensemble(&data, &small_fit(1), None).unwrap();
    let manifest = ws.save_ensemble(&data, &ens).unwrap();
    let path = ws.ensemble_dir().join(&manifest.members[0].file);
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push(' ');
    std::fs::write(&path, text).unwrap();
    assert!(ws.load_ensemble().is_err());
}

#[test]
fn dependence_matrix_for_three_variables() {
    let data = ingest_reader(
        "a,b,c\n1,2,x\n2,4,y\n3,6,x\n4,8,y\n5,10,x\n".as_bytes(),
        &IngestOptions::default(),
    )
    .unwrap()
    .dataset;
    let ens = fit_ensemble(&data, &small_fit(2), None).unwrap();
    let m = pairwise_dependence_matrix(&ens);
    assert_eq!(m.len(), 3);
    for (i, row) in m.iter().enumerate() {
        assert_eq!(row[i], 1.0);
        for (j, &p) in row.iter().enumerate() {
            assert_eq!(p, m[j][i]);
            assert!((0.0..=1.0).contains(&p));
        }
    }
    let csv = dependence_matrix_csv(ens.schema(), &m);
    assert!(
        csv.starts_with(",a,b,c\n") || csv.starts_with("variable,a,b,c\n"),
        "{csv}"
    );
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn independent_scores_show_no_context_dependence() {
    let data = gen_hub_free(150, &mut stream(4));
    let ens = fit_ensemble(&data, &small_fit(5), None).unwrap();
    let demo = context_specific_demo(&ens, [-1.0, 1.0], 300, 10, 9).unwrap();
    for m in demo.medians {
        assert!(m < 0.05, "{:?}", demo.medians);
    }
    let stmt = parse("ESTIMATE DEPENDENCE PROBABILITY OF vectors WITH analysis BY MODELS OF hub").unwrap();
    let p = plan_and_execute_with(&stmt, &ens, &ExecOptions::default(), 0, &cmi_posterior).unwrap();
    assert!(matches!(p, QueryResult::Scalar(x) if x <= 0.5));
}
