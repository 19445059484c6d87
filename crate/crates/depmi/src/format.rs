//! Rendering query results as plain text, CSV or JSON.

use std::fmt::Write as _;

use depmi_core::query::QueryResult;
use depmi_core::{Schema, StatType, Value, VarId};
use serde_json::{json, Map, Value as Json};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputMode {
    #[default]
    Plain,
    Csv,
    Json,
}

/// A cell as text: the number for numerical variables, the label for
/// nominal ones.
pub fn value_text(schema: &Schema, var: VarId, v: Value) -> String {
    match (schema.stat_type(var), v) {
        (StatType::Nominal { labels }, Value::Category(k)) => labels[k as usize].clone(),
        (_, v) => v.to_string(),
    }
}

fn value_json(schema: &Schema, var: VarId, v: Value) -> Json {
    match v {
        Value::Real(x) => json!(x),
        Value::Category(_) => Json::String(value_text(schema, var, v)),
    }
}

fn csv_line(fields: impl IntoIterator<Item = String>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields.into_iter().collect::<Vec<_>>())
        .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Renders `result`. Output is deterministic and ends with a newline.
pub fn format_result(result: &QueryResult, schema: &Schema, mode: OutputMode) -> String {
    match (result, mode) {
        (QueryResult::Scalar(x), OutputMode::Plain) => format!("{x}\n"),
        (QueryResult::Scalar(x), OutputMode::Csv) => format!("value\n{x}\n"),
        (QueryResult::Scalar(x), OutputMode::Json) => format!("{}\n", json!({ "value": x })),
        (QueryResult::PosteriorSamples(p), OutputMode::Plain) => {
            let mut s = String::new();
            for (h, x) in &p.estimates {
                let _ = writeln!(s, "{h}\t{x}");
            }
            s
        }
        (QueryResult::PosteriorSamples(p), OutputMode::Csv) => {
            let mut s = String::from("member_id,cmi_nats\n");
            for (h, x) in &p.estimates {
                let _ = writeln!(s, "{h},{x}");
            }
            s
        }
        (QueryResult::PosteriorSamples(p), OutputMode::Json) => {
            let (min, median, max) = p.summary();
            let estimates: Vec<Json> = p
                .estimates
                .iter()
                .map(|(h, x)| json!({ "member_id": h, "cmi_nats": x }))
                .collect();
            format!(
                "{}\n",
                json!({
                    "estimates": estimates,
                    "summary": { "min": min, "median": median, "max": max },
                })
            )
        }
        (QueryResult::Rows { columns, rows }, mode) => {
            let ids: Vec<VarId> = columns
                .iter()
                .map(|c| schema.index_of(c).expect("result columns come from the schema"))
                .collect();
            match mode {
                OutputMode::Json => {
                    let objs: Vec<Json> = rows
                        .iter()
                        .map(|r| {
                            let mut m = Map::new();
                            for ((name, &var), &v) in columns.iter().zip(&ids).zip(r) {
                                m.insert(name.clone(), value_json(schema, var, v));
                            }
                            Json::Object(m)
                        })
                        .collect();
                    format!("{}\n", Json::Array(objs))
                }
                OutputMode::Csv | OutputMode::Plain => {
                    let mut s = csv_line(columns.iter().cloned());
                    for r in rows {
                        s.push_str(&csv_line(
                            ids.iter().zip(r).map(|(&var, &v)| value_text(schema, var, v)),
                        ));
                    }
                    s
                }
            }
        }
    }
}

/// The dependence matrix as CSV with variable names on both axes.
pub fn dependence_matrix_csv(schema: &Schema, matrix: &[Vec<f64>]) -> String {
    let names = schema.variables().iter().map(|v| v.name.clone());
    let mut s = csv_line(std::iter::once(String::new()).chain(names));
    for (i, row) in matrix.iter().enumerate() {
        s.push_str(&csv_line(
            std::iter::once(schema.name(i).to_string()).chain(row.iter().map(|x| x.to_string())),
        ));
    }
    s
}
