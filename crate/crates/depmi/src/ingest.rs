//! CSV ingestion with schema guessing.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use depmi_core::{Dataset, Schema, StatType, Value, Variable};

/// Non-numeric columns with at most this many distinct values are nominal.
pub const NOMINAL_THRESHOLD: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV has no header or no columns")]
    EmptyCsv,
    #[error("override for column {column:?} conflicts with the data: {reason}")]
    ConflictingOverride { column: String, reason: String },
    #[error("column {column:?} has {distinct} distinct non-numeric values; override it as nominal to keep it")]
    TooManyCategories { column: String, distinct: usize },
    #[error("column {0:?} has no observed values")]
    AllMissing(String),
    #[error("cell at row {row}, column {column:?}: {reason}")]
    BadCell { row: usize, column: String, reason: String },
    #[error(transparent)]
    Engine(#[from] depmi_core::Error),
}

/// A requested type for one column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeOverride {
    Numerical,
    Nominal,
}

impl std::str::FromStr for TypeOverride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "numerical" | "numeric" => Ok(TypeOverride::Numerical),
            "nominal" | "categorical" => Ok(TypeOverride::Nominal),
            _ => Err(format!("unknown type {s:?}; use numerical or nominal")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub nominal_threshold: usize,
    pub overrides: BTreeMap<String, TypeOverride>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            nominal_threshold: NOMINAL_THRESHOLD,
            overrides: BTreeMap::new(),
        }
    }
}

/// The ingested table and per-variable missing rates.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub missing_rates: Vec<(String, f64)>,
}

pub fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA"
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_raw<R: Read>(reader: R) -> Result<RawTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IngestError::EmptyCsv);
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows })
}

fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Labels of a nominal column: numeric order when every label is a number,
/// lexicographic otherwise.
fn ordered_labels(values: BTreeSet<&str>) -> Vec<String> {
    let mut labels: Vec<String> = values.into_iter().map(str::to_string).collect();
    if labels.iter().all(|l| parse_number(l).is_some()) {
        labels.sort_by(|a, b| parse_number(a).unwrap().total_cmp(&parse_number(b).unwrap()));
    }
    labels
}

fn guess_schema(table: &RawTable, opts: &IngestOptions) -> Result<Schema, IngestError> {
    let known: HashSet<&str> = table.header.iter().map(String::as_str).collect();
    if let Some(col) = opts.overrides.keys().find(|k| !known.contains(k.as_str())) {
        return Err(IngestError::ConflictingOverride {
            column: col.clone(),
            reason: "no such column".into(),
        });
    }
    let mut vars = Vec::with_capacity(table.header.len());
    for (j, name) in table.header.iter().enumerate() {
        let observed: Vec<&str> = table
            .rows
            .iter()
            .map(|r| r[j].trim())
            .filter(|c| !is_missing(c))
            .collect();
        if observed.is_empty() {
            return Err(IngestError::AllMissing(name.clone()));
        }
        let numeric = observed.iter().all(|c| parse_number(c).is_some());
        let distinct: BTreeSet<&str> = observed.iter().copied().collect();
        let var = match (opts.overrides.get(name), numeric) {
            (Some(TypeOverride::Numerical), false) => {
                let bad = observed.iter().find(|c| parse_number(c).is_none()).unwrap();
                return Err(IngestError::ConflictingOverride {
                    column: name.clone(),
                    reason: format!("value {bad:?} is not a number"),
                });
            }
            (Some(TypeOverride::Numerical), true) | (None, true) => Variable::numerical(name.clone()),
            (Some(TypeOverride::Nominal), _) => nominal(name, distinct)?,
            (None, false) if distinct.len() <= opts.nominal_threshold => nominal(name, distinct)?,
            (None, false) => {
                return Err(IngestError::TooManyCategories {
                    column: name.clone(),
                    distinct: distinct.len(),
                })
            }
        };
        vars.push(var);
    }
    Ok(Schema::new(vars)?)
}

fn nominal(name: &str, distinct: BTreeSet<&str>) -> Result<Variable, IngestError> {
    let labels = ordered_labels(distinct);
    if labels.len() < 2 {
        return Ok(Variable {
            name: name.to_string(),
            stat_type: StatType::Nominal {
                labels: vec![labels[0].clone(), format!("{}~other", labels[0])],
            },
        });
    }
    Ok(Variable {
        name: name.to_string(),
        stat_type: StatType::Nominal { labels },
    })
}

fn build_dataset(table: &RawTable, schema: Schema) -> Result<Dataset, IngestError> {
    let mut rows = Vec::with_capacity(table.rows.len());
    for (i, raw) in table.rows.iter().enumerate() {
        let mut row = Vec::with_capacity(schema.len());
        for (j, cell) in raw.iter().enumerate() {
            let cell = cell.trim();
            if is_missing(cell) {
                row.push(None);
                continue;
            }
            let bad = |reason: String| IngestError::BadCell {
                row: i + 1,
                column: schema.name(j).to_string(),
                reason,
            };
            let v = match schema.stat_type(j) {
                StatType::Numerical => {
                    Value::Real(parse_number(cell).ok_or_else(|| bad(format!("{cell:?} is not a number")))?)
                }
                StatType::Nominal { labels } => Value::Category(
                    labels
                        .iter()
                        .position(|l| l == cell)
                        .ok_or_else(|| bad(format!("{cell:?} is not a known category")))? as u32,
                ),
            };
            row.push(Some(v));
        }
        rows.push(row);
    }
    Ok(Dataset::new(schema, rows)?)
}

fn missing_rates(data: &Dataset) -> Vec<(String, f64)> {
    (0..data.n_vars())
        .map(|v| (data.schema().name(v).to_string(), data.missing_rate(v)))
        .collect()
}

/// Reads CSV text, guessing the schema.
pub fn ingest_reader<R: Read>(reader: R, opts: &IngestOptions) -> Result<Ingested, IngestError> {
    let table = read_raw(reader)?;
    let schema = guess_schema(&table, opts)?;
    let dataset = build_dataset(&table, schema)?;
    Ok(Ingested {
        missing_rates: missing_rates(&dataset),
        dataset,
    })
}

pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<Ingested, IngestError> {
    ingest_reader(open(path)?, opts)
}

/// Reads CSV text against a known schema; columns must match by name and
/// order.
pub fn load_with_schema<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, IngestError> {
    let table = read_raw(reader)?;
    let names: Vec<&str> = schema.variables().iter().map(|v| v.name.as_str()).collect();
    if table.header.iter().map(String::as_str).ne(names.iter().copied()) {
        return Err(IngestError::Engine(depmi_core::Error::InvalidSchema(
            "CSV header does not match the stored schema".into(),
        )));
    }
    build_dataset(&table, schema.clone())
}

pub fn load_csv_with_schema(path: &Path, schema: &Schema) -> Result<Dataset, IngestError> {
    load_with_schema(open(path)?, schema)
}

/// Writes a dataset as CSV, empty cells for missing values and labels for
/// nominal values.
pub fn write_csv<W: std::io::Write>(data: &Dataset, out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(data.schema().variables().iter().map(|v| v.name.as_str()))?;
    for i in 0..data.n_rows() {
        let rec: Vec<String> = (0..data.n_vars())
            .map(|j| match data.cell(i, j) {
                None => String::new(),
                Some(v) => crate::format::value_text(data.schema(), j, v),
            })
            .collect();
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
