use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use depmi::bench::{self, BenchOptions};
use depmi::format::{dependence_matrix_csv, format_result, OutputMode};
use depmi::ingest::{ingest_csv, IngestOptions, TypeOverride, NOMINAL_THRESHOLD};
use depmi::parallel;
use depmi::workspace::Workspace;
use depmi_core::cmi::{DEFAULT_ACCURACY, DEFAULT_OUTER};
use depmi_core::crosscat::{pairwise_dependence_matrix, FitConfig};
use depmi_core::oracle::DiscreteBayesNet;
use depmi_core::query::{self, plan_and_execute_with, ExecOptions, SyntaxError};
use depmi_core::{Assignment, Ensemble, Structure, Value, VarSet};

#[derive(Parser)]
#[command(
    name = "depmi",
    version,
    about = "Probabilistic dependence queries over tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureArg {
    Crosscat,
    SingleBlock,
}

#[derive(Subcommand)]
enum Command {
    /// Read a CSV file into a new workspace, guessing variable types.
    Ingest {
        csv: PathBuf,
        /// Workspace directory to create.
        #[arg(short, long)]
        workspace: PathBuf,
        /// Force a column type, e.g. `--override age=nominal`.
        #[arg(long = "override", value_name = "COLUMN=TYPE", value_parser = parse_override)]
        overrides: Vec<(String, TypeOverride)>,
        /// Non-numeric columns with at most this many distinct values are nominal.
        #[arg(long, default_value_t = NOMINAL_THRESHOLD)]
        nominal_threshold: usize,
    },
    /// Fit an ensemble of independent chains and store it in the workspace.
    Fit {
        workspace: PathBuf,
        #[arg(short = 'H', long = "models", default_value_t = 16)]
        models: usize,
        #[arg(long, default_value_t = 200)]
        sweeps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum worker threads (all cores by default).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value = "crosscat")]
        structure: StructureArg,
    },
    /// Run query statements. With neither a statement nor a file, read
    /// statements from standard input (terminate each with `;`).
    Query {
        workspace: PathBuf,
        statement: Option<String>,
        #[arg(short, long, conflicts_with = "statement")]
        file: Option<PathBuf>,
        /// Monte Carlo samples per CMI estimate.
        #[arg(short = 'T', long, default_value_t = DEFAULT_ACCURACY)]
        accuracy: usize,
        /// Outer samples when conditioning variables are marginalized.
        #[arg(long, default_value_t = DEFAULT_OUTER)]
        outer: usize,
        #[arg(long, value_enum, default_value = "plain")]
        format: OutputMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the pairwise dependence-probability matrix as CSV.
    Depmatrix {
        workspace: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a reproducible experiment and write markdown and CSV reports.
    Bench {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(bench::EXPERIMENTS))]
        experiment: String,
        #[arg(short, long, default_value = "reports")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(short = 'H', long = "models", default_value_t = 16)]
        models: usize,
        #[arg(long, default_value_t = 200)]
        sweeps: usize,
        #[arg(short = 'T', long, default_value_t = DEFAULT_ACCURACY)]
        accuracy: usize,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Exact CMI of a discrete Bayesian network given as JSON
    /// (`{"nodes": [{"name", "cardinality", "parents", "cpt"}, ...]}`).
    ExactCmi {
        network: PathBuf,
        /// Comma-separated variable names.
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        /// Conditioning values, e.g. `--given x3=0`.
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
}

fn parse_override(s: &str) -> Result<(String, TypeOverride), String> {
    let (col, ty) = s.rsplit_once('=').ok_or("expected COLUMN=TYPE")?;
    Ok((col.to_string(), ty.parse()?))
}

/// Failures split by exit status.
enum Failure {
    Usage(anyhow::Error),
    Engine(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Engine(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest {
            csv,
            workspace,
            overrides,
            nominal_threshold,
        } => {
            let opts = IngestOptions {
                nominal_threshold,
                overrides: overrides.into_iter().collect::<BTreeMap<_, _>>(),
            };
            let ingested = ingest_csv(&csv, &opts)?;
            Workspace::create(&workspace, &ingested.dataset)?;
            let schema = ingested.dataset.schema();
            println!("{} rows, {} variables", ingested.dataset.n_rows(), schema.len());
            for (v, (name, rate)) in ingested.missing_rates.iter().enumerate() {
                let ty = match schema.stat_type(v).category_count() {
                    Some(k) => format!("nominal({k})"),
                    None => "numerical".to_string(),
                };
                println!("{name}\t{ty}\tmissing {:.1}%", rate * 100.0);
            }
        }
        Command::Fit {
            workspace,
            models,
            sweeps,
            seed,
            jobs,
            structure,
        } => {
            let ws = Workspace::open(&workspace);
            let data = ws.dataset()?;
            let config = FitConfig {
                members: models,
                sweeps,
                seed,
                structure: match structure {
                    StructureArg::Crosscat => Structure::CrossCat,
                    StructureArg::SingleBlock => Structure::SingleBlock,
                },
                ..FitConfig::default()
            };
            let ens = parallel::fit_ensemble(&data, &config, jobs)?;
            ws.save_ensemble(&data, &ens)?;
            println!("fitted {} members ({} sweeps, seed {seed})", ens.len(), sweeps);
        }
        Command::Query {
            workspace,
            statement,
            file,
            accuracy,
            outer,
            format,
            seed,
        } => {
            let ws = Workspace::open(&workspace);
            let ens = ws.load_ensemble()?;
            let opts = ExecOptions {
                accuracy,
                t_outer: outer,
            };
            match (statement, file) {
                (Some(s), _) => run_statement(&ws, &ens, &s, &opts, format, seed)?,
                (None, Some(path)) => {
                    let text =
                        std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                    for (k, s) in split_statements(&text).into_iter().enumerate() {
                        run_statement(
                            &ws,
                            &ens,
                            &s,
                            &opts,
                            format,
                            depmi_core::rng::child_seed(seed, k as u64),
                        )?;
                    }
                }
                (None, None) => repl(&ws, &ens, &opts, format, seed)?,
            }
        }
        Command::Depmatrix { workspace, out } => {
            let ws = Workspace::open(&workspace);
            let ens = ws.load_ensemble()?;
            let text = dependence_matrix_csv(ens.schema(), &pairwise_dependence_matrix(&ens));
            write_out(out.as_deref(), &text)?;
        }
        Command::Bench {
            experiment,
            out,
            seeds,
            models,
            sweeps,
            accuracy,
            jobs,
        } => {
            let opts = BenchOptions {
                seeds,
                members: models,
                sweeps,
                accuracy,
                jobs,
            };
            let report = bench::run(&experiment, &opts)?;
            std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            write_out(Some(&out.join(format!("{}.md", report.name))), &report.markdown)?;
            write_out(Some(&out.join(format!("{}.csv", report.name))), &report.csv)?;
            print!("{}", report.markdown);
        }
        Command::ExactCmi { network, a, b, given } => {
            let text =
                std::fs::read_to_string(&network).with_context(|| format!("cannot read {}", network.display()))?;
            let net: DiscreteBayesNet = serde_json::from_str(&text).context("invalid network")?;
            let schema = net.schema();
            let set = |names: &[String]| -> Result<VarSet, Failure> {
                names
                    .iter()
                    .map(|n| schema.resolve(n.trim()).map_err(|e| Failure::Usage(e.into())))
                    .collect()
            };
            let mut cond = Assignment::new();
            for g in &given {
                let (name, value) = g
                    .split_once('=')
                    .ok_or_else(|| Failure::Usage(anyhow::anyhow!("expected NAME=VALUE, got {g:?}")))?;
                let var = schema.resolve(name.trim()).map_err(|e| Failure::Usage(e.into()))?;
                let k: u32 = value
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(anyhow::anyhow!("{value:?} is not a state index")))?;
                cond.insert(var, Value::Category(k));
            }
            println!("{}", net.exact_cmi(&set(&a)?, &set(&b)?, &cond)?);
        }
    }
    Ok(())
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("cannot write output"),
    }
}

fn syntax_failure(text: &str, e: SyntaxError) -> Failure {
    let line = text.lines().nth(e.line.saturating_sub(1)).unwrap_or("");
    let caret = " ".repeat(e.column.saturating_sub(1));
    Failure::Usage(anyhow::anyhow!("{e}\n  {line}\n  {caret}^"))
}

fn run_statement(
    ws: &Workspace,
    ens: &Ensemble,
    text: &str,
    opts: &ExecOptions,
    format: OutputMode,
    seed: u64,
) -> Result<(), Failure> {
    let stmt = query::parse(text).map_err(|e| syntax_failure(text, e))?;
    let result = plan_and_execute_with(&stmt, ens, opts, seed, &parallel::cmi_posterior)?;
    ws.log_query(&stmt.to_string())?;
    print!("{}", format_result(&result, ens.schema(), format));
    Ok(())
}

fn repl(ws: &Workspace, ens: &Ensemble, opts: &ExecOptions, format: OutputMode, seed: u64) -> Result<(), Failure> {
    let stdin = io::stdin();
    let mut buffer = String::new();
    let mut k = 0u64;
    let prompt = |cont: bool| {
        eprint!("{}", if cont { "  ...> " } else { "depmi> " });
        let _ = io::stderr().flush();
    };
    prompt(false);
    for line in stdin.lock().lines() {
        buffer.push_str(&line?);
        buffer.push('\n');
        let mut parts = split_statements(&buffer);
        let complete = ends_statement(&buffer);
        let pending = if complete {
            String::new()
        } else {
            parts.pop().unwrap_or_default()
        };
        for s in parts {
            // errors are reported and the session continues
            if let Err(Failure::Usage(e) | Failure::Engine(e)) =
                run_statement(ws, ens, &s, opts, format, depmi_core::rng::child_seed(seed, k))
            {
                eprintln!("error: {e:#}");
            }
            k += 1;
        }
        buffer = pending;
        prompt(!buffer.trim().is_empty());
    }
    if !buffer.trim().is_empty() {
        run_statement(ws, ens, &buffer, opts, format, depmi_core::rng::child_seed(seed, k))?;
    }
    Ok(())
}

/// Splits on `;` outside quotes and comments. Pieces without any
/// statement text are dropped; the last piece may be unterminated.
fn split_statements(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\'' | '"' => {
                cur.push(c);
                for d in chars.by_ref() {
                    cur.push(d);
                    if d == c {
                        break;
                    }
                }
            }
            '-' if chars.peek() == Some(&'-') => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        cur.push('\n');
                        break;
                    }
                }
            }
            ';' => {
                cur.push(';');
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out.retain(|s| !s.trim().trim_end_matches(';').trim().is_empty());
    out
}

/// Whether the text ends in a terminated statement (ignoring trailing
/// whitespace and comments).
fn ends_statement(text: &str) -> bool {
    let stripped: Vec<String> = split_statements(&format!("{text}\n"));
    match stripped.last() {
        Some(s) => s.trim_end().ends_with(';'),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_outside_quotes_and_comments() {
        let text = "ESTIMATE a; -- x; y\nSIMULATE 'q;r' ;\n\"c;d\" tail";
        assert_eq!(
            split_statements(text),
            vec!["ESTIMATE a;", " \nSIMULATE 'q;r' ;", "\n\"c;d\" tail"]
        );
        assert!(!ends_statement(text));
        assert!(ends_statement("a; -- trailing\n"));
        assert!(split_statements("  ;\n-- only\n").is_empty());
    }

    #[test]
    fn override_syntax() {
        assert_eq!(
            parse_override("a=b=nominal").unwrap(),
            ("a=b".into(), TypeOverride::Nominal)
        );
        assert!(parse_override("age").is_err());
        assert!(parse_override("age=text").is_err());
    }
}
