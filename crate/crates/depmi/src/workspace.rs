//! On-disk workspace: the dataset, its schema, a fitted ensemble and a
//! query log.
//!
//! ```text
//! <dir>/data.csv
//! <dir>/schema.json
//! <dir>/ensemble/manifest.json
//! <dir>/ensemble/member-0000.json ...
//! <dir>/queries.log
//! ```

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use depmi_core::crosscat::{Provenance, RowInit};
use depmi_core::{CrossCatState, Dataset, Ensemble, Schema, Structure};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::{load_csv_with_schema, write_csv, IngestError};

/// Version of the member and manifest documents.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Engine(#[from] depmi_core::Error),
    #[error("workspace has no fitted ensemble; run `fit` first")]
    NotFitted,
    #[error("inconsistent workspace: {0}")]
    Inconsistent(String),
}

type Result<T> = std::result::Result<T, WorkspaceError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberEntry {
    pub file: String,
    pub sha256: String,
}

/// Describes a fitted ensemble. Contains nothing time- or host-dependent,
/// so equal fits produce byte-identical manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub sweeps: usize,
    pub structure: Structure,
    pub row_init: RowInit,
    pub schema_fingerprint: String,
    pub dataset_fingerprint: String,
    pub members: Vec<MemberEntry>,
}

#[derive(Serialize, Deserialize)]
struct MemberDoc {
    schema_version: u32,
    member: CrossCatState,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Json {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn hex_u64(x: u64) -> String {
    format!("{x:016x}")
}

/// Serializes one member document.
pub fn member_json(member: &CrossCatState) -> String {
    let doc = MemberDoc {
        schema_version: SCHEMA_VERSION,
        member: member.clone(),
    };
    serde_json::to_string(&doc).expect("members serialize")
}

pub fn parse_member(text: &str) -> std::result::Result<CrossCatState, serde_json::Error> {
    let doc: MemberDoc = serde_json::from_str(text)?;
    Ok(doc.member)
}

#[derive(Clone, Debug)]
pub struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    pub fn open(dir: impl Into<PathBuf>) -> Self {
        Workspace { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn data_path(&self) -> PathBuf {
        self.dir.join("data.csv")
    }

    pub fn schema_path(&self) -> PathBuf {
        self.dir.join("schema.json")
    }

    pub fn ensemble_dir(&self) -> PathBuf {
        self.dir.join("ensemble")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.ensemble_dir().join("manifest.json")
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join("queries.log")
    }

    /// Creates the directory and stores the dataset and its schema,
    /// discarding any previous ensemble.
    pub fn create(dir: impl Into<PathBuf>, data: &Dataset) -> Result<Self> {
        let ws = Workspace::open(dir);
        fs::create_dir_all(&ws.dir).map_err(io_err(&ws.dir))?;
        let mut csv = Vec::new();
        write_csv(data, &mut csv)?;
        write(&ws.data_path(), &csv)?;
        let schema = serde_json::to_string_pretty(data.schema()).expect("schema serializes");
        write(&ws.schema_path(), schema.as_bytes())?;
        let ens = ws.ensemble_dir();
        if ens.exists() {
            fs::remove_dir_all(&ens).map_err(io_err(&ens))?;
        }
        Ok(ws)
    }

    pub fn schema(&self) -> Result<Schema> {
        let path = self.schema_path();
        serde_json::from_slice(&read(&path)?).map_err(json_err(&path))
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let schema = self.schema()?;
        Ok(load_csv_with_schema(&self.data_path(), &schema)?)
    }

    /// Writes member files and then the manifest, replacing any previous
    /// ensemble.
    pub fn save_ensemble(&self, data: &Dataset, ensemble: &Ensemble) -> Result<Manifest> {
        let dir = self.ensemble_dir();
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut members = Vec::with_capacity(ensemble.len());
        for (h, m) in ensemble.members().iter().enumerate() {
            let file = format!("member-{h:04}.json");
            let text = member_json(m);
            write(&dir.join(&file), text.as_bytes())?;
            members.push(MemberEntry {
                file,
                sha256: hex::encode(Sha256::digest(text.as_bytes())),
            });
        }
        let p: &Provenance = ensemble.provenance();
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            seed: p.seed,
            sweeps: p.sweeps,
            structure: p.structure,
            row_init: p.row_init,
            schema_fingerprint: hex_u64(data.schema().fingerprint()),
            dataset_fingerprint: hex_u64(p.dataset_fingerprint),
            members,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write(&self.manifest_path(), text.as_bytes())?;
        Ok(manifest)
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.manifest_path();
        if !path.exists() {
            return Err(WorkspaceError::NotFitted);
        }
        serde_json::from_slice(&read(&path)?).map_err(json_err(&path))
    }

    /// Loads the ensemble, checking fingerprints and member digests.
    pub fn load_ensemble(&self) -> Result<Ensemble> {
        let manifest = self.manifest()?;
        let data = self.dataset()?;
        if manifest.schema_fingerprint != hex_u64(data.schema().fingerprint()) {
            return Err(WorkspaceError::Inconsistent(
                "schema fingerprint differs from the manifest".into(),
            ));
        }
        if manifest.dataset_fingerprint != hex_u64(data.fingerprint()) {
            return Err(WorkspaceError::Inconsistent(
                "dataset fingerprint differs from the manifest".into(),
            ));
        }
        let mut members = Vec::with_capacity(manifest.members.len());
        for entry in &manifest.members {
            let path = self.ensemble_dir().join(&entry.file);
            let bytes = read(&path)?;
            if hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
                return Err(WorkspaceError::Inconsistent(format!(
                    "{} does not match its digest",
                    entry.file
                )));
            }
            let text = String::from_utf8(bytes)
                .map_err(|_| WorkspaceError::Inconsistent(format!("{} is not UTF-8", entry.file)))?;
            let member = parse_member(&text).map_err(json_err(&path))?;
            if member.n_rows() != data.n_rows() || member.n_vars() != data.n_vars() {
                return Err(WorkspaceError::Inconsistent(format!(
                    "{} does not fit the dataset",
                    entry.file
                )));
            }
            member
                .check_consistency(&data)
                .map_err(|e| WorkspaceError::Inconsistent(format!("{}: {e}", entry.file)))?;
            members.push(member);
        }
        let provenance = Provenance {
            seed: manifest.seed,
            sweeps: manifest.sweeps,
            structure: manifest.structure,
            row_init: manifest.row_init,
            dataset_fingerprint: data.fingerprint(),
        };
        Ok(Ensemble::new(data.schema().clone(), members, provenance)?)
    }

    /// Appends a statement to the query log.
    pub fn log_query(&self, statement: &str) -> Result<()> {
        let path = self.log_path();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        writeln!(f, "{}", statement.trim()).map_err(io_err(&path))
    }
}
