//! Datasets and dialog specs loaded from a data directory laid out as
//! `datasets/*.csv` and `specs/*.xml`. Entries are keyed by file stem.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::dialogxml::{bind_to_catalog, parse_dialog_spec, BindError, BoundSpec, DialogSpec, DialogXmlError};
use crate::grammar::DEFAULT_LIMIT;
use crate::session::{Session, SessionError};
use crate::view::{ingest_csv, Catalog, CatalogError};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("{path}: {source}")]
    Spec { path: PathBuf, source: DialogXmlError },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("unknown dialog spec `{0}`")]
    UnknownSpec(String),
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl RegistryError {
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::Io { .. } => "Io",
            RegistryError::Catalog { .. } => "MalformedCatalog",
            RegistryError::Spec { .. } => "MalformedDocument",
            RegistryError::UnknownDataset(_) => "UnknownDataset",
            RegistryError::UnknownSpec(_) => "UnknownSpec",
            RegistryError::Bind(_) => "UnboundSlot",
            RegistryError::Session(e) => e.code(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pair {
    pub dataset: String,
    pub spec: String,
}

#[derive(Clone, Debug, Default)]
pub struct Registry {
    datasets: IndexMap<String, Arc<Catalog>>,
    specs: IndexMap<String, Arc<DialogSpec>>,
}

fn read(path: &Path) -> Result<String, RegistryError> {
    fs::read_to_string(path).map_err(|source| RegistryError::Io { path: path.to_path_buf(), source })
}

/// Files in `dir` with the given extension, sorted by name.
fn files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, RegistryError> {
    let entries = fs::read_dir(dir).map_err(|source| RegistryError::Io { path: dir.to_path_buf(), source })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)))
        .collect();
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl Registry {
    pub fn load(dir: &Path) -> Result<Registry, RegistryError> {
        let mut registry = Registry::default();
        for path in files(&dir.join("datasets"), "csv")? {
            let catalog =
                ingest_csv(&read(&path)?).map_err(|source| RegistryError::Catalog { path: path.clone(), source })?;
            registry.insert_dataset(stem(&path), catalog);
        }
        for path in files(&dir.join("specs"), "xml")? {
            let spec = parse_dialog_spec(&read(&path)?)
                .map_err(|source| RegistryError::Spec { path: path.clone(), source })?;
            registry.insert_spec(stem(&path), spec);
        }
        Ok(registry)
    }

    pub fn insert_dataset(&mut self, name: impl Into<String>, catalog: Catalog) {
        self.datasets.insert(name.into(), Arc::new(catalog));
    }

    pub fn insert_spec(&mut self, name: impl Into<String>, spec: DialogSpec) {
        self.specs.insert(name.into(), Arc::new(spec));
    }

    pub fn dataset(&self, name: &str) -> Option<&Arc<Catalog>> {
        self.datasets.get(name)
    }

    pub fn spec(&self, name: &str) -> Option<&Arc<DialogSpec>> {
        self.specs.get(name)
    }

    pub fn bind(&self, dataset: &str, spec: &str) -> Result<Arc<BoundSpec>, RegistryError> {
        let catalog = self.dataset(dataset).ok_or_else(|| RegistryError::UnknownDataset(dataset.to_string()))?;
        let spec = self.spec(spec).ok_or_else(|| RegistryError::UnknownSpec(spec.to_string()))?;
        Ok(Arc::new(bind_to_catalog(spec.clone(), catalog.clone())?))
    }

    /// Every (dataset, spec) combination that binds.
    pub fn pairs(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for (dataset, catalog) in &self.datasets {
            for (spec, doc) in &self.specs {
                if bind_to_catalog(doc.clone(), catalog.clone()).is_ok() {
                    out.push(Pair { dataset: dataset.clone(), spec: spec.clone() });
                }
            }
        }
        out
    }

    pub fn create_session(&self, dataset: &str, spec: &str) -> Result<Session, RegistryError> {
        self.create_session_with_limit(dataset, spec, DEFAULT_LIMIT)
    }

    pub fn create_session_with_limit(
        &self,
        dataset: &str,
        spec: &str,
        grammar_limit: usize,
    ) -> Result<Session, RegistryError> {
        Ok(Session::with_grammar_limit(self.bind(dataset, spec)?, grammar_limit)?)
    }
}
