//! CSV-backed record catalog and the per-session restricted view.

use std::collections::HashSet;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::text::normalize_phrase;

pub type RecordId = usize;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row on line {line} has {found} cells, header has {expected}")]
    RaggedRow { line: u64, found: usize, expected: usize },
    #[error("duplicate header `{0}`")]
    DuplicateHeader(String),
    #[error("header has an empty column name")]
    EmptyHeader,
    #[error("catalog has no records")]
    EmptyCatalog,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ViewError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell {
    /// Original text, trimmed.
    pub display: String,
    /// Matching key; see [`normalize_phrase`].
    pub norm: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Record {
    pub id: RecordId,
    /// One entry per catalog attribute; `None` means "not applicable".
    pub attrs: IndexMap<String, Option<Cell>>,
}

impl Record {
    pub fn value(&self, attribute: &str) -> Option<&str> {
        self.cell(attribute).map(|c| c.norm.as_str())
    }

    pub fn display(&self, attribute: &str) -> Option<&str> {
        self.cell(attribute).map(|c| c.display.as_str())
    }

    fn cell(&self, attribute: &str) -> Option<&Cell> {
        self.attrs.get(attribute).and_then(Option::as_ref)
    }

    /// Non-null display fields in catalog column order.
    pub fn payload(&self) -> IndexMap<String, String> {
        self.attrs.iter().filter_map(|(k, v)| v.as_ref().map(|c| (k.clone(), c.display.clone()))).collect()
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct Catalog {
    attributes: Vec<String>,
    records: Vec<Record>,
    /// Per attribute: normalized value -> display text of its first appearance.
    domains: IndexMap<String, IndexMap<String, String>>,
}

/// Parses a CSV document (header row first, empty cell = null).
pub fn ingest_csv(text: &str) -> Result<Catalog, CatalogError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());

    let mut attributes = Vec::new();
    let mut seen = HashSet::new();
    for name in reader.headers()?.iter() {
        let name = name.trim().to_lowercase();
        if name.is_empty() {
            return Err(CatalogError::EmptyHeader);
        }
        if !seen.insert(name.clone()) {
            return Err(CatalogError::DuplicateHeader(name));
        }
        attributes.push(name);
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != attributes.len() {
            return Err(CatalogError::RaggedRow {
                line: row.position().map_or(0, |p| p.line()),
                found: row.len(),
                expected: attributes.len(),
            });
        }
        let attrs = attributes
            .iter()
            .zip(row.iter())
            .map(|(name, raw)| {
                let display = raw.trim();
                let norm = normalize_phrase(display);
                let cell = (!norm.is_empty()).then(|| Cell { display: display.to_string(), norm });
                (name.clone(), cell)
            })
            .collect();
        records.push(Record { id: records.len(), attrs });
    }
    if records.is_empty() {
        return Err(CatalogError::EmptyCatalog);
    }

    let mut domains: IndexMap<String, IndexMap<String, String>> =
        attributes.iter().map(|a| (a.clone(), IndexMap::new())).collect();
    for record in &records {
        for (name, cell) in &record.attrs {
            if let Some(cell) = cell {
                domains[name].entry(cell.norm.clone()).or_insert_with(|| cell.display.clone());
            }
        }
    }
    Ok(Catalog { attributes, records, domains })
}

impl Catalog {
    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn has_attribute(&self, attribute: &str) -> bool {
        self.domains.contains_key(attribute)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn record(&self, id: RecordId) -> Option<&Record> {
        self.records.get(id)
    }

    /// Every non-null value of `attribute` across the catalog, first-appearance order.
    pub fn domain(&self, attribute: &str) -> Result<Vec<String>, ViewError> {
        self.domains
            .get(attribute)
            .map(|d| d.keys().cloned().collect())
            .ok_or_else(|| ViewError::UnknownAttribute(attribute.to_string()))
    }

    /// Display text for a normalized value, falling back to the value itself.
    pub fn display_value<'a>(&'a self, attribute: &str, norm: &'a str) -> &'a str {
        self.domains.get(attribute).and_then(|d| d.get(norm)).map_or(norm, String::as_str)
    }
}

/// The records consistent with every constraint so far.
#[derive(Clone, Debug)]
pub struct View {
    catalog: Arc<Catalog>,
    constraints: IndexMap<String, String>,
    live: Vec<RecordId>,
}

impl PartialEq for View {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.catalog, &other.catalog) && self.constraints == other.constraints && self.live == other.live
    }
}

impl View {
    pub fn new(catalog: Arc<Catalog>) -> View {
        let live = (0..catalog.records.len()).collect();
        View { catalog, constraints: IndexMap::new(), live }
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn constraints(&self) -> &IndexMap<String, String> {
        &self.constraints
    }

    pub fn live_ids(&self) -> &[RecordId] {
        &self.live
    }

    fn check(&self, attribute: &str) -> Result<(), ViewError> {
        if self.catalog.has_attribute(attribute) {
            Ok(())
        } else {
            Err(ViewError::UnknownAttribute(attribute.to_string()))
        }
    }

    /// Adds `attribute = value` and filters the live set. Null cells never match.
    pub fn restrict(&self, attribute: &str, value: &str) -> Result<View, ViewError> {
        self.check(attribute)?;
        let value = normalize_phrase(value);
        let live = self
            .live
            .iter()
            .copied()
            .filter(|&id| self.catalog.records[id].value(attribute) == Some(value.as_str()))
            .collect();
        let mut constraints = self.constraints.clone();
        constraints.insert(attribute.to_string(), value);
        Ok(View { catalog: self.catalog.clone(), constraints, live })
    }

    /// Distinct non-null values among live records, first-appearance order.
    pub fn available_values(&self, attribute: &str) -> Result<Vec<String>, ViewError> {
        self.check(attribute)?;
        let mut seen = HashSet::new();
        Ok(self.records().filter_map(|r| r.value(attribute)).filter(|v| seen.insert(*v)).map(str::to_string).collect())
    }

    /// True when every live record has a value for `attribute`.
    pub fn fully_defined(&self, attribute: &str) -> Result<bool, ViewError> {
        self.check(attribute)?;
        Ok(self.records().all(|r| r.value(attribute).is_some()))
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> + '_ {
        self.live.iter().map(|&id| &self.catalog.records[id])
    }

    pub fn record_count(&self) -> usize {
        self.live.len()
    }
}
