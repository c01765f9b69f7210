#![allow(dead_code)]

pub mod criteria;
pub mod oracle;

use std::path::{Path, PathBuf};

use stager_core::registry::Registry;
use stager_core::Session;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn registry() -> Registry {
    Registry::load(&data_dir()).expect("fixture data loads")
}

pub fn trace(name: &str) -> String {
    std::fs::read_to_string(data_dir().join("traces").join(format!("{name}.jsonl"))).unwrap()
}

pub fn session(dataset: &str, spec: &str) -> Session {
    registry().create_session(dataset, spec).unwrap()
}
