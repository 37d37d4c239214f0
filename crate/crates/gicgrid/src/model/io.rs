//! JSON case-file ingestion and persistence.
//!
//! A case is a single JSON document with top-level arrays `bus`, `gen`,
//! `load`, `branch`, `gmd_bus`, `gmd_branch`, `branch_gmd`, and `blocker`;
//! numbers are IEEE doubles, ids positive integers, enum strings lowercase.

use std::fs;
use std::path::Path;

use super::{validate, NetworkModel};
use crate::error::{Error, Result};
use crate::model::validate::check_references;

/// Load, parse, and validate a case file.
pub fn load_network<P: AsRef<Path>>(path: P) -> Result<NetworkModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let net: NetworkModel = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })?;
    check_references(&net)?;
    if let Some(v) = validate(&net).into_iter().next() {
        return Err(v.into_error());
    }
    Ok(net)
}

/// Parse and validate a case from an in-memory JSON string.
pub fn network_from_json(text: &str) -> Result<NetworkModel> {
    let net: NetworkModel = serde_json::from_str(text).map_err(|source| Error::Parse {
        path: "<memory>".into(),
        source,
    })?;
    check_references(&net)?;
    if let Some(v) = validate(&net).into_iter().next() {
        return Err(v.into_error());
    }
    Ok(net)
}

/// Serialize a model to pretty-printed JSON (deterministic field order).
pub fn network_to_json(net: &NetworkModel) -> String {
    let mut s = serde_json::to_string_pretty(net).expect("network serializes");
    s.push('\n');
    s
}

/// Write a model to disk in the case format read by [`load_network`].
pub fn save_network<P: AsRef<Path>>(net: &NetworkModel, path: P) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, network_to_json(net)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
