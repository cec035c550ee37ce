//! Versioned JSON persistence for instances, distributions, circuits and models.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibrate::RegressionModel;
use crate::distribution::ObjectiveDistribution;
use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::simulator::CircuitParams;

pub const SCHEMA_VERSION: u32 = 1;

/// Objects that can be saved with [`save`] and read back with [`load`].
pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Artifact for ProblemInstance {
    const KIND: &'static str = "instance";
}

impl Artifact for ObjectiveDistribution {
    const KIND: &'static str = "distribution";
}

impl Artifact for CircuitParams {
    const KIND: &'static str = "circuit";
}

impl Artifact for RegressionModel {
    const KIND: &'static str = "model";
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    schema_version: u32,
    kind: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    schema_version: u32,
    kind: String,
    data: serde_json::Value,
}

/// Pretty JSON wrapped as `{"schema_version", "kind", "data"}`, newline-terminated.
pub fn to_json<T: Artifact>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&EnvelopeOut {
        schema_version: SCHEMA_VERSION,
        kind: T::KIND,
        data: value,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: Artifact>(text: &str) -> Result<T> {
    let env: EnvelopeIn = serde_json::from_str(text)?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema {
            found: env.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if env.kind != T::KIND {
        return Err(Error::Invalid(format!(
            "file holds a {}, expected a {}",
            env.kind,
            T::KIND
        )));
    }
    Ok(serde_json::from_value(env.data)?)
}

pub fn save<T: Artifact>(path: &Path, value: &T, force: bool) -> Result<()> {
    write_new(path, &to_json(value)?, force)
}

pub fn load<T: Artifact>(path: &Path) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

/// Writes `contents`, refusing to replace an existing file unless `force`.
pub fn write_new(path: &Path, contents: &str, force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(Error::AlreadyExists(path.display().to_string()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}
