//! TOML configuration files for problems and policies.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Problem, Purpose};
use crate::policies::Policy;

fn read<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(e.to_string()))
}

/// Reads and validates a problem for the given use.
pub fn load_problem(path: &Path, purpose: Purpose) -> Result<Problem> {
    let p: Problem = read(path)?;
    p.validate(purpose)?;
    Ok(p)
}

pub fn load_policy(path: &Path) -> Result<Policy> {
    read(path)
}

pub fn save<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_toml(value)?)?;
    Ok(())
}
