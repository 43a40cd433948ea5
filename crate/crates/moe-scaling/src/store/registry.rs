//! Flat-file registry of fitted constant sets, keyed by label. One JSON
//! document per label; the published table ships as an immutable built-in
//! under [`BUILTIN_LABEL`].

use std::path::{Path, PathBuf};

use super::StoreError;
use crate::law::ScalingConstants;

/// Label of the built-in published constants.
pub const BUILTIN_LABEL: &str = "paper-table-5";

/// Environment variable overriding the registry directory.
pub const REGISTRY_DIR_ENV: &str = "MOE_SCALING_REGISTRY_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsProvenance {
    Builtin,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub constants: ScalingConstants,
    pub provenance: ConstantsProvenance,
    /// Backing file for file-based entries.
    pub path: Option<PathBuf>,
}

/// Single-writer, multi-reader registry rooted at a directory.
#[derive(Debug, Clone)]
pub struct ConstantsRegistry {
    dir: PathBuf,
}

impl ConstantsRegistry {
    pub fn open(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Directory from `MOE_SCALING_REGISTRY_DIR`, falling back to
    /// `./constants-registry`.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(REGISTRY_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("constants-registry"));
        Self::open(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, label: &str) -> Result<PathBuf, StoreError> {
        if label.is_empty()
            || !label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        {
            return Err(StoreError::InvalidLabel(label.into()));
        }
        Ok(self.dir.join(format!("{label}.json")))
    }

    pub fn save(&self, label: &str, constants: &ScalingConstants) -> Result<(), StoreError> {
        if label == BUILTIN_LABEL {
            return Err(StoreError::ImmutableLabel(label.into()));
        }
        constants.validate()?;
        let path = self.path_for(label)?;
        std::fs::create_dir_all(&self.dir)?;
        let json = serde_json::to_string_pretty(constants)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(&self, label: &str) -> Result<RegistryEntry, StoreError> {
        if label == BUILTIN_LABEL {
            return Ok(RegistryEntry {
                constants: ScalingConstants::table5(),
                provenance: ConstantsProvenance::Builtin,
                path: None,
            });
        }
        let path = self.path_for(label)?;
        let data =
            std::fs::read_to_string(&path).map_err(|_| StoreError::UnknownLabel(label.into()))?;
        let constants: ScalingConstants = serde_json::from_str(&data)?;
        constants.validate()?;
        Ok(RegistryEntry {
            constants,
            provenance: ConstantsProvenance::File,
            path: Some(path),
        })
    }

    pub fn labels(&self) -> Result<Vec<String>, StoreError> {
        let mut labels = vec![BUILTIN_LABEL.to_owned()];
        match std::fs::read_dir(&self.dir) {
            Ok(entries) => {
                for entry in entries {
                    let path = entry?.path();
                    if path.extension().is_some_and(|e| e == "json") {
                        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                            labels.push(stem.to_owned());
                        }
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        labels.sort();
        labels.dedup();
        Ok(labels)
    }
}
