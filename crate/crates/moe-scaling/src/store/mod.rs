//! Experiment records, campaigns, persistence and synthetic-campaign
//! generation.

mod generate;
mod ingest;
mod registry;
mod report;

pub use generate::{default_campaign, generate_campaign, paper_layout, PlannedPoint};
pub use ingest::{
    export_csv, export_json, ingest_csv, ingest_csv_path, ingest_json, ingest_json_path,
    IngestOutcome, RejectedRow,
};
pub use registry::{
    ConstantsProvenance, ConstantsRegistry, RegistryEntry, BUILTIN_LABEL, REGISTRY_DIR_ENV,
};
pub use report::{mainstream_models, render_table, ModelEntry, RenderedTable, ReportKind};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::law::{FactorPoint, LawError, ScalingConstants};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}` (schema is N,D,Na,G,S,loss plus optional id,tags)")]
    UnexpectedColumn(String),
    #[error("all {0} data rows failed validation")]
    AllRowsRejected(usize),
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("unknown constants label `{0}`")]
    UnknownLabel(String),
    #[error("`{0}` is a built-in constants entry and cannot be overwritten")]
    ImmutableLabel(String),
    #[error("invalid label `{0}`: use only letters, digits, `.`, `_`, `-`")]
    InvalidLabel(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Law(#[from] LawError),
}

/// One observed (configuration, loss) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub id: String,
    #[serde(flatten)]
    pub point: FactorPoint,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, String>,
}

impl ExperimentRecord {
    pub fn new(id: impl Into<String>, point: FactorPoint, loss: f64) -> Result<Self, StoreError> {
        let record = Self {
            id: id.into(),
            point,
            loss,
            tags: BTreeMap::new(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        self.point.validate()?;
        if !(self.loss > 0.0 && self.loss.is_finite()) {
            return Err(StoreError::Invalid(format!(
                "record `{}`: loss {} must be positive",
                self.id, self.loss
            )));
        }
        Ok(())
    }

    pub fn with_tag(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.tags.insert(key.into(), value.into());
        self
    }
}

/// Where a campaign's records came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Ingested,
    Synthetic {
        constants: ScalingConstants,
        sigma: f64,
        seed: u64,
    },
}

/// Per-factor `[min, max]` over the records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRanges {
    pub n: (f64, f64),
    pub d: (f64, f64),
    pub na: (f64, f64),
    pub g: (f64, f64),
    pub s: (f64, f64),
}

/// An immutable batch of validated records with its factor hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub records: Vec<ExperimentRecord>,
    pub provenance: Provenance,
    pub ranges: FactorRanges,
}

impl Campaign {
    /// Validates every record, id uniqueness, and computes the hull.
    pub fn from_records(
        records: Vec<ExperimentRecord>,
        provenance: Provenance,
    ) -> Result<Self, StoreError> {
        if records.is_empty() {
            return Err(StoreError::Invalid(
                "a campaign needs at least one record".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for record in &records {
            record.validate()?;
            if !seen.insert(record.id.as_str()) {
                return Err(StoreError::DuplicateId(record.id.clone()));
            }
        }
        let ranges = hull(&records);
        Ok(Self {
            records,
            provenance,
            ranges,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records carrying `key=value` in their tags.
    pub fn tagged(&self, key: &str, value: &str) -> Vec<&ExperimentRecord> {
        self.records
            .iter()
            .filter(|r| r.tags.get(key).map(String::as_str) == Some(value))
            .collect()
    }
}

fn hull(records: &[ExperimentRecord]) -> FactorRanges {
    let fold = |get: fn(&FactorPoint) -> f64| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in records {
            let v = get(&r.point);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    FactorRanges {
        n: fold(|p| p.n),
        d: fold(|p| p.d),
        na: fold(|p| p.na),
        g: fold(|p| p.g),
        s: fold(|p| p.s),
    }
}
