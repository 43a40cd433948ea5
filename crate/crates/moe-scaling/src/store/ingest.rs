//! CSV and JSON ingestion/export for experiment campaigns.
//!
//! CSV schema (exact header names): `N,D,Na,G,S,loss` plus optional `id` and
//! `tags` (`key=value` pairs joined by `;`). JSON mirrors the same field
//! names. Row-level failures are collected rather than fatal; identical
//! factor points are merged by averaging their losses, keeping a `count`
//! tag.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Campaign, ExperimentRecord, Provenance, StoreError};
use crate::law::FactorPoint;

/// Result of an ingestion run: the surviving campaign plus per-row
/// diagnostics.
#[derive(Debug)]
pub struct IngestOutcome {
    pub campaign: Campaign,
    pub rejected: Vec<RejectedRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based data row number (excluding the header).
    pub row: usize,
    pub reason: String,
}

const REQUIRED: [&str; 6] = ["N", "D", "Na", "G", "S", "loss"];
const OPTIONAL: [&str; 2] = ["id", "tags"];

pub fn ingest_csv_path(path: impl AsRef<Path>) -> Result<IngestOutcome, StoreError> {
    ingest_csv(std::fs::File::open(path)?)
}

pub fn ingest_csv(reader: impl Read) -> Result<IngestOutcome, StoreError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    for required in REQUIRED {
        if !names.contains(&required) {
            return Err(StoreError::MissingColumn(required.into()));
        }
    }
    for name in &names {
        if !REQUIRED.contains(name) && !OPTIONAL.contains(name) {
            return Err(StoreError::UnexpectedColumn((*name).into()));
        }
    }
    let col = |name: &str| names.iter().position(|n| *n == name);
    let idx: Vec<usize> = REQUIRED.iter().map(|n| col(n).unwrap()).collect();
    let id_col = col("id");
    let tags_col = col("tags");

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    let mut total = 0usize;
    for (row_number, row) in csv_reader.records().enumerate() {
        total += 1;
        let display_row = row_number + 1;
        let mut reject = |reason: String| {
            rejected.push(RejectedRow {
                row: display_row,
                reason,
            })
        };
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                reject(e.to_string());
                continue;
            }
        };
        let mut values = [0.0f64; 6];
        let mut bad = None;
        for (slot, &column) in idx.iter().enumerate() {
            match row.get(column).unwrap_or("").trim().parse::<f64>() {
                Ok(v) => values[slot] = v,
                Err(_) => {
                    bad = Some(format!(
                        "column {} is not a number: `{}`",
                        REQUIRED[slot],
                        row.get(column).unwrap_or("")
                    ));
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            reject(reason);
            continue;
        }
        let [n, d, na, g, s, loss] = values;
        let id = id_col
            .and_then(|c| row.get(c))
            .filter(|v| !v.is_empty())
            .map(str::to_owned)
            .unwrap_or_else(|| format!("row-{display_row}"));
        let tags = tags_col
            .and_then(|c| row.get(c))
            .map(parse_tags)
            .unwrap_or_default();
        rows.push(RawRow {
            row: display_row,
            id,
            n,
            d,
            na,
            g,
            s,
            loss,
            tags,
        });
    }
    build_outcome(rows, rejected, total)
}

pub fn ingest_json_path(path: impl AsRef<Path>) -> Result<IngestOutcome, StoreError> {
    ingest_json(std::fs::File::open(path)?)
}

/// JSON campaigns are either a full campaign document (as produced by
/// [`export_json`]) or a bare array of records.
pub fn ingest_json(reader: impl Read) -> Result<IngestOutcome, StoreError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Doc {
        Campaign { records: Vec<JsonRecord> },
        Records(Vec<JsonRecord>),
    }
    let doc: Doc = serde_json::from_reader(reader)?;
    let records = match doc {
        Doc::Campaign { records } | Doc::Records(records) => records,
    };
    let total = records.len();
    let rows = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| RawRow {
            row: i + 1,
            id: r.id.unwrap_or_else(|| format!("row-{}", i + 1)),
            n: r.n,
            d: r.d,
            na: r.na,
            g: r.g,
            s: r.s,
            loss: r.loss,
            tags: r.tags,
        })
        .collect();
    build_outcome(rows, Vec::new(), total)
}

#[derive(Deserialize)]
struct JsonRecord {
    #[serde(default)]
    id: Option<String>,
    #[serde(rename = "N")]
    n: f64,
    #[serde(rename = "D")]
    d: f64,
    #[serde(rename = "Na")]
    na: f64,
    #[serde(rename = "G")]
    g: f64,
    #[serde(rename = "S")]
    s: f64,
    loss: f64,
    #[serde(default)]
    tags: BTreeMap<String, String>,
}

struct RawRow {
    row: usize,
    id: String,
    n: f64,
    d: f64,
    na: f64,
    g: f64,
    s: f64,
    loss: f64,
    tags: BTreeMap<String, String>,
}

fn build_outcome(
    rows: Vec<RawRow>,
    mut rejected: Vec<RejectedRow>,
    total: usize,
) -> Result<IngestOutcome, StoreError> {
    let mut warnings = Vec::new();
    // merge identical factor points, averaging the observed losses
    struct Merged {
        record: ExperimentRecord,
        sum: f64,
        count: usize,
    }
    let mut merged: Vec<Merged> = Vec::new();
    for raw in rows {
        let point = match FactorPoint::new(raw.n, raw.d, raw.na, raw.g, raw.s) {
            Ok(p) => p,
            Err(e) => {
                rejected.push(RejectedRow {
                    row: raw.row,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !(raw.loss > 0.0 && raw.loss.is_finite()) {
            rejected.push(RejectedRow {
                row: raw.row,
                reason: format!("loss {} must be positive", raw.loss),
            });
            continue;
        }
        if raw.n < 1e6 {
            warnings.push(format!(
                "row {}: N = {} is below 1e6 parameters; suspect units",
                raw.row, raw.n
            ));
        }
        if raw.d < 1e8 {
            warnings.push(format!(
                "row {}: D = {} is below 1e8 tokens; suspect units",
                raw.row, raw.d
            ));
        }
        match merged.iter_mut().find(|m| m.record.point == point) {
            Some(m) => {
                m.sum += raw.loss;
                m.count += 1;
                m.record.loss = m.sum / m.count as f64;
                m.record.tags.insert("count".into(), m.count.to_string());
            }
            None => {
                // an incoming `count` tag (from a previously merged export)
                // is preserved unless this ingest merges the point again
                let record = ExperimentRecord {
                    id: raw.id,
                    point,
                    loss: raw.loss,
                    tags: raw.tags,
                };
                merged.push(Merged {
                    record,
                    sum: raw.loss,
                    count: 1,
                });
            }
        }
    }
    if merged.is_empty() {
        if total == 0 {
            return Err(StoreError::Invalid("the file has no data rows".into()));
        }
        return Err(StoreError::AllRowsRejected(total));
    }
    // duplicate ids can survive merging distinct points; disambiguate
    let mut seen = std::collections::BTreeMap::<String, usize>::new();
    let mut records = Vec::with_capacity(merged.len());
    for m in merged {
        let mut record = m.record;
        let n = seen.entry(record.id.clone()).or_insert(0);
        if *n > 0 {
            warnings.push(format!("duplicate id `{}` renamed", record.id));
            record.id = format!("{}#{}", record.id, n);
        }
        *n += 1;
        records.push(record);
    }
    Ok(IngestOutcome {
        campaign: Campaign::from_records(records, Provenance::Ingested)?,
        rejected,
        warnings,
    })
}

fn parse_tags(raw: &str) -> BTreeMap<String, String> {
    raw.split(';')
        .filter(|part| !part.is_empty())
        .filter_map(|part| {
            part.split_once('=')
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        })
        .collect()
}

fn format_tags(tags: &BTreeMap<String, String>) -> String {
    tags.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn export_csv(campaign: &Campaign, writer: impl Write) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["N", "D", "Na", "G", "S", "loss", "id", "tags"])?;
    for r in &campaign.records {
        w.write_record([
            r.point.n.to_string(),
            r.point.d.to_string(),
            r.point.na.to_string(),
            r.point.g.to_string(),
            r.point.s.to_string(),
            r.loss.to_string(),
            r.id.clone(),
            format_tags(&r.tags),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_json(campaign: &Campaign, writer: impl Write) -> Result<(), StoreError> {
    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: &'a Provenance,
        records: Vec<JsonOut<'a>>,
    }
    #[derive(Serialize)]
    struct JsonOut<'a> {
        id: &'a str,
        #[serde(rename = "N")]
        n: f64,
        #[serde(rename = "D")]
        d: f64,
        #[serde(rename = "Na")]
        na: f64,
        #[serde(rename = "G")]
        g: f64,
        #[serde(rename = "S")]
        s: f64,
        loss: f64,
        #[serde(skip_serializing_if = "BTreeMap::is_empty")]
        tags: &'a BTreeMap<String, String>,
    }
    let doc = Doc {
        provenance: &campaign.provenance,
        records: campaign
            .records
            .iter()
            .map(|r| JsonOut {
                id: &r.id,
                n: r.point.n,
                d: r.point.d,
                na: r.point.na,
                g: r.point.g,
                s: r.point.s,
                loss: r.loss,
                tags: &r.tags,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}
