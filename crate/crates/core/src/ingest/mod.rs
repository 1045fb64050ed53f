//! CSV ingestion: raw founder/company rows in, normalized records out.
//!
//! Input files are UTF-8 CSVs with a header row. Founder files carry
//! `linkedin_url` and `json_string` columns; company files carry `org_uuid`
//! and `long_description`. The outcome label is supplied per file (success
//! and failure datasets arrive as separate CSVs). Malformed rows never abort
//! a run: they are collected into a rejects list with a reason.

pub mod mapping;
pub mod profile;

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

pub use mapping::MappingConfig;
pub use profile::{EducationEntry, EmploymentEntry, ProfileSchema, RawProfile};

use crate::records::{FounderProfile, FounderRecord, IdeaRecord, Outcome};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} is missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("duplicate id `{id}` in {path}")]
    DuplicateId { id: String, path: String },
    #[error("invalid mapping config: {0}")]
    Config(String),
}

/// One unparsed founder row straight from the CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFounderRow {
    pub linkedin_url: String,
    pub json_string: String,
}

/// A row that could not be used, with the reason it was set aside.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RejectedRow {
    /// Source file the row came from.
    pub source: String,
    /// 1-based CSV record number (excluding the header).
    pub row: u64,
    /// Row identifier when one could be read, otherwise empty.
    pub id: String,
    pub reason: String,
}

/// Parse output: usable rows plus the rejects sidecar.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub rows: Vec<T>,
    pub rejects: Vec<RejectedRow>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            rows: Vec::new(),
            rejects: Vec::new(),
        }
    }
}

/// Reads a founder CSV into raw rows.
///
/// Rows with an empty profile blob are rejected with reason "empty profile";
/// rows the CSV layer cannot decode are rejected with the decoder's message.
/// A duplicate `linkedin_url` is a fatal error: it breaks record identity.
pub fn parse_founder_csv(path: &Path) -> Result<Parsed<RawFounderRow>, IngestError> {
    let display = path.display().to_string();
    let mut reader = open_csv(path)?;
    let header = reader.headers().map_err(|e| IngestError::Csv {
        path: display.clone(),
        source: e,
    })?;
    let url_col = find_column(header, "linkedin_url", &display)?;
    let json_col = find_column(header, "json_string", &display)?;

    let mut parsed = Parsed::default();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row_number = i as u64 + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                parsed.rejects.push(RejectedRow {
                    source: display.clone(),
                    row: row_number,
                    id: String::new(),
                    reason: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let url = record.get(url_col).unwrap_or("").trim().to_string();
        let json = record.get(json_col).unwrap_or("").to_string();
        if url.is_empty() {
            parsed.rejects.push(RejectedRow {
                source: display.clone(),
                row: row_number,
                id: String::new(),
                reason: "empty linkedin_url".into(),
            });
            continue;
        }
        if !seen.insert(url.clone()) {
            return Err(IngestError::DuplicateId {
                id: url,
                path: display,
            });
        }
        if json.trim().is_empty() {
            parsed.rejects.push(RejectedRow {
                source: display.clone(),
                row: row_number,
                id: url,
                reason: "empty profile".into(),
            });
            continue;
        }
        parsed.rows.push(RawFounderRow {
            linkedin_url: url,
            json_string: json,
        });
    }
    Ok(parsed)
}

/// Reads a company CSV directly into labelled idea records.
pub fn parse_company_csv(path: &Path, outcome: Outcome) -> Result<Parsed<IdeaRecord>, IngestError> {
    let display = path.display().to_string();
    let mut reader = open_csv(path)?;
    let header = reader.headers().map_err(|e| IngestError::Csv {
        path: display.clone(),
        source: e,
    })?;
    let id_col = find_column(header, "org_uuid", &display)?;
    let desc_col = find_column(header, "long_description", &display)?;

    let mut parsed = Parsed::default();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row_number = i as u64 + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                parsed.rejects.push(RejectedRow {
                    source: display.clone(),
                    row: row_number,
                    id: String::new(),
                    reason: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        let description = record.get(desc_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            parsed.rejects.push(RejectedRow {
                source: display.clone(),
                row: row_number,
                id: String::new(),
                reason: "empty org_uuid".into(),
            });
            continue;
        }
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId { id, path: display });
        }
        if description.is_empty() {
            parsed.rejects.push(RejectedRow {
                source: display.clone(),
                row: row_number,
                id,
                reason: "empty description".into(),
            });
            continue;
        }
        parsed.rows.push(IdeaRecord {
            id,
            description,
            outcome,
        });
    }
    Ok(parsed)
}

/// Normalizes one raw founder row into a record, applying the degree,
/// subject, and top-institution mappings.
///
/// Returns `Err` with a reject reason when the profile blob is unusable.
pub fn normalize_founder(
    row: &RawFounderRow,
    config: &MappingConfig,
    outcome: Outcome,
) -> Result<FounderRecord, String> {
    let raw = profile::extract_profile(&row.json_string, config.profile_schema())?;
    let highest_degree = raw
        .education
        .iter()
        .map(|e| config.map_degree(&e.degree))
        .max()
        .unwrap_or(0);
    let top_institution = raw
        .education
        .iter()
        .any(|e| config.is_top_institution(&e.school));
    // Only subjects from degree-awarding entries count toward majors; an
    // entry qualifies when it lists any degree text at all.
    let mut majors = std::collections::BTreeSet::new();
    for entry in &raw.education {
        if entry.degree.trim().is_empty() {
            continue;
        }
        majors.extend(config.map_subjects(&entry.field));
    }
    Ok(FounderRecord {
        profile: FounderProfile {
            id: row.linkedin_url.clone(),
            description: raw.description.clone(),
            highest_degree,
            top_institution,
            majors,
            prior_jobs: raw.prior_jobs_text(),
        },
        outcome,
    })
}

/// Parses and normalizes a founder CSV in one pass. Rows whose profile blob
/// fails to parse join the rejects list rather than aborting the run.
pub fn ingest_founder_csv(
    path: &Path,
    outcome: Outcome,
    config: &MappingConfig,
) -> Result<Parsed<FounderRecord>, IngestError> {
    let raw = parse_founder_csv(path)?;
    let display = path.display().to_string();
    let mut out = Parsed {
        rows: Vec::with_capacity(raw.rows.len()),
        rejects: raw.rejects,
    };
    for (i, row) in raw.rows.iter().enumerate() {
        match normalize_founder(row, config, outcome) {
            Ok(rec) => out.rows.push(rec),
            Err(reason) => out.rejects.push(RejectedRow {
                source: display.clone(),
                row: i as u64 + 1,
                id: row.linkedin_url.clone(),
                reason,
            }),
        }
    }
    Ok(out)
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(file))
}

fn find_column(
    header: &csv::StringRecord,
    name: &str,
    path: &str,
) -> Result<usize, IngestError> {
    header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::MissingColumn {
            path: path.to_string(),
            column: name.to_string(),
        })
}
