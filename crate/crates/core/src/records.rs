//! Canonical record types shared across ingestion, indexing, and evaluation.
//!
//! A founder profile is fully normalized at ingest time: free-text degree and
//! major strings are already collapsed to the small categorical codes used by
//! the similarity formula, and prior employment is flattened to a single
//! display string. Downstream stages never re-derive these fields.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Highest degree level, 0..=3.
pub type DegreeLevel = u8;

/// Major category code, 0..=11.
pub type MajorCategory = u8;

/// Number of major categories recognized by the mapper.
pub const MAJOR_CATEGORY_COUNT: u8 = 12;

/// Maximum degree level (PhD).
pub const MAX_DEGREE_LEVEL: u8 = 3;

/// Class label attached to every historical record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    /// Stable lowercase identifier used in files and CLI flags.
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
        }
    }

    /// Human-facing label used when rendering case panels into prompts.
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Success => "Successful",
            Outcome::Failure => "Unsuccessful",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "success" | "successful" => Ok(Outcome::Success),
            "failure" | "failed" | "unsuccessful" => Ok(Outcome::Failure),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A normalized founder profile without any outcome label.
///
/// This is the shape used both for historical records (wrapped in
/// [`FounderRecord`]) and for ad-hoc query profiles being evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FounderProfile {
    /// Stable unique identifier (the source URL for ingested rows).
    pub id: String,
    /// Free-text biography / self description.
    pub description: String,
    /// Highest degree level: 0 = none reported, 1 = bachelors, 2 = masters, 3 = PhD.
    pub highest_degree: DegreeLevel,
    /// Whether any reported school is on the top-institution list.
    pub top_institution: bool,
    /// Set of major category codes across all degree-awarding subjects.
    pub majors: BTreeSet<MajorCategory>,
    /// Prior employment flattened to one comma-separated display string.
    pub prior_jobs: String,
}

impl FounderProfile {
    /// Checks the categorical fields are within range.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("founder id is empty".into());
        }
        if self.highest_degree > MAX_DEGREE_LEVEL {
            return Err(format!(
                "highest_degree {} out of range 0..={MAX_DEGREE_LEVEL}",
                self.highest_degree
            ));
        }
        if let Some(bad) = self.majors.iter().find(|m| **m >= MAJOR_CATEGORY_COUNT) {
            return Err(format!(
                "major category {bad} out of range 0..={}",
                MAJOR_CATEGORY_COUNT - 1
            ));
        }
        Ok(())
    }

    /// Text embedded for the employment-history vector. Empty histories are
    /// embedded as the literal word "none" so every profile has a vector.
    pub fn jobs_embedding_text(&self) -> &str {
        let trimmed = self.prior_jobs.trim();
        if trimmed.is_empty() {
            "none"
        } else {
            trimmed
        }
    }

    /// Renders the profile in the labelled block format used inside prompts
    /// and reports.
    pub fn display_text(&self) -> String {
        let majors = if self.majors.is_empty() {
            "N/A".to_string()
        } else {
            self.majors
                .iter()
                .map(|m| major_category_name(*m))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let jobs = if self.prior_jobs.trim().is_empty() {
            "N/A"
        } else {
            self.prior_jobs.trim()
        };
        format!(
            "Founder description: {}\n\
             Highest level of degree obtained: {}\n\
             Did the founder go to a top university: {}\n\
             The subjects studied at university (only degree awarding subjects): {}\n\
             The jobs worked prior to founding: {}",
            if self.description.trim().is_empty() {
                "N/A"
            } else {
                self.description.trim()
            },
            degree_level_name(self.highest_degree),
            if self.top_institution { "Yes" } else { "No" },
            majors,
            jobs,
        )
    }
}

/// A founder profile with its known outcome; the unit stored in the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FounderRecord {
    #[serde(flatten)]
    pub profile: FounderProfile,
    pub outcome: Outcome,
}

/// A company/idea description with its known outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdeaRecord {
    /// Stable unique identifier.
    pub id: String,
    /// Free-text description of what the company does.
    pub description: String,
    pub outcome: Outcome,
}

impl IdeaRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("idea id is empty".into());
        }
        if self.description.trim().is_empty() {
            return Err(format!("idea `{}` has an empty description", self.id));
        }
        Ok(())
    }
}

/// Display name for a degree level.
pub fn degree_level_name(level: DegreeLevel) -> &'static str {
    match level {
        0 => "N/A",
        1 => "Bachelors",
        2 => "Masters",
        3 => "PhD",
        _ => "N/A",
    }
}

/// Display name for a major category code.
pub fn major_category_name(category: MajorCategory) -> &'static str {
    match category {
        0 => "Mathematics",
        1 => "Life Sciences",
        2 => "Chemistry & Medicine",
        3 => "Finance & Economics",
        4 => "Business & Management",
        5 => "Sales & Marketing",
        6 => "Computer Science & Technology",
        7 => "Arts & Humanities",
        8 => "Social Sciences & Law",
        9 => "Architecture & Design",
        10 => "Engineering & Physical Sciences",
        11 => "Military",
        _ => "Unknown",
    }
}
