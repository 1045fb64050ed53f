//! The evaluation report: one JSON document per run, renderable as a
//! human-readable narrative.
//!
//! Reports are built to be reproducible: with a replayed session the JSON is
//! byte-stable, so `created_at` (the only wall-clock field) is set by the
//! caller and omitted entirely when absent. Scores keep full precision in
//! JSON and render with two decimals in the narrative.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::NeighborSelection;
use crate::llm::StageTag;
use crate::pipeline::parse::{FeatureList, ProsConsEntry, StepRating};
use crate::records::FounderProfile;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported report schema version {found} (supported: {supported})")]
    SchemaVersionMismatch { found: u64, supported: u32 },
    #[error("malformed report: {0}")]
    Malformed(String),
}

/// What the evaluation was asked about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    pub founder: FounderProfile,
    pub idea_text: String,
}

/// The four scores; `None` marks a stage the run did not reach.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportScores {
    pub founder: Option<f64>,
    pub idea: Option<f64>,
    pub fit: Option<f64>,
    pub aggregate: Option<f64>,
}

/// One prompt/response pair, stripped of timing so reports stay byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptReport {
    pub stage: StageTag,
    pub prompt_text: String,
    pub response_text: String,
}

/// Where and why a failed run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedError {
    pub stage: StageTag,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    /// RFC 3339 timestamp, set by the caller; never set inside the library.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_at: Option<String>,
    pub config_hash: String,
    pub inputs: ReportInputs,
    /// Completed stages in canonical pipeline order.
    pub stage_log: Vec<String>,
    pub founder_panel: Option<NeighborSelection>,
    pub idea_panel: Option<NeighborSelection>,
    pub founder_features: Option<FeatureList>,
    pub idea_features: Option<FeatureList>,
    pub founder_steps: Option<Vec<StepRating>>,
    pub idea_steps: Option<Vec<StepRating>>,
    pub fit_steps: Option<Vec<StepRating>>,
    /// Mean of the per-step expert means; a diagnostic, never a substitute
    /// for the extracted score.
    pub founder_step_mean: Option<f64>,
    pub idea_step_mean: Option<f64>,
    pub scores: ReportScores,
    pub pros_cons: Vec<ProsConsEntry>,
    pub transcripts: Vec<TranscriptReport>,
    pub deviations: Vec<String>,
    pub warnings: Vec<String>,
    pub error: Option<ReportedError>,
}

impl EvaluationReport {
    pub fn new(founder: FounderProfile, idea_text: String, config_hash: String) -> Self {
        EvaluationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            created_at: None,
            config_hash,
            inputs: ReportInputs { founder, idea_text },
            stage_log: Vec::new(),
            founder_panel: None,
            idea_panel: None,
            founder_features: None,
            idea_features: None,
            founder_steps: None,
            idea_steps: None,
            fit_steps: None,
            founder_step_mean: None,
            idea_step_mean: None,
            scores: ReportScores::default(),
            pros_cons: Vec::new(),
            transcripts: Vec::new(),
            deviations: Vec::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report always serializes");
        text.push('\n');
        text
    }

    /// Parses a stored report, checking the schema version before anything
    /// else so version skew gets a precise error.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| ReportError::Malformed("missing schema_version".into()))?;
        if found != u64::from(REPORT_SCHEMA_VERSION) {
            return Err(ReportError::SchemaVersionMismatch {
                found,
                supported: REPORT_SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| ReportError::Malformed(e.to_string()))
    }

    /// Renders the narrative view: the run retold in the order it executed,
    /// with two-decimal scores.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Founder–idea evaluation\n\n");
        let _ = writeln!(out, "Business idea: {}", self.inputs.idea_text.trim());
        out.push('\n');
        out.push_str(self.inputs.founder.display_text().trim_end());
        out.push_str("\n\nAnalysing founder\nSearching nearest founders...\n");
        push_panel(&mut out, &self.founder_panel);
        out.push_str("Generating successful features...\n");
        push_features(&mut out, &self.founder_features);
        out.push_str("Evaluating founder...\n");
        let _ = writeln!(out, "Founder score: {}", fmt_score(self.scores.founder));
        out.push_str("\nAnalysing idea\nSearching nearest ideas...\n");
        push_panel(&mut out, &self.idea_panel);
        out.push_str("Generating successful features...\n");
        push_features(&mut out, &self.idea_features);
        out.push_str("Evaluating idea...\n");
        let _ = writeln!(out, "Idea score: {}", fmt_score(self.scores.idea));
        out.push_str("\nCalculating founder idea fit...\n");
        let _ = writeln!(out, "Fit score: {}", fmt_score(self.scores.fit));
        let _ = writeln!(out, "Aggregated score: {}", fmt_score(self.scores.aggregate));

        if self.founder_step_mean.is_some() || self.idea_step_mean.is_some() {
            out.push_str("\n## Step-rating diagnostics\n\n");
            if let Some(mean) = self.founder_step_mean {
                let _ = writeln!(out, "- founder per-step mean: {mean:.2} (diagnostic only)");
            }
            if let Some(mean) = self.idea_step_mean {
                let _ = writeln!(out, "- idea per-step mean: {mean:.2} (diagnostic only)");
            }
        }
        if !self.pros_cons.is_empty() {
            out.push_str("\n## Pros and cons\n");
            for entry in &self.pros_cons {
                let _ = writeln!(out, "\n{}", entry.subject_id);
                if !entry.pros.is_empty() {
                    out.push_str("Pros:\n");
                    for p in &entry.pros {
                        let _ = writeln!(out, "- {p}");
                    }
                }
                if !entry.cons.is_empty() {
                    out.push_str("Cons:\n");
                    for c in &entry.cons {
                        let _ = writeln!(out, "- {c}");
                    }
                }
            }
        }
        if !self.deviations.is_empty() {
            out.push_str("\n## Deviations\n\n");
            for d in &self.deviations {
                let _ = writeln!(out, "- {d}");
            }
        }
        if !self.warnings.is_empty() {
            out.push_str("\n## Warnings\n\n");
            for w in &self.warnings {
                let _ = writeln!(out, "- {w}");
            }
        }
        if let Some(err) = &self.error {
            out.push_str("\n## Error\n\n");
            let _ = writeln!(
                out,
                "The run stopped at stage `{}`: {}",
                err.stage, err.message
            );
        }
        out
    }
}

fn fmt_score(score: Option<f64>) -> String {
    match score {
        Some(s) => format!("{s:.2}"),
        None => "not computed".into(),
    }
}

fn push_panel(out: &mut String, panel: &Option<NeighborSelection>) {
    match panel {
        Some(selection) => {
            for m in &selection.panel {
                let _ = writeln!(
                    out,
                    "- {} ({}), similarity {:.4}",
                    m.record_id,
                    m.outcome.label(),
                    m.score
                );
            }
        }
        None => out.push_str("(not reached)\n"),
    }
}

fn push_features(out: &mut String, features: &Option<FeatureList>) {
    match features {
        Some(list) => {
            for (i, item) in list.items.iter().enumerate() {
                let _ = writeln!(out, "{}. {item}", i + 1);
            }
        }
        None => out.push_str("(not reached)\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ScoredMatch;
    use crate::records::Outcome;

    fn sample_report() -> EvaluationReport {
        let founder = FounderProfile {
            id: "query".into(),
            description: "repeat operator in market data".into(),
            highest_degree: 2,
            top_institution: false,
            majors: [3u8].into_iter().collect(),
            prior_jobs: "Exchangery(Financial services) as Cofounder".into(),
        };
        let mut report =
            EvaluationReport::new(founder, "organic commodities data platform".into(), "abc123".into());
        report.founder_panel = Some(NeighborSelection {
            successes: vec![],
            failures: vec![],
            panel: vec![ScoredMatch {
                record_id: "founder-1".into(),
                score: 2.2,
                outcome: Outcome::Success,
            }],
        });
        report.founder_features = Some(FeatureList {
            items: vec!["Relevant industry experience".into(), "Serial founder".into()],
        });
        report.scores = ReportScores {
            founder: Some(0.71),
            idea: Some(0.6625),
            fit: Some(0.63),
            aggregate: Some(0.663_466),
        };
        report.stage_log = vec!["retrieve-founders".into(), "aggregate".into()];
        report
    }

    #[test]
    fn json_round_trips_and_ends_with_newline() {
        let report = sample_report();
        let json = report.to_json();
        assert!(json.ends_with('\n'));
        let back = EvaluationReport::from_json(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn created_at_is_omitted_until_set() {
        let mut report = sample_report();
        assert!(!report.to_json().contains("created_at"));
        report.created_at = Some("2021-01-01T00:00:00Z".into());
        assert!(report.to_json().contains("created_at"));
    }

    #[test]
    fn schema_version_is_checked_first() {
        let mut report = sample_report();
        report.schema_version = 99;
        let json = serde_json::to_string(&report).unwrap();
        match EvaluationReport::from_json(&json) {
            Err(ReportError::SchemaVersionMismatch { found: 99, supported }) => {
                assert_eq!(supported, REPORT_SCHEMA_VERSION)
            }
            other => panic!("expected version mismatch, got {other:?}"),
        }
        assert!(EvaluationReport::from_json("not json").is_err());
        assert!(EvaluationReport::from_json("{}").is_err());
    }

    #[test]
    fn markdown_carries_the_score_labels_at_two_decimals() {
        let text = sample_report().to_markdown();
        assert!(text.contains("Founder score: 0.71"));
        assert!(text.contains("Idea score: 0.66"));
        assert!(text.contains("Fit score: 0.63"));
        assert!(text.contains("Aggregated score: 0.66"));
        assert!(text.contains("Searching nearest founders..."));
        assert!(text.contains("founder-1 (Successful)"));
        assert!(text.contains("1. Relevant industry experience"));
    }

    #[test]
    fn unreached_stages_render_as_not_computed() {
        let mut report = sample_report();
        report.scores.fit = None;
        report.scores.aggregate = None;
        report.error = Some(ReportedError {
            stage: StageTag::FitRating,
            message: "backend unavailable".into(),
        });
        let text = report.to_markdown();
        assert!(text.contains("Fit score: not computed"));
        assert!(text.contains("stopped at stage `fit_rating`"));
    }
}
