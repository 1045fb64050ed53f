//! Keyword taxonomies that collapse free-text degrees and majors into the
//! categorical codes used by the similarity formula.
//!
//! Matching is case-insensitive substring matching. Degree abbreviations
//! (keywords of four characters or fewer, or containing periods, e.g. `ma`,
//! `bs`, `b.a.`) additionally require word boundaries so that `ma` cannot fire
//! inside `information` or `diploma`. Subject keywords are deliberately
//! truncated stems (`bio`, `chemi`, `medic`) and always match as plain
//! substrings so that `biology`, `chemistry`, and `medicine` are caught.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::profile::ProfileSchema;
use super::IngestError;
use crate::records::{DegreeLevel, MajorCategory, MAJOR_CATEGORY_COUNT, MAX_DEGREE_LEVEL};

/// Default degree keywords in table order: (keyword, level).
const DEGREE_TABLE: &[(&str, DegreeLevel)] = &[
    ("bachelor", 1),
    ("beng", 1),
    ("b.a.", 1),
    ("b.a", 1),
    ("bs", 1),
    ("master", 2),
    ("msc", 2),
    ("m.sc", 2),
    ("m.sc.", 2),
    ("ma", 2),
    ("m.a.", 2),
    ("meng", 2),
    ("mba", 2),
    ("phd", 3),
    ("doctor of philosophy", 3),
];

/// Default subject keywords in table order: (keyword, category).
/// `system` intentionally appears under both 6 and 10, and `film` twice
/// under 7; the duplicates are kept verbatim.
const SUBJECT_TABLE: &[(&str, MajorCategory)] = &[
    ("math", 0),
    ("quant", 0),
    ("bio", 1),
    ("molecular", 1),
    ("cellular", 1),
    ("developmental", 1),
    ("physiology", 1),
    ("anatomy", 1),
    ("immunology", 1),
    ("genetics", 1),
    ("chemi", 2),
    ("medic", 2),
    ("pharmacology", 2),
    ("accounting", 3),
    ("banking", 3),
    ("actuarial science", 3),
    ("finance", 3),
    ("economics", 3),
    ("business", 4),
    ("management", 4),
    ("entrepreneurship", 4),
    ("hotel", 4),
    ("leadership", 4),
    ("sales", 5),
    ("distribution", 5),
    ("marketing", 5),
    ("computer", 6),
    ("machine learning", 6),
    ("artificial intelligence", 6),
    ("hci", 6),
    ("software engineer", 6),
    ("telecommunications", 6),
    ("system", 6),
    ("information", 6),
    ("technology", 6),
    ("english", 7),
    ("arts", 7),
    ("digital media", 7),
    ("film", 7),
    ("history", 7),
    ("journalism", 7),
    ("philosophy", 7),
    ("multimedia", 7),
    ("counseling", 7),
    ("directing", 7),
    ("film", 7),
    ("liberal", 7),
    ("political", 8),
    ("sociology", 8),
    ("law", 8),
    ("consulting", 8),
    ("architecture", 9),
    ("design", 9),
    ("urban planning", 9),
    ("engineer", 10),
    ("robotics", 10),
    ("mechanical", 10),
    ("system", 10),
    ("electrical", 10),
    ("physics", 10),
    ("military", 11),
];

/// Bundled default list of top institutions, one per line.
const DEFAULT_TOP_INSTITUTIONS: &str = include_str!("../../data/top_institutions.txt");

/// Keyword taxonomies plus the top-institution list and profile field map.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingConfig {
    degree_keywords: Vec<(String, DegreeLevel)>,
    subject_keywords: Vec<(String, MajorCategory)>,
    top_institutions: Vec<String>,
    profile_schema: ProfileSchema,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            degree_keywords: DEGREE_TABLE
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            subject_keywords: SUBJECT_TABLE
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            top_institutions: parse_institution_list(DEFAULT_TOP_INSTITUTIONS),
            profile_schema: ProfileSchema::default(),
        }
    }
}

/// Serialized form: keyword lists grouped by level/category so the config
/// file reads like the original tables.
#[derive(Debug, Serialize, Deserialize)]
struct MappingConfigFile {
    #[serde(default)]
    degree_keywords: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    subject_keywords: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    top_institutions: Vec<String>,
    #[serde(default)]
    profile_schema: ProfileSchema,
}

impl MappingConfig {
    /// Parses a config from TOML text. Missing sections fall back to the
    /// bundled defaults so a file can override just one table.
    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        let file: MappingConfigFile =
            toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        let defaults = MappingConfig::default();
        let degree_keywords = if file.degree_keywords.is_empty() {
            defaults.degree_keywords
        } else {
            flatten_grouped(&file.degree_keywords, "level_", MAX_DEGREE_LEVEL)?
        };
        let subject_keywords = if file.subject_keywords.is_empty() {
            defaults.subject_keywords
        } else {
            flatten_grouped(&file.subject_keywords, "category_", MAJOR_CATEGORY_COUNT - 1)?
        };
        let top_institutions = if file.top_institutions.is_empty() {
            defaults.top_institutions
        } else {
            file.top_institutions
                .iter()
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect()
        };
        Ok(MappingConfig {
            degree_keywords,
            subject_keywords,
            top_institutions,
            profile_schema: file.profile_schema,
        })
    }

    /// Loads a config from a TOML file on disk.
    pub fn from_toml_file(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }

    /// Serializes the config to TOML (the shape `from_toml_str` accepts).
    pub fn to_toml_string(&self) -> String {
        let mut degree_keywords: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for level in 0..=MAX_DEGREE_LEVEL {
            degree_keywords.insert(format!("level_{level}"), Vec::new());
        }
        for (kw, level) in &self.degree_keywords {
            degree_keywords
                .entry(format!("level_{level}"))
                .or_default()
                .push(kw.clone());
        }
        let mut subject_keywords: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for cat in 0..MAJOR_CATEGORY_COUNT {
            subject_keywords.insert(format!("category_{cat:02}"), Vec::new());
        }
        for (kw, cat) in &self.subject_keywords {
            subject_keywords
                .entry(format!("category_{cat:02}"))
                .or_default()
                .push(kw.clone());
        }
        let file = MappingConfigFile {
            degree_keywords,
            subject_keywords,
            top_institutions: self.top_institutions.clone(),
            profile_schema: self.profile_schema.clone(),
        };
        toml::to_string_pretty(&file).expect("mapping config serializes")
    }

    /// Replaces the top-institution list with the contents of a text file
    /// (one name per line, `#` comments allowed).
    pub fn with_top_institutions_file(mut self, path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.top_institutions = parse_institution_list(&text);
        Ok(self)
    }

    pub fn profile_schema(&self) -> &ProfileSchema {
        &self.profile_schema
    }

    pub fn top_institutions(&self) -> &[String] {
        &self.top_institutions
    }

    /// Maps free degree text to the highest matching level; 0 when nothing
    /// matches.
    pub fn map_degree(&self, text: &str) -> DegreeLevel {
        let lower = text.to_lowercase();
        self.degree_keywords
            .iter()
            .filter(|(kw, _)| degree_keyword_matches(&lower, kw))
            .map(|(_, level)| *level)
            .max()
            .unwrap_or(0)
    }

    /// Maps free major text to the set of all matching categories.
    pub fn map_subjects(&self, text: &str) -> BTreeSet<MajorCategory> {
        let lower = text.to_lowercase();
        self.subject_keywords
            .iter()
            .filter(|(kw, _)| lower.contains(kw.as_str()))
            .map(|(_, cat)| *cat)
            .collect()
    }

    /// True when the school name contains any listed institution
    /// (case-insensitive substring).
    pub fn is_top_institution(&self, school: &str) -> bool {
        let lower = school.to_lowercase();
        if lower.trim().is_empty() {
            return false;
        }
        self.top_institutions.iter().any(|inst| lower.contains(inst))
    }
}

/// Degree abbreviations match only on word boundaries; longer keywords are
/// plain substrings.
fn degree_keyword_matches(text_lower: &str, keyword: &str) -> bool {
    if keyword.len() <= 4 || keyword.contains('.') {
        contains_bounded(text_lower, keyword)
    } else {
        text_lower.contains(keyword)
    }
}

/// Substring match where the occurrence is not adjacent to an ASCII
/// alphanumeric character on either side.
fn contains_bounded(text: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let bytes = text.as_bytes();
    text.match_indices(needle).any(|(start, _)| {
        let before_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        let end = start + needle.len();
        let after_ok = end >= bytes.len() || !bytes[end].is_ascii_alphanumeric();
        before_ok && after_ok
    })
}

fn parse_institution_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Expands `{prefix}{N} = ["kw", ...]` groups back into an ordered flat list.
fn flatten_grouped(
    groups: &BTreeMap<String, Vec<String>>,
    prefix: &str,
    max: u8,
) -> Result<Vec<(String, u8)>, IngestError> {
    let mut out = Vec::new();
    for (key, words) in groups {
        let suffix = key.strip_prefix(prefix).ok_or_else(|| {
            IngestError::Config(format!("unexpected mapping key `{key}`, want `{prefix}N`"))
        })?;
        let value: u8 = suffix
            .parse()
            .map_err(|_| IngestError::Config(format!("non-numeric mapping key `{key}`")))?;
        if value > max {
            return Err(IngestError::Config(format!(
                "mapping key `{key}` exceeds maximum {max}"
            )));
        }
        for w in words {
            let w = w.trim().to_lowercase();
            if !w.is_empty() {
                out.push((w, value));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_table_examples() {
        let cfg = MappingConfig::default();
        assert_eq!(cfg.map_degree("MBA"), 2);
        assert_eq!(cfg.map_degree(""), 0);
        assert_eq!(cfg.map_degree("Doctor of Philosophy in Physics"), 3);
        assert_eq!(cfg.map_degree("B.A. in History"), 1);
        assert_eq!(cfg.map_degree("Master of Science"), 2);
    }

    #[test]
    fn degree_abbreviations_respect_word_boundaries() {
        let cfg = MappingConfig::default();
        // `ma` must not fire inside longer words.
        assert_eq!(cfg.map_degree("Diploma"), 0);
        assert_eq!(cfg.map_degree("Information systems diploma"), 0);
        // ...but matches when standing alone or next to punctuation.
        assert_eq!(cfg.map_degree("MA"), 2);
        assert_eq!(cfg.map_degree("MA, Economics"), 2);
        assert_eq!(cfg.map_degree("(MA)"), 2);
        // `bs` bounded: does not fire inside `absolute`.
        assert_eq!(cfg.map_degree("absolute"), 0);
        assert_eq!(cfg.map_degree("BS"), 1);
    }

    #[test]
    fn map_degree_takes_highest_level() {
        let cfg = MappingConfig::default();
        assert_eq!(cfg.map_degree("BS, MBA and PhD"), 3);
        assert_eq!(cfg.map_degree("bachelor then master"), 2);
    }

    #[test]
    fn subject_examples_from_worked_cases() {
        let cfg = MappingConfig::default();
        assert_eq!(
            cfg.map_subjects("quantitative finance"),
            BTreeSet::from([0, 3])
        );
        assert_eq!(cfg.map_subjects("Spanish"), BTreeSet::new());
        assert_eq!(cfg.map_subjects("military history"), BTreeSet::from([7, 11]));
        assert_eq!(
            cfg.map_subjects("Math and Computer Science"),
            BTreeSet::from([0, 6])
        );
    }

    #[test]
    fn subject_stems_match_as_prefixes() {
        let cfg = MappingConfig::default();
        assert_eq!(cfg.map_subjects("Biology"), BTreeSet::from([1]));
        assert_eq!(cfg.map_subjects("Mathematics"), BTreeSet::from([0]));
        assert_eq!(cfg.map_subjects("Chemistry"), BTreeSet::from([2]));
        assert_eq!(cfg.map_subjects("Medicine"), BTreeSet::from([2]));
    }

    #[test]
    fn duplicated_subject_keywords_map_to_both_categories() {
        let cfg = MappingConfig::default();
        assert_eq!(cfg.map_subjects("Systems Engineering"), BTreeSet::from([6, 10]));
        assert_eq!(cfg.map_subjects("system"), BTreeSet::from([6, 10]));
    }

    #[test]
    fn top_institution_match_is_case_insensitive_substring() {
        let cfg = MappingConfig::default();
        assert!(cfg.is_top_institution("Stanford University"));
        assert!(cfg.is_top_institution("STANFORD UNIVERSITY - School of Engineering"));
        assert!(!cfg.is_top_institution("Unknown State College"));
        assert!(!cfg.is_top_institution("   "));
    }

    #[test]
    fn toml_round_trip_preserves_mappings() {
        let cfg = MappingConfig::default();
        let text = cfg.to_toml_string();
        let back = MappingConfig::from_toml_str(&text).unwrap();
        for (kw, level) in DEGREE_TABLE {
            assert_eq!(back.map_degree(kw), *level, "degree keyword {kw}");
        }
        assert_eq!(back.map_subjects("Math and Computer Science"), BTreeSet::from([0, 6]));
        assert_eq!(back.map_degree("Diploma"), 0);
    }

    #[test]
    fn partial_toml_falls_back_to_defaults() {
        let cfg = MappingConfig::from_toml_str(
            "[degree_keywords]\nlevel_1 = [\"undergrad\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.map_degree("undergrad studies"), 1);
        assert_eq!(cfg.map_degree("PhD"), 0);
        // Subject table untouched.
        assert_eq!(cfg.map_subjects("finance"), BTreeSet::from([3]));
    }

    #[test]
    fn invalid_mapping_keys_are_rejected() {
        assert!(MappingConfig::from_toml_str("[degree_keywords]\nlevel_9 = [\"x\"]\n").is_err());
        assert!(MappingConfig::from_toml_str("[degree_keywords]\nbogus = [\"x\"]\n").is_err());
    }

    #[test]
    fn degree_monotone_under_token_concatenation() {
        let cfg = MappingConfig::default();
        let samples = ["ma", "bs", "phd", "master of arts", "diploma", "", "b.a."];
        for a in samples {
            for b in samples {
                let joined = format!("{a} {b}");
                assert!(
                    cfg.map_degree(&joined) >= cfg.map_degree(a).max(cfg.map_degree(b)),
                    "`{joined}`"
                );
            }
        }
    }

    #[test]
    fn subjects_monotone_under_concatenation() {
        let cfg = MappingConfig::default();
        let samples = ["math", "biology", "finance and law", "spanish", ""];
        for a in samples {
            for b in samples {
                let joined = format!("{a}{b}");
                let union: BTreeSet<_> = cfg
                    .map_subjects(a)
                    .union(&cfg.map_subjects(b))
                    .copied()
                    .collect();
                assert!(cfg.map_subjects(&joined).is_superset(&union), "`{joined}`");
            }
        }
    }
}
