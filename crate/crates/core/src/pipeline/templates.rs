//! Prompt templates with named `{placeholder}` slots.
//!
//! Defaults are compiled into the binary; a template directory can override
//! any of them file-by-file. Rendering walks the template text exactly once,
//! so placeholder-shaped text inside substituted values is never expanded —
//! profile text that happens to contain `{subject}` stays literal.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("unknown template `{name}`")]
    UnknownTemplate { name: String },
    #[error("template `{template}` needs a value for {{{placeholder}}}")]
    MissingPlaceholder { template: String, placeholder: String },
    #[error("cannot read template override {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Every template name, in the order the pipeline uses them.
pub const TEMPLATE_NAMES: [&str; 7] = [
    "founder_features",
    "idea_features",
    "rating",
    "fit_rating",
    "extraction",
    "summary",
    "cot_rating",
];

/// Placeholders the pipeline fills. Leaving one of these unfilled is a bug in
/// the caller, so it errors; any other `{word}` is passed through untouched
/// (prompt text legitimately talks about braces now and then).
const KNOWN_PLACEHOLDERS: [&str; 7] = [
    "panel",
    "subject",
    "features",
    "ethics_clause",
    "kind",
    "idea",
    "transcript",
];

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").expect("placeholder pattern compiles"));

fn default_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "founder_features" => include_str!("../../templates/founder_features.txt"),
        "idea_features" => include_str!("../../templates/idea_features.txt"),
        "rating" => include_str!("../../templates/rating.txt"),
        "fit_rating" => include_str!("../../templates/fit_rating.txt"),
        "extraction" => include_str!("../../templates/extraction.txt"),
        "summary" => include_str!("../../templates/summary.txt"),
        "cot_rating" => include_str!("../../templates/cot_rating.txt"),
        _ => return None,
    })
}

/// The full set of prompt templates in use.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    texts: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let texts = TEMPLATE_NAMES
            .iter()
            .map(|name| {
                let text = default_text(name).expect("every listed template has a default");
                (name.to_string(), text.to_string())
            })
            .collect();
        TemplateSet { texts }
    }
}

impl TemplateSet {
    /// Defaults, with any `{name}.txt` present in `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = TemplateSet::default();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                set.texts.insert(name.to_string(), text);
            }
        }
        Ok(set)
    }

    pub fn text(&self, name: &str) -> Result<&str, TemplateError> {
        self.texts
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| TemplateError::UnknownTemplate { name: name.into() })
    }

    /// Fills `{placeholder}` slots from `vars` in one pass over the template.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
        let template = self.text(name)?;
        let mut out = String::with_capacity(template.len());
        let mut last = 0;
        for caps in PLACEHOLDER.captures_iter(template) {
            let whole = caps.get(0).expect("group 0 always present");
            let key = caps.get(1).expect("pattern has one group").as_str();
            out.push_str(&template[last..whole.start()]);
            if let Some((_, value)) = vars.iter().find(|(k, _)| *k == key) {
                out.push_str(value);
            } else if KNOWN_PLACEHOLDERS.contains(&key) {
                return Err(TemplateError::MissingPlaceholder {
                    template: name.into(),
                    placeholder: key.into(),
                });
            } else {
                out.push_str(whole.as_str());
            }
            last = whole.end();
        }
        out.push_str(&template[last..]);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_panel_decorators() {
        let set = TemplateSet::default();
        let features = set.text("founder_features").unwrap();
        assert!(features
            .contains("Imagine three different Venture Capital analysts are trying to find"));
        assert!(features.contains("brainstorm the analysis step by step"));
        assert!(features.contains("backtrack to where that flaw occurred"));
        let rating = set.text("rating").unwrap();
        assert!(rating.contains("Discuss and agree"));
        assert!(rating.contains("Overall likelihood of success: Output as only a single number"));
    }

    #[test]
    fn render_substitutes_without_rescanning_values() {
        let set = TemplateSet::default();
        let got = set
            .render(
                "extraction",
                &[("kind", "founder"), ("transcript", "see {subject} here")],
            )
            .unwrap();
        assert!(got.contains("see {subject} here"), "{got}");
        assert!(got.contains("of a founder"), "{got}");
    }

    #[test]
    fn unfilled_known_placeholder_is_an_error() {
        let set = TemplateSet::default();
        let err = set.render("extraction", &[("kind", "founder")]).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingPlaceholder {
                template: "extraction".into(),
                placeholder: "transcript".into(),
            }
        );
    }

    #[test]
    fn unknown_braces_stay_literal() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("summary.txt"), "keep {this} but fill {transcript}")
            .unwrap();
        let set = TemplateSet::with_overrides(dir.path()).unwrap();
        let got = set.render("summary", &[("transcript", "T")]).unwrap();
        assert_eq!(got, "keep {this} but fill T");
        // Untouched templates still come from the defaults.
        assert!(set.text("rating").unwrap().contains("Expert 1"));
    }

    #[test]
    fn unknown_template_name_is_an_error() {
        let set = TemplateSet::default();
        assert!(matches!(
            set.render("nope", &[]),
            Err(TemplateError::UnknownTemplate { .. })
        ));
    }
}
