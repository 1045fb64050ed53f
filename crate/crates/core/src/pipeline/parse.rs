//! Parsers that pull structure out of free-text panel transcripts.
//!
//! Model output is prose first and format second, so every parser here is
//! tolerant: markers vary, numbers appear as decimals or percentages, and
//! unrelated lines may sit between the lines that matter. The contract is
//! that re-parsing a transcript always reproduces the same structure.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("no bullet or numbered list found in the response")]
    NoListFound,
    #[error("feature list has {found} items, outside the accepted 3–8 range")]
    FeatureCountOutOfRange { found: usize },
    #[error("step {step} has {found} expert likelihood(s), expected 3")]
    MissingExpert { step: usize, found: usize },
    #[error("likelihood value {value} is outside [0, 1]")]
    ValueOutOfRange { value: f64 },
    #[error("no step ratings found in the response")]
    NoRatingsFound,
    #[error("no score in [0, 1] found in the response")]
    NoScoreFound,
}

/// The bullet list produced by a feature-generation step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureList {
    pub items: Vec<String>,
}

/// One analysis step from a rating transcript: three expert likelihoods plus
/// whatever discussion followed the third one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRating {
    pub feature: String,
    pub expert_likelihoods: Vec<f64>,
    pub agreed_note: String,
}

/// Pros and cons for one discussed subject, best-effort.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProsConsEntry {
    pub subject_id: String,
    pub pros: Vec<String>,
    pub cons: Vec<String>,
}

static STEP_HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[^\w\n]*step\s+(\d+)\s*[:.)\-]?\s*([^\n]*)").expect("pattern compiles")
});

static LIKELIHOOD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)likelihood[^0-9%\n]*([0-9]+(?:\.[0-9]+)?)\s*(%?)").expect("pattern compiles")
});

static FINAL_PHRASE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)overall likelihood of success").expect("pattern compiles"));

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[0-9]+(?:\.[0-9]+)?").expect("pattern compiles"));

static LIST_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[-•*]\s+|\d+[.)]\s+)").expect("pattern compiles"));

/// Extracts the last contiguous bullet/numbered list from `text`.
///
/// Blank lines inside a list do not split it; any other non-list line does.
/// Accepted markers: `-`, `•`, `*`, and `N.`/`N)`. Markdown bold around an
/// item is stripped. The accepted length is 3–8 (see
/// [`feature_count_deviation`] for the 4–6 target band).
pub fn parse_feature_list(text: &str) -> Result<FeatureList, ParseError> {
    let mut blocks: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue; // blank lines never close a list
        }
        if let Some(marker) = LIST_MARKER.find(trimmed) {
            let item = trimmed[marker.end()..]
                .trim()
                .trim_start_matches("**")
                .trim_end_matches("**")
                .trim()
                .to_string();
            if !item.is_empty() {
                current.push(item);
            }
        } else if !current.is_empty() {
            blocks.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    let items = blocks.pop().ok_or(ParseError::NoListFound)?;
    if !(3..=8).contains(&items.len()) {
        return Err(ParseError::FeatureCountOutOfRange { found: items.len() });
    }
    Ok(FeatureList { items })
}

/// Deviation note when a parsed list is usable but outside the 4–6 target.
pub fn feature_count_deviation(count: usize) -> Option<String> {
    if (4..=6).contains(&count) {
        None
    } else {
        Some(format!(
            "feature list has {count} items, outside the 4–6 target; accepted as-is"
        ))
    }
}

/// Splits a rating transcript into `Step N` sections and captures the three
/// expert likelihoods of each.
///
/// A likelihood is any line fragment matching "likelihood", optional filler,
/// then a number; `85%` normalizes to `0.85`. Only the first three matches of
/// a section count as expert votes (closing discussion occasionally mentions
/// more numbers); fewer than three is [`ParseError::MissingExpert`]. Text
/// with no `Step` headings but with likelihood matches is treated as a
/// single section.
pub fn parse_step_ratings(text: &str) -> Result<Vec<StepRating>, ParseError> {
    struct Section<'a> {
        step_no: usize,
        feature: String,
        body: &'a str,
    }

    let headings: Vec<_> = STEP_HEADING.captures_iter(text).collect();
    let mut sections: Vec<Section> = Vec::new();
    if headings.is_empty() {
        if !LIKELIHOOD.is_match(text) {
            return Err(ParseError::NoRatingsFound);
        }
        sections.push(Section {
            step_no: 1,
            feature: String::new(),
            body: text,
        });
    } else {
        for (i, caps) in headings.iter().enumerate() {
            let whole = caps.get(0).expect("group 0 always present");
            let step_no: usize = caps[1].parse().unwrap_or(i + 1);
            let feature = caps[2].trim().trim_matches('*').trim().to_string();
            let body_start = whole.end();
            let body_end = headings
                .get(i + 1)
                .map(|next| next.get(0).expect("group 0 always present").start())
                .unwrap_or(text.len());
            sections.push(Section {
                step_no,
                feature,
                body: &text[body_start..body_end],
            });
        }
    }

    let mut out = Vec::with_capacity(sections.len());
    for section in sections {
        let mut likelihoods = Vec::new();
        let mut after_third = section.body.len();
        for caps in LIKELIHOOD.captures_iter(section.body) {
            if likelihoods.len() == 3 {
                break;
            }
            let raw: f64 = caps[1].parse().expect("regex only matches valid reals");
            let value = if &caps[2] == "%" { raw / 100.0 } else { raw };
            if !(0.0..=1.0).contains(&value) {
                return Err(ParseError::ValueOutOfRange { value });
            }
            likelihoods.push(value);
            after_third = caps.get(0).expect("group 0 always present").end();
        }
        if likelihoods.len() < 3 {
            return Err(ParseError::MissingExpert {
                step: section.step_no,
                found: likelihoods.len(),
            });
        }
        out.push(StepRating {
            feature: section.feature,
            expert_likelihoods: likelihoods,
            agreed_note: section.body[after_third..].trim().to_string(),
        });
    }
    Ok(out)
}

/// Extracts the final overall score from a transcript.
///
/// Preference order: the last in-range number after the last occurrence of
/// "overall likelihood of success", then the last standalone in-range number
/// anywhere. Numbers glued to words, version strings like `4.2.1`, and
/// percent-suffixed values are not standalone.
pub fn parse_final_score(text: &str) -> Result<f64, ParseError> {
    if let Some(last_phrase) = FINAL_PHRASE.find_iter(text).last() {
        if let Some(score) = last_standalone_in_range(text, last_phrase.end()) {
            return Ok(score);
        }
    }
    last_standalone_in_range(text, 0).ok_or(ParseError::NoScoreFound)
}

fn last_standalone_in_range(text: &str, from: usize) -> Option<f64> {
    let mut found = None;
    for m in NUMBER.find_iter(&text[from..]) {
        let start = from + m.start();
        let end = from + m.end();
        if let Some(prev) = text[..start].chars().last() {
            // Glued to a word ("gpt4") or a dotted tail ("1.2.3" second half).
            if prev.is_alphanumeric() || prev == '.' {
                continue;
            }
        }
        let mut next_chars = text[end..].chars();
        match next_chars.next() {
            Some(c) if c.is_alphanumeric() || c == '_' || c == '%' => continue,
            // A trailing period is sentence punctuation unless a digit
            // follows (then it is a version string like 4.2.1).
            Some('.') if matches!(next_chars.next(), Some(d) if d.is_ascii_digit()) => continue,
            _ => {}
        }
        let value: f64 = m.as_str().parse().expect("regex only matches valid reals");
        if (0.0..=1.0).contains(&value) {
            found = Some(value);
        }
    }
    found
}

/// Vocabulary check for refusal-shaped responses. The caller combines this
/// with the parsed score (absent or zero) before zeroing a rating.
pub fn is_ethics_refusal(text: &str) -> bool {
    let lower = text.to_lowercase();
    [
        "unethical",
        "illegal",
        "deception",
        "deceiv",
        "fraudulent",
        "cannot evaluate",
        "cannot assist",
        "refuse to",
    ]
    .iter()
    .any(|needle| lower.contains(needle))
}

/// Best-effort pros/cons extraction from a feature-brainstorm or summary
/// transcript. Subjects are the non-bullet lines introducing a `Pros:` /
/// `Cons:` block; entries without any bullet are dropped.
pub fn parse_pros_cons(text: &str) -> Vec<ProsConsEntry> {
    enum Mode {
        Pros,
        Cons,
        None,
    }
    let mut entries: Vec<ProsConsEntry> = Vec::new();
    let mut subject: Option<String> = None;
    let mut pros = Vec::new();
    let mut cons = Vec::new();
    let mut mode = Mode::None;

    let flush =
        |subject: &mut Option<String>, pros: &mut Vec<String>, cons: &mut Vec<String>,
         entries: &mut Vec<ProsConsEntry>| {
            if let Some(id) = subject.take() {
                if !pros.is_empty() || !cons.is_empty() {
                    entries.push(ProsConsEntry {
                        subject_id: id,
                        pros: std::mem::take(pros),
                        cons: std::mem::take(cons),
                    });
                    return;
                }
            }
            pros.clear();
            cons.clear();
        };

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let plain = trimmed.trim_matches('*').trim();
        let lower = plain.to_lowercase();
        if lower.starts_with("pros") && lower.trim_end_matches(':').trim() == "pros" {
            mode = Mode::Pros;
        } else if lower.starts_with("cons") && lower.trim_end_matches(':').trim() == "cons" {
            mode = Mode::Cons;
        } else if let Some(marker) = LIST_MARKER.find(plain) {
            let item = plain[marker.end()..].trim().to_string();
            if item.is_empty() {
                continue;
            }
            match mode {
                Mode::Pros => pros.push(item),
                Mode::Cons => cons.push(item),
                Mode::None => {}
            }
        } else if plain.chars().any(|c| c.is_alphanumeric()) {
            flush(&mut subject, &mut pros, &mut cons, &mut entries);
            subject = Some(plain.trim_end_matches(':').trim().to_string());
            mode = Mode::None;
        }
    }
    flush(&mut subject, &mut pros, &mut cons, &mut entries);
    entries
}
