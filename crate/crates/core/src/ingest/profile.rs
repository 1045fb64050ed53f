//! Extraction of education and employment entries from the raw profile JSON
//! blob carried in each founder row.
//!
//! The blob's exact shape varies between scrapes, so every field is located
//! by a configurable dotted path. The defaults assume the obvious names:
//! `description`, an `education` array with `degree`/`field`/`school`, and an
//! `employment` array with `company`/`description`/`title`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Dotted-path map describing where profile fields live in the JSON blob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSchema {
    /// Path to the founder's free-text description.
    pub description: String,
    /// Path to the array of education entries.
    pub education: String,
    /// Path of the degree text within one education entry.
    pub education_degree: String,
    /// Path of the major/field text within one education entry.
    pub education_field: String,
    /// Path of the institution name within one education entry.
    pub education_school: String,
    /// Path to the array of employment entries.
    pub employment: String,
    /// Path of the company name within one employment entry.
    pub employment_company: String,
    /// Path of the company description within one employment entry.
    pub employment_description: String,
    /// Path of the role/title within one employment entry.
    pub employment_title: String,
}

impl Default for ProfileSchema {
    fn default() -> Self {
        ProfileSchema {
            description: "description".into(),
            education: "education".into(),
            education_degree: "degree".into(),
            education_field: "field".into(),
            education_school: "school".into(),
            employment: "employment".into(),
            employment_company: "company".into(),
            employment_description: "description".into(),
            employment_title: "title".into(),
        }
    }
}

/// One education entry pulled out of the blob; all fields may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EducationEntry {
    pub degree: String,
    pub field: String,
    pub school: String,
}

/// One employment entry pulled out of the blob; all fields may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmploymentEntry {
    pub company: String,
    pub description: String,
    pub title: String,
}

impl EmploymentEntry {
    /// Renders the entry as `Company(Description) as Title`, dropping the
    /// parts that are missing. Entries with neither company nor title render
    /// as `None`.
    pub fn render(&self) -> Option<String> {
        let company = self.company.trim();
        let description = self.description.trim();
        let title = self.title.trim();
        if company.is_empty() && title.is_empty() {
            return None;
        }
        let mut out = String::new();
        if !company.is_empty() {
            out.push_str(company);
            if !description.is_empty() {
                out.push('(');
                out.push_str(description);
                out.push(')');
            }
        }
        if !title.is_empty() {
            if !out.is_empty() {
                out.push_str(" as ");
            }
            out.push_str(title);
        }
        Some(out)
    }
}

/// The structured pieces of one profile blob.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawProfile {
    pub description: String,
    pub education: Vec<EducationEntry>,
    pub employment: Vec<EmploymentEntry>,
}

impl RawProfile {
    /// Joins rendered employment entries into the single prior-jobs string,
    /// preserving source order.
    pub fn prior_jobs_text(&self) -> String {
        self.employment
            .iter()
            .filter_map(|e| e.render())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Parses the profile JSON blob according to `schema`.
///
/// Returns `Err` with a short reason when the blob is not valid JSON or not
/// an object; missing fields inside a valid blob simply come back empty.
pub fn extract_profile(json_text: &str, schema: &ProfileSchema) -> Result<RawProfile, String> {
    if json_text.trim().is_empty() {
        return Err("empty profile".into());
    }
    let value: Value =
        serde_json::from_str(json_text).map_err(|e| format!("profile JSON: {e}"))?;
    if !value.is_object() {
        return Err("profile JSON is not an object".into());
    }
    let description = lookup_string(&value, &schema.description);
    let education = lookup_array(&value, &schema.education)
        .iter()
        .map(|entry| EducationEntry {
            degree: lookup_string(entry, &schema.education_degree),
            field: lookup_string(entry, &schema.education_field),
            school: lookup_string(entry, &schema.education_school),
        })
        .collect();
    let employment = lookup_array(&value, &schema.employment)
        .iter()
        .map(|entry| EmploymentEntry {
            company: lookup_string(entry, &schema.employment_company),
            description: lookup_string(entry, &schema.employment_description),
            title: lookup_string(entry, &schema.employment_title),
        })
        .collect();
    Ok(RawProfile {
        description,
        education,
        employment,
    })
}

/// Follows a dotted path through nested objects.
fn lookup_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    let mut current = value;
    for segment in path.split('.') {
        current = current.as_object()?.get(segment)?;
    }
    Some(current)
}

fn lookup_string(value: &Value, path: &str) -> String {
    match lookup_path(value, path) {
        Some(Value::String(s)) => s.trim().to_string(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Bool(b)) => b.to_string(),
        _ => String::new(),
    }
}

fn lookup_array<'a>(value: &'a Value, path: &str) -> Vec<&'a Value> {
    match lookup_path(value, path) {
        Some(Value::Array(items)) => items.iter().collect(),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "description": "Serial founder.",
        "education": [
            {"degree": "BSc", "field": "Computer Science", "school": "Stanford University"},
            {"degree": "MBA", "field": "Business", "school": "Somewhere"}
        ],
        "employment": [
            {"company": "Tapjoy", "description": "Organization based in Boston, Massachusetts, United States", "title": "VP Technology"},
            {"company": "Card Player Media", "description": "Organization based in Las Vegas, Nevada, United States", "title": "Software Engineer"}
        ]
    }"#;

    #[test]
    fn extracts_default_shape() {
        let p = extract_profile(SAMPLE, &ProfileSchema::default()).unwrap();
        assert_eq!(p.description, "Serial founder.");
        assert_eq!(p.education.len(), 2);
        assert_eq!(p.education[0].field, "Computer Science");
        assert_eq!(p.employment[1].title, "Software Engineer");
    }

    #[test]
    fn prior_jobs_renders_company_description_role() {
        let p = extract_profile(SAMPLE, &ProfileSchema::default()).unwrap();
        assert_eq!(
            p.prior_jobs_text(),
            "Tapjoy(Organization based in Boston, Massachusetts, United States) as VP Technology, \
             Card Player Media(Organization based in Las Vegas, Nevada, United States) as Software Engineer"
        );
    }

    #[test]
    fn render_drops_missing_parts() {
        let full = EmploymentEntry {
            company: "Acme".into(),
            description: String::new(),
            title: "CEO".into(),
        };
        assert_eq!(full.render().unwrap(), "Acme as CEO");
        let company_only = EmploymentEntry {
            company: "Acme".into(),
            ..Default::default()
        };
        assert_eq!(company_only.render().unwrap(), "Acme");
        let title_only = EmploymentEntry {
            title: "Advisor".into(),
            ..Default::default()
        };
        assert_eq!(title_only.render().unwrap(), "Advisor");
        assert_eq!(EmploymentEntry::default().render(), None);
    }

    #[test]
    fn custom_paths_reach_nested_fields() {
        let schema = ProfileSchema {
            description: "bio.summary".into(),
            education: "bio.schools".into(),
            education_degree: "deg".into(),
            education_field: "subject".into(),
            education_school: "name".into(),
            ..Default::default()
        };
        let blob = r#"{"bio": {"summary": "x", "schools": [{"deg": "PhD", "subject": "Math", "name": "MIT"}]}}"#;
        let p = extract_profile(blob, &schema).unwrap();
        assert_eq!(p.description, "x");
        assert_eq!(p.education[0].degree, "PhD");
        assert_eq!(p.education[0].field, "Math");
    }

    #[test]
    fn bad_blobs_are_reported() {
        let schema = ProfileSchema::default();
        assert!(extract_profile("", &schema).is_err());
        assert!(extract_profile("   ", &schema).is_err());
        assert!(extract_profile("not json", &schema).is_err());
        assert!(extract_profile("[1,2]", &schema).is_err());
    }

    #[test]
    fn missing_fields_come_back_empty() {
        let p = extract_profile(r#"{"description": "d"}"#, &ProfileSchema::default()).unwrap();
        assert!(p.education.is_empty());
        assert!(p.employment.is_empty());
        assert_eq!(p.prior_jobs_text(), "");
    }
}
