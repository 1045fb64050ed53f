//! In-memory similarity index over embedded founder and idea records.
//!
//! Founder similarity is a fixed-weight combination of five signals:
//!
//! ```text
//! score = cos(descriptions) + cos(job histories)
//!         - |degree delta| / 12 + |shared majors| / 5 - |top-school delta| / 20
//! ```
//!
//! With cosines in [-1, 1], degree delta at most 3, up to 12 shared majors,
//! and a 0/1 top-school flag, every score lands in [-2.3, 4.4]; that bound is
//! asserted on every computation. Idea similarity is plain cosine.
//!
//! Retrieval is an exhaustive scan — the intended corpus is a few thousand
//! records, where a scan costs milliseconds and has no approximation error
//! to reason about.

pub mod io;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine_similarity, EmbedError, EmbeddingVector};
use crate::records::{DegreeLevel, FounderProfile, FounderRecord, IdeaRecord, MajorCategory, Outcome};

/// Inclusive bounds of the founder similarity score.
pub const FOUNDER_SCORE_MIN: f64 = -2.3;
pub const FOUNDER_SCORE_MAX: f64 = 4.4;

/// Default panel size fed to the evaluation prompts.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("vector dimension mismatch: {left} vs {right} (index dim {index_dim})")]
    DimensionMismatch {
        left: usize,
        right: usize,
        index_dim: usize,
    },
    #[error("no {class} records in the index")]
    EmptyClass { class: &'static str },
    #[error("duplicate record id `{0}` in index")]
    DuplicateId(String),
    #[error("embedding error: {0}")]
    Embed(#[from] EmbedError),
    #[error("cannot read index {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("unsupported index version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("index file {path} is corrupt: {reason}")]
    CorruptFile { path: String, reason: String },
}

/// Anything that exposes the five founder-similarity signals.
pub trait FounderLike {
    fn degree(&self) -> DegreeLevel;
    fn top_institution(&self) -> bool;
    fn majors(&self) -> &BTreeSet<MajorCategory>;
    fn desc_vec(&self) -> &EmbeddingVector;
    fn jobs_vec(&self) -> &EmbeddingVector;
}

/// A labelled founder record with its two embeddings; the stored unit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedFounder {
    pub record: FounderRecord,
    pub desc_vec: EmbeddingVector,
    pub jobs_vec: EmbeddingVector,
}

impl FounderLike for EmbeddedFounder {
    fn degree(&self) -> DegreeLevel {
        self.record.profile.highest_degree
    }
    fn top_institution(&self) -> bool {
        self.record.profile.top_institution
    }
    fn majors(&self) -> &BTreeSet<MajorCategory> {
        &self.record.profile.majors
    }
    fn desc_vec(&self) -> &EmbeddingVector {
        &self.desc_vec
    }
    fn jobs_vec(&self) -> &EmbeddingVector {
        &self.jobs_vec
    }
}

/// An unlabelled query founder with its two embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FounderQuery {
    pub profile: FounderProfile,
    pub desc_vec: EmbeddingVector,
    pub jobs_vec: EmbeddingVector,
}

impl FounderLike for FounderQuery {
    fn degree(&self) -> DegreeLevel {
        self.profile.highest_degree
    }
    fn top_institution(&self) -> bool {
        self.profile.top_institution
    }
    fn majors(&self) -> &BTreeSet<MajorCategory> {
        &self.profile.majors
    }
    fn desc_vec(&self) -> &EmbeddingVector {
        &self.desc_vec
    }
    fn jobs_vec(&self) -> &EmbeddingVector {
        &self.jobs_vec
    }
}

/// A labelled idea record with its embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedIdea {
    pub record: IdeaRecord,
    pub desc_vec: EmbeddingVector,
}

/// One retrieval hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub record_id: String,
    pub score: f64,
    pub outcome: Outcome,
}

/// Result of a per-class retrieval.
///
/// `successes`/`failures` are the k best hits of each class (descending
/// score). `panel` is the 3-profile slate fed to the prompts: the best of
/// each class plus the next-best overall, guaranteed to contain both classes
/// whenever both exist, re-sorted by descending score. The panel only
/// shrinks below 3 when the index itself holds fewer than 3 records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSelection {
    pub successes: Vec<ScoredMatch>,
    pub failures: Vec<ScoredMatch>,
    pub panel: Vec<ScoredMatch>,
}

/// Weighted founder similarity; see module docs for the formula.
pub fn founder_similarity(
    alpha: &impl FounderLike,
    beta: &impl FounderLike,
) -> Result<f64, IndexError> {
    let cos_desc = cosine_similarity(alpha.desc_vec(), beta.desc_vec())?;
    let cos_jobs = cosine_similarity(alpha.jobs_vec(), beta.jobs_vec())?;
    let degree_delta = (alpha.degree() as f64 - beta.degree() as f64).abs();
    let shared_majors = alpha.majors().intersection(beta.majors()).count();
    let top_delta = (alpha.top_institution() as i8 - beta.top_institution() as i8).abs() as f64;
    let score = cos_desc + cos_jobs - degree_delta / 12.0 + (shared_majors as f64) / 5.0
        - top_delta / 20.0;
    assert!(
        (FOUNDER_SCORE_MIN - 1e-9..=FOUNDER_SCORE_MAX + 1e-9).contains(&score),
        "founder similarity {score} outside [{FOUNDER_SCORE_MIN}, {FOUNDER_SCORE_MAX}]"
    );
    Ok(score)
}

/// Idea similarity is the cosine of the two description embeddings.
pub fn idea_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, IndexError> {
    Ok(cosine_similarity(a, b)?)
}

/// Immutable-after-build index of embedded records.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityIndex {
    dim: usize,
    founders: Vec<EmbeddedFounder>,
    ideas: Vec<EmbeddedIdea>,
}

impl SimilarityIndex {
    pub fn new(dim: usize) -> Self {
        SimilarityIndex {
            dim,
            founders: Vec::new(),
            ideas: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn founders(&self) -> &[EmbeddedFounder] {
        &self.founders
    }

    pub fn ideas(&self) -> &[EmbeddedIdea] {
        &self.ideas
    }

    pub fn founder_count_by_outcome(&self, outcome: Outcome) -> usize {
        self.founders
            .iter()
            .filter(|f| f.record.outcome == outcome)
            .count()
    }

    pub fn idea_count_by_outcome(&self, outcome: Outcome) -> usize {
        self.ideas
            .iter()
            .filter(|i| i.record.outcome == outcome)
            .count()
    }

    pub fn founder(&self, id: &str) -> Option<&EmbeddedFounder> {
        self.founders.iter().find(|f| f.record.profile.id == id)
    }

    pub fn idea(&self, id: &str) -> Option<&EmbeddedIdea> {
        self.ideas.iter().find(|i| i.record.id == id)
    }

    pub fn add_founder(&mut self, founder: EmbeddedFounder) -> Result<(), IndexError> {
        self.check_dim(founder.desc_vec.dim())?;
        self.check_dim(founder.jobs_vec.dim())?;
        if self.founder(&founder.record.profile.id).is_some() {
            return Err(IndexError::DuplicateId(founder.record.profile.id));
        }
        self.founders.push(founder);
        Ok(())
    }

    pub fn add_idea(&mut self, idea: EmbeddedIdea) -> Result<(), IndexError> {
        self.check_dim(idea.desc_vec.dim())?;
        if self.idea(&idea.record.id).is_some() {
            return Err(IndexError::DuplicateId(idea.record.id));
        }
        self.ideas.push(idea);
        Ok(())
    }

    /// Fails unless the index dimension matches `dim` (e.g. the configured
    /// provider dimension).
    pub fn ensure_dim(&self, dim: usize) -> Result<(), IndexError> {
        self.check_dim(dim)
    }

    fn check_dim(&self, dim: usize) -> Result<(), IndexError> {
        if dim != self.dim {
            return Err(IndexError::DimensionMismatch {
                left: dim,
                right: self.dim,
                index_dim: self.dim,
            });
        }
        Ok(())
    }

    /// Scores every stored founder against the query and selects the top k
    /// per class plus the 3-profile panel.
    pub fn nearest_founders(
        &self,
        query: &FounderQuery,
        k: usize,
    ) -> Result<NeighborSelection, IndexError> {
        let mut scored = Vec::with_capacity(self.founders.len());
        for f in &self.founders {
            scored.push(ScoredMatch {
                record_id: f.record.profile.id.clone(),
                score: founder_similarity(query, f)?,
                outcome: f.record.outcome,
            });
        }
        select_neighbors(scored, k)
    }

    /// Scores every stored idea against the query vector and selects the top
    /// k per class plus the 3-profile panel.
    pub fn nearest_ideas(
        &self,
        query_vec: &EmbeddingVector,
        k: usize,
    ) -> Result<NeighborSelection, IndexError> {
        self.check_dim(query_vec.dim())?;
        let mut scored = Vec::with_capacity(self.ideas.len());
        for i in &self.ideas {
            scored.push(ScoredMatch {
                record_id: i.record.id.clone(),
                score: idea_similarity(query_vec, &i.desc_vec)?,
                outcome: i.record.outcome,
            });
        }
        select_neighbors(scored, k)
    }
}

/// Descending score, ties broken by ascending record id.
fn rank_order(a: &ScoredMatch, b: &ScoredMatch) -> std::cmp::Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.record_id.cmp(&b.record_id))
}

fn select_neighbors(mut scored: Vec<ScoredMatch>, k: usize) -> Result<NeighborSelection, IndexError> {
    scored.sort_by(rank_order);
    let best_success = scored
        .iter()
        .position(|m| m.outcome == Outcome::Success)
        .ok_or(IndexError::EmptyClass { class: "success" })?;
    let best_failure = scored
        .iter()
        .position(|m| m.outcome == Outcome::Failure)
        .ok_or(IndexError::EmptyClass { class: "failure" })?;

    let successes: Vec<ScoredMatch> = scored
        .iter()
        .filter(|m| m.outcome == Outcome::Success)
        .take(k)
        .cloned()
        .collect();
    let failures: Vec<ScoredMatch> = scored
        .iter()
        .filter(|m| m.outcome == Outcome::Failure)
        .take(k)
        .cloned()
        .collect();

    // Panel: best of each class, then the next-best overall among the rest.
    let mut panel = vec![scored[best_success].clone(), scored[best_failure].clone()];
    if let Some(next) = scored
        .iter()
        .enumerate()
        .find(|(i, _)| *i != best_success && *i != best_failure)
        .map(|(_, m)| m.clone())
    {
        panel.push(next);
    }
    panel.sort_by(rank_order);
    Ok(NeighborSelection {
        successes,
        failures,
        panel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vec(dim: usize, hot: usize) -> EmbeddingVector {
        let mut v = vec![0.0f32; dim];
        v[hot] = 1.0;
        EmbeddingVector::new(v).unwrap()
    }

    fn founder(
        id: &str,
        outcome: Outcome,
        degree: DegreeLevel,
        top: bool,
        majors: &[MajorCategory],
        desc_hot: usize,
        jobs_hot: usize,
    ) -> EmbeddedFounder {
        EmbeddedFounder {
            record: FounderRecord {
                profile: FounderProfile {
                    id: id.into(),
                    description: format!("founder {id}"),
                    highest_degree: degree,
                    top_institution: top,
                    majors: majors.iter().copied().collect(),
                    prior_jobs: "jobs".into(),
                },
                outcome,
            },
            desc_vec: unit_vec(8, desc_hot),
            jobs_vec: unit_vec(8, jobs_hot),
        }
    }

    fn query_from(f: &EmbeddedFounder) -> FounderQuery {
        FounderQuery {
            profile: f.record.profile.clone(),
            desc_vec: f.desc_vec.clone(),
            jobs_vec: f.jobs_vec.clone(),
        }
    }

    #[test]
    fn identical_founders_score_two_plus_majors_over_five() {
        let f = founder("a", Outcome::Success, 2, true, &[0, 6], 0, 1);
        let got = founder_similarity(&f, &query_from(&f)).unwrap();
        assert_eq!(got, 2.0 + 2.0 / 5.0);
    }

    #[test]
    fn degree_only_difference_costs_a_quarter() {
        let a = founder("a", Outcome::Success, 3, false, &[], 0, 1);
        let b = founder("b", Outcome::Failure, 0, false, &[], 0, 1);
        let got = founder_similarity(&a, &b).unwrap();
        assert_eq!(got, 2.0 - 3.0 / 12.0);
    }

    #[test]
    fn hand_computed_mixed_case() {
        // cosines 0.5 each, degree 3 vs 2, top true vs false, majors {0,6} vs {6}.
        let mut a = founder("a", Outcome::Success, 3, true, &[0, 6], 0, 2);
        let mut b = founder("b", Outcome::Failure, 2, false, &[6], 1, 3);
        // Unit vector against one tilted 60° away: cos = 0.5.
        let tilted = |i: usize, j: usize| {
            let mut v = vec![0.0f32; 8];
            v[i] = 0.5;
            v[j] = (0.75f32).sqrt();
            EmbeddingVector::new(v).unwrap()
        };
        a.desc_vec = unit_vec(8, 0);
        b.desc_vec = tilted(0, 1);
        a.jobs_vec = unit_vec(8, 2);
        b.jobs_vec = tilted(2, 3);
        let got = founder_similarity(&a, &b).unwrap();
        let want = 0.5 + 0.5 - 1.0 / 12.0 + 1.0 / 5.0 - 1.0 / 20.0;
        assert!((got - want).abs() < 1e-4, "got {got}, want {want}");
        assert!((got - 1.0667).abs() < 1e-4, "{got}");
    }

    #[test]
    fn similarity_is_symmetric() {
        let a = founder("a", Outcome::Success, 3, true, &[0, 6, 9], 0, 1);
        let b = founder("b", Outcome::Failure, 1, false, &[6, 9], 2, 3);
        let ab = founder_similarity(&a, &b).unwrap();
        let ba = founder_similarity(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn retrieval_returns_per_class_lists_and_panel() {
        let mut index = SimilarityIndex::new(8);
        index
            .add_founder(founder("s1", Outcome::Success, 2, true, &[6], 0, 1))
            .unwrap();
        index
            .add_founder(founder("s2", Outcome::Success, 1, false, &[3], 2, 3))
            .unwrap();
        // f1 matches s1 closely but not exactly (one degree level apart), so
        // self-retrieval must still rank s1 first.
        index
            .add_founder(founder("f1", Outcome::Failure, 1, true, &[6], 0, 1))
            .unwrap();
        index
            .add_founder(founder("f2", Outcome::Failure, 0, false, &[], 4, 5))
            .unwrap();
        let query = query_from(index.founder("s1").unwrap());
        let got = index.nearest_founders(&query, 3).unwrap();
        assert_eq!(got.successes.len(), 2);
        assert_eq!(got.failures.len(), 2);
        assert_eq!(got.panel.len(), 3);
        // Self-retrieval: s1 is the best match overall.
        assert_eq!(got.panel[0].record_id, "s1");
        let outcomes: std::collections::BTreeSet<Outcome> =
            got.panel.iter().map(|m| m.outcome).collect();
        assert!(outcomes.contains(&Outcome::Success) && outcomes.contains(&Outcome::Failure));
        // Panel sorted by descending score.
        for w in got.panel.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn tiny_index_panel_shrinks_without_error() {
        let mut index = SimilarityIndex::new(8);
        index
            .add_founder(founder("s1", Outcome::Success, 2, true, &[6], 0, 1))
            .unwrap();
        index
            .add_founder(founder("f1", Outcome::Failure, 2, true, &[6], 0, 1))
            .unwrap();
        let query = query_from(index.founder("s1").unwrap());
        let got = index.nearest_founders(&query, 3).unwrap();
        assert_eq!(got.successes.len(), 1);
        assert_eq!(got.failures.len(), 1);
        assert_eq!(got.panel.len(), 2);
    }

    #[test]
    fn missing_class_is_an_error() {
        let mut index = SimilarityIndex::new(8);
        index
            .add_founder(founder("s1", Outcome::Success, 2, true, &[6], 0, 1))
            .unwrap();
        let query = query_from(index.founder("s1").unwrap());
        match index.nearest_founders(&query, 3) {
            Err(IndexError::EmptyClass { class }) => assert_eq!(class, "failure"),
            other => panic!("expected EmptyClass, got {other:?}"),
        }
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let mut index = SimilarityIndex::new(8);
        // b and a are identical profiles; a must rank first on equal scores.
        index
            .add_founder(founder("b", Outcome::Success, 2, true, &[6], 0, 1))
            .unwrap();
        index
            .add_founder(founder("a", Outcome::Success, 2, true, &[6], 0, 1))
            .unwrap();
        index
            .add_founder(founder("z", Outcome::Failure, 0, false, &[], 4, 5))
            .unwrap();
        let query = query_from(index.founder("b").unwrap());
        let got = index.nearest_founders(&query, 2).unwrap();
        assert_eq!(got.successes[0].record_id, "a");
        assert_eq!(got.successes[1].record_id, "b");
        assert_eq!(got.panel[0].record_id, "a");
    }

    #[test]
    fn idea_retrieval_matches_cosine_ranking() {
        let mut index = SimilarityIndex::new(4);
        let idea = |id: &str, outcome, hot| EmbeddedIdea {
            record: IdeaRecord {
                id: id.into(),
                description: format!("idea {id}"),
                outcome,
            },
            desc_vec: unit_vec(4, hot),
        };
        index.add_idea(idea("s1", Outcome::Success, 0)).unwrap();
        index.add_idea(idea("s2", Outcome::Success, 1)).unwrap();
        index.add_idea(idea("f1", Outcome::Failure, 0)).unwrap();
        let got = index.nearest_ideas(&unit_vec(4, 0), 3).unwrap();
        assert_eq!(got.successes[0].record_id, "s1");
        assert_eq!(got.successes[0].score, 1.0);
        assert_eq!(got.failures[0].record_id, "f1");
        assert_eq!(got.panel.len(), 3);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut index = SimilarityIndex::new(8);
        let bad = EmbeddedIdea {
            record: IdeaRecord {
                id: "x".into(),
                description: "d".into(),
                outcome: Outcome::Success,
            },
            desc_vec: unit_vec(4, 0),
        };
        assert!(matches!(
            index.add_idea(bad),
            Err(IndexError::DimensionMismatch { .. })
        ));
        assert!(index.ensure_dim(8).is_ok());
        assert!(index.ensure_dim(16).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut index = SimilarityIndex::new(8);
        index
            .add_founder(founder("a", Outcome::Success, 2, true, &[6], 0, 1))
            .unwrap();
        assert!(matches!(
            index.add_founder(founder("a", Outcome::Failure, 1, false, &[], 2, 3)),
            Err(IndexError::DuplicateId(_))
        ));
    }
}
