//! The evaluation pipeline: retrieve reference cases, run the multi-expert
//! panel protocol over them, and aggregate the resulting scores.
//!
//! A full run has three LLM steps per branch — brainstorm successful
//! features, rate the subject step by step (one step per feature), and have a
//! fresh conversation extract the final number from the rating transcript —
//! executed for the founder and the idea concurrently, followed by a fit
//! rating and the aggregation formula. Every request carries a stage tag so
//! failures point at the exact step and recorded sessions can be replayed.

pub mod parse;
pub mod templates;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine_similarity, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::index::{FounderQuery, NeighborSelection, SimilarityIndex};
use crate::llm::{ChatRequest, Gateway, LlmError, SamplingParams, StageTag};
use crate::records::FounderProfile;
use crate::report::{EvaluationReport, ReportedError, TranscriptReport};
use crate::scoring;
pub use parse::{
    feature_count_deviation, is_ethics_refusal, parse_feature_list, parse_final_score,
    parse_pros_cons, parse_step_ratings, FeatureList, ParseError, ProsConsEntry, StepRating,
};
pub use templates::{TemplateError, TemplateSet};

/// Nucleus sampling for every rating step.
pub const RATING_TOP_P: f64 = 0.3;
const DEFAULT_TOP_P: f64 = 1.0;

/// Appended to every idea and fit prompt so unethical pitches score 0 by
/// instruction, with [`parse::is_ethics_refusal`] as the post-hoc guard.
pub const ETHICS_CLAUSE: &str =
    "Any unethical or illegal business idea must receive a score of 0.";

/// Completed stages appear in the report's stage log in exactly this order.
pub const STAGE_LOG_ORDER: [&str; 8] = [
    "retrieve-founders",
    "retrieve-ideas",
    "founder-features",
    "founder-rating",
    "idea-features",
    "idea-rating",
    "fit",
    "aggregate",
];

/// Prompting strategy: the default multi-expert panel, or a single-expert
/// chain-of-thought baseline for A/B comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Tot,
    Cot,
}

/// How the fit score is produced: the LLM checklist rating, or the offline
/// embedding fallback `(cosine + 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Llm,
    Embedding,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tot" => Ok(Strategy::Tot),
            "cot" => Ok(Strategy::Cot),
            other => Err(format!("unknown strategy `{other}` (expected tot|cot)")),
        }
    }
}

impl std::str::FromStr for FitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llm" => Ok(FitMode::Llm),
            "embedding" => Ok(FitMode::Embedding),
            other => Err(format!("unknown fit mode `{other}` (expected llm|embedding)")),
        }
    }
}

/// Everything the evaluator needs besides the backends.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub strategy: Strategy,
    pub fit_mode: FitMode,
    /// Neighbors retrieved per outcome class.
    pub k: usize,
    /// Run the optional pros/cons summary stage.
    pub summarize: bool,
    pub feature_temperature: f64,
    pub rating_temperature: f64,
    pub extraction_temperature: f64,
    pub max_tokens: u32,
    /// The manually curated fit checklist, one feature per line.
    pub fit_features: Vec<String>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            strategy: Strategy::Tot,
            fit_mode: FitMode::Llm,
            k: crate::index::DEFAULT_K,
            summarize: false,
            feature_temperature: 0.7,
            rating_temperature: 1.0,
            extraction_temperature: 0.0,
            max_tokens: 1024,
            fit_features: default_fit_features(),
        }
    }
}

/// The built-in fit checklist (domain match, sector experience, skill
/// coverage, education relevance, network reach).
pub fn default_fit_features() -> Vec<String> {
    include_str!("../../data/fit_features.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[derive(Debug, Error)]
#[error("stage {stage}: {kind}")]
pub struct PipelineError {
    pub stage: StageTag,
    pub kind: PipelineErrorKind,
}

#[derive(Debug, Error)]
pub enum PipelineErrorKind {
    #[error("{0}")]
    Backend(#[from] LlmError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Template(#[from] TemplateError),
    #[error("{0}")]
    Precondition(String),
    #[error("the panel refused to rate the subject on ethical grounds")]
    Refusal,
}

impl PipelineError {
    fn new(stage: StageTag, kind: impl Into<PipelineErrorKind>) -> Self {
        PipelineError {
            stage,
            kind: kind.into(),
        }
    }

    pub fn is_backend(&self) -> bool {
        matches!(self.kind, PipelineErrorKind::Backend(_))
    }
}

/// What a transcript parsed into, kept alongside the raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedContent {
    Features(FeatureList),
    Ratings(Vec<StepRating>),
    Score(f64),
    ProsCons(Vec<ProsConsEntry>),
}

/// One prompt/response pair with its parsed structure (when it has any).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelTranscript {
    pub stage: StageTag,
    pub prompt_text: String,
    pub response_text: String,
    pub parsed: Option<ParsedContent>,
}

/// Output of one branch (founder, idea, or fit). `error` set means the
/// branch stopped early; everything gathered before the stop stays filled.
#[derive(Debug, Default)]
pub struct BranchOutput {
    pub score: Option<f64>,
    pub features: Option<FeatureList>,
    pub steps: Option<Vec<StepRating>>,
    pub transcripts: Vec<PanelTranscript>,
    pub deviations: Vec<String>,
    pub stages: Vec<&'static str>,
    pub error: Option<PipelineError>,
}

#[derive(Clone, Copy)]
enum BranchKind {
    Founder,
    Idea,
}

impl BranchKind {
    fn features_tag(self) -> StageTag {
        match self {
            BranchKind::Founder => StageTag::FounderFeatures,
            BranchKind::Idea => StageTag::IdeaFeatures,
        }
    }
    fn rating_tag(self) -> StageTag {
        match self {
            BranchKind::Founder => StageTag::FounderRating,
            BranchKind::Idea => StageTag::IdeaRating,
        }
    }
    fn final_tag(self) -> StageTag {
        match self {
            BranchKind::Founder => StageTag::FounderFinal,
            BranchKind::Idea => StageTag::IdeaFinal,
        }
    }
    fn features_template(self) -> &'static str {
        match self {
            BranchKind::Founder => "founder_features",
            BranchKind::Idea => "idea_features",
        }
    }
    fn kind_word(self) -> &'static str {
        match self {
            BranchKind::Founder => "founder",
            BranchKind::Idea => "business idea",
        }
    }
    fn features_log(self) -> &'static str {
        match self {
            BranchKind::Founder => "founder-features",
            BranchKind::Idea => "idea-features",
        }
    }
    fn rating_log(self) -> &'static str {
        match self {
            BranchKind::Founder => "founder-rating",
            BranchKind::Idea => "idea-rating",
        }
    }
    fn ethics_clause(self) -> &'static str {
        match self {
            BranchKind::Founder => "",
            BranchKind::Idea => ETHICS_CLAUSE,
        }
    }
    /// Only idea-side ratings may interpret a refusal as a 0.0 score; a
    /// refusal while rating a founder is an error.
    fn refusal_zeroes(self) -> bool {
        matches!(self, BranchKind::Idea)
    }
}

enum StepSampling {
    Features,
    Rating,
    Extraction,
}

/// Runs the prompt protocol against a [`Gateway`].
pub struct Evaluator<'a> {
    gateway: &'a Gateway,
    templates: &'a TemplateSet,
    options: &'a PipelineOptions,
}

impl<'a> Evaluator<'a> {
    pub fn new(gateway: &'a Gateway, templates: &'a TemplateSet, options: &'a PipelineOptions) -> Self {
        Evaluator {
            gateway,
            templates,
            options,
        }
    }

    fn sampling(&self, step: StepSampling) -> SamplingParams {
        let (top_p, temperature) = match step {
            StepSampling::Features => (DEFAULT_TOP_P, self.options.feature_temperature),
            StepSampling::Rating => (RATING_TOP_P, self.options.rating_temperature),
            StepSampling::Extraction => (DEFAULT_TOP_P, self.options.extraction_temperature),
        };
        SamplingParams {
            top_p,
            temperature,
            max_tokens: self.options.max_tokens,
        }
    }

    fn chat(
        &self,
        tag: StageTag,
        prompt: &str,
        step: StepSampling,
    ) -> Result<String, PipelineError> {
        let request = ChatRequest {
            system_text: String::new(),
            user_text: prompt.to_string(),
            sampling: self.sampling(step),
            tag,
        };
        Ok(self
            .gateway
            .complete(request)
            .map_err(|e| PipelineError::new(tag, e))?
            .response_text)
    }

    fn render(
        &self,
        stage: StageTag,
        template: &str,
        vars: &[(&str, &str)],
    ) -> Result<String, PipelineError> {
        self.templates
            .render(template, vars)
            .map_err(|e| PipelineError::new(stage, e))
    }

    /// Full founder branch; see [`BranchOutput`] for the partial-result
    /// contract.
    pub fn evaluate_founder(&self, subject_text: &str, panel_text: &str) -> BranchOutput {
        self.branch(BranchKind::Founder, subject_text, panel_text)
    }

    /// Full idea branch. A refusal-shaped rating response scores 0.0 without
    /// error, mirroring the instructed behavior for unethical ideas.
    pub fn evaluate_idea(&self, idea_text: &str, panel_text: &str) -> BranchOutput {
        self.branch(BranchKind::Idea, idea_text, panel_text)
    }

    fn branch(&self, kind: BranchKind, subject: &str, panel: &str) -> BranchOutput {
        let mut out = BranchOutput::default();
        let result = match self.options.strategy {
            Strategy::Tot => self.tot_branch(kind, subject, panel, &mut out),
            Strategy::Cot => self.cot_branch(kind, subject, panel, &mut out),
        };
        if let Err(e) = result {
            out.error = Some(e);
        }
        if let Some(score) = out.score {
            assert!((0.0..=1.0).contains(&score), "branch score {score} out of range");
        }
        out
    }

    fn check_preconditions(
        &self,
        kind: BranchKind,
        stage: StageTag,
        subject: &str,
        panel: &str,
    ) -> Result<(), PipelineError> {
        if panel.trim().is_empty() {
            return Err(PipelineError::new(
                stage,
                PipelineErrorKind::Precondition("empty reference panel".into()),
            ));
        }
        if subject.trim().is_empty() {
            return Err(PipelineError::new(
                stage,
                PipelineErrorKind::Precondition(format!("empty {} text", kind.kind_word())),
            ));
        }
        Ok(())
    }

    fn tot_branch(
        &self,
        kind: BranchKind,
        subject: &str,
        panel: &str,
        out: &mut BranchOutput,
    ) -> Result<(), PipelineError> {
        self.check_preconditions(kind, kind.features_tag(), subject, panel)?;
        let features = self.features_step(kind, panel, out)?;

        let rating_tag = kind.rating_tag();
        let feature_lines = numbered_list(&features.items);
        let prompt = self.render(
            rating_tag,
            "rating",
            &[
                ("features", feature_lines.as_str()),
                ("subject", subject),
                ("kind", kind.kind_word()),
                ("ethics_clause", kind.ethics_clause()),
            ],
        )?;
        let response = self.chat(rating_tag, &prompt, StepSampling::Rating)?;
        match parse_step_ratings(&response) {
            Ok(steps) => {
                out.transcripts.push(PanelTranscript {
                    stage: rating_tag,
                    prompt_text: prompt,
                    response_text: response.clone(),
                    parsed: Some(ParsedContent::Ratings(steps.clone())),
                });
                out.steps = Some(steps);
                let score = self.extract_score(kind.final_tag(), kind, &response, out)?;
                out.score = Some(score);
                out.stages.push(kind.rating_log());
            }
            Err(parse_err) => {
                let refused = is_ethics_refusal(&response);
                out.transcripts.push(PanelTranscript {
                    stage: rating_tag,
                    prompt_text: prompt,
                    response_text: response,
                    parsed: (refused && kind.refusal_zeroes())
                        .then_some(ParsedContent::Score(0.0)),
                });
                if refused && kind.refusal_zeroes() {
                    out.score = Some(0.0);
                    out.stages.push(kind.rating_log());
                } else if refused {
                    return Err(PipelineError::new(rating_tag, PipelineErrorKind::Refusal));
                } else {
                    return Err(PipelineError::new(rating_tag, parse_err));
                }
            }
        }
        Ok(())
    }

    fn cot_branch(
        &self,
        kind: BranchKind,
        subject: &str,
        panel: &str,
        out: &mut BranchOutput,
    ) -> Result<(), PipelineError> {
        let rating_tag = kind.rating_tag();
        self.check_preconditions(kind, rating_tag, subject, panel)?;
        let prompt = self.render(
            rating_tag,
            "cot_rating",
            &[
                ("panel", panel),
                ("subject", subject),
                ("kind", kind.kind_word()),
                ("ethics_clause", kind.ethics_clause()),
            ],
        )?;
        let response = self.chat(rating_tag, &prompt, StepSampling::Rating)?;
        let score = match parse_final_score(&response) {
            Ok(score) => {
                out.transcripts.push(PanelTranscript {
                    stage: rating_tag,
                    prompt_text: prompt,
                    response_text: response,
                    parsed: Some(ParsedContent::Score(score)),
                });
                score
            }
            Err(_) => {
                out.transcripts.push(PanelTranscript {
                    stage: rating_tag,
                    prompt_text: prompt,
                    response_text: response.clone(),
                    parsed: None,
                });
                self.extract_score(kind.final_tag(), kind, &response, out)?
            }
        };
        out.score = Some(score);
        out.stages.push(kind.rating_log());
        Ok(())
    }

    /// Step 1: brainstorm features, reprompting once when the list length
    /// falls outside the parseable 3–8 window.
    fn features_step(
        &self,
        kind: BranchKind,
        panel: &str,
        out: &mut BranchOutput,
    ) -> Result<FeatureList, PipelineError> {
        let tag = kind.features_tag();
        let vars: Vec<(&str, &str)> = match kind {
            BranchKind::Founder => vec![("panel", panel)],
            BranchKind::Idea => vec![("panel", panel), ("ethics_clause", ETHICS_CLAUSE)],
        };
        let prompt = self.render(tag, kind.features_template(), &vars)?;
        let mut response = self.chat(tag, &prompt, StepSampling::Features)?;
        let mut attempt = parse_feature_list(&response);
        if let Err(ParseError::FeatureCountOutOfRange { found }) = attempt {
            out.transcripts.push(PanelTranscript {
                stage: tag,
                prompt_text: prompt.clone(),
                response_text: response,
                parsed: None,
            });
            out.deviations.push(format!(
                "{} feature list had {found} items; reprompted once",
                kind.kind_word()
            ));
            response = self.chat(tag, &prompt, StepSampling::Features)?;
            attempt = parse_feature_list(&response);
        }
        match attempt {
            Ok(list) => {
                if let Some(note) = feature_count_deviation(list.items.len()) {
                    out.deviations
                        .push(format!("{} {note}", kind.kind_word()));
                }
                out.transcripts.push(PanelTranscript {
                    stage: tag,
                    prompt_text: prompt,
                    response_text: response,
                    parsed: Some(ParsedContent::Features(list.clone())),
                });
                out.features = Some(list.clone());
                out.stages.push(kind.features_log());
                Ok(list)
            }
            Err(e) => {
                out.transcripts.push(PanelTranscript {
                    stage: tag,
                    prompt_text: prompt,
                    response_text: response,
                    parsed: None,
                });
                Err(PipelineError::new(tag, e))
            }
        }
    }

    /// Step 3: a fresh conversation reads the rating transcript and answers
    /// with a single number; one reprompt when no number comes back.
    fn extract_score(
        &self,
        tag: StageTag,
        kind: BranchKind,
        rating_text: &str,
        out: &mut BranchOutput,
    ) -> Result<f64, PipelineError> {
        let prompt = self.render(
            tag,
            "extraction",
            &[("kind", kind.kind_word()), ("transcript", rating_text)],
        )?;
        for attempt in 0..2 {
            let response = self.chat(tag, &prompt, StepSampling::Extraction)?;
            match parse_final_score(&response) {
                Ok(score) => {
                    out.transcripts.push(PanelTranscript {
                        stage: tag,
                        prompt_text: prompt,
                        response_text: response,
                        parsed: Some(ParsedContent::Score(score)),
                    });
                    return Ok(score);
                }
                Err(err) => {
                    let refused = kind.refusal_zeroes()
                        && (is_ethics_refusal(rating_text) || is_ethics_refusal(&response));
                    if attempt == 1 && refused {
                        out.transcripts.push(PanelTranscript {
                            stage: tag,
                            prompt_text: prompt,
                            response_text: response,
                            parsed: Some(ParsedContent::Score(0.0)),
                        });
                        return Ok(0.0);
                    }
                    out.transcripts.push(PanelTranscript {
                        stage: tag,
                        prompt_text: prompt.clone(),
                        response_text: response,
                        parsed: None,
                    });
                    if attempt == 1 {
                        return Err(PipelineError::new(tag, err));
                    }
                }
            }
        }
        unreachable!("extraction loop returns on the second attempt")
    }

    /// Fit via the configured checklist: one rating conversation over the
    /// fit features, then extraction. Step parsing is best-effort here — fit
    /// transcripts legitimately come back as prose.
    pub fn evaluate_fit(&self, founder_text: &str, idea_text: &str) -> BranchOutput {
        let mut out = BranchOutput::default();
        if let Err(e) = self.fit_branch(founder_text, idea_text, &mut out) {
            out.error = Some(e);
        }
        if let Some(score) = out.score {
            assert!((0.0..=1.0).contains(&score), "fit score {score} out of range");
        }
        out
    }

    fn fit_branch(
        &self,
        founder_text: &str,
        idea_text: &str,
        out: &mut BranchOutput,
    ) -> Result<(), PipelineError> {
        if self.options.fit_features.is_empty() {
            return Err(PipelineError::new(
                StageTag::FitRating,
                PipelineErrorKind::Precondition("fit feature checklist is empty".into()),
            ));
        }
        let feature_lines = numbered_list(&self.options.fit_features);
        let prompt = self.render(
            StageTag::FitRating,
            "fit_rating",
            &[
                ("features", feature_lines.as_str()),
                ("subject", founder_text),
                ("idea", idea_text),
                ("ethics_clause", ETHICS_CLAUSE),
            ],
        )?;
        let response = self.chat(StageTag::FitRating, &prompt, StepSampling::Rating)?;
        let steps = parse_step_ratings(&response).ok();
        out.transcripts.push(PanelTranscript {
            stage: StageTag::FitRating,
            prompt_text: prompt,
            response_text: response.clone(),
            parsed: steps.clone().map(ParsedContent::Ratings),
        });
        out.steps = steps;
        let score = self.extract_score(StageTag::FitFinal, BranchKind::Idea, &response, out)?;
        out.score = Some(score);
        out.stages.push("fit");
        Ok(())
    }

    /// Optional pros/cons digest over the feature-brainstorm transcripts.
    fn summary_step(
        &self,
        source_text: &str,
    ) -> Result<(Vec<ProsConsEntry>, PanelTranscript), PipelineError> {
        let prompt = self.render(
            StageTag::Summary,
            "summary",
            &[("transcript", source_text)],
        )?;
        let response = self.chat(StageTag::Summary, &prompt, StepSampling::Features)?;
        let entries = parse_pros_cons(&response);
        let transcript = PanelTranscript {
            stage: StageTag::Summary,
            prompt_text: prompt,
            response_text: response,
            parsed: Some(ParsedContent::ProsCons(entries.clone())),
        };
        Ok((entries, transcript))
    }
}

/// Offline fit fallback: cosine mapped from [-1, 1] onto [0, 1].
pub fn embedding_fit(
    founder_desc: &EmbeddingVector,
    idea: &EmbeddingVector,
) -> Result<f64, EmbedError> {
    Ok((cosine_similarity(founder_desc, idea)? + 1.0) / 2.0)
}

/// Renders the retrieved founder panel as labelled profile blocks.
pub fn render_founder_panel(selection: &NeighborSelection, index: &SimilarityIndex) -> String {
    selection
        .panel
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let founder = index
                .founder(&m.record_id)
                .expect("panel ids come from this index");
            format!(
                "Founder {} ({}):\n{}",
                i + 1,
                m.outcome.label(),
                founder.record.profile.display_text()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Renders the retrieved idea panel as labelled description blocks.
pub fn render_idea_panel(selection: &NeighborSelection, index: &SimilarityIndex) -> String {
    selection
        .panel
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let idea = index.idea(&m.record_id).expect("panel ids come from this index");
            format!(
                "Idea {} ({}):\n{}",
                i + 1,
                m.outcome.label(),
                idea.record.description
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn numbered_list(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| format!("{}. {item}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn step_mean(steps: &[StepRating]) -> Option<f64> {
    if steps.is_empty() {
        return None;
    }
    let total: f64 = steps
        .iter()
        .map(|s| s.expert_likelihoods.iter().sum::<f64>() / s.expert_likelihoods.len() as f64)
        .sum();
    Some(total / steps.len() as f64)
}

/// What to evaluate: a normalized founder profile plus the idea text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRequest {
    pub founder: FounderProfile,
    pub idea_text: String,
}

/// A finished run: the report (complete or partial) plus the failure that
/// stopped it, if any. The report's `error` field mirrors `failure`.
#[derive(Debug)]
pub struct EvaluationRun {
    pub report: EvaluationReport,
    pub failure: Option<PipelineError>,
}

/// Executes the whole pipeline: embed, retrieve, run both branches
/// concurrently, rate fit, aggregate, and assemble the report.
///
/// Never panics on backend or parse trouble — failures land in
/// [`EvaluationRun::failure`] and the report keeps everything that finished.
pub fn run_evaluation(
    index: &SimilarityIndex,
    provider: &dyn EmbeddingProvider,
    gateway: &Gateway,
    templates: &TemplateSet,
    options: &PipelineOptions,
    request: &EvaluationRequest,
    config_hash: &str,
) -> EvaluationRun {
    let mut report = EvaluationReport::new(
        request.founder.clone(),
        request.idea_text.clone(),
        config_hash.to_string(),
    );
    let mut completed: BTreeSet<&'static str> = BTreeSet::new();

    let fail = |report: &mut EvaluationReport, error: PipelineError| {
        report.error = Some(ReportedError {
            stage: error.stage,
            message: error.kind.to_string(),
        });
        error
    };

    // Preconditions that need no backend at all.
    if let Err(reason) = request.founder.validate() {
        let e = fail(
            &mut report,
            PipelineError::new(
                StageTag::FounderFeatures,
                PipelineErrorKind::Precondition(format!("invalid founder record: {reason}")),
            ),
        );
        return EvaluationRun {
            report,
            failure: Some(e),
        };
    }
    if request.idea_text.trim().is_empty() {
        let e = fail(
            &mut report,
            PipelineError::new(
                StageTag::IdeaFeatures,
                PipelineErrorKind::Precondition("empty idea text".into()),
            ),
        );
        return EvaluationRun {
            report,
            failure: Some(e),
        };
    }

    // Embed the three query texts in one batch.
    let texts = vec![
        request.founder.description.clone(),
        request.founder.jobs_embedding_text().to_string(),
        request.idea_text.clone(),
    ];
    let mut vectors = match provider.embed(&texts) {
        Ok(v) => v,
        Err(e) => {
            let e = fail(
                &mut report,
                PipelineError::new(
                    StageTag::FounderFeatures,
                    PipelineErrorKind::Precondition(format!("embedding inputs failed: {e}")),
                ),
            );
            return EvaluationRun {
                report,
                failure: Some(e),
            };
        }
    };
    let idea_vec = vectors.pop().expect("three vectors for three texts");
    let jobs_vec = vectors.pop().expect("three vectors for three texts");
    let desc_vec = vectors.pop().expect("three vectors for three texts");

    // Retrieval.
    let query = FounderQuery {
        profile: request.founder.clone(),
        desc_vec: desc_vec.clone(),
        jobs_vec,
    };
    let founder_panel = match index.nearest_founders(&query, options.k) {
        Ok(selection) => selection,
        Err(e) => {
            let e = fail(
                &mut report,
                PipelineError::new(
                    StageTag::FounderFeatures,
                    PipelineErrorKind::Precondition(format!("founder retrieval failed: {e}")),
                ),
            );
            return EvaluationRun {
                report,
                failure: Some(e),
            };
        }
    };
    completed.insert("retrieve-founders");
    report.founder_panel = Some(founder_panel.clone());

    let idea_panel = match index.nearest_ideas(&idea_vec, options.k) {
        Ok(selection) => selection,
        Err(e) => {
            report.stage_log = stage_log(&completed);
            let e = fail(
                &mut report,
                PipelineError::new(
                    StageTag::IdeaFeatures,
                    PipelineErrorKind::Precondition(format!("idea retrieval failed: {e}")),
                ),
            );
            return EvaluationRun {
                report,
                failure: Some(e),
            };
        }
    };
    completed.insert("retrieve-ideas");
    report.idea_panel = Some(idea_panel.clone());

    let founder_panel_text = render_founder_panel(&founder_panel, index);
    let idea_panel_text = render_idea_panel(&idea_panel, index);
    let founder_text = request.founder.display_text();

    // The two branches are independent until fit, so run them concurrently.
    let evaluator = Evaluator::new(gateway, templates, options);
    let (mut founder_out, idea_out) = std::thread::scope(|scope| {
        let founder_handle =
            scope.spawn(|| evaluator.evaluate_founder(&founder_text, &founder_panel_text));
        let idea_handle =
            scope.spawn(|| evaluator.evaluate_idea(&request.idea_text, &idea_panel_text));
        (
            founder_handle.join().expect("founder branch panicked"),
            idea_handle.join().expect("idea branch panicked"),
        )
    });

    // Merge branch outputs in canonical order (founder first).
    report.founder_features = founder_out.features.take();
    report.founder_steps = founder_out.steps.take();
    report.founder_step_mean = report.founder_steps.as_deref().and_then(step_mean);
    report.scores.founder = founder_out.score;
    report.idea_features = idea_out.features;
    report.idea_steps = idea_out.steps;
    report.idea_step_mean = report.idea_steps.as_deref().and_then(step_mean);
    report.scores.idea = idea_out.score;
    let mut transcripts: Vec<PanelTranscript> = founder_out.transcripts;
    transcripts.extend(idea_out.transcripts);
    report.deviations.extend(founder_out.deviations);
    report.deviations.extend(idea_out.deviations);
    completed.extend(founder_out.stages.iter());
    completed.extend(idea_out.stages.iter());

    let failure = founder_out.error.or(idea_out.error);
    let failure = match failure {
        Some(e) => Some(e),
        None => {
            // Both branches done; fit and aggregation run sequentially.
            let founder_score = report.scores.founder.expect("founder branch completed");
            let idea_score = report.scores.idea.expect("idea branch completed");
            let mut fit_out = match options.fit_mode {
                FitMode::Llm => evaluator.evaluate_fit(&founder_text, &request.idea_text),
                FitMode::Embedding => {
                    let mut out = BranchOutput::default();
                    match embedding_fit(&desc_vec, &idea_vec) {
                        Ok(score) => {
                            out.score = Some(score);
                            out.stages.push("fit");
                        }
                        Err(e) => {
                            out.error = Some(PipelineError::new(
                                StageTag::FitRating,
                                PipelineErrorKind::Precondition(format!(
                                    "embedding fit failed: {e}"
                                )),
                            ));
                        }
                    }
                    out
                }
            };
            report.fit_steps = fit_out.steps.take();
            report.scores.fit = fit_out.score;
            transcripts.extend(fit_out.transcripts);
            report.deviations.extend(fit_out.deviations);
            completed.extend(fit_out.stages.iter());

            match fit_out.error {
                Some(e) => Some(e),
                None => {
                    let fit_score = fit_out.score.expect("fit completed");
                    let aggregate = scoring::aggregate(founder_score, idea_score, fit_score)
                        .expect("sub-scores are parser-bounded to [0, 1]");
                    report.scores.aggregate = Some(aggregate);
                    completed.insert("aggregate");
                    if let Some(warning) =
                        scoring::formula_edge_warning(founder_score, idea_score, fit_score)
                    {
                        report.warnings.push(warning);
                    }
                    if options.summarize {
                        let source: Vec<&str> = transcripts
                            .iter()
                            .filter(|t| {
                                matches!(
                                    t.stage,
                                    StageTag::FounderFeatures | StageTag::IdeaFeatures
                                )
                            })
                            .map(|t| t.response_text.as_str())
                            .collect();
                        match evaluator.summary_step(&source.join("\n\n")) {
                            Ok((entries, transcript)) => {
                                report.pros_cons = entries;
                                transcripts.push(transcript);
                            }
                            Err(e) => report
                                .deviations
                                .push(format!("summary stage skipped: {e}")),
                        }
                    }
                    None
                }
            }
        }
    };

    if let Some(e) = &failure {
        report.error = Some(ReportedError {
            stage: e.stage,
            message: e.kind.to_string(),
        });
    }
    report.stage_log = stage_log(&completed);
    report.transcripts = transcripts
        .into_iter()
        .map(|t| TranscriptReport {
            stage: t.stage,
            prompt_text: t.prompt_text,
            response_text: t.response_text,
        })
        .collect();
    EvaluationRun { report, failure }
}

fn stage_log(completed: &BTreeSet<&'static str>) -> Vec<String> {
    STAGE_LOG_ORDER
        .iter()
        .filter(|s| completed.contains(*s))
        .map(|s| s.to_string())
        .collect()
}
