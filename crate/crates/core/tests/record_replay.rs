//! Round-trip guarantee for session logs: a run recorded through the gateway
//! and replayed strictly against the same inputs yields a byte-identical
//! report, while changed inputs surface as a replay mismatch in strict mode
//! and are served anyway in lenient mode.

use founderfit::embed::{build_provider, EmbeddingConfig, EmbeddingProvider};
use founderfit::index::{EmbeddedFounder, EmbeddedIdea, SimilarityIndex};
use founderfit::llm::{Gateway, ReplayBackend, ScriptedBackend, SessionMeta, StageTag};
use founderfit::pipeline::{run_evaluation, EvaluationRequest, PipelineOptions, TemplateSet};
use founderfit::records::{FounderProfile, FounderRecord, IdeaRecord, Outcome};

fn corpus() -> (Box<dyn EmbeddingProvider>, SimilarityIndex) {
    let provider = build_provider(&EmbeddingConfig {
        dim: 32,
        ..EmbeddingConfig::default()
    })
    .unwrap();
    let mut index = SimilarityIndex::new(32);
    let founders = [
        ("winner", Outcome::Success, "scaled a market data startup"),
        ("runner-up", Outcome::Success, "built exchange infrastructure"),
        ("stalled", Outcome::Failure, "consumer app without traction"),
    ];
    for (id, outcome, desc) in founders {
        let vecs = provider
            .embed(&[desc.to_string(), format!("{id} jobs")])
            .unwrap();
        index
            .add_founder(EmbeddedFounder {
                record: FounderRecord {
                    profile: FounderProfile {
                        id: id.into(),
                        description: desc.into(),
                        highest_degree: 1,
                        top_institution: false,
                        majors: [3u8].into_iter().collect(),
                        prior_jobs: format!("{id} jobs"),
                    },
                    outcome,
                },
                desc_vec: vecs[0].clone(),
                jobs_vec: vecs[1].clone(),
            })
            .unwrap();
    }
    let ideas = [
        ("data-service", Outcome::Success, "commodity data subscriptions"),
        ("coupon-app", Outcome::Failure, "mobile coupons for groceries"),
    ];
    for (id, outcome, desc) in ideas {
        let vecs = provider.embed(&[desc.to_string()]).unwrap();
        index
            .add_idea(EmbeddedIdea {
                record: IdeaRecord {
                    id: id.into(),
                    description: desc.into(),
                    outcome,
                },
                desc_vec: vecs[0].clone(),
            })
            .unwrap();
    }
    (provider, index)
}

fn scripted_session() -> ScriptedBackend {
    let backend = ScriptedBackend::by_tag();
    backend.push(StageTag::FounderFeatures, "1. Domain depth\n2. Serial founding\n3. Determination");
    backend.push(
        StageTag::FounderRating,
        "Step 1: Domain depth\nExpert 1: Solid. Likelihood: 0.7\nExpert 2: Agreed. Likelihood: 0.7\nExpert 3: Yes. Likelihood: 0.75\n\nOverall likelihood of success: 0.71\n",
    );
    backend.push(StageTag::FounderFinal, "0.71");
    backend.push(StageTag::IdeaFeatures, "1. Growing market\n2. Unique service\n3. Cost reduction");
    backend.push(
        StageTag::IdeaRating,
        "Step 1: Growing market\nExpert 1: Plausible. Likelihood: 0.65\nExpert 2: Yes. Likelihood: 0.65\nExpert 3: Likely. Likelihood: 0.7\n\nOverall likelihood of success: 0.6625\n",
    );
    backend.push(StageTag::IdeaFinal, "0.6625");
    backend.push(StageTag::FitRating, "Background and idea align well.");
    backend.push(StageTag::FitFinal, "0.63");
    backend
}

fn request() -> EvaluationRequest {
    EvaluationRequest {
        founder: FounderProfile {
            id: "query".into(),
            description: "five years running a commodity exchange".into(),
            highest_degree: 2,
            top_institution: false,
            majors: [3u8, 4].into_iter().collect(),
            prior_jobs: "Exchange as Cofounder".into(),
        },
        idea_text: "Market data service for organic commodities".into(),
    }
}

fn meta() -> SessionMeta {
    SessionMeta {
        pipeline_version: "0.1.0".into(),
        config_hash: "cafe0123deadbeef".into(),
    }
}

#[test]
fn strict_replay_reproduces_the_recorded_report() {
    let (provider, index) = corpus();
    let templates = TemplateSet::default();
    let options = PipelineOptions::default();
    let dir = tempfile::tempdir().unwrap();
    let session_path = dir.path().join("session.jsonl");

    let recording = Gateway::new(Box::new(scripted_session()))
        .record_to(&session_path, meta())
        .unwrap();
    let first = run_evaluation(
        &index,
        provider.as_ref(),
        &recording,
        &templates,
        &options,
        &request(),
        "cafe0123deadbeef",
    );
    assert!(first.failure.is_none(), "{:?}", first.failure);
    assert_eq!(first.report.scores.founder, Some(0.71));

    let replay = ReplayBackend::load(&session_path, true).unwrap();
    assert_eq!(replay.meta(), &meta());
    let second = run_evaluation(
        &index,
        provider.as_ref(),
        &Gateway::new(Box::new(replay)),
        &templates,
        &options,
        &request(),
        "cafe0123deadbeef",
    );
    assert!(second.failure.is_none(), "{:?}", second.failure);
    assert_eq!(
        first.report.to_json(),
        second.report.to_json(),
        "replayed report is not byte-identical"
    );
}

#[test]
fn strict_replay_rejects_changed_inputs_but_lenient_serves_them() {
    let (provider, index) = corpus();
    let templates = TemplateSet::default();
    let options = PipelineOptions::default();
    let dir = tempfile::tempdir().unwrap();
    let session_path = dir.path().join("session.jsonl");

    let recording = Gateway::new(Box::new(scripted_session()))
        .record_to(&session_path, meta())
        .unwrap();
    let recorded = run_evaluation(
        &index,
        provider.as_ref(),
        &recording,
        &templates,
        &options,
        &request(),
        "cafe0123deadbeef",
    );
    assert!(recorded.failure.is_none(), "{:?}", recorded.failure);

    let mut changed = request();
    changed.founder.description = "entirely different background".into();

    // Strict: the founder branch's prompts no longer match the recording.
    let strict = ReplayBackend::load(&session_path, true).unwrap();
    let run = run_evaluation(
        &index,
        provider.as_ref(),
        &Gateway::new(Box::new(strict)),
        &templates,
        &options,
        &changed,
        "cafe0123deadbeef",
    );
    let failure = run.failure.expect("strict replay must flag drift");
    assert!(failure.is_backend(), "{failure}");
    assert!(failure.to_string().contains("replay"), "{failure}");
    assert_eq!(run.report.scores.founder, None);
    // The untouched idea branch still completes from the recording.
    assert_eq!(run.report.scores.idea, Some(0.6625));

    // Lenient: tags alone route the recorded replies.
    let lenient = ReplayBackend::load(&session_path, false).unwrap();
    let run = run_evaluation(
        &index,
        provider.as_ref(),
        &Gateway::new(Box::new(lenient)),
        &templates,
        &options,
        &changed,
        "cafe0123deadbeef",
    );
    assert!(run.failure.is_none(), "{:?}", run.failure);
    assert_eq!(run.report.scores.founder, Some(0.71));
}
