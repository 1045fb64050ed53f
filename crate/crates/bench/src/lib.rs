//! Synthetic data generators for the benchmark suite. Everything is seeded so
//! benchmark inputs are identical across runs.

use std::collections::BTreeSet;

use founderfit::embed::{build_provider, EmbeddingConfig, EmbeddingProvider};
use founderfit::index::{EmbeddedFounder, EmbeddedIdea, SimilarityIndex};
use founderfit::records::{FounderProfile, FounderRecord, IdeaRecord, Outcome};
use rand::prelude::IndexedRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "platform", "market", "fintech", "health", "logistics", "robotics", "payments", "analytics",
    "mobile", "cloud", "security", "consumer", "enterprise", "social", "video", "search",
    "commerce", "biotech", "energy", "developer", "hardware", "network", "media", "gaming",
    "travel", "education", "insurance", "retail", "supply", "chain",
];

const ROLES: &[&str] = &[
    "Software Engineer", "Product Manager", "Data Scientist", "Sales Director",
    "Research Scientist", "Marketing Lead", "Operations Manager", "CTO", "Consultant", "Analyst",
];

const COMPANIES: &[&str] = &[
    "Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay", "Wayne", "Stark", "Wonka",
    "Tyrell",
];

/// A short pseudo-sentence of domain words.
pub fn synthetic_text(rng: &mut impl Rng, words: usize) -> String {
    let mut parts = Vec::with_capacity(words);
    for _ in 0..words {
        parts.push(*WORDS.choose(rng).expect("word pool is non-empty"));
    }
    parts.join(" ")
}

/// A plausible prior-jobs line: `Company(Description) as Role, ...`.
pub fn synthetic_jobs(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..4usize);
    let mut jobs = Vec::with_capacity(n);
    for _ in 0..n {
        let company = *COMPANIES.choose(rng).expect("company pool is non-empty");
        let role = *ROLES.choose(rng).expect("role pool is non-empty");
        jobs.push(format!("{company}({}) as {role}", synthetic_text(rng, 3)));
    }
    jobs.join(", ")
}

pub fn synthetic_profile(rng: &mut impl Rng, id: &str) -> FounderProfile {
    let mut majors = BTreeSet::new();
    for _ in 0..rng.random_range(0..3usize) {
        majors.insert(rng.random_range(0..12u8));
    }
    FounderProfile {
        id: id.to_string(),
        description: synthetic_text(rng, 12),
        highest_degree: rng.random_range(0..=3u8),
        top_institution: rng.random_bool(0.3),
        majors,
        prior_jobs: synthetic_jobs(rng),
    }
}

pub fn synthetic_founder(rng: &mut impl Rng, id: &str) -> FounderRecord {
    FounderRecord {
        profile: synthetic_profile(rng, id),
        outcome: if rng.random_bool(0.5) {
            Outcome::Success
        } else {
            Outcome::Failure
        },
    }
}

pub fn synthetic_idea(rng: &mut impl Rng, id: &str) -> IdeaRecord {
    IdeaRecord {
        id: id.to_string(),
        description: synthetic_text(rng, 20),
        outcome: if rng.random_bool(0.5) {
            Outcome::Success
        } else {
            Outcome::Failure
        },
    }
}

/// Deterministic provider used for all benchmark embeddings.
pub fn bench_provider(dim: usize) -> Box<dyn EmbeddingProvider> {
    let config = EmbeddingConfig {
        dim,
        ..EmbeddingConfig::default()
    };
    build_provider(&config).expect("deterministic provider always builds")
}

/// Builds a populated index of `n_founders` + `n_ideas` synthetic records.
pub fn synthetic_index(
    rng: &mut impl Rng,
    n_founders: usize,
    n_ideas: usize,
    dim: usize,
) -> SimilarityIndex {
    let provider = bench_provider(dim);
    let mut index = SimilarityIndex::new(dim);
    for i in 0..n_founders {
        let record = synthetic_founder(rng, &format!("founder-{i}"));
        let desc_vec = provider
            .embed_one(&record.profile.description)
            .expect("non-empty text embeds");
        let jobs_vec = provider
            .embed_one(record.profile.jobs_embedding_text())
            .expect("non-empty text embeds");
        index
            .add_founder(EmbeddedFounder {
                record,
                desc_vec,
                jobs_vec,
            })
            .expect("ids are unique");
    }
    for i in 0..n_ideas {
        let record = synthetic_idea(rng, &format!("idea-{i}"));
        let desc_vec = provider
            .embed_one(&record.description)
            .expect("non-empty text embeds");
        index
            .add_idea(EmbeddedIdea { record, desc_vec })
            .expect("ids are unique");
    }
    index
}

/// A multi-step panel transcript in the scaffold format, for parser benchmarks.
pub fn synthetic_transcript(n_steps: usize) -> String {
    let mut out = String::new();
    for step in 1..=n_steps {
        out.push_str(&format!("Step {step}: market readiness\n"));
        for expert in 1..=3 {
            out.push_str(&format!(
                "Expert {expert}: the signals look encouraging, likelihood: 0.{}\n",
                60 + step % 30
            ));
        }
        out.push_str("Discuss and agree: converging around the shared estimate.\n\n");
    }
    out.push_str("Discuss overall likelihood of success\n");
    out.push_str("Overall likelihood of success: 0.72\n");
    out
}
