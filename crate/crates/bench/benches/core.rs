use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use founderfit::index::founder_similarity;
use founderfit::ingest::MappingConfig;
use founderfit::records::Outcome;
use founderfit_bench::{synthetic_index, synthetic_profile, synthetic_transcript};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DIM: usize = 64;

fn bench_founder_similarity(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let index = synthetic_index(&mut rng, 2, 0, DIM);
    let (a, b) = (&index.founders()[0], &index.founders()[1]);
    c.bench_function("founder_similarity", |bencher| {
        bencher.iter(|| founder_similarity(black_box(a), black_box(b)).unwrap())
    });
}

fn bench_retrieval(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let index = synthetic_index(&mut rng, 6_000, 0, DIM);
    let probe = index.founders()[0].clone();
    let query = founderfit::index::FounderQuery {
        profile: probe.record.profile,
        desc_vec: probe.desc_vec,
        jobs_vec: probe.jobs_vec,
    };
    c.bench_function("nearest_founders_6k", |bencher| {
        bencher.iter(|| index.nearest_founders(black_box(&query), 3).unwrap())
    });
    assert!(index.founder_count_by_outcome(Outcome::Success) > 0);
}

fn bench_map_subjects(c: &mut Criterion) {
    let mapping = MappingConfig::default();
    let field = "Electrical Engineering and Computer Science, minor in Economics";
    c.bench_function("map_subjects", |bencher| {
        bencher.iter(|| mapping.map_subjects(black_box(field)))
    });
}

fn bench_parse_transcript(c: &mut Criterion) {
    let transcript = synthetic_transcript(6);
    c.bench_function("parse_step_ratings", |bencher| {
        bencher.iter(|| founderfit::pipeline::parse_step_ratings(black_box(&transcript)).unwrap())
    });
}

fn bench_aggregate(c: &mut Criterion) {
    c.bench_function("aggregate", |bencher| {
        bencher.iter(|| {
            founderfit::scoring::aggregate(black_box(0.71), black_box(0.6625), black_box(0.63))
                .unwrap()
        })
    });
}

fn bench_profile_text(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let profile = synthetic_profile(&mut rng, "p");
    c.bench_function("profile_display_text", |bencher| {
        bencher.iter(|| black_box(&profile).display_text())
    });
}

criterion_group!(
    benches,
    bench_founder_similarity,
    bench_retrieval,
    bench_map_subjects,
    bench_parse_transcript,
    bench_aggregate,
    bench_profile_text
);
criterion_main!(benches);
