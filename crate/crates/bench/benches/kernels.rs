use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use distunlearn::data::Group;
use distunlearn::downstream::train_logistic;
use distunlearn::frontier::{frontier_expfamily, ExpFamilySpec};
use distunlearn::gaussian::g_inverse;
use distunlearn::mechanisms::{score_features, ScoringParams, ScoringRule};
use distunlearn_bench::{gaussian_rows, spam_features};

fn quantiles(c: &mut Criterion) {
    c.bench_function("g_inverse/kappa=1", |b| b.iter(|| g_inverse(black_box(0.9), black_box(1.0))));
}

fn frontier(c: &mut Criterion) {
    let bern = ExpFamilySpec::bernoulli(0.3, 0.7).unwrap();
    let d = bern.reference_divergence();
    c.bench_function("frontier_expfamily/bernoulli", |b| {
        b.iter(|| frontier_expfamily(&bern, black_box(4.0 * d)))
    });
    let pois = ExpFamilySpec::poisson(2.0, 5.0).unwrap();
    let d = pois.reference_divergence();
    c.bench_function("frontier_expfamily/poisson", |b| {
        b.iter(|| frontier_expfamily(&pois, black_box(4.0 * d)))
    });
}

fn scoring(c: &mut Criterion) {
    let mut g = c.benchmark_group("score_features");
    g.sample_size(10);
    for n in [250, 1000] {
        let p1 = gaussian_rows(n, 16, 0.0, 1);
        let p2 = gaussian_rows(n, 16, 0.5, 2);
        for rule in [ScoringRule::KnnRatio, ScoringRule::MahaMu2] {
            g.bench_with_input(BenchmarkId::new(rule.name(), n), &n, |b, _| {
                b.iter(|| score_features(&p1, &p2, rule, &ScoringParams::default()))
            });
        }
    }
    let text = spam_features(1300, 240);
    let p1 = text.features().select_rows(&text.rows_in(Group::P1));
    let p2 = text.features().select_rows(&text.rows_in(Group::P2));
    g.bench_function("knn-ratio/sparse-text", |b| {
        b.iter(|| score_features(&p1, &p2, ScoringRule::KnnRatio, &ScoringParams::default()))
    });
    g.finish();
}

fn training(c: &mut Criterion) {
    let text = spam_features(1300, 240);
    let mut g = c.benchmark_group("train_logistic");
    g.sample_size(10);
    g.bench_function("sparse-text", |b| {
        b.iter(|| train_logistic(&text, 1.0 / text.len() as f64, 0, 5000, 1e-6))
    });
    g.finish();
}

criterion_group!(benches, quantiles, frontier, scoring, training);
criterion_main!(benches);
