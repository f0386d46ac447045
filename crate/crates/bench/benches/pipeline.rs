//! End-to-end benchmarks over the synthetic corpus: text treatment, pattern
//! accumulation, feature assembly, model training, and batch prediction.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use eventloc_bench::{corpus, full_dataset, treat_all};
use eventloc_core::features::{PatternCorpora, DEFAULT_N_RANGE};
use eventloc_core::learn::{
    train_mlp, train_random_forest, train_svm_rbf, ForestParams, MlpParams, SvmParams,
};
use eventloc_core::preprocess::treat_document;

fn bench_preprocessing(c: &mut Criterion) {
    let corpus = corpus(60);
    let treated = treat_all(&corpus);
    let mut group = c.benchmark_group("preprocessing");
    group.bench_function("treat 60 articles", |b| {
        b.iter(|| {
            for doc in &corpus.documents {
                black_box(treat_document(black_box(doc), &corpus.lexicons));
            }
        })
    });
    group.bench_function("pattern corpora, n 2-7", |b| {
        b.iter(|| {
            PatternCorpora::build(black_box(&treated), &corpus.labels, DEFAULT_N_RANGE).unwrap()
        })
    });
    let corpora =
        PatternCorpora::build(&treated, &corpus.labels, DEFAULT_N_RANGE).unwrap();
    group.bench_function("assemble feature matrix", |b| {
        b.iter(|| {
            eventloc_core::features::assemble_dataset(
                black_box(&treated),
                &corpora,
                &corpus.labels,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_training(c: &mut Criterion) {
    let corpus = corpus(60);
    let treated = treat_all(&corpus);
    let data = full_dataset(&corpus, &treated);
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("random forest, 200 trees", |b| {
        b.iter(|| {
            train_random_forest(
                black_box(&data),
                &ForestParams {
                    n_trees: 200,
                    ..ForestParams::default()
                },
            )
            .unwrap()
        })
    });
    group.bench_function("svm, rbf kernel", |b| {
        b.iter(|| train_svm_rbf(black_box(&data), &SvmParams::default()).unwrap())
    });
    group.bench_function("mlp, one grid cell, 200 epochs", |b| {
        b.iter(|| {
            train_mlp(
                black_box(&data),
                &MlpParams {
                    hidden_grid: vec![5],
                    decay_grid: vec![1e-2],
                    epochs: 200,
                    ..MlpParams::default()
                },
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_prediction(c: &mut Criterion) {
    let corpus = corpus(60);
    let treated = treat_all(&corpus);
    let data = full_dataset(&corpus, &treated);
    let forest = train_random_forest(
        &data,
        &ForestParams {
            n_trees: 200,
            ..ForestParams::default()
        },
    )
    .unwrap();
    c.bench_function("forest scores every row", |b| {
        b.iter(|| {
            data.rows
                .iter()
                .map(|r| forest.predict_proba(black_box(&r.values)))
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, bench_preprocessing, bench_training, bench_prediction);
criterion_main!(benches);
