//! Shared setup for the criterion benchmarks: a synthetic corpus plus its
//! treated documents and assembled feature matrix, built once per run.

use eventloc_core::features::{assemble_dataset, Dataset, PatternCorpora, DEFAULT_N_RANGE};
use eventloc_core::preprocess::{treat_document, TreatedDocument};
use eventloc_core::synthetic::{generate, SyntheticConfig, SyntheticCorpus};

pub fn corpus(articles: usize) -> SyntheticCorpus {
    generate(&SyntheticConfig {
        articles,
        ..SyntheticConfig::default()
    })
}

pub fn treat_all(corpus: &SyntheticCorpus) -> Vec<TreatedDocument> {
    corpus
        .documents
        .iter()
        .map(|d| treat_document(d, &corpus.lexicons))
        .collect()
}

pub fn full_dataset(corpus: &SyntheticCorpus, treated: &[TreatedDocument]) -> Dataset {
    let corpora = PatternCorpora::build(treated, &corpus.labels, DEFAULT_N_RANGE)
        .expect("pattern corpora build");
    assemble_dataset(treated, &corpora, &corpus.labels).expect("dataset assembles")
}
