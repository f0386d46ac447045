//! Collocation-pattern corpora and per-location covariates.
//!
//! Training documents with known labels feed correct/incorrect N-gram pattern
//! corpora. Each (article, location) pair then gets a covariate vector:
//! per-n pattern ratios and top-pattern match counts, sentence frequency,
//! and materiality/immateriality counts — every base value normalized twice,
//! within its article and within the whole dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lexicon::Level;
use crate::preprocess::TreatedDocument;

/// N-gram lengths used when nothing narrower is configured.
pub const DEFAULT_N_RANGE: RangeInclusive<u8> = 2..=7;

/// Placeholder written over focal province-level mention tokens.
pub const LOCATION_PLACEHOLDER: &str = "LOCATION";
/// Placeholder written over focal subprovince mention tokens.
pub const SUB_LOCATION_PLACEHOLDER: &str = "SUB-LOCATION";

/// Labels per article: canonical province → 0 (incorrect) or 1 (correct).
pub type ArticleLabels = BTreeMap<String, u8>;
/// Labels per corpus: story_id → article labels.
pub type CorpusLabels = BTreeMap<String, ArticleLabels>;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("story {story_id}: location \"{canonical}\" has no mention in the treated text")]
    CanonicalAbsent { story_id: String, canonical: String },
    #[error("story {story_id}: mention \"{canonical}\" has no 0/1 label")]
    UnlabeledMention { story_id: String, canonical: String },
    #[error("story {story_id}: label for \"{canonical}\" refers to a location never mentioned")]
    LabelWithoutMention { story_id: String, canonical: String },
    #[error("unknown feature \"{name}\"")]
    UnknownFeature { name: String },
}

/// One n's correct/incorrect pattern counts plus the cached top halves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramCorpus {
    pub correct: BTreeMap<String, u64>,
    pub incorrect: BTreeMap<String, u64>,
    top_correct: BTreeSet<String>,
    top_incorrect: BTreeSet<String>,
}

impl NgramCorpus {
    fn refresh_tops(&mut self) {
        self.top_correct = top_half(&self.correct);
        self.top_incorrect = top_half(&self.incorrect);
    }

    pub fn top_correct(&self) -> &BTreeSet<String> {
        &self.top_correct
    }

    pub fn top_incorrect(&self) -> &BTreeSet<String> {
        &self.top_incorrect
    }
}

/// The ⌈|map|/2⌉ highest-count patterns; ties break by count descending,
/// then lexicographically.
fn top_half(map: &BTreeMap<String, u64>) -> BTreeSet<String> {
    let keep = map.len().div_ceil(2);
    let mut ranked: Vec<(&String, &u64)> = map.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(keep).map(|(p, _)| p.clone()).collect()
}

/// Correct/incorrect collocation-pattern counts for every configured n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCorpora {
    per_n: BTreeMap<u8, NgramCorpus>,
}

impl PatternCorpora {
    /// Accumulates patterns from every labeled (article, location) pair:
    /// label-1 pairs feed the correct corpus, label-0 the incorrect one.
    /// Every mentioned location must carry a label.
    pub fn build(
        docs: &[TreatedDocument],
        labels: &CorpusLabels,
        ns: RangeInclusive<u8>,
    ) -> Result<Self, FeatureError> {
        let mut per_n: BTreeMap<u8, NgramCorpus> =
            ns.clone().map(|n| (n, NgramCorpus::default())).collect();
        for doc in docs {
            let article_labels = labels.get(&doc.story_id);
            for canonical in doc.distinct_canonicals() {
                let label = article_labels.and_then(|m| m.get(canonical)).ok_or_else(|| {
                    FeatureError::UnlabeledMention {
                        story_id: doc.story_id.clone(),
                        canonical: canonical.to_string(),
                    }
                })?;
                for (&n, corpus) in per_n.iter_mut() {
                    let side = if *label != 0 {
                        &mut corpus.correct
                    } else {
                        &mut corpus.incorrect
                    };
                    for pattern in collocation_ngrams(doc, canonical, n)? {
                        *side.entry(pattern).or_insert(0) += 1;
                    }
                }
            }
        }
        for corpus in per_n.values_mut() {
            corpus.refresh_tops();
        }
        Ok(PatternCorpora { per_n })
    }

    pub fn ns(&self) -> impl Iterator<Item = u8> + '_ {
        self.per_n.keys().copied()
    }

    pub fn corpus(&self, n: u8) -> Option<&NgramCorpus> {
        self.per_n.get(&n)
    }

    /// SHA-256 over the canonical JSON serialization; equal fingerprints
    /// mean pattern-identical corpora.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("corpora serialize");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// All n-windows (within one sentence) that overlap a mention of `canonical`,
/// with every focal mention token rewritten to LOCATION or SUB-LOCATION and
/// everything else — other locations included — kept literal.
pub fn collocation_ngrams(
    doc: &TreatedDocument,
    canonical: &str,
    n: u8,
) -> Result<Vec<String>, FeatureError> {
    let n = n as usize;
    let mut focal: BTreeMap<(usize, usize), Level> = BTreeMap::new();
    for m in doc.mentions_of(canonical) {
        focal.insert((m.sentence_idx, m.token_idx), m.level);
    }
    if focal.is_empty() {
        return Err(FeatureError::CanonicalAbsent {
            story_id: doc.story_id.clone(),
            canonical: canonical.to_string(),
        });
    }
    let mut patterns = Vec::new();
    for (sentence_idx, sentence) in doc.sentences.iter().enumerate() {
        if sentence.len() < n {
            continue;
        }
        let rewritten: Vec<&str> = sentence
            .iter()
            .enumerate()
            .map(|(token_idx, tok)| match focal.get(&(sentence_idx, token_idx)) {
                Some(Level::Province) => LOCATION_PLACEHOLDER,
                Some(Level::Subprovince) => SUB_LOCATION_PLACEHOLDER,
                None => tok.as_str(),
            })
            .collect();
        for start in 0..=sentence.len() - n {
            let overlaps_focal =
                (start..start + n).any(|i| focal.contains_key(&(sentence_idx, i)));
            if overlaps_focal {
                patterns.push(rewritten[start..start + n].join(" "));
            }
        }
    }
    Ok(patterns)
}

/// Summed-count ratio C/(C+I) of the collected patterns against the two
/// corpora for length `n`; 0.5 when neither corpus knows any of them.
pub fn ngram_ratio(patterns: &[String], corpora: &PatternCorpora, n: u8) -> f64 {
    let Some(corpus) = corpora.corpus(n) else {
        return 0.5;
    };
    let mut correct = 0u64;
    let mut incorrect = 0u64;
    for p in patterns {
        correct += corpus.correct.get(p).copied().unwrap_or(0);
        incorrect += corpus.incorrect.get(p).copied().unwrap_or(0);
    }
    if correct + incorrect == 0 {
        0.5
    } else {
        correct as f64 / (correct + incorrect) as f64
    }
}

/// How many collected patterns (with multiplicity) sit in the top-half
/// correct and incorrect pattern sets for length `n`.
pub fn top_pattern_matches(patterns: &[String], corpora: &PatternCorpora, n: u8) -> (u64, u64) {
    let Some(corpus) = corpora.corpus(n) else {
        return (0, 0);
    };
    let hits_correct = patterns.iter().filter(|p| corpus.top_correct.contains(*p)).count();
    let hits_incorrect = patterns.iter().filter(|p| corpus.top_incorrect.contains(*p)).count();
    (hits_correct as u64, hits_incorrect as u64)
}

/// Number of distinct sentences mentioning `canonical` (in province or
/// sub- form).
pub fn sentence_frequency(doc: &TreatedDocument, canonical: &str) -> u64 {
    let sentences: BTreeSet<usize> = doc.mentions_of(canonical).map(|m| m.sentence_idx).collect();
    sentences.len() as u64
}

/// (material, immaterial) token counts over the sentences mentioning
/// `canonical`: material counts ACTION-VERB tags (the action-verb lexicon
/// also carries the relevant nouns), immaterial counts NONTOPIC plus SOURCE
/// tags. Repeats within a sentence count per token.
pub fn materiality(doc: &TreatedDocument, canonical: &str) -> (u64, u64) {
    let sentences: BTreeSet<usize> = doc.mentions_of(canonical).map(|m| m.sentence_idx).collect();
    let mut material = 0;
    let mut immaterial = 0;
    for &s in &sentences {
        for tok in &doc.sentences[s] {
            match tok.as_str() {
                "ACTION-VERB" => material += 1,
                "NONTOPIC" | "SOURCE" => immaterial += 1,
                _ => {}
            }
        }
    }
    (material, immaterial)
}

/// Divides each value by the maximum of its group; groups whose maximum is 0
/// map to all zeros. `groups[i]` names the group of `values[i]` — one group
/// per article for article scope, a single shared group for data scope.
pub fn normalize<K: Ord>(values: &[f64], groups: &[K]) -> Vec<f64> {
    assert_eq!(values.len(), groups.len());
    let mut max: BTreeMap<&K, f64> = BTreeMap::new();
    for (v, g) in values.iter().zip(groups) {
        let entry = max.entry(g).or_insert(0.0);
        if *v > *entry {
            *entry = *v;
        }
    }
    values
        .iter()
        .zip(groups)
        .map(|(v, g)| {
            let m = max[g];
            if m > 0.0 {
                v / m
            } else {
                0.0
            }
        })
        .collect()
}

/// One (article, location) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub story_id: String,
    /// Canonical province this row scores.
    pub location: String,
    /// 1 = correct event location, 0 = incorrect, None = unknown.
    pub label: Option<u8>,
    /// Values aligned with the dataset's `feature_names`.
    pub values: Vec<f64>,
}

/// Rectangular feature matrix plus the fingerprint of the corpora that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
    /// Fingerprint of the pattern corpora the n-gram covariates came from.
    pub provenance: String,
}

impl Dataset {
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Label vector for training; errors on any unlabeled row.
    pub fn labels(&self) -> Option<Vec<u8>> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// The same rows restricted to the named columns, in the given order.
    pub fn project(&self, names: &[String]) -> Result<Dataset, FeatureError> {
        let indices = names
            .iter()
            .map(|name| {
                self.feature_index(name)
                    .ok_or_else(|| FeatureError::UnknownFeature { name: name.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            feature_names: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    story_id: r.story_id.clone(),
                    location: r.location.clone(),
                    label: r.label,
                    values: indices.iter().map(|&i| r.values[i]).collect(),
                })
                .collect(),
            provenance: self.provenance.clone(),
        })
    }
}

/// Covariate names for the given n-gram lengths, in dataset column order.
pub fn feature_names(ns: impl IntoIterator<Item = u8>) -> Vec<String> {
    let mut names = Vec::new();
    for n in ns {
        for base in ["ratio", "top_correct", "top_incorrect"] {
            for scope in ["article", "data"] {
                names.push(format!("ngram{n}_{base}_{scope}"));
            }
        }
    }
    for base in ["freq", "material", "immaterial"] {
        for scope in ["article", "data"] {
            names.push(format!("{base}_{scope}"));
        }
    }
    names
}

/// Builds one FeatureRow per (story, canonical) pair: raw covariates from
/// the given corpora, then per-column normalization within articles and
/// within the whole dataset. Labels are attached where `labels` knows them;
/// a label naming a location the article never mentions is an error.
pub fn assemble_dataset(
    docs: &[TreatedDocument],
    corpora: &PatternCorpora,
    labels: &CorpusLabels,
) -> Result<Dataset, FeatureError> {
    let ns: Vec<u8> = corpora.ns().collect();
    let names = feature_names(ns.iter().copied());
    let n_base = names.len() / 2;

    // Raw base values per row, column-major normalization afterward.
    let mut story_ids: Vec<String> = Vec::new();
    let mut locations: Vec<String> = Vec::new();
    let mut row_labels: Vec<Option<u8>> = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for doc in docs {
        let mentioned = doc.distinct_canonicals();
        if let Some(article_labels) = labels.get(&doc.story_id) {
            for canonical in article_labels.keys() {
                if !mentioned.iter().any(|c| c == canonical) {
                    return Err(FeatureError::LabelWithoutMention {
                        story_id: doc.story_id.clone(),
                        canonical: canonical.clone(),
                    });
                }
            }
        }
        for canonical in mentioned {
            let mut base = Vec::with_capacity(n_base);
            for &n in &ns {
                let patterns = collocation_ngrams(doc, canonical, n)?;
                let (top_c, top_i) = top_pattern_matches(&patterns, corpora, n);
                base.push(ngram_ratio(&patterns, corpora, n));
                base.push(top_c as f64);
                base.push(top_i as f64);
            }
            let (material, immaterial) = materiality(doc, canonical);
            base.push(sentence_frequency(doc, canonical) as f64);
            base.push(material as f64);
            base.push(immaterial as f64);
            story_ids.push(doc.story_id.clone());
            locations.push(canonical.to_string());
            row_labels.push(
                labels
                    .get(&doc.story_id)
                    .and_then(|m| m.get(canonical))
                    .copied(),
            );
            raw.push(base);
        }
    }

    let n_rows = raw.len();
    let data_groups = vec![(); n_rows];
    let mut values = vec![Vec::with_capacity(names.len()); n_rows];
    for b in 0..n_base {
        let column: Vec<f64> = raw.iter().map(|r| r[b]).collect();
        let by_article = normalize(&column, &story_ids);
        let by_data = normalize(&column, &data_groups);
        for i in 0..n_rows {
            values[i].push(by_article[i]);
            values[i].push(by_data[i]);
        }
    }

    let rows = story_ids
        .into_iter()
        .zip(locations)
        .zip(row_labels)
        .zip(values)
        .map(|(((story_id, location), label), values)| FeatureRow {
            story_id,
            location,
            label,
            values,
        })
        .collect();
    Ok(Dataset {
        feature_names: names,
        rows,
        provenance: corpora.fingerprint(),
    })
}
