//! Non-learning reference classifiers: accept every dictionary hit, pick the
//! location nearest an action verb, or pick the most frequently mentioned
//! location.

use serde::{Deserialize, Serialize};

use crate::features::{sentence_frequency, FeatureRow};
use crate::preprocess::TreatedDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Every location mention counts as an event location.
    Dictionary,
    /// The location whose mention sits closest to an action-verb token.
    NearestVerb,
    /// The location mentioned in the most sentences.
    Focus,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::Dictionary,
        BaselineKind::NearestVerb,
        BaselineKind::Focus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Dictionary => "dictionary",
            BaselineKind::NearestVerb => "nearest-verb",
            BaselineKind::Focus => "focus",
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Canonical name of the location mention nearest (in flattened token
/// distance) to any ACTION-VERB token. Distance ties go to the earlier
/// mention; a document without verbs falls back to the earliest mention.
pub fn nearest_verb_baseline(doc: &TreatedDocument) -> Option<String> {
    let first = doc.mentions.first()?;
    // Flatten sentences so distance can cross sentence boundaries, matching
    // how a reader scans outward from a verb.
    let mut offsets = Vec::with_capacity(doc.sentences.len());
    let mut total = 0usize;
    let mut verb_positions = Vec::new();
    for sentence in &doc.sentences {
        offsets.push(total);
        for (i, token) in sentence.iter().enumerate() {
            if token == "ACTION-VERB" {
                verb_positions.push(total + i);
            }
        }
        total += sentence.len();
    }
    if verb_positions.is_empty() {
        return Some(first.canonical.clone());
    }
    let mut best: Option<(usize, &str)> = None;
    for mention in &doc.mentions {
        let pos = offsets[mention.sentence_idx] + mention.token_idx;
        let dist = verb_positions
            .iter()
            .map(|v| v.abs_diff(pos))
            .min()
            .unwrap();
        // Strict < keeps the earliest mention on ties.
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, &mention.canonical));
        }
    }
    best.map(|(_, canonical)| canonical.to_string())
}

/// Canonical name appearing in the most sentences; ties go to the location
/// that appears first in the document.
pub fn focus_baseline(doc: &TreatedDocument) -> Option<String> {
    let mut best: Option<(u64, &str)> = None;
    for canonical in doc.distinct_canonicals() {
        let freq = sentence_frequency(doc, canonical);
        if best.is_none_or(|(f, _)| freq > f) {
            best = Some((freq, canonical));
        }
    }
    best.map(|(_, canonical)| canonical.to_string())
}

/// Per-row 0/1 predictions for a baseline over feature rows. Rows are matched
/// to documents by story id; the single-pick baselines predict 1 only for
/// their chosen location.
pub fn baseline_predictions(
    kind: BaselineKind,
    docs: &[TreatedDocument],
    rows: &[FeatureRow],
) -> Vec<u8> {
    match kind {
        BaselineKind::Dictionary => vec![1; rows.len()],
        BaselineKind::NearestVerb | BaselineKind::Focus => {
            let choose = |doc: &TreatedDocument| match kind {
                BaselineKind::NearestVerb => nearest_verb_baseline(doc),
                _ => focus_baseline(doc),
            };
            let chosen: std::collections::BTreeMap<&str, Option<String>> = docs
                .iter()
                .map(|d| (d.story_id.as_str(), choose(d)))
                .collect();
            rows.iter()
                .map(|row| {
                    let pick = chosen.get(row.story_id.as_str()).cloned().flatten();
                    u8::from(pick.as_deref() == Some(row.location.as_str()))
                })
                .collect()
        }
    }
}
