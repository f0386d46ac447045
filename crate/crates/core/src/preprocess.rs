//! Raw article → treated token stream.
//!
//! The pipeline is a fixed composition: clean → sentence split → stopword
//! removal → stemming (with name restoration) → location homogenization →
//! category generalization. Every stage is a pure function, so corpora can
//! be treated with unlimited data parallelism.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lexicon::{
    Category, CategoryBundle, Level, Lexicons, LocationLexicon, StemExceptionList, StopwordList,
};
use crate::stem::stem;

/// One raw news article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub story_id: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_tag: Option<String>,
}

/// A fully treated article: token sentences plus the location mentions found
/// during homogenization. Mention indices address the treated tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreatedDocument {
    pub story_id: String,
    pub sentences: Vec<Vec<String>>,
    pub mentions: Vec<LocationMention>,
}

/// One homogenized location occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationMention {
    /// Canonical province (also the label key and prediction unit).
    pub canonical: String,
    pub level: Level,
    pub sentence_idx: usize,
    pub token_idx: usize,
    /// The (stemmed) phrase as it stood in the stream before replacement.
    pub surface: String,
}

impl TreatedDocument {
    /// Distinct canonical provinces in first-appearance order.
    pub fn distinct_canonicals(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.mentions
            .iter()
            .filter(|m| seen.insert(m.canonical.as_str()))
            .map(|m| m.canonical.as_str())
            .collect()
    }

    pub fn mentions_of<'a>(
        &'a self,
        canonical: &'a str,
    ) -> impl Iterator<Item = &'a LocationMention> {
        self.mentions.iter().filter(move |m| m.canonical == canonical)
    }

    /// Plain-text rendering: one sentence per line, tokens space-joined,
    /// each line closed with a period. Used for golden-file comparison and
    /// human inspection of treated output.
    pub fn treated_text(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            out.push_str(&sentence.join(" "));
            out.push_str(".\n");
        }
        out
    }
}

/// Strips everything but letters, digits, whitespace, and periods that
/// directly follow a letter or digit, lowercasing as it goes. A kept period
/// stays attached to the preceding token and is followed by a space, so
/// "a.b,c!" becomes "a. b c".
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut last_alnum = false;
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
            last_alnum = true;
        } else {
            if ch == '.' && last_alnum {
                out.push_str(". ");
            } else {
                out.push(' ');
            }
            last_alnum = false;
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits cleaned text into whitespace-tokenized sentences at periods,
/// dropping empty sentences.
pub fn split_sentences(text: &str) -> Vec<Vec<String>> {
    text.split('.')
        .map(|piece| {
            piece
                .split_whitespace()
                .map(String::from)
                .collect::<Vec<String>>()
        })
        .filter(|sentence| !sentence.is_empty())
        .collect()
}

/// Removes stopwords; the list's preserved prepositions always survive.
pub fn remove_stopwords(tokens: Vec<String>, stoplist: &StopwordList) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stoplist.is_stopword(t))
        .collect()
}

/// Porter-stems every token, then restores over-stemmed names via the
/// exception list.
pub fn stem_tokens(tokens: Vec<String>, exceptions: &StemExceptionList) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| exceptions.apply(&stem(&t)).to_string())
        .collect()
}

/// Replaces every gazetteer phrase with a single canonical token —
/// `<province>` for province-level names, `sub-<province>` for subprovince
/// names — recording one mention per replacement. Longer phrases win; token
/// indices in the returned mentions address the rebuilt sentences.
pub fn homogenize_locations(
    sentences: Vec<Vec<String>>,
    lexicon: &LocationLexicon,
) -> (Vec<Vec<String>>, Vec<LocationMention>) {
    let mut mentions = Vec::new();
    let rebuilt = sentences
        .into_iter()
        .enumerate()
        .map(|(sentence_idx, mut sentence)| {
            let mut out = Vec::with_capacity(sentence.len());
            let mut i = 0;
            while i < sentence.len() {
                match lexicon.resolve(&sentence, i) {
                    Some(hit) => {
                        let token = match hit.level {
                            Level::Province => hit.province.to_string(),
                            Level::Subprovince => format!("sub-{}", hit.province),
                        };
                        mentions.push(LocationMention {
                            canonical: hit.province.to_string(),
                            level: hit.level,
                            sentence_idx,
                            token_idx: out.len(),
                            surface: sentence[i..i + hit.span].join(" "),
                        });
                        out.push(token);
                        i += hit.span;
                    }
                    None => {
                        out.push(std::mem::take(&mut sentence[i]));
                        i += 1;
                    }
                }
            }
            out
        })
        .collect();
    (rebuilt, mentions)
}

fn is_digit_run(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit())
}

/// Rewrites category-lexicon members to their uppercase tags, digit runs to
/// NUMERAL, and day numbers (1–31) standing next to a month word to DATE.
/// Mention tokens are never touched. Idempotent: tags and pattern outputs
/// are never lexicon members.
pub fn generalize_tokens(
    sentences: Vec<Vec<String>>,
    categories: &CategoryBundle,
    mentions: &[LocationMention],
) -> Vec<Vec<String>> {
    let mention_pos: BTreeSet<(usize, usize)> = mentions
        .iter()
        .map(|m| (m.sentence_idx, m.token_idx))
        .collect();
    sentences
        .into_iter()
        .enumerate()
        .map(|(sentence_idx, sentence)| {
            let is_month: Vec<bool> = sentence
                .iter()
                .enumerate()
                .map(|(token_idx, tok)| {
                    !mention_pos.contains(&(sentence_idx, token_idx))
                        && categories.category_of(tok) == Some(Category::Month)
                })
                .collect();
            sentence
                .into_iter()
                .enumerate()
                .map(|(token_idx, tok)| {
                    if mention_pos.contains(&(sentence_idx, token_idx)) {
                        return tok;
                    }
                    if let Some(cat) = categories.category_of(&tok) {
                        return cat.tag().to_string();
                    }
                    if is_digit_run(&tok) {
                        let next_to_month = (token_idx > 0 && is_month[token_idx - 1])
                            || (token_idx + 1 < is_month.len() && is_month[token_idx + 1]);
                        let day = tok.parse::<u32>().ok().filter(|d| (1..=31).contains(d));
                        return if next_to_month && day.is_some() {
                            "DATE".to_string()
                        } else {
                            "NUMERAL".to_string()
                        };
                    }
                    tok
                })
                .collect()
        })
        .collect()
}

/// Runs the whole treatment pipeline on one article.
pub fn treat_document(doc: &Document, lexicons: &Lexicons) -> TreatedDocument {
    let cleaned = clean_text(&doc.raw_text);
    let sentences: Vec<Vec<String>> = split_sentences(&cleaned)
        .into_iter()
        .map(|s| {
            stem_tokens(
                remove_stopwords(s, &lexicons.stopwords),
                &lexicons.stem_exceptions,
            )
        })
        .collect();
    let (sentences, mentions) = homogenize_locations(sentences, &lexicons.locations);
    let sentences = generalize_tokens(sentences, &lexicons.categories, &mentions);
    TreatedDocument {
        story_id: doc.story_id.clone(),
        sentences,
        mentions,
    }
}
