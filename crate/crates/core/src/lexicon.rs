//! Dictionary families the pipeline depends on: the location gazetteer,
//! category word lists, stopwords, and stem restorations.
//!
//! All lexicons are immutable after load and safe to share across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::stem::stem;

/// Gazetteer phrases longer than this must be pre-joined by the lexicon author.
pub const MAX_PHRASE_TOKENS: usize = 5;

/// Locational prepositions that survive stopword removal because collocation
/// patterns depend on them ("in LOCATION", "of SUB-LOCATION", ...).
pub const PRESERVED_STOPWORDS: [&str; 7] = ["in", "at", "from", "of", "near", "to", "outside"];

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row (expected {expected})")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        expected: &'static str,
    },
    #[error("surface form \"{surface}\" maps to both \"{first}\" and \"{second}\"")]
    ConflictingSurface {
        surface: String,
        first: String,
        second: String,
    },
    #[error("subprovince \"{surface}\" names parent \"{province}\", which has no province-level entry")]
    UnknownParent { surface: String, province: String },
    #[error("terms appear in more than one category: {}", overlap_list(.0))]
    CategoryOverlap(Vec<(String, Category, Category)>),
}

fn overlap_list(overlaps: &[(String, Category, Category)]) -> String {
    overlaps
        .iter()
        .map(|(term, a, b)| format!("\"{term}\" ({} vs {})", a.tag(), b.tag()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Administrative level of a gazetteer entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Province,
    Subprovince,
}

/// Word categories replaced by uppercase tags during generalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "ACTOR")]
    Actor,
    #[serde(rename = "ACTION-VERB")]
    ActionVerb,
    #[serde(rename = "NONTOPIC")]
    Nontopic,
    #[serde(rename = "SOURCE")]
    Source,
    #[serde(rename = "DIRECTIONAL")]
    Directional,
    #[serde(rename = "MONTH")]
    Month,
    #[serde(rename = "DAY")]
    Day,
    #[serde(rename = "ADMIN")]
    Admin,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Actor,
        Category::ActionVerb,
        Category::Nontopic,
        Category::Source,
        Category::Directional,
        Category::Month,
        Category::Day,
        Category::Admin,
    ];

    /// The token this category's members are rewritten to.
    pub fn tag(self) -> &'static str {
        match self {
            Category::Actor => "ACTOR",
            Category::ActionVerb => "ACTION-VERB",
            Category::Nontopic => "NONTOPIC",
            Category::Source => "SOURCE",
            Category::Directional => "DIRECTIONAL",
            Category::Month => "MONTH",
            Category::Day => "DAY",
            Category::Admin => "ADMIN",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LocationEntry {
    province: String,
    level: Level,
}

/// A gazetteer hit returned by [`LocationLexicon::resolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocationMatch<'a> {
    /// Canonical province the matched phrase belongs to.
    pub province: &'a str,
    pub level: Level,
    /// Number of consecutive tokens the phrase covers.
    pub span: usize,
}

/// Surface form → (canonical province, level) gazetteer.
///
/// Every surface phrase is indexed both raw and Porter-stemmed, because
/// lookups run over the stemmed token stream while lexicon authors write
/// natural spellings.
#[derive(Debug, Clone, Default)]
pub struct LocationLexicon {
    lookup: BTreeMap<Vec<String>, LocationEntry>,
    provinces: BTreeSet<String>,
    max_len: usize,
}

impl LocationLexicon {
    /// Loads a TSV gazetteer: `surface<TAB>province[<TAB>level]`, where level
    /// is `province` or `subprovince`. Without the third column, a row is a
    /// province entry when surface equals the canonical name and a
    /// subprovince entry otherwise. Blank lines and `#` comments are skipped.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        const EXPECTED: &str = "surface<TAB>province[<TAB>level], surface of 1-5 tokens";
        let mut rows = Vec::new();
        for (line_no, line) in read_content_lines(path)? {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let malformed = || LexiconError::MalformedRow {
                path: path.to_path_buf(),
                line: line_no,
                expected: EXPECTED,
            };
            // Canonical names become single treated tokens, so internal
            // spaces turn into hyphens here once and for all.
            let (surface, province) = match cols.as_slice() {
                [s, p] | [s, p, _] if !s.is_empty() && !p.is_empty() => (
                    s.to_lowercase(),
                    p.to_lowercase()
                        .split_whitespace()
                        .collect::<Vec<_>>()
                        .join("-"),
                ),
                _ => return Err(malformed()),
            };
            let tokens: Vec<String> = surface.split_whitespace().map(String::from).collect();
            let level = match cols.get(2) {
                Some(l) if l.eq_ignore_ascii_case("province") => Level::Province,
                Some(l) if l.eq_ignore_ascii_case("subprovince") => Level::Subprovince,
                Some(_) => return Err(malformed()),
                None if tokens.join("-") == province => Level::Province,
                None => Level::Subprovince,
            };
            if tokens.is_empty() || tokens.len() > MAX_PHRASE_TOKENS {
                return Err(malformed());
            }
            rows.push((surface, province, level));
        }
        Self::from_entries(rows)
    }

    /// Builds a gazetteer from `(surface, province, level)` triples, applying
    /// the same normalization as [`load`](Self::load): provinces hyphenated,
    /// every surface indexed both raw and stemmed.
    pub fn from_entries<I, S, P>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, P, Level)>,
        S: AsRef<str>,
        P: AsRef<str>,
    {
        let mut lex = LocationLexicon::default();
        for (surface, province, level) in entries {
            let tokens: Vec<String> = surface
                .as_ref()
                .to_lowercase()
                .split_whitespace()
                .map(String::from)
                .collect();
            assert!(
                (1..=MAX_PHRASE_TOKENS).contains(&tokens.len()),
                "gazetteer phrase must be 1-{MAX_PHRASE_TOKENS} tokens, got {:?}",
                surface.as_ref()
            );
            let province = province
                .as_ref()
                .to_lowercase()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join("-");
            if level == Level::Province {
                lex.provinces.insert(province.clone());
            }
            let entry = LocationEntry { province, level };
            let stemmed: Vec<String> = tokens.iter().map(|t| stem(t)).collect();
            lex.insert(tokens, entry.clone())?;
            lex.insert(stemmed, entry)?;
        }
        for (key, entry) in &lex.lookup {
            if entry.level == Level::Subprovince && !lex.provinces.contains(&entry.province) {
                return Err(LexiconError::UnknownParent {
                    surface: key.join(" "),
                    province: entry.province.clone(),
                });
            }
        }
        Ok(lex)
    }

    fn insert(&mut self, key: Vec<String>, entry: LocationEntry) -> Result<(), LexiconError> {
        self.max_len = self.max_len.max(key.len());
        match self.lookup.get(&key) {
            None => {
                self.lookup.insert(key, entry);
            }
            Some(existing) if *existing == entry => {}
            Some(existing) => {
                return Err(LexiconError::ConflictingSurface {
                    surface: key.join(" "),
                    first: existing.province.clone(),
                    second: entry.province.clone(),
                });
            }
        }
        Ok(())
    }

    /// Longest gazetteer phrase starting at `index`, if any. Spans never
    /// exceed the remaining tokens.
    pub fn resolve(&self, tokens: &[String], index: usize) -> Option<LocationMatch<'_>> {
        if index >= tokens.len() {
            return None;
        }
        let limit = self.max_len.min(tokens.len() - index);
        for span in (1..=limit).rev() {
            if let Some(entry) = self.lookup.get(&tokens[index..index + span]) {
                return Some(LocationMatch {
                    province: &entry.province,
                    level: entry.level,
                    span,
                });
            }
        }
        None
    }

    /// Canonical names of all province-level entries.
    pub fn provinces(&self) -> impl Iterator<Item = &str> {
        self.provinces.iter().map(String::as_str)
    }

    pub fn is_province(&self, canonical: &str) -> bool {
        self.provinces.contains(canonical)
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }
}

/// One category's word list, stored stemmed.
#[derive(Debug, Clone)]
pub struct CategoryLexicon {
    pub category: Category,
    entries: BTreeSet<String>,
}

impl CategoryLexicon {
    /// Loads a plain-text word list (one term per line, `#` comments
    /// ignored), stemming and deduplicating every term.
    pub fn load(path: &Path, category: Category) -> Result<Self, LexiconError> {
        let terms = read_content_lines(path)?.into_iter().map(|(_, l)| l);
        Ok(Self::from_terms(category, terms))
    }

    pub fn from_terms<I, S>(category: Category, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = terms
            .into_iter()
            .map(|t| {
                t.as_ref()
                    .to_lowercase()
                    .split_whitespace()
                    .map(stem)
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .filter(|t| !t.is_empty())
            .collect();
        CategoryLexicon { category, entries }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

/// All category lexicons of one corpus, validated to be stem-disjoint so a
/// token can never match two categories.
#[derive(Debug, Clone, Default)]
pub struct CategoryBundle {
    by_term: BTreeMap<String, Category>,
}

impl CategoryBundle {
    pub fn new<I>(lexicons: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = CategoryLexicon>,
    {
        let mut by_term = BTreeMap::new();
        let mut overlaps = Vec::new();
        for lexicon in lexicons {
            for term in lexicon.entries {
                match by_term.get(&term) {
                    Some(&prior) if prior != lexicon.category => {
                        overlaps.push((term, prior, lexicon.category));
                    }
                    _ => {
                        by_term.insert(term, lexicon.category);
                    }
                }
            }
        }
        if overlaps.is_empty() {
            Ok(CategoryBundle { by_term })
        } else {
            Err(LexiconError::CategoryOverlap(overlaps))
        }
    }

    /// The category a (stemmed) token belongs to, if any. Unambiguous by the
    /// disjointness invariant.
    pub fn category_of(&self, token: &str) -> Option<Category> {
        self.by_term.get(token).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.by_term.is_empty()
    }
}

/// Stopword list with a protected set of locational prepositions that are
/// never removed, whatever the word file says.
#[derive(Debug, Clone)]
pub struct StopwordList {
    words: BTreeSet<String>,
    preserved: BTreeSet<String>,
}

impl Default for StopwordList {
    fn default() -> Self {
        StopwordList {
            words: BTreeSet::new(),
            preserved: PRESERVED_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl StopwordList {
    /// Loads a plain-text stopword file (one word per line, `#` comments
    /// ignored). Preserved prepositions are subtracted after load.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let words = read_content_lines(path)?
            .into_iter()
            .map(|(_, l)| l.to_lowercase());
        Ok(Self::from_words(words))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = StopwordList::default();
        list.words = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .filter(|w| !w.is_empty() && !list.preserved.contains(w))
            .collect();
        list
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn is_preserved(&self, token: &str) -> bool {
        self.preserved.contains(token)
    }
}

/// Restores province names the stemmer mangles (e.g. a trailing "-ing" being
/// stripped), applied to every token right after stemming.
#[derive(Debug, Clone, Default)]
pub struct StemExceptionList {
    restore: BTreeMap<String, String>,
}

impl StemExceptionList {
    /// Loads a TSV of `stemmed_form<TAB>restored_form` rows.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let mut restore = BTreeMap::new();
        for (line_no, line) in read_content_lines(path)? {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            match cols.as_slice() {
                [from, to] if !from.is_empty() && !to.is_empty() => {
                    restore.insert(from.to_lowercase(), to.to_lowercase());
                }
                _ => {
                    return Err(LexiconError::MalformedRow {
                        path: path.to_path_buf(),
                        line: line_no,
                        expected: "stemmed_form<TAB>restored_form",
                    })
                }
            }
        }
        Ok(StemExceptionList { restore })
    }

    pub fn from_pairs<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        StemExceptionList {
            restore: pairs
                .into_iter()
                .map(|(a, b)| (a.into().to_lowercase(), b.into().to_lowercase()))
                .collect(),
        }
    }

    pub fn apply<'a>(&'a self, stemmed: &'a str) -> &'a str {
        self.restore.get(stemmed).map(String::as_str).unwrap_or(stemmed)
    }
}

/// Everything `treat_document` needs, loaded from one directory.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub locations: LocationLexicon,
    pub categories: CategoryBundle,
    pub stopwords: StopwordList,
    pub stem_exceptions: StemExceptionList,
}

/// Category lexicon files looked up by [`Lexicons::load_dir`].
pub const CATEGORY_FILES: [(&str, Category); 8] = [
    ("actors.txt", Category::Actor),
    ("action_verbs.txt", Category::ActionVerb),
    ("nontopic.txt", Category::Nontopic),
    ("sources.txt", Category::Source),
    ("directional.txt", Category::Directional),
    ("months.txt", Category::Month),
    ("days.txt", Category::Day),
    ("admin.txt", Category::Admin),
];

impl Lexicons {
    /// Loads a lexicon directory. `locations.tsv` and `stopwords.txt` are
    /// required; `stem_exceptions.tsv` and the per-category files
    /// (`actors.txt`, `action_verbs.txt`, `nontopic.txt`, `sources.txt`,
    /// `directional.txt`, `months.txt`, `days.txt`, `admin.txt`) are treated
    /// as empty when absent.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        if !dir.is_dir() {
            return Err(LexiconError::Io {
                path: dir.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "lexicon directory not found",
                ),
            });
        }
        let locations = LocationLexicon::load(&dir.join("locations.tsv"))?;
        let stopwords = StopwordList::load(&dir.join("stopwords.txt"))?;
        let exceptions_path = dir.join("stem_exceptions.tsv");
        let stem_exceptions = if exceptions_path.is_file() {
            StemExceptionList::load(&exceptions_path)?
        } else {
            StemExceptionList::default()
        };
        let mut category_lexicons = Vec::new();
        for (file, category) in CATEGORY_FILES {
            let path = dir.join(file);
            if path.is_file() {
                category_lexicons.push(CategoryLexicon::load(&path, category)?);
            }
        }
        Ok(Lexicons {
            locations,
            categories: CategoryBundle::new(category_lexicons)?,
            stopwords,
            stem_exceptions,
        })
    }
}

/// Non-empty, non-comment lines of a UTF-8 text file with 1-based line
/// numbers. Accepts LF and CRLF endings.
fn read_content_lines(path: &Path) -> Result<Vec<(usize, String)>, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}
