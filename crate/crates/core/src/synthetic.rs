//! Deterministic synthetic news corpus with a planted collocation signal,
//! for demos and end-to-end checks.
//!
//! Correct event locations are written into verb-bearing sentences
//! ("hundreds of workers clashed in X province"); incorrect ones appear in
//! datelines and attribution contexts ("X, March 14 (Newsnet)", "a spokesman
//! in X said"). Articles with two true locations get an ambiguous "unrest
//! spread to X" sentence whose pattern also occurs with false locations, so
//! they are genuinely harder than single-location articles.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::features::{ArticleLabels, CorpusLabels};
use crate::lexicon::{
    Category, CategoryBundle, CategoryLexicon, Level, Lexicons, LocationLexicon,
    StemExceptionList, StopwordList,
};
use crate::preprocess::Document;
use crate::rng::{derive, rng};

const PROVINCES: [&str; 8] = [
    "ashkara", "belvona", "corvana", "durelia", "estaria", "fornath", "gildara", "hestovia",
];

/// (surface, parent province) subprovince entries; multi-token surfaces
/// exercise longest-match resolution.
const SUBPROVINCES: [(&str, &str); 4] = [
    ("port ashkara", "ashkara"),
    ("belvona falls", "belvona"),
    ("maltren", "corvana"),
    ("velkara ridge", "durelia"),
];

/// (base form for the lexicon, past tense, gerund) — all three stem alike.
const VERBS: [(&str, &str, &str); 7] = [
    ("clash", "clashed", "clashing"),
    ("riot", "rioted", "rioting"),
    ("storm", "stormed", "storming"),
    ("attack", "attacked", "attacking"),
    ("raid", "raided", "raiding"),
    ("ambush", "ambushed", "ambushing"),
    ("demonstrate", "demonstrated", "demonstrating"),
];

const ACTORS: [&str; 7] = [
    "worker", "villager", "farmer", "student", "soldier", "miner", "official",
];

const NONTOPIC: [&str; 7] = [
    "said", "told", "reported", "claimed", "denied", "quoted", "according",
];

const SOURCES: [&str; 3] = ["newsnet", "wirepress", "globedesk"];

const DIRECTIONAL: [&str; 6] = [
    "northern", "southern", "eastern", "western", "northeastern", "southwestern",
];

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

const DAYS: [&str; 7] = [
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

const ADMIN: [&str; 6] = [
    "province", "district", "county", "region", "prefecture", "municipality",
];

// "may" and "march" stay out: they are month words. "also" and "could" are in:
// the ambiguous "spread to" templates rely on them collapsing together.
const STOPWORDS: [&str; 56] = [
    "the", "a", "an", "and", "or", "but", "was", "were", "is", "are", "be", "been", "being",
    "has", "have", "had", "having", "this", "that", "these", "those", "it", "its", "he", "she",
    "they", "them", "their", "his", "her", "as", "with", "for", "by", "after", "before",
    "while", "when", "where", "which", "what", "why", "how", "not", "no", "nor", "also",
    "could", "would", "should", "can", "will", "into", "during", "until", "about",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub articles: usize,
    /// Fraction of articles given a second true location plus the ambiguous
    /// context that makes them harder.
    pub multi_true_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            articles: 60,
            multi_true_fraction: 0.35,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub labels: CorpusLabels,
    pub lexicons: Lexicons,
}

/// The generator's lexicons, built in memory.
pub fn lexicons() -> Lexicons {
    let locations = LocationLexicon::from_entries(
        PROVINCES
            .iter()
            .map(|p| (*p, *p, Level::Province))
            .chain(
                SUBPROVINCES
                    .iter()
                    .map(|(s, p)| (*s, *p, Level::Subprovince)),
            ),
    )
    .expect("synthetic gazetteer is conflict-free");
    let categories = CategoryBundle::new([
        CategoryLexicon::from_terms(Category::Actor, ACTORS),
        CategoryLexicon::from_terms(Category::ActionVerb, VERBS.iter().map(|v| v.0)),
        CategoryLexicon::from_terms(Category::Nontopic, NONTOPIC),
        CategoryLexicon::from_terms(Category::Source, SOURCES),
        CategoryLexicon::from_terms(Category::Directional, DIRECTIONAL),
        CategoryLexicon::from_terms(Category::Month, MONTHS),
        CategoryLexicon::from_terms(Category::Day, DAYS),
        CategoryLexicon::from_terms(Category::Admin, ADMIN),
    ])
    .expect("synthetic vocabularies are category-disjoint");
    Lexicons {
        locations,
        categories,
        stopwords: StopwordList::from_words(STOPWORDS),
        stem_exceptions: StemExceptionList::default(),
    }
}

/// Writes the same lexicons as files (`locations.tsv`, `stopwords.txt`,
/// per-category lists) so CLI runs can load them from disk.
pub fn write_lexicon_files(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut gazetteer = String::new();
    for p in PROVINCES {
        gazetteer.push_str(&format!("{p}\t{p}\tprovince\n"));
    }
    for (s, p) in SUBPROVINCES {
        gazetteer.push_str(&format!("{s}\t{p}\tsubprovince\n"));
    }
    std::fs::write(dir.join("locations.tsv"), gazetteer)?;
    let word_files: [(&str, Vec<&str>); 9] = [
        ("stopwords.txt", STOPWORDS.to_vec()),
        ("actors.txt", ACTORS.to_vec()),
        ("action_verbs.txt", VERBS.iter().map(|v| v.0).collect()),
        ("nontopic.txt", NONTOPIC.to_vec()),
        ("sources.txt", SOURCES.to_vec()),
        ("directional.txt", DIRECTIONAL.to_vec()),
        ("months.txt", MONTHS.to_vec()),
        ("days.txt", DAYS.to_vec()),
        ("admin.txt", ADMIN.to_vec()),
    ];
    for (name, words) in word_files {
        let mut body: String = words.join("\n");
        body.push('\n');
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn plural(actor: &str) -> String {
    format!("{actor}s")
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Subprovince surface of a province, if it has one.
fn sub_of(province: &str) -> Option<&'static str> {
    SUBPROVINCES
        .iter()
        .find(|(_, p)| *p == province)
        .map(|(s, _)| *s)
}

/// Generates the corpus. Same config, same corpus, byte for byte.
pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut documents = Vec::with_capacity(config.articles);
    let mut labels: CorpusLabels = BTreeMap::new();
    for i in 0..config.articles {
        let mut rng = rng(derive(config.seed, 1 + i as u64));
        let story_id = format!("syn-{i:04}");
        let multi = rng.random::<f64>() < config.multi_true_fraction;
        let n_false = if multi {
            2
        } else if rng.random::<f64>() < 0.5 {
            1
        } else {
            2
        };
        let n_true = if multi { 2 } else { 1 };
        let picks = rand::seq::index::sample(&mut rng, PROVINCES.len(), n_true + n_false);
        let chosen: Vec<&str> = picks.iter().map(|p| PROVINCES[p]).collect();
        let (trues, falses) = chosen.split_at(n_true);

        let month = capitalize(MONTHS.choose(&mut rng).unwrap());
        let day_num = rng.random_range(2..=28);
        let weekday = capitalize(DAYS.choose(&mut rng).unwrap());
        let source = capitalize(SOURCES.choose(&mut rng).unwrap());
        let actor = plural(ACTORS.choose(&mut rng).unwrap());
        let &(_, past, gerund) = VERBS.choose(&mut rng).unwrap();
        let admin = ADMIN.choose(&mut rng).unwrap();
        let direction = DIRECTIONAL.choose(&mut rng).unwrap();
        let count = rng.random_range(2..=9) * 100;

        let primary = capitalize(trues[0]);
        let dateline = capitalize(falses[0]);
        let mut sentences = vec![format!(
            "{dateline}, {month} {day_num} ({source}) - Unrest gripped {primary} province on {weekday}."
        )];

        // Two evidence sentences tie the primary true location to verbs,
        // "of <location>" phrases, and ADMIN words.
        let mut evidence = vec![
            format!("Hundreds of {actor} {past} in {primary} province on {weekday}."),
            format!("Witnesses saw {actor} {gerund} near {primary}."),
            format!("Clashes continued in {direction} {primary} for a second day."),
            format!("About {count} {actor} {past} outside the {admin} hall in {primary}."),
            format!("Security forces moved into the {admin} of {primary} after the violence."),
        ];
        if let Some(sub) = sub_of(trues[0]) {
            evidence.push(format!(
                "The {actor} walked to the {admin} offices in {} and {past}.",
                capitalize(sub)
            ));
        }
        for _ in 0..2 {
            let pick = rng.random_range(0..evidence.len());
            let mut sentence = evidence.swap_remove(pick);
            if rng.random::<f64>() < 0.15 {
                sentence = format!("{}, witnesses said.", sentence.trim_end_matches('.'));
            }
            sentences.push(sentence);
        }

        if multi {
            // A deliberate conflict pair. "also" and "could" are stopwords,
            // so after treatment both sentences collapse onto one token
            // pattern, and neither location appears anywhere else in the
            // article: the two rows carry identical covariates with opposite
            // labels, so no classifier can separate them.
            sentences.push(format!(
                "Unrest also spread to {}, {source} reported.",
                capitalize(trues[1])
            ));
            sentences.push(format!(
                "The unrest could spread to {}, {source} reported.",
                capitalize(falses[1])
            ));
            if rng.random::<f64>() < 0.5 {
                sentences.push(false_context(&mut rng, &dateline, &source));
            }
        } else {
            sentences.push(false_context(&mut rng, &dateline, &source));
            if let Some(second_false) = falses.get(1) {
                sentences.push(false_context(&mut rng, &capitalize(second_false), &source));
            }
        }
        if rng.random::<f64>() < 0.5 {
            sentences.push("The government promised an inquiry into the unrest.".to_string());
        }

        let mut article_labels = ArticleLabels::new();
        for t in trues {
            article_labels.insert((*t).to_string(), 1);
        }
        for f in falses {
            article_labels.insert((*f).to_string(), 0);
        }
        labels.insert(story_id.clone(), article_labels);
        documents.push(Document {
            story_id,
            raw_text: sentences.join(" "),
            source_tag: Some(source.to_lowercase()),
        });
    }
    SyntheticCorpus {
        documents,
        labels,
        lexicons: lexicons(),
    }
}

fn false_context(rng: &mut impl Rng, location: &str, source: &str) -> String {
    let options = [
        format!("A spokesman in {location} said the unrest was under control."),
        format!("Officials in {location} told {source} the toll could rise."),
        format!("The train to {location} was delayed for hours, {source} reported."),
        format!("{location} remained calm, according to reports."),
        format!("{location} officials told reporters the area was quiet."),
    ];
    options.choose(rng).unwrap().clone()
}
