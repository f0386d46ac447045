//! File formats the toolkit reads and writes: corpus JSON-lines, treated
//! document exports, dataset CSV, and pattern-corpora JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ArticleLabels, CorpusLabels, Dataset, PatternCorpora};
use crate::preprocess::{Document, TreatedDocument};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Malformed {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: story \"{story_id}\" appears more than once")]
    DuplicateStory {
        path: PathBuf,
        line: usize,
        story_id: String,
    },
    #[error("{path}:{line}: label for \"{location}\" is {value}, expected 0 or 1")]
    InvalidLabel {
        path: PathBuf,
        line: usize,
        location: String,
        value: u8,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One corpus line: `{"story_id": ..., "text": ..., "labels": {...}}` with
/// labels optional for prediction-only corpora.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusLine {
    story_id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<ArticleLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_tag: Option<String>,
}

/// Reads a JSON-lines corpus. Labels are returned for the subset of articles
/// that carry them.
pub fn read_corpus(path: &Path) -> Result<(Vec<Document>, CorpusLabels), IoError> {
    let body = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut documents = Vec::new();
    let mut labels: CorpusLabels = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, line) in body.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine =
            serde_json::from_str(line).map_err(|source| IoError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                source,
            })?;
        if !seen.insert(parsed.story_id.clone()) {
            return Err(IoError::DuplicateStory {
                path: path.to_path_buf(),
                line: line_no,
                story_id: parsed.story_id,
            });
        }
        if let Some(article_labels) = parsed.labels {
            for (location, &value) in &article_labels {
                if value > 1 {
                    return Err(IoError::InvalidLabel {
                        path: path.to_path_buf(),
                        line: line_no,
                        location: location.clone(),
                        value,
                    });
                }
            }
            labels.insert(parsed.story_id.clone(), article_labels);
        }
        documents.push(Document {
            story_id: parsed.story_id,
            raw_text: parsed.text,
            source_tag: parsed.source_tag,
        });
    }
    Ok((documents, labels))
}

/// Writes a JSON-lines corpus, one compact object per article.
pub fn write_corpus(
    path: &Path,
    documents: &[Document],
    labels: &CorpusLabels,
) -> Result<(), IoError> {
    let mut out = String::new();
    for doc in documents {
        let line = CorpusLine {
            story_id: doc.story_id.clone(),
            text: doc.raw_text.clone(),
            labels: labels.get(&doc.story_id).cloned(),
            source_tag: doc.source_tag.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("corpus line serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Writes treated documents as JSON-lines (sentences and mentions), for
/// inspection after the `treat` stage.
pub fn write_treated(path: &Path, treated: &[TreatedDocument]) -> Result<(), IoError> {
    let mut out = String::new();
    for doc in treated {
        out.push_str(&serde_json::to_string(doc).expect("treated document serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn read_treated(path: &Path) -> Result<Vec<TreatedDocument>, IoError> {
    let body = std::fs::read_to_string(path).map_err(io_err(path))?;
    body.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(idx, line)| {
            serde_json::from_str(line).map_err(|source| IoError::Malformed {
                path: path.to_path_buf(),
                line: idx + 1,
                source,
            })
        })
        .collect()
}

/// Dataset as CSV with header `story_id,location,Y,<feature...>`; unlabeled
/// rows leave the `Y` column empty.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::from("story_id,location,Y");
    for name in &data.feature_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in &data.rows {
        out.push_str(&row.story_id);
        out.push(',');
        out.push_str(&row.location);
        out.push(',');
        if let Some(label) = row.label {
            out.push_str(&label.to_string());
        }
        for value in &row.values {
            out.push(',');
            out.push_str(&value.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<(), IoError> {
    std::fs::write(path, dataset_to_csv(data)).map_err(io_err(path))
}

/// Pattern corpora as pretty JSON keyed by n.
pub fn write_corpora(path: &Path, corpora: &PatternCorpora) -> Result<(), IoError> {
    let body = serde_json::to_string_pretty(corpora).expect("corpora serialize");
    std::fs::write(path, body).map_err(io_err(path))
}

pub fn read_corpora(path: &Path) -> Result<PatternCorpora, IoError> {
    let body = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&body).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::assemble_dataset;
    use crate::preprocess::treat_document;
    use crate::synthetic::{generate, SyntheticConfig};

    fn corpus() -> crate::synthetic::SyntheticCorpus {
        generate(&SyntheticConfig {
            articles: 6,
            ..SyntheticConfig::default()
        })
    }

    #[test]
    fn corpus_round_trips_documents_and_labels() {
        let c = corpus();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_corpus(&path, &c.documents, &c.labels).unwrap();
        let (documents, labels) = read_corpus(&path).unwrap();
        assert_eq!(documents, c.documents);
        assert_eq!(labels, c.labels);
    }

    #[test]
    fn corpus_reader_reports_line_numbers_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"story_id\":\"a\",\"text\":\"x\"}\nnot json\n",
        )
        .unwrap();
        let err = read_corpus(&path).unwrap_err();
        assert!(err.to_string().contains("bad.jsonl:2"), "{err}");

        std::fs::write(
            &path,
            "{\"story_id\":\"a\",\"text\":\"x\"}\n{\"story_id\":\"a\",\"text\":\"y\"}\n",
        )
        .unwrap();
        let err = read_corpus(&path).unwrap_err();
        assert!(matches!(err, IoError::DuplicateStory { line: 2, .. }));

        std::fs::write(
            &path,
            "{\"story_id\":\"a\",\"text\":\"x\",\"labels\":{\"p\":7}}\n",
        )
        .unwrap();
        let err = read_corpus(&path).unwrap_err();
        assert!(matches!(err, IoError::InvalidLabel { value: 7, .. }));
    }

    #[test]
    fn unlabeled_articles_are_read_without_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, "{\"story_id\":\"a\",\"text\":\"plain text\"}\n").unwrap();
        let (documents, labels) = read_corpus(&path).unwrap();
        assert_eq!(documents.len(), 1);
        assert!(labels.is_empty());
    }

    #[test]
    fn treated_export_round_trips() {
        let c = corpus();
        let treated: Vec<_> = c
            .documents
            .iter()
            .map(|d| treat_document(d, &c.lexicons))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("treated.jsonl");
        write_treated(&path, &treated).unwrap();
        assert_eq!(read_treated(&path).unwrap(), treated);
    }

    #[test]
    fn dataset_csv_has_the_pinned_header_shape() {
        let c = corpus();
        let treated: Vec<_> = c
            .documents
            .iter()
            .map(|d| treat_document(d, &c.lexicons))
            .collect();
        let corpora = PatternCorpora::build(&treated, &c.labels, 2..=3).unwrap();
        let data = assemble_dataset(&treated, &corpora, &c.labels).unwrap();
        let csv = dataset_to_csv(&data);
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("story_id,location,Y,"));
        assert_eq!(
            header.split(',').count(),
            3 + data.feature_names.len()
        );
        assert_eq!(csv.lines().count(), 1 + data.rows.len());
        // Every row carries a 0/1 label and numeric features.
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert!(fields[2] == "0" || fields[2] == "1");
            for v in &fields[3..] {
                v.parse::<f64>().unwrap();
            }
        }
    }

    #[test]
    fn corpora_json_round_trips_and_keeps_the_fingerprint() {
        let c = corpus();
        let treated: Vec<_> = c
            .documents
            .iter()
            .map(|d| treat_document(d, &c.lexicons))
            .collect();
        let corpora = PatternCorpora::build(&treated, &c.labels, 2..=4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpora.json");
        write_corpora(&path, &corpora).unwrap();
        let restored = read_corpora(&path).unwrap();
        assert_eq!(restored.fingerprint(), corpora.fingerprint());
    }
}
