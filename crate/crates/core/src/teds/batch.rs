use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{round4, teds_trees};
use crate::dataset::{record_to_html, AnnotationRecord};
use crate::table::parse_table_html;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    FileFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: filename {filename:?} appears more than once")]
    DuplicateKey { path: PathBuf, filename: String },
    #[error("ground truth for {filename:?} is unusable: {message}")]
    GroundTruth { filename: String, message: String },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub filename: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub mean: f64,
    pub n: usize,
    pub per_sample: Vec<SampleScore>,
}

impl BatchSummary {
    /// The same summary with every score rounded for reporting.
    pub fn rounded(&self) -> BatchSummary {
        BatchSummary {
            mean: round4(self.mean),
            n: self.n,
            per_sample: self
                .per_sample
                .iter()
                .map(|s| SampleScore {
                    filename: s.filename.clone(),
                    score: round4(s.score),
                })
                .collect(),
        }
    }
}

/// HTML per filename. A per-sample `Err` holds a reason the sample has no
/// usable HTML (an annotation record that does not form a table).
pub type HtmlMap = BTreeMap<String, Result<String, String>>;

/// Loads a keyed HTML file in any of the accepted layouts:
/// line-delimited annotation records, line-delimited `{filename, html}`
/// records, or a single JSON object mapping filename to HTML (or to an
/// object with an `html` string).
pub fn load_html_file(path: &Path) -> Result<HtmlMap, BatchError> {
    let text = fs::read_to_string(path).map_err(|source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_html_map(&text, path)
}

/// [`load_html_file`] on text already in memory. `path` only labels errors.
pub fn parse_html_map(text: &str, path: &Path) -> Result<HtmlMap, BatchError> {
    let format_err = |line: usize, message: String| BatchError::FileFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = HtmlMap::new();
    let mut insert = |filename: String, html: Result<String, String>| {
        if out.contains_key(&filename) {
            return Err(BatchError::DuplicateKey {
                path: path.to_path_buf(),
                filename,
            });
        }
        out.insert(filename, html);
        Ok(())
    };

    if text.trim_start().starts_with('{') {
        if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(text) {
            if !map.contains_key("filename") {
                for (filename, v) in map {
                    let html = match v {
                        Value::String(s) => s,
                        Value::Object(mut o) => match o.remove("html") {
                            Some(Value::String(s)) => s,
                            _ => return Err(format_err(1, format!("entry {filename:?} has no html string"))),
                        },
                        _ => return Err(format_err(1, format!("entry {filename:?} is not an html string"))),
                    };
                    insert(filename, Ok(html))?;
                }
                return Ok(out);
            }
        }
    }

    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let mut v: Value = serde_json::from_str(line).map_err(|e| format_err(n, e.to_string()))?;
        let filename = match v.get("filename") {
            Some(Value::String(s)) => s.clone(),
            _ => return Err(format_err(n, "record has no filename string".into())),
        };
        let html = match v.get("html") {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Object(_)) => {
                let record: AnnotationRecord =
                    serde_json::from_value(v.take()).map_err(|e| format_err(n, e.to_string()))?;
                record_to_html(&record).map_err(|e| e.to_string())
            }
            _ => return Err(format_err(n, "record has no html field".into())),
        };
        insert(filename, html)?;
    }
    Ok(out)
}

/// Scores every ground-truth sample. Predictions that are missing or do not
/// parse score 0; ground truth that does not parse is an error. The result
/// does not depend on `jobs`.
pub fn evaluate_maps(pred: &HtmlMap, gt: &HtmlMap, struct_only: bool, jobs: usize) -> Result<BatchSummary, BatchError> {
    for name in pred.keys().filter(|k| !gt.contains_key(*k)) {
        log::warn!("prediction {name:?} has no ground truth; ignored");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let items: Vec<(&String, &Result<String, String>)> = gt.iter().collect();
    let scored: Vec<Result<SampleScore, BatchError>> = pool.install(|| {
        items
            .par_iter()
            .map(|(filename, gt_html)| {
                let gt_err = |message: String| BatchError::GroundTruth {
                    filename: filename.to_string(),
                    message,
                };
                let gt_tree = parse_table_html(gt_html.as_ref().map_err(|m| gt_err(m.clone()))?)
                    .map_err(|e| gt_err(e.to_string()))?;
                let score = match pred.get(*filename) {
                    None => {
                        log::warn!("{filename:?}: no prediction, scored 0");
                        0.0
                    }
                    Some(Err(m)) => {
                        log::warn!("{filename:?}: unusable prediction ({m}), scored 0");
                        0.0
                    }
                    Some(Ok(html)) => match parse_table_html(html) {
                        Ok(t) => teds_trees(&t, &gt_tree, struct_only).score,
                        Err(e) => {
                            log::warn!("{filename:?}: prediction does not parse ({e}), scored 0");
                            0.0
                        }
                    },
                };
                Ok(SampleScore {
                    filename: filename.to_string(),
                    score,
                })
            })
            .collect()
    });
    let per_sample = scored.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = per_sample.len();
    let mean = if n == 0 {
        0.0
    } else {
        per_sample.iter().map(|s| s.score).sum::<f64>() / n as f64
    };
    Ok(BatchSummary { mean, n, per_sample })
}

pub fn batch_evaluate(
    pred_path: &Path,
    gt_path: &Path,
    struct_only: bool,
    jobs: usize,
) -> Result<BatchSummary, BatchError> {
    let gt = load_html_file(gt_path)?;
    let pred = load_html_file(pred_path)?;
    evaluate_maps(&pred, &gt, struct_only, jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const A: &str = "<table><thead></thead><tbody><tr><td>a</td></tr></tbody></table>";
    const B: &str = "<table><thead></thead><tbody><tr><td>b</td><td>c</td></tr></tbody></table>";

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn jsonl(pairs: &[(&str, &str)]) -> String {
        pairs
            .iter()
            .map(|(f, h)| serde_json::json!({"filename": f, "html": h}).to_string() + "\n")
            .collect()
    }

    #[test]
    fn self_comparison() {
        let f = file(&jsonl(&[("a.png", A), ("b.png", B)]));
        let s = batch_evaluate(f.path(), f.path(), false, 2).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.n, 2);
    }

    #[test]
    fn missing_prediction_scores_zero() {
        let gt = file(&jsonl(&[("b.png", B), ("a.png", A)]));
        let pred = file(&jsonl(&[("a.png", A)]));
        let s = batch_evaluate(pred.path(), gt.path(), false, 1).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.per_sample[0].filename, "a.png");
        assert_eq!(s.per_sample[1].score, 0.0);
    }

    #[test]
    fn broken_prediction_scores_zero() {
        let gt = file(&jsonl(&[("a.png", A)]));
        let pred = file(&jsonl(&[("a.png", "<table><tr>")]));
        assert_eq!(batch_evaluate(pred.path(), gt.path(), false, 1).unwrap().mean, 0.0);
        assert!(matches!(
            batch_evaluate(gt.path(), pred.path(), false, 1),
            Err(BatchError::GroundTruth { .. })
        ));
    }

    #[test]
    fn map_layout_and_duplicates() {
        let map = file(&serde_json::json!({"a.png": A, "b.png": {"html": B}}).to_string());
        let m = load_html_file(map.path()).unwrap();
        assert_eq!(m["b.png"].as_deref(), Ok(B));
        let dup = file(&jsonl(&[("a.png", A), ("a.png", B)]));
        assert!(matches!(
            load_html_file(dup.path()),
            Err(BatchError::DuplicateKey { .. })
        ));
        let bad = file("{\"filename\": \"a.png\", \"html\": \n");
        assert!(matches!(
            load_html_file(bad.path()),
            Err(BatchError::FileFormat { line: 1, .. })
        ));
    }

    #[test]
    fn annotation_layout() {
        let line = r#"{"filename": "x.png", "split": "val", "html": {"structure": {"tokens": ["<tbody>", "<tr>", "<td>", "</td>", "</tr>", "</tbody>"]}, "cells": [{"tokens": ["a"], "bbox": [0, 0, 1, 1]}]}}"#;
        let f = file(line);
        assert_eq!(load_html_file(f.path()).unwrap()["x.png"].as_deref(), Ok(A));
    }

    #[test]
    fn rounded_report() {
        let s = BatchSummary {
            mean: 2.0 / 3.0,
            n: 1,
            per_sample: vec![SampleScore {
                filename: "a".into(),
                score: 0.123456,
            }],
        };
        let r = s.rounded();
        assert_eq!(r.mean, 0.6667);
        assert_eq!(r.per_sample[0].score, 0.1235);
    }
}
