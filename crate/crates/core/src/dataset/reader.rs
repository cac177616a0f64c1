//! Line-delimited JSON readers that hold one line in memory at a time.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::marker::PhantomData;
use std::path::Path;

use serde::de::DeserializeOwned;
use thiserror::Error;

use super::annotation::{AnnotationRecord, RecordError};

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("read failed after line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    FileFormat { line: usize, message: String },
    #[error("line {line} ({filename}): {source}")]
    Record {
        line: usize,
        filename: String,
        #[source]
        source: RecordError,
    },
}

impl ReadError {
    pub fn line(&self) -> usize {
        match self {
            ReadError::Io { line, .. } | ReadError::FileFormat { line, .. } | ReadError::Record { line, .. } => *line,
        }
    }
}

/// Iterates the non-blank lines of a reader, deserializing each as `T`.
/// Yields the 1-based line number with each value.
pub struct JsonLines<R, T> {
    reader: R,
    buf: String,
    line: usize,
    _t: PhantomData<fn() -> T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonLines<R, T> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            buf: String::new(),
            line: 0,
            _t: PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonLines<R, T> {
    type Item = (usize, Result<T, ReadError>);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    return Some((
                        self.line,
                        Err(ReadError::Io {
                            line: self.line,
                            source,
                        }),
                    ))
                }
            }
            self.line += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            let line = self.line;
            let parsed = serde_json::from_str(&self.buf).map_err(|e| ReadError::FileFormat {
                line,
                message: e.to_string(),
            });
            return Some((line, parsed));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    /// Report bad lines and keep going.
    #[default]
    Lenient,
    /// Stop at the first bad line.
    Strict,
}

/// Bad lines seen by a lenient reader.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipSummary {
    pub count: usize,
    /// The first few, as `(line, message)`.
    pub examples: Vec<(usize, String)>,
}

impl SkipSummary {
    const EXAMPLES: usize = 10;

    fn record(&mut self, e: &ReadError) {
        self.count += 1;
        if self.examples.len() < Self::EXAMPLES {
            self.examples.push((e.line(), e.to_string()));
        }
    }
}

/// Streams validated annotation records.
///
/// In lenient mode a bad line is yielded as an error and reading continues;
/// [`AnnotationReader::skipped`] summarizes them. In strict mode the first
/// bad line is yielded as an error and the stream ends.
pub struct AnnotationReader<R> {
    inner: JsonLines<R, AnnotationRecord>,
    mode: ReadMode,
    skipped: SkipSummary,
    done: bool,
}

impl<R: BufRead> AnnotationReader<R> {
    pub fn new(reader: R, mode: ReadMode) -> Self {
        Self {
            inner: JsonLines::new(reader),
            mode,
            skipped: SkipSummary::default(),
            done: false,
        }
    }

    pub fn skipped(&self) -> &SkipSummary {
        &self.skipped
    }

    /// Only the good records; bad lines are logged and counted.
    pub fn records(self) -> impl Iterator<Item = AnnotationRecord> {
        let mut this = self;
        std::iter::from_fn(move || loop {
            match this.next()? {
                Ok(r) => return Some(r),
                Err(e) => log::warn!("skipping annotation {e}"),
            }
        })
    }
}

impl<R: BufRead> Iterator for AnnotationReader<R> {
    type Item = Result<AnnotationRecord, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let (line, parsed) = self.inner.next()?;
        let result = parsed.and_then(|r| match r.validate() {
            Ok(()) => Ok(r),
            Err(source) => Err(ReadError::Record {
                line,
                filename: r.filename,
                source,
            }),
        });
        if let Err(e) = &result {
            self.skipped.record(e);
            if self.mode == ReadMode::Strict || matches!(e, ReadError::Io { .. }) {
                self.done = true;
            }
        }
        Some(result)
    }
}

pub fn read_annotations(path: &Path, mode: ReadMode) -> io::Result<AnnotationReader<BufReader<File>>> {
    Ok(AnnotationReader::new(BufReader::new(File::open(path)?), mode))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"filename": "a.png", "split": "val", "html": {"structure": {"tokens": ["<tbody>", "<tr>", "<td>", "</td>", "<td>", "</td>", "</tr>", "</tbody>"]}, "cells": [{"tokens": ["1"], "bbox": [0, 0, 4, 4]}, {"tokens": []}]}}"#;

    #[test]
    fn three_good_lines() {
        let text = format!("{GOOD}\n{GOOD}\n\n{GOOD}\n");
        let recs: Vec<_> = AnnotationReader::new(text.as_bytes(), ReadMode::Strict).collect();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(Result::is_ok));
    }

    #[test]
    fn truncated_line_reports_line_number() {
        let text = format!("{GOOD}\n{}\n{GOOD}\n", &GOOD[..40]);
        let mut lenient = AnnotationReader::new(text.as_bytes(), ReadMode::Lenient);
        let items: Vec<_> = lenient.by_ref().collect();
        assert_eq!(items.len(), 3);
        assert_eq!(items[1].as_ref().unwrap_err().line(), 2);
        assert_eq!(lenient.skipped().count, 1);
        let strict: Vec<_> = AnnotationReader::new(text.as_bytes(), ReadMode::Strict).collect();
        assert_eq!(strict.len(), 2);
        assert_eq!(
            AnnotationReader::new(text.as_bytes(), ReadMode::Lenient)
                .records()
                .count(),
            2
        );
    }

    #[test]
    fn invalid_record_is_a_record_error() {
        let bad = GOOD.replace(r#"{"tokens": []}"#, r#"{"tokens": [], "bbox": [0, 0, 1, 1]}"#);
        let err = AnnotationReader::new(bad.as_bytes(), ReadMode::Strict)
            .next()
            .unwrap()
            .unwrap_err();
        assert!(matches!(
            err,
            ReadError::Record {
                line: 1,
                source: RecordError::UnexpectedBox(1),
                ..
            }
        ));
    }
}
