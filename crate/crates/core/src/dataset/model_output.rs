//! Predictions handed over by the structure and text-line models.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reader::{JsonLines, ReadError};
use crate::assignment::TextLine;
use crate::geometry::{BBox, ImageSize};
use crate::structure::{CodecError, StructureSequence, Token, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutputRecord {
    pub filename: String,
    pub structure: PredictedStructure,
    /// Absent in bare structure files.
    #[serde(default)]
    pub text_lines: Vec<TextLineRecord>,
    /// `[width, height]`, needed to place normalized cell boxes in pixels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedStructure {
    pub tokens: Vec<String>,
    /// Normalized `[x, y, w, h]` per anchor; `null` where no box is known.
    pub boxes: Vec<Option<[f64; 4]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLineRecord {
    /// Pixel `[x0, y0, x1, y1]`.
    pub bbox: [f64; 4],
    pub content: String,
}

#[derive(Debug, Error)]
pub enum ModelOutputError {
    #[error("{filename}: token {symbol:?} at position {position} is not in the vocabulary")]
    UnknownToken {
        filename: String,
        position: usize,
        symbol: String,
    },
    #[error("{filename}: {got} boxes for {anchors} anchors")]
    BoxCountMismatch {
        filename: String,
        anchors: usize,
        got: usize,
    },
    #[error("{filename}: text line {index} has x1 < x0 or y1 < y0")]
    InvalidLineBox { filename: String, index: usize },
    #[error("{filename}: {source}")]
    Sequence {
        filename: String,
        #[source]
        source: CodecError,
    },
    #[error(transparent)]
    FileFormat(#[from] ReadError),
}

impl ModelOutputRecord {
    /// Checks tokens against the vocabulary, box counts against anchors, and
    /// text-line boxes.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<Vec<Token>, ModelOutputError> {
        let tokens = self
            .structure
            .tokens
            .iter()
            .enumerate()
            .map(|(position, s)| {
                vocab.token(s).ok_or_else(|| ModelOutputError::UnknownToken {
                    filename: self.filename.clone(),
                    position,
                    symbol: s.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let anchors = tokens.iter().filter(|t| t.is_anchor()).count();
        if anchors != self.structure.boxes.len() {
            return Err(ModelOutputError::BoxCountMismatch {
                filename: self.filename.clone(),
                anchors,
                got: self.structure.boxes.len(),
            });
        }
        if let Some(index) = self
            .text_lines
            .iter()
            .position(|l| l.bbox[2] < l.bbox[0] || l.bbox[3] < l.bbox[1])
        {
            return Err(ModelOutputError::InvalidLineBox {
                filename: self.filename.clone(),
                index,
            });
        }
        Ok(tokens)
    }

    pub fn sequence(&self, vocab: &Vocabulary, max_len: usize) -> Result<StructureSequence, ModelOutputError> {
        let tokens = self.validate(vocab)?;
        let boxes = self
            .structure
            .boxes
            .iter()
            .map(|b| b.map(|[x, y, w, h]| BBox::normalized(x, y, w, h)))
            .collect();
        StructureSequence::with_anchor_boxes(tokens, boxes, max_len).map_err(|e| match e {
            CodecError::BoxCountMismatch { anchors, got } => ModelOutputError::BoxCountMismatch {
                filename: self.filename.clone(),
                anchors,
                got,
            },
            source => ModelOutputError::Sequence {
                filename: self.filename.clone(),
                source,
            },
        })
    }

    /// Text lines with ids equal to their position in the record.
    pub fn text_lines(&self) -> Vec<TextLine> {
        self.text_lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let [x0, y0, x1, y1] = l.bbox;
                TextLine::new(i as u64, BBox::pixel(x0, y0, x1, y1), l.content.clone())
            })
            .collect()
    }

    pub fn image_size(&self) -> Option<ImageSize> {
        self.image_size.and_then(|[w, h]| ImageSize::new(w, h).ok())
    }
}

/// Streams model outputs, validating each against `vocab`. Errors carry the
/// file line number where the line itself is malformed.
pub fn model_outputs<'v, R: BufRead + 'v>(
    reader: R,
    vocab: &'v Vocabulary,
) -> impl Iterator<Item = Result<ModelOutputRecord, ModelOutputError>> + 'v {
    JsonLines::<R, ModelOutputRecord>::new(reader).map(move |(_, parsed)| {
        let record = parsed?;
        record.validate(vocab)?;
        Ok(record)
    })
}

pub fn read_model_outputs<'v>(
    path: &Path,
    vocab: &'v Vocabulary,
) -> std::io::Result<impl Iterator<Item = Result<ModelOutputRecord, ModelOutputError>> + 'v> {
    Ok(model_outputs(BufReader::new(File::open(path)?), vocab))
}
