//! Model outputs to final HTML: decode, place boxes, assign lines, assemble.

use thiserror::Error;

use crate::assemble::{assemble, AssembleError, AssembleOptions};
use crate::assignment::{anchors_to_pixel, assign, AssignConfig, AssignError, Assignment};
use crate::dataset::{ModelOutputError, ModelOutputRecord};
use crate::geometry::{GeometryError, ImageSize};
use crate::structure::{decode_to_skeleton, CodecError, Vocabulary, DEFAULT_MAX_LEN};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Input(#[from] ModelOutputError),
    #[error("{filename}: {source}")]
    Decode {
        filename: String,
        #[source]
        source: CodecError,
    },
    #[error("{0}: cell boxes need an image size and none is known")]
    MissingImageSize(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub vocab: Vocabulary,
    pub max_len: usize,
    pub assign: AssignConfig,
    pub assemble: AssembleOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            vocab: Vocabulary::default(),
            max_len: DEFAULT_MAX_LEN,
            assign: AssignConfig::default(),
            assemble: AssembleOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub html: String,
    pub assignment: Assignment,
}

/// Runs one record. `size` overrides the record's own image size.
pub fn run_record(
    record: &ModelOutputRecord,
    size: Option<ImageSize>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let seq = record.sequence(&cfg.vocab, cfg.max_len)?;
    let (skeleton, anchors) = decode_to_skeleton(&seq).map_err(|source| PipelineError::Decode {
        filename: record.filename.clone(),
        source,
    })?;
    let anchors = match size.or_else(|| record.image_size()) {
        Some(size) => anchors_to_pixel(&anchors, size)?,
        None if anchors.iter().all(|a| a.bbox.is_none()) => anchors,
        None => return Err(PipelineError::MissingImageSize(record.filename.clone())),
    };
    let lines = record.text_lines();
    let assignment = assign(&anchors, &lines, &cfg.assign)?;
    let html = assemble(&skeleton, &anchors, &assignment, &lines, &cfg.assemble)?;
    Ok(PipelineOutput { html, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::model_output::{PredictedStructure, TextLineRecord};

    fn record(size: Option<[f64; 2]>) -> ModelOutputRecord {
        ModelOutputRecord {
            filename: "m.png".into(),
            structure: PredictedStructure {
                tokens: [
                    "<thead>",
                    "<tr>",
                    "<td></td>",
                    "</tr>",
                    "</thead>",
                    "<tbody>",
                    "<tr>",
                    "<td></td>",
                    "<eb1></eb1>",
                    "</tr>",
                    "</tbody>",
                ]
                .map(String::from)
                .to_vec(),
                boxes: vec![Some([0.0, 0.0, 0.5, 0.5]), Some([0.0, 0.5, 0.5, 0.5]), None],
            },
            text_lines: vec![
                TextLineRecord {
                    bbox: [60.0, 70.0, 80.0, 80.0],
                    content: "7".into(),
                },
                TextLineRecord {
                    bbox: [10.0, 10.0, 40.0, 20.0],
                    content: "Name".into(),
                },
            ],
            image_size: size,
        }
    }

    #[test]
    fn end_to_end() {
        let out = run_record(&record(Some([200.0, 100.0])), None, &PipelineConfig::default()).unwrap();
        assert_eq!(
            out.html,
            "<table><thead><tr><td><b>Name</b></td></tr></thead><tbody><tr><td>7</td><td> </td></tr></tbody></table>"
        );
    }

    #[test]
    fn needs_a_size() {
        let err = run_record(&record(None), None, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MissingImageSize(_)));
        let size = ImageSize::new(200.0, 100.0).unwrap();
        assert!(run_record(&record(None), Some(size), &PipelineConfig::default()).is_ok());
    }
}
