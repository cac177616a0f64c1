use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, ImageSize};
use crate::structure::forms::has_visible_text;
use crate::table::{parse_table_html, to_html, ParseError, TableTree};

/// One PubTabNet-style ground-truth sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub filename: String,
    #[serde(default)]
    pub split: String,
    pub html: AnnotationHtml,
    /// `[width, height]` in pixels; not part of the upstream format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationHtml {
    pub structure: StructureTokens,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureTokens {
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub tokens: Vec<String>,
    /// Pixel `[x0, y0, x1, y1]`, present for non-empty cells only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
}

impl CellRecord {
    pub fn is_empty(&self) -> bool {
        !has_visible_text(&self.tokens)
    }

    pub fn pixel_box(&self) -> Option<BBox> {
        self.bbox.map(|[x0, y0, x1, y1]| BBox::pixel(x0, y0, x1, y1))
    }

    pub fn text(&self) -> String {
        self.tokens.concat()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("structure has {slots} cell slots but the record lists {cells} cells")]
    StructureCellMismatch { slots: usize, cells: usize },
    #[error("cell {0} is non-empty but has no bbox")]
    MissingBox(usize),
    #[error("cell {0} is empty but has a bbox")]
    UnexpectedBox(usize),
    #[error("cell {0} bbox has x1 < x0 or y1 < y0")]
    InvalidBox(usize),
    #[error("ground-truth structure does not form a table: {0}")]
    Structure(#[from] ParseError),
}

impl AnnotationRecord {
    pub fn structure_tokens(&self) -> &[String] {
        &self.html.structure.tokens
    }

    pub fn cells(&self) -> &[CellRecord] {
        &self.html.cells
    }

    pub fn image_size(&self) -> Option<ImageSize> {
        self.image_size.and_then(|[w, h]| ImageSize::new(w, h).ok())
    }

    /// Number of `<td>` / `<td` fragments in the structure.
    pub fn cell_slots(&self) -> usize {
        self.structure_tokens()
            .iter()
            .filter(|t| matches!(t.trim(), "<td>" | "<td"))
            .count()
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        let slots = self.cell_slots();
        if slots != self.cells().len() {
            return Err(RecordError::StructureCellMismatch {
                slots,
                cells: self.cells().len(),
            });
        }
        for (i, c) in self.cells().iter().enumerate() {
            match (c.is_empty(), c.pixel_box()) {
                (false, None) => return Err(RecordError::MissingBox(i)),
                (true, Some(_)) => return Err(RecordError::UnexpectedBox(i)),
                (_, Some(b)) if !b.is_valid() => return Err(RecordError::InvalidBox(i)),
                _ => {}
            }
        }
        Ok(())
    }

    /// Raw structure fragments with each cell's tokens spliced in before its
    /// `</td>`, wrapped in `<table>`.
    pub fn raw_html(&self) -> Result<String, RecordError> {
        let slots = self.cell_slots();
        if slots != self.cells().len() {
            return Err(RecordError::StructureCellMismatch {
                slots,
                cells: self.cells().len(),
            });
        }
        let mut out = String::from("<table>");
        let mut next_cell = self.cells().iter();
        let mut pending = None;
        for frag in self.structure_tokens() {
            match frag.trim() {
                "<td>" | "<td" => pending = next_cell.next(),
                "</td>" => {
                    if let Some(c) = pending.take() {
                        out.extend(c.tokens.iter().map(String::as_str));
                    }
                }
                _ => {}
            }
            // attributes keep their leading space so they stay separated from `<td`
            if frag.starts_with(char::is_alphabetic) {
                out.push(' ');
            }
            out.push_str(frag);
        }
        out.push_str("</table>");
        Ok(out)
    }

    /// The ground-truth table as a tree.
    pub fn to_tree(&self) -> Result<TableTree, RecordError> {
        Ok(parse_table_html(&self.raw_html()?)?)
    }
}

/// Canonical ground-truth HTML for a record.
pub fn record_to_html(record: &AnnotationRecord) -> Result<String, RecordError> {
    Ok(to_html(&record.to_tree()?))
}

/// Reads image sizes from a sidecar CSV file of `filename,width,height` rows.
/// A header row and `#` comments are skipped; filenames containing commas
/// must be quoted.
pub fn read_size_table<R: BufRead>(reader: R) -> std::io::Result<std::collections::HashMap<String, ImageSize>> {
    let invalid = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = std::collections::HashMap::new();
    for (n, row) in csv.records().enumerate() {
        let row = row.map_err(|e| invalid(format!("size table: {e}")))?;
        let line = row.position().map_or(n as u64 + 1, |p| p.line());
        let bad = || invalid(format!("size table line {line}: expected filename,width,height"));
        if row.len() != 3 {
            return Err(bad());
        }
        match (row[1].parse::<f64>(), row[2].parse::<f64>()) {
            (Ok(w), Ok(h)) => {
                let size = ImageSize::new(w, h).map_err(|_| bad())?;
                out.insert(row[0].to_string(), size);
            }
            _ if n == 0 => continue,
            _ => return Err(bad()),
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(structure: &[&str], cells: Vec<(Vec<&str>, Option<[f64; 4]>)>) -> AnnotationRecord {
        AnnotationRecord {
            filename: "t.png".into(),
            split: "val".into(),
            html: AnnotationHtml {
                structure: StructureTokens {
                    tokens: structure.iter().map(|s| s.to_string()).collect(),
                },
                cells: cells
                    .into_iter()
                    .map(|(t, bbox)| CellRecord {
                        tokens: t.into_iter().map(String::from).collect(),
                        bbox,
                    })
                    .collect(),
            },
            image_size: None,
        }
    }

    #[test]
    fn html_concatenation() {
        let r = record(
            &["<tbody>", "<tr>", "<td>", "</td>", "</tr>", "</tbody>"],
            vec![(vec!["1", "2"], Some([0.0, 0.0, 5.0, 5.0]))],
        );
        assert_eq!(
            record_to_html(&r).unwrap(),
            "<table><thead></thead><tbody><tr><td>12</td></tr></tbody></table>"
        );
    }

    #[test]
    fn spans_and_markup() {
        let r = record(
            &[
                "<thead>",
                "<tr>",
                "<td",
                " colspan=\"2\"",
                ">",
                "</td>",
                "</tr>",
                "</thead>",
                "<tbody>",
                "<tr>",
                "<td>",
                "</td>",
                "<td>",
                "</td>",
                "</tr>",
                "</tbody>",
            ],
            vec![
                (vec!["<b>", "H", "</b>"], Some([0.0, 0.0, 5.0, 5.0])),
                (vec![], None),
                (vec![" "], None),
            ],
        );
        r.validate().unwrap();
        assert_eq!(
            record_to_html(&r).unwrap(),
            "<table><thead><tr><td colspan=\"2\"><b>H</b></td></tr></thead><tbody><tr><td></td><td> </td></tr></tbody></table>"
        );
    }

    #[test]
    fn validation_errors() {
        let s = ["<tbody>", "<tr>", "<td>", "</td>", "</tr>", "</tbody>"];
        assert!(matches!(
            record(&s, vec![]).validate(),
            Err(RecordError::StructureCellMismatch { slots: 1, cells: 0 })
        ));
        assert!(matches!(
            record(&s, vec![(vec!["x"], None)]).validate(),
            Err(RecordError::MissingBox(0))
        ));
        assert!(matches!(
            record(&s, vec![(vec![], Some([0.0, 0.0, 1.0, 1.0]))]).validate(),
            Err(RecordError::UnexpectedBox(0))
        ));
        assert!(matches!(
            record(&s, vec![(vec!["x"], Some([3.0, 0.0, 1.0, 1.0]))]).validate(),
            Err(RecordError::InvalidBox(0))
        ));
        assert!(record(&s, vec![(vec![" "], None)]).validate().is_ok());
    }

    #[test]
    fn json_field_names() {
        let line = r#"{"filename": "a.png", "split": "train", "imgid": 3, "html": {"structure": {"tokens": ["<tbody>", "<tr>", "<td>", "</td>", "</tr>", "</tbody>"]}, "cells": [{"tokens": ["x"], "bbox": [1, 2, 3, 4]}]}}"#;
        let r: AnnotationRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.cells()[0].bbox, Some([1.0, 2.0, 3.0, 4.0]));
        let back = serde_json::to_value(&r).unwrap();
        assert_eq!(back["html"]["cells"][0]["tokens"][0], "x");
        assert!(back.get("image_size").is_none());
    }

    #[test]
    fn size_table() {
        let text = "filename,width,height\na.png,200,100\n# c\n\"b,c.png\", 10 ,20\n";
        let t = read_size_table(text.as_bytes()).unwrap();
        assert_eq!(t["a.png"], ImageSize::new(200.0, 100.0).unwrap());
        assert_eq!(t["b,c.png"].height, 20.0);
        assert!(read_size_table("a.png,x,1\nb.png,1\n".as_bytes()).is_err());
    }
}
