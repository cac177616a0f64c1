//! Folding annotation fragments into structure tokens and back into table
//! skeletons.

use thiserror::Error;

use super::forms::{classify_empty_cell, CellClass, EmptyFormTable, FormError};
use super::grammar::{has_fatal, validate_sequence, Violation};
use super::vocab::{Token, MAX_SPAN};
use crate::dataset::AnnotationRecord;
use crate::geometry::{BBox, BoxForm, GeometryError, ImageSize};
use crate::table::{TableTree, Tag};

/// Default bound on encoded sequence length.
pub const DEFAULT_MAX_LEN: usize = 500;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("fragment {fragment:?} at position {position} is outside the structure grammar")]
    UnknownFragment { position: usize, fragment: String },
    #[error("span value {value} at position {position} is outside 1..=10")]
    SpanOutOfRange { position: usize, value: String },
    #[error("sequence has {len} tokens, more than the limit of {max_len}")]
    LengthExceeded { len: usize, max_len: usize },
    #[error("structure has {slots} cell slots but the record lists {cells} cells")]
    CellCountMismatch { slots: usize, cells: usize },
    #[error("{got} boxes for {anchors} anchors")]
    BoxCountMismatch { anchors: usize, got: usize },
    #[error("box at position {0} is not on a cell anchor")]
    BoxOffAnchor(usize),
    #[error("malformed sequence: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    MalformedSequence(Vec<Violation>),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A token sequence with optional normalized boxes at cell-anchor positions.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureSequence {
    tokens: Vec<Token>,
    boxes: Vec<Option<BBox>>,
    max_len: usize,
}

impl StructureSequence {
    /// `boxes` must be as long as `tokens` and only set on anchors.
    pub fn new(tokens: Vec<Token>, boxes: Vec<Option<BBox>>, max_len: usize) -> Result<Self, CodecError> {
        if tokens.len() > max_len {
            return Err(CodecError::LengthExceeded {
                len: tokens.len(),
                max_len,
            });
        }
        if boxes.len() != tokens.len() {
            return Err(CodecError::BoxCountMismatch {
                anchors: tokens.len(),
                got: boxes.len(),
            });
        }
        if let Some(i) = (0..tokens.len()).find(|&i| boxes[i].is_some() && !tokens[i].is_anchor()) {
            return Err(CodecError::BoxOffAnchor(i));
        }
        Ok(Self { tokens, boxes, max_len })
    }

    /// Attaches one box (or `None`) per anchor, in sequence order.
    pub fn with_anchor_boxes(
        tokens: Vec<Token>,
        anchor_boxes: Vec<Option<BBox>>,
        max_len: usize,
    ) -> Result<Self, CodecError> {
        let anchors = tokens.iter().filter(|t| t.is_anchor()).count();
        if anchors != anchor_boxes.len() {
            return Err(CodecError::BoxCountMismatch {
                anchors,
                got: anchor_boxes.len(),
            });
        }
        let mut it = anchor_boxes.into_iter();
        let boxes = tokens
            .iter()
            .map(|t| if t.is_anchor() { it.next().flatten() } else { None })
            .collect();
        Self::new(tokens, boxes, max_len)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn boxes(&self) -> &[Option<BBox>] {
        &self.boxes
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn anchor_boxes(&self) -> Vec<Option<BBox>> {
        self.tokens
            .iter()
            .zip(&self.boxes)
            .filter(|(t, _)| t.is_anchor())
            .map(|(_, b)| *b)
            .collect()
    }

    pub fn symbols(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.symbol()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    NonEmpty,
    EmptyForm(u8),
    SpanCell { colspan: u8, rowspan: u8, empty: bool },
}

/// The sequence position standing for one table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAnchor {
    pub seq_index: usize,
    pub kind: CellKind,
    pub bbox: Option<BBox>,
    /// Position among all cells in document order.
    pub cell_ordinal: usize,
}

impl CellAnchor {
    /// Empty-form cells never receive text.
    pub fn accepts_text(&self) -> bool {
        !matches!(self.kind, CellKind::EmptyForm(_))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EncodeOptions {
    pub max_len: usize,
    /// Map empty cells with unrecognized markup to form 0 instead of failing.
    pub unknown_empty_as_form0: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            unknown_empty_as_form0: false,
        }
    }
}

/// Output of encoding one annotation.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub sequence: StructureSequence,
    pub anchors: Vec<CellAnchor>,
    /// Empty cells mapped to form 0 because their markup matched no form.
    pub unknown_empty_forms: usize,
}

fn parse_span_attr(frag: &str) -> Option<(bool, &str)> {
    let frag = frag.trim();
    let (is_col, rest) = if let Some(r) = frag.strip_prefix("colspan=") {
        (true, r)
    } else {
        (false, frag.strip_prefix("rowspan=")?)
    };
    Some((is_col, rest.trim_matches(|c| c == '"' || c == '\'')))
}

/// Folds raw fragments into tokens without attaching boxes.
///
/// Ignores `max_len`; callers that need the bound use [`encode_annotation`].
pub fn encode_tokens(
    record: &AnnotationRecord,
    forms: &EmptyFormTable,
    opts: &EncodeOptions,
) -> Result<(Vec<Token>, Vec<CellAnchor>, usize), CodecError> {
    let raw = record.structure_tokens();
    let cells = record.cells();
    let slots = record.cell_slots();
    if slots != cells.len() {
        return Err(CodecError::CellCountMismatch {
            slots,
            cells: cells.len(),
        });
    }
    let mut tokens = Vec::with_capacity(raw.len());
    let mut anchors = Vec::with_capacity(cells.len());
    let mut unknown = 0;
    let mut classify = |tokens: &[String]| match classify_empty_cell(tokens, forms) {
        Ok(c) => Ok(c),
        Err(FormError::UnknownEmptyForm(_)) if opts.unknown_empty_as_form0 => {
            unknown += 1;
            Ok(CellClass::Empty(0))
        }
        Err(e) => Err(e),
    };
    let unknown_at = |i: usize| CodecError::UnknownFragment {
        position: i,
        fragment: raw.get(i).cloned().unwrap_or_else(|| "<end of input>".into()),
    };
    let mut i = 0;
    while i < raw.len() {
        let frag = raw[i].trim();
        let simple = match frag {
            "<thead>" => Some(Token::TheadOpen),
            "</thead>" => Some(Token::TheadClose),
            "<tbody>" => Some(Token::TbodyOpen),
            "</tbody>" => Some(Token::TbodyClose),
            "<tr>" => Some(Token::TrOpen),
            "</tr>" => Some(Token::TrClose),
            _ => None,
        };
        if let Some(t) = simple {
            tokens.push(t);
            i += 1;
            continue;
        }
        let ordinal = anchors.len();
        match frag {
            "<td>" => {
                if raw.get(i + 1).map(|s| s.trim()) != Some("</td>") {
                    return Err(unknown_at(i + 1));
                }
                let kind = match classify(&cells[ordinal].tokens)? {
                    CellClass::NonEmpty => CellKind::NonEmpty,
                    CellClass::Empty(k) => CellKind::EmptyForm(k),
                };
                anchors.push(CellAnchor {
                    seq_index: tokens.len(),
                    kind,
                    bbox: None,
                    cell_ordinal: ordinal,
                });
                tokens.push(match kind {
                    CellKind::EmptyForm(k) => Token::Empty(k),
                    _ => Token::Cell,
                });
                i += 2;
            }
            "<td" => {
                let (mut colspan, mut rowspan) = (1u8, 1u8);
                let mut j = i + 1;
                loop {
                    let Some(f) = raw.get(j) else {
                        return Err(unknown_at(j));
                    };
                    if f.trim() == ">" {
                        break;
                    }
                    let (is_col, value) = parse_span_attr(f).ok_or_else(|| unknown_at(j))?;
                    let n: u8 = value
                        .parse()
                        .ok()
                        .filter(|n| (1..=MAX_SPAN).contains(n))
                        .ok_or_else(|| CodecError::SpanOutOfRange {
                            position: j,
                            value: value.to_string(),
                        })?;
                    if is_col {
                        colspan = n;
                    } else {
                        rowspan = n;
                    }
                    j += 1;
                }
                if raw.get(j + 1).map(|s| s.trim()) != Some("</td>") {
                    return Err(unknown_at(j + 1));
                }
                let class = classify(&cells[ordinal].tokens)?;
                let seq_index = tokens.len();
                let kind = if colspan == 1 && rowspan == 1 {
                    // explicit span of one: same cell as a plain <td>
                    match class {
                        CellClass::NonEmpty => {
                            tokens.push(Token::Cell);
                            CellKind::NonEmpty
                        }
                        CellClass::Empty(k) => {
                            tokens.push(Token::Empty(k));
                            CellKind::EmptyForm(k)
                        }
                    }
                } else {
                    tokens.push(Token::SpanOpen);
                    if colspan > 1 {
                        tokens.push(Token::Colspan(colspan));
                    }
                    if rowspan > 1 {
                        tokens.push(Token::Rowspan(rowspan));
                    }
                    tokens.extend([Token::SpanEnd, Token::CellClose]);
                    CellKind::SpanCell {
                        colspan,
                        rowspan,
                        empty: class != CellClass::NonEmpty,
                    }
                };
                anchors.push(CellAnchor {
                    seq_index,
                    kind,
                    bbox: None,
                    cell_ordinal: ordinal,
                });
                i = j + 2;
            }
            _ => return Err(unknown_at(i)),
        }
    }
    Ok((tokens, anchors, unknown))
}

/// Encodes a record, attaching each non-empty cell's box normalized by
/// `image_size`.
pub fn encode_annotation(
    record: &AnnotationRecord,
    image_size: ImageSize,
    forms: &EmptyFormTable,
    opts: &EncodeOptions,
) -> Result<Encoded, CodecError> {
    let image_size = ImageSize::new(image_size.width, image_size.height)?;
    let (tokens, mut anchors, unknown_empty_forms) = encode_tokens(record, forms, opts)?;
    if tokens.len() > opts.max_len {
        return Err(CodecError::LengthExceeded {
            len: tokens.len(),
            max_len: opts.max_len,
        });
    }
    let mut boxes = vec![None; tokens.len()];
    for a in &mut anchors {
        let cell = &record.cells()[a.cell_ordinal];
        if let Some(px) = cell.pixel_box().filter(|_| !cell.is_empty()) {
            let b = px.convert(image_size, BoxForm::Normalized)?;
            a.bbox = Some(b);
            boxes[a.seq_index] = Some(b);
        }
    }
    Ok(Encoded {
        sequence: StructureSequence::new(tokens, boxes, opts.max_len)?,
        anchors,
        unknown_empty_forms,
    })
}

/// Rebuilds the table skeleton (structure and spans, no content) and the
/// ordered cell anchors from a well-formed sequence.
pub fn decode_to_skeleton(seq: &StructureSequence) -> Result<(TableTree, Vec<CellAnchor>), CodecError> {
    let violations = validate_sequence(seq.tokens());
    if has_fatal(&violations) {
        return Err(CodecError::MalformedSequence(
            violations
                .into_iter()
                .filter(|v| v.severity == super::grammar::Severity::Fatal)
                .collect(),
        ));
    }
    let mut head = Vec::new();
    let mut body = Vec::new();
    let mut in_head = false;
    let mut row: Vec<TableTree> = Vec::new();
    let mut anchors = Vec::new();
    let tokens = seq.tokens();
    let mut i = 0;
    while i < tokens.len() {
        let t = tokens[i];
        match t {
            Token::TheadOpen => in_head = true,
            Token::TheadClose => in_head = false,
            Token::TrOpen => row.clear(),
            Token::TrClose => {
                let r = TableTree::row(std::mem::take(&mut row));
                if in_head {
                    head.push(r)
                } else {
                    body.push(r)
                }
            }
            Token::Cell | Token::Empty(_) => {
                anchors.push(CellAnchor {
                    seq_index: i,
                    kind: match t {
                        Token::Empty(k) => CellKind::EmptyForm(k),
                        _ => CellKind::NonEmpty,
                    },
                    bbox: seq.boxes()[i],
                    cell_ordinal: anchors.len(),
                });
                row.push(TableTree::cell(""));
            }
            Token::SpanOpen => {
                let (mut colspan, mut rowspan) = (1, 1);
                let start = i;
                i += 1;
                while tokens[i] != Token::SpanEnd {
                    match tokens[i] {
                        Token::Colspan(n) => colspan = n,
                        Token::Rowspan(n) => rowspan = n,
                        _ => unreachable!("validated"),
                    }
                    i += 1;
                }
                i += 1; // </td>
                anchors.push(CellAnchor {
                    seq_index: start,
                    kind: CellKind::SpanCell {
                        colspan,
                        rowspan,
                        empty: false,
                    },
                    bbox: seq.boxes()[start],
                    cell_ordinal: anchors.len(),
                });
                row.push(TableTree::span_cell("", colspan, rowspan));
            }
            _ => {}
        }
        i += 1;
    }
    let tree = TableTree::table(head, body);
    debug_assert_eq!(tree.cells().len(), anchors.len());
    debug_assert!(tree.cells().iter().all(|c| c.tag == Tag::Td));
    Ok((tree, anchors))
}
