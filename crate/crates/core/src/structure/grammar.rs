//! Well-formedness of structure token sequences.
//!
//! ```text
//! sequence := START? [thead] [tbody] (END PAD*)?
//! thead    := <thead> row* </thead>
//! tbody    := <tbody> row* </tbody>
//! row      := <tr> cell* </tr>
//! cell     := <td></td> | <ebK></ebK> | <td attr+ > </td>
//! attr     := colspan="N" | rowspan="N"      (each at most once)
//! ```
//!
//! Validation never stops at the first problem: it resynchronizes and keeps
//! going, so every violation in the sequence is reported. Fatal violations
//! make the sequence undecodable; warnings flag tables that decode but look
//! suspicious (ragged rows, empty rows).

use std::fmt;

use serde::Serialize;

use super::vocab::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// A closer without its opener, an opener never closed, or improper
    /// nesting.
    UnbalancedPair,
    /// A span attribute outside a `<td … >` fragment.
    DanglingAttribute,
    /// The same attribute twice in one fragment.
    DuplicateAttribute,
    /// A `<td` … `>` fragment without any span attribute.
    MissingSpanAttribute,
    /// A token where the grammar does not allow it (cell outside a row,
    /// `>` without `<td`, row outside a section).
    UnexpectedToken,
    /// A section repeated, or `<thead>` after `<tbody>`.
    SectionOrder,
    /// START/END/PAD in the wrong place.
    MisplacedControl,
    /// The UNKNOWN control symbol.
    UnknownSymbol,
    EmptyRow,
    /// Row widths (counting rowspans from above) disagree.
    InconsistentRowWidth,
    /// A rowspan reaches past the last row of its section.
    RowspanOverflow,
}

impl ViolationKind {
    pub fn severity(self) -> Severity {
        match self {
            ViolationKind::EmptyRow | ViolationKind::InconsistentRowWidth | ViolationKind::RowspanOverflow => {
                Severity::Warning
            }
            _ => Severity::Fatal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub position: usize,
    pub kind: ViolationKind,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Fatal => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} at token {}: {:?}: {}", self.position, self.kind, self.message)
    }
}

pub fn has_fatal(violations: &[Violation]) -> bool {
    violations.iter().any(|v| v.severity == Severity::Fatal)
}

/// Returns every grammar violation in `tokens`; empty iff well-formed.
pub fn validate_sequence(tokens: &[Token]) -> Vec<Violation> {
    let mut c = Checker::default();
    for (i, &t) in tokens.iter().enumerate() {
        c.step(i, t);
    }
    if c.ended.is_none() {
        c.close_all(tokens.len());
    }
    c.out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Head,
    Body,
}

#[derive(Default)]
enum SpanState {
    #[default]
    None,
    /// after `<td`
    Attrs {
        pos: usize,
        colspan: Option<u8>,
        rowspan: Option<u8>,
    },
    /// after `>`
    Closing { pos: usize },
}

struct Row {
    pos: usize,
    cells: usize,
    width: usize,
}

#[derive(Default)]
struct Checker {
    out: Vec<Violation>,
    section: Option<Section>,
    seen_head: bool,
    seen_body: bool,
    row: Option<Row>,
    span: SpanState,
    /// (rows still covered, columns covered) for rowspans from earlier rows
    active: Vec<(usize, usize)>,
    /// rowspans started in the current row
    pending: Vec<(usize, usize)>,
    table_width: Option<usize>,
    ended: Option<usize>,
}

impl Checker {
    fn push(&mut self, position: usize, kind: ViolationKind, message: impl Into<String>) {
        self.out.push(Violation {
            position,
            kind,
            severity: kind.severity(),
            message: message.into(),
        });
    }

    fn step(&mut self, i: usize, tok: Token) {
        if self.ended.is_some() {
            if tok != Token::Pad {
                self.push(i, ViolationKind::MisplacedControl, format!("{tok} after END"));
            }
            return;
        }
        if self.step_span(i, tok) {
            return;
        }
        match tok {
            Token::Start => {
                if i != 0 {
                    self.push(i, ViolationKind::MisplacedControl, "START not at position 0");
                }
            }
            Token::End => {
                self.close_all(i);
                self.ended = Some(i);
            }
            Token::Pad => self.push(i, ViolationKind::MisplacedControl, "PAD before END"),
            Token::Unknown => self.push(i, ViolationKind::UnknownSymbol, "unknown symbol"),
            Token::Colspan(_) | Token::Rowspan(_) => self.push(
                i,
                ViolationKind::DanglingAttribute,
                format!("{tok} outside a `<td` … `>` fragment"),
            ),
            Token::SpanEnd => self.push(i, ViolationKind::UnexpectedToken, "`>` without `<td`"),
            Token::CellClose => self.push(i, ViolationKind::UnbalancedPair, "`</td>` without an open `<td …>`"),
            Token::Cell | Token::Empty(_) => {
                if self.require_row(i) {
                    self.add_cell(1, 1);
                }
            }
            Token::SpanOpen => {
                if self.require_row(i) {
                    self.span = SpanState::Attrs {
                        pos: i,
                        colspan: None,
                        rowspan: None,
                    };
                }
            }
            Token::TrOpen => {
                if self.section.is_none() {
                    self.push(i, ViolationKind::UnexpectedToken, "<tr> outside <thead>/<tbody>");
                }
                if let Some(row) = self.row.take() {
                    self.push(row.pos, ViolationKind::UnbalancedPair, "<tr> not closed");
                    self.finish_row(row);
                }
                self.row = Some(Row {
                    pos: i,
                    cells: 0,
                    width: 0,
                });
            }
            Token::TrClose => match self.row.take() {
                Some(row) => self.finish_row(row),
                None => self.push(i, ViolationKind::UnbalancedPair, "</tr> without <tr>"),
            },
            Token::TheadOpen | Token::TbodyOpen => {
                let sec = if tok == Token::TheadOpen {
                    Section::Head
                } else {
                    Section::Body
                };
                if self.section.is_some() {
                    self.push(
                        i,
                        ViolationKind::UnbalancedPair,
                        format!("{tok} inside an open section"),
                    );
                    self.close_section(i);
                } else if let Some(row) = self.row.take() {
                    self.push(row.pos, ViolationKind::UnbalancedPair, "<tr> not closed");
                    self.finish_row(row);
                }
                let out_of_order = match sec {
                    Section::Head => self.seen_head || self.seen_body,
                    Section::Body => self.seen_body,
                };
                if out_of_order {
                    self.push(
                        i,
                        ViolationKind::SectionOrder,
                        format!("{tok} repeated or out of order"),
                    );
                }
                match sec {
                    Section::Head => self.seen_head = true,
                    Section::Body => self.seen_body = true,
                }
                self.section = Some(sec);
            }
            Token::TheadClose | Token::TbodyClose => {
                let sec = if tok == Token::TheadClose {
                    Section::Head
                } else {
                    Section::Body
                };
                if self.section == Some(sec) {
                    self.close_section(i);
                } else {
                    self.push(i, ViolationKind::UnbalancedPair, format!("{tok} without its opener"));
                }
            }
        }
    }

    /// Handles tokens while inside a span fragment. Returns true when the
    /// token was consumed.
    fn step_span(&mut self, i: usize, tok: Token) -> bool {
        match std::mem::take(&mut self.span) {
            SpanState::None => false,
            SpanState::Attrs {
                pos,
                mut colspan,
                mut rowspan,
            } => {
                let slot = match tok {
                    Token::Colspan(n) => Some((&mut colspan, n)),
                    Token::Rowspan(n) => Some((&mut rowspan, n)),
                    _ => None,
                };
                if let Some((slot, n)) = slot {
                    let dup = slot.is_some();
                    *slot = Some(n);
                    self.span = SpanState::Attrs { pos, colspan, rowspan };
                    if dup {
                        self.push(
                            i,
                            ViolationKind::DuplicateAttribute,
                            format!("{tok} repeats an attribute"),
                        );
                    }
                    return true;
                }
                self.add_cell(colspan.unwrap_or(1) as usize, rowspan.unwrap_or(1) as usize);
                if tok == Token::SpanEnd {
                    if colspan.is_none() && rowspan.is_none() {
                        self.push(
                            pos,
                            ViolationKind::MissingSpanAttribute,
                            "`<td` … `>` without span attributes",
                        );
                    }
                    self.span = SpanState::Closing { pos };
                    return true;
                }
                self.push(pos, ViolationKind::UnbalancedPair, "`<td` not terminated by `>`");
                false
            }
            SpanState::Closing { pos } => {
                if tok == Token::CellClose {
                    return true;
                }
                self.push(pos, ViolationKind::UnbalancedPair, "`<td …>` without `</td>`");
                false
            }
        }
    }

    fn require_row(&mut self, i: usize) -> bool {
        if self.row.is_none() {
            self.push(i, ViolationKind::UnexpectedToken, "cell outside <tr>");
            return false;
        }
        true
    }

    fn add_cell(&mut self, colspan: usize, rowspan: usize) {
        if let Some(row) = &mut self.row {
            row.cells += 1;
            row.width += colspan;
            if rowspan > 1 {
                self.pending.push((rowspan - 1, colspan));
            }
        }
    }

    fn finish_row(&mut self, row: Row) {
        if row.cells == 0 {
            self.push(row.pos, ViolationKind::EmptyRow, "row without cells");
        }
        let width = row.width + self.active.iter().map(|&(_, c)| c).sum::<usize>();
        match self.table_width {
            None => self.table_width = Some(width),
            Some(w) if w != width => self.push(
                row.pos,
                ViolationKind::InconsistentRowWidth,
                format!("row spans {width} columns, expected {w}"),
            ),
            Some(_) => {}
        }
        for a in &mut self.active {
            a.0 -= 1;
        }
        self.active.retain(|a| a.0 > 0);
        self.active.append(&mut self.pending);
    }

    fn close_section(&mut self, i: usize) {
        if let Some(row) = self.row.take() {
            self.push(row.pos, ViolationKind::UnbalancedPair, "<tr> not closed");
            self.finish_row(row);
        }
        if !self.active.is_empty() {
            self.push(i, ViolationKind::RowspanOverflow, "rowspan extends past the section");
        }
        self.active.clear();
        self.pending.clear();
        self.section = None;
    }

    /// End of input or END symbol: everything still open is unbalanced.
    fn close_all(&mut self, i: usize) {
        match std::mem::take(&mut self.span) {
            SpanState::None => {}
            SpanState::Attrs { pos, colspan, rowspan } => {
                self.add_cell(colspan.unwrap_or(1) as usize, rowspan.unwrap_or(1) as usize);
                self.push(pos, ViolationKind::UnbalancedPair, "`<td` not terminated by `>`");
            }
            SpanState::Closing { pos } => self.push(pos, ViolationKind::UnbalancedPair, "`<td …>` without `</td>`"),
        }
        if self.section.is_some() {
            self.push(i, ViolationKind::UnbalancedPair, "section not closed");
            self.close_section(i);
        } else if let Some(row) = self.row.take() {
            self.push(row.pos, ViolationKind::UnbalancedPair, "<tr> not closed");
            self.finish_row(row);
        }
    }
}
