//! Filling a decoded skeleton with recognized text.

use std::collections::HashMap;

use thiserror::Error;

use crate::assignment::{merge_cell_text, Assignment, TextLine};
use crate::structure::forms::{has_visible_text, split_markup};
use crate::structure::{CellAnchor, CellKind, EmptyFormTable};
use crate::table::{to_html, TableTree, Tag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssembleError {
    #[error("{anchors} anchors for {cells} table cells")]
    AnchorMismatch { anchors: usize, cells: usize },
    #[error("assignment refers to unknown text line {0}")]
    UnknownLine(u64),
    #[error("empty form {0} is not in the form table")]
    UnknownForm(u8),
}

#[derive(Debug, Clone)]
pub struct AssembleOptions {
    /// Wrap header cell text in `<b>…</b>`.
    pub format_correction: bool,
    pub forms: EmptyFormTable,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            format_correction: true,
            forms: EmptyFormTable::default(),
        }
    }
}

/// Fills cell contents and returns the finished tree.
pub fn assemble_tree(
    skeleton: &TableTree,
    anchors: &[CellAnchor],
    assignment: &Assignment,
    lines: &[TextLine],
    opts: &AssembleOptions,
) -> Result<TableTree, AssembleError> {
    let mut tree = skeleton.clone();
    let mut cells = tree.cells_mut();
    if cells.len() != anchors.len() {
        return Err(AssembleError::AnchorMismatch {
            anchors: anchors.len(),
            cells: cells.len(),
        });
    }
    let by_id: HashMap<u64, &TextLine> = lines.iter().map(|l| (l.id, l)).collect();
    for (cell, anchor) in cells.iter_mut().zip(anchors) {
        cell.content = match anchor.kind {
            CellKind::EmptyForm(k) => opts.forms.markup(k).ok_or(AssembleError::UnknownForm(k))?.to_string(),
            CellKind::NonEmpty | CellKind::SpanCell { .. } => {
                let assigned = assignment
                    .lines_of(anchor.cell_ordinal)
                    .iter()
                    .map(|(id, _)| by_id.get(id).copied().ok_or(AssembleError::UnknownLine(*id)))
                    .collect::<Result<Vec<_>, _>>()?;
                merge_cell_text(&assigned)
            }
        };
    }
    Ok(if opts.format_correction {
        format_correct_thead(tree)
    } else {
        tree
    })
}

/// Fills cell contents and serializes to canonical HTML.
pub fn assemble(
    skeleton: &TableTree,
    anchors: &[CellAnchor],
    assignment: &Assignment,
    lines: &[TextLine],
    opts: &AssembleOptions,
) -> Result<String, AssembleError> {
    assemble_tree(skeleton, anchors, assignment, lines, opts).map(|t| to_html(&t))
}

/// Wraps the text of every header cell in `<b>…</b>` unless it already
/// starts with `<b>` and ends with `</b>`. Cells without visible text and
/// body cells are left alone.
pub fn format_correct_thead(mut tree: TableTree) -> TableTree {
    for section in tree.children.iter_mut().filter(|c| c.tag == Tag::Thead) {
        for row in &mut section.children {
            for cell in &mut row.children {
                let c = &cell.content;
                if !has_visible_text(&split_markup(c)) || (c.starts_with("<b>") && c.ends_with("</b>")) {
                    continue;
                }
                cell.content = format!("<b>{c}</b>");
            }
        }
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::Rule;
    use crate::geometry::BBox;

    fn head_body(head: &str, body: &str) -> TableTree {
        TableTree::table(
            vec![TableTree::row(vec![TableTree::cell(head)])],
            vec![TableTree::row(vec![TableTree::cell(body)])],
        )
    }

    #[test]
    fn thead_bolding() {
        let t = format_correct_thead(head_body("Group", "12.5"));
        assert_eq!(t.cells()[0].content, "<b>Group</b>");
        assert_eq!(t.cells()[1].content, "12.5");
        let already = format_correct_thead(head_body("<b>N</b>", ""));
        assert_eq!(already.cells()[0].content, "<b>N</b>");
        let blank = format_correct_thead(head_body(" ", ""));
        assert_eq!(blank.cells()[0].content, " ");
        let twice = format_correct_thead(format_correct_thead(head_body("a <i>b</i>", "")));
        assert_eq!(twice.cells()[0].content, "<b>a <i>b</i></b>");
    }

    fn anchor(ord: usize, kind: CellKind) -> CellAnchor {
        CellAnchor {
            seq_index: ord,
            kind,
            bbox: None,
            cell_ordinal: ord,
        }
    }

    #[test]
    fn empty_forms_expand_literally() {
        let skeleton = TableTree::table(
            vec![],
            vec![TableTree::row(vec![TableTree::cell(""), TableTree::cell("")])],
        );
        let anchors = vec![anchor(0, CellKind::EmptyForm(1)), anchor(1, CellKind::EmptyForm(2))];
        let html = assemble(&skeleton, &anchors, &Assignment::default(), &[], &Default::default()).unwrap();
        assert_eq!(
            html,
            "<table><thead></thead><tbody><tr><td> </td><td><b> </b></td></tr></tbody></table>"
        );
    }

    #[test]
    fn multi_line_merge() {
        let skeleton = TableTree::table(vec![], vec![TableTree::row(vec![TableTree::cell("")])]);
        let anchors = vec![anchor(0, CellKind::NonEmpty)];
        let lines = vec![
            TextLine::new(1, BBox::pixel(0.0, 20.0, 10.0, 30.0), "repair"),
            TextLine::new(2, BBox::pixel(0.0, 0.0, 10.0, 10.0), "hernia"),
        ];
        let mut a = Assignment::default();
        a.cells.insert(0, vec![(2, Rule::Center), (1, Rule::Center)]);
        let html = assemble(&skeleton, &anchors, &a, &lines, &Default::default()).unwrap();
        assert!(html.contains("<td>hernia repair</td>"));
    }

    #[test]
    fn anchor_mismatch() {
        let skeleton = TableTree::table(vec![], vec![TableTree::row(vec![TableTree::cell("")])]);
        let err = assemble(&skeleton, &[], &Assignment::default(), &[], &Default::default()).unwrap_err();
        assert_eq!(err, AssembleError::AnchorMismatch { anchors: 0, cells: 1 });
    }
}
