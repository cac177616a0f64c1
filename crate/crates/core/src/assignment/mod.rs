//! Matching detected text lines to predicted structure cells.
//!
//! Three rules run in order:
//!
//! 1. **Center**: a line goes to a cell containing its center point. When
//!    several predicted cells overlap the point, the one whose center is
//!    nearest wins, then the lowest ordinal.
//! 2. **IOU**: a line still unmatched goes to the cell it overlaps most,
//!    provided the IOU exceeds `iou_floor`.
//! 3. **Distance**: each cell that got nothing so far pulls the nearest
//!    leftover line, greedily by ascending center distance over all
//!    (cell, line) pairs, one line per cell.
//!
//! Lines left after stage 3 are reported unassigned.

pub mod oracle;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{center_distance, contains_center, iou, BBox, BoxForm, GeometryError};
use crate::structure::CellAnchor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("duplicate text line id {0}")]
    DuplicateLineId(u64),
}

/// A detected text line with its recognized content.
#[derive(Debug, Clone, PartialEq)]
pub struct TextLine {
    pub id: u64,
    pub bbox: BBox,
    pub content: String,
    pub confidence: Option<f64>,
}

impl TextLine {
    pub fn new(id: u64, bbox: BBox, content: impl Into<String>) -> Self {
        Self {
            id,
            bbox,
            content: content.into(),
            confidence: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Center,
    Iou,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignConfig {
    /// Stage 2 accepts a cell only when its IOU is strictly above this.
    pub iou_floor: f64,
    pub distance_enabled: bool,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self {
            iou_floor: 0.0,
            distance_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    /// cell ordinal → lines in reading order, with the rule that placed them
    pub cells: BTreeMap<usize, Vec<(u64, Rule)>>,
    pub unassigned: Vec<u64>,
    /// No candidate cells were available; every line is unassigned.
    pub no_cells: bool,
}

impl Assignment {
    pub fn lines_of(&self, cell_ordinal: usize) -> &[(u64, Rule)] {
        self.cells.get(&cell_ordinal).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn rule_counts(&self) -> BTreeMap<Rule, usize> {
        let mut out = BTreeMap::new();
        for &(_, r) in self.cells.values().flatten() {
            *out.entry(r).or_insert(0) += 1;
        }
        out
    }

    /// cell ordinal for each assigned line id
    pub fn cell_of(&self) -> BTreeMap<u64, usize> {
        self.cells
            .iter()
            .flat_map(|(&c, ls)| ls.iter().map(move |&(id, _)| (id, c)))
            .collect()
    }
}

/// Reading order: top to bottom, then left to right, then id.
pub(crate) fn reading_order(a: &TextLine, b: &TextLine) -> Ordering {
    let (ax, ay) = a.bbox.center();
    let (bx, by) = b.bbox.center();
    ay.total_cmp(&by).then(ax.total_cmp(&bx)).then(a.id.cmp(&b.id))
}

/// Joins a cell's lines in reading order with single spaces.
pub fn merge_cell_text(lines: &[&TextLine]) -> String {
    let mut sorted = lines.to_vec();
    sorted.sort_by(|a, b| reading_order(a, b));
    sorted.iter().map(|l| l.content.as_str()).collect::<Vec<_>>().join(" ")
}

/// Candidate cells: anchors that accept text and carry a box.
pub(crate) fn candidates(cells: &[CellAnchor]) -> Vec<(usize, BBox)> {
    cells
        .iter()
        .filter(|a| a.accepts_text())
        .filter_map(|a| a.bbox.map(|b| (a.cell_ordinal, b)))
        .collect()
}

pub(crate) fn check_inputs(cells: &[(usize, BBox)], lines: &[TextLine]) -> Result<(), AssignError> {
    let mut seen = std::collections::HashSet::new();
    for l in lines {
        if !seen.insert(l.id) {
            return Err(AssignError::DuplicateLineId(l.id));
        }
    }
    let form = lines
        .first()
        .map(|l| l.bbox.form())
        .or(cells.first().map(|c| c.1.form()));
    if let Some(form) = form {
        for b in cells.iter().map(|c| &c.1).chain(lines.iter().map(|l| &l.bbox)) {
            if b.form() != form {
                return Err(GeometryError::MixedCoordinateForms(form, b.form()).into());
            }
        }
    }
    Ok(())
}

pub(crate) fn finish(placed: Vec<Option<(usize, Rule)>>, lines: &[TextLine], no_cells: bool) -> Assignment {
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut unassigned = Vec::new();
    for (li, p) in placed.iter().enumerate() {
        match p {
            Some((c, _)) => cells.entry(*c).or_default().push(li),
            None => unassigned.push(lines[li].id),
        }
    }
    let cells = cells
        .into_iter()
        .map(|(c, mut idx)| {
            idx.sort_by(|&a, &b| reading_order(&lines[a], &lines[b]));
            (
                c,
                idx.into_iter()
                    .map(|li| (lines[li].id, placed[li].unwrap().1))
                    .collect(),
            )
        })
        .collect();
    Assignment {
        cells,
        unassigned,
        no_cells,
    }
}

/// Uniform bucket grid over cell boxes for point and rectangle queries.
struct CellIndex {
    x0: f64,
    y0: f64,
    bw: f64,
    bh: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl CellIndex {
    fn new(cells: &[(usize, BBox)]) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (_, b) in cells {
            let (a, c, d, e) = b.edges();
            x0 = x0.min(a);
            y0 = y0.min(c);
            x1 = x1.max(d);
            y1 = y1.max(e);
        }
        let side = (cells.len() as f64).sqrt().ceil().max(1.0) as usize;
        let nx = if x1 > x0 { side } else { 1 };
        let ny = if y1 > y0 { side } else { 1 };
        let bw = if x1 > x0 { (x1 - x0) / nx as f64 } else { 1.0 };
        let bh = if y1 > y0 { (y1 - y0) / ny as f64 } else { 1.0 };
        let mut idx = Self {
            x0,
            y0,
            bw,
            bh,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (k, (_, b)) in cells.iter().enumerate() {
            let (a, c, d, e) = b.edges();
            for j in idx.row(c)..=idx.row(e) {
                for i in idx.col(a)..=idx.col(d) {
                    idx.buckets[j * nx + i].push(k);
                }
            }
        }
        idx
    }

    fn col(&self, x: f64) -> usize {
        (((x - self.x0) / self.bw).floor().max(0.0) as usize).min(self.nx - 1)
    }

    fn row(&self, y: f64) -> usize {
        (((y - self.y0) / self.bh).floor().max(0.0) as usize).min(self.ny - 1)
    }

    fn at_point(&self, x: f64, y: f64) -> &[usize] {
        &self.buckets[self.row(y) * self.nx + self.col(x)]
    }

    /// Cells sharing a bucket with the rectangle, ascending and deduplicated.
    fn in_rect(&self, b: &BBox) -> Vec<usize> {
        let (a, c, d, e) = b.edges();
        let mut out: Vec<usize> = (self.row(c)..=self.row(e))
            .flat_map(|j| (self.col(a)..=self.col(d)).flat_map(move |i| self.buckets[j * self.nx + i].iter().copied()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Assigns text lines to cells. Cell and line boxes must share a coordinate
/// form; empty-form anchors and anchors without a box are not candidates.
pub fn assign(cells: &[CellAnchor], lines: &[TextLine], cfg: &AssignConfig) -> Result<Assignment, AssignError> {
    let cand = candidates(cells);
    check_inputs(&cand, lines)?;
    if cand.is_empty() {
        return Ok(finish(vec![None; lines.len()], lines, true));
    }
    let index = CellIndex::new(&cand);
    let mut placed: Vec<Option<(usize, Rule)>> = vec![None; lines.len()];

    for (li, line) in lines.iter().enumerate() {
        let (cx, cy) = line.bbox.center();
        let mut best: Option<(f64, usize)> = None;
        for &k in index.at_point(cx, cy) {
            let (ord, cell) = cand[k];
            if !contains_center(&cell, &line.bbox)? {
                continue;
            }
            let d = center_distance(&cell, &line.bbox)?;
            let better = match best {
                None => true,
                Some((bd, bo)) => d < bd || (d == bd && ord < bo),
            };
            if better {
                best = Some((d, ord));
            }
        }
        placed[li] = best.map(|(_, ord)| (ord, Rule::Center));
    }

    for (li, line) in lines.iter().enumerate() {
        if placed[li].is_some() {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for k in index.in_rect(&line.bbox) {
            let (ord, cell) = cand[k];
            let v = iou(&cell, &line.bbox)?;
            if v <= cfg.iou_floor {
                continue;
            }
            let better = match best {
                None => true,
                Some((bv, bo)) => v > bv || (v == bv && ord < bo),
            };
            if better {
                best = Some((v, ord));
            }
        }
        placed[li] = best.map(|(_, ord)| (ord, Rule::Iou));
    }

    if cfg.distance_enabled {
        let filled: std::collections::HashSet<usize> = placed.iter().flatten().map(|p| p.0).collect();
        let open: Vec<(usize, BBox)> = cand.iter().copied().filter(|(o, _)| !filled.contains(o)).collect();
        let left: Vec<usize> = (0..lines.len()).filter(|&li| placed[li].is_none()).collect();
        let mut pairs = Vec::with_capacity(open.len() * left.len());
        for (ord, cell) in &open {
            for &li in &left {
                pairs.push((center_distance(cell, &lines[li].bbox)?, *ord, lines[li].id, li));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut cell_done = std::collections::HashSet::new();
        for (_, ord, _, li) in pairs {
            if placed[li].is_none() && !cell_done.contains(&ord) {
                placed[li] = Some((ord, Rule::Distance));
                cell_done.insert(ord);
            }
        }
    }

    Ok(finish(placed, lines, false))
}

/// Converts anchors' normalized boxes to pixel boxes for matching against
/// detector output.
pub fn anchors_to_pixel(
    anchors: &[CellAnchor],
    size: crate::geometry::ImageSize,
) -> Result<Vec<CellAnchor>, GeometryError> {
    anchors
        .iter()
        .map(|a| {
            Ok(CellAnchor {
                bbox: a.bbox.map(|b| b.convert(size, BoxForm::Pixel)).transpose()?,
                ..a.clone()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::CellKind;

    fn anchor(ord: usize, b: BBox) -> CellAnchor {
        CellAnchor {
            seq_index: ord,
            kind: CellKind::NonEmpty,
            bbox: Some(b),
            cell_ordinal: ord,
        }
    }

    fn px(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::pixel(x0, y0, x1, y1)
    }

    fn grid() -> Vec<CellAnchor> {
        // 2x2 cells of 40x20 with 10px gaps
        vec![
            anchor(0, px(0.0, 0.0, 40.0, 20.0)),
            anchor(1, px(50.0, 0.0, 90.0, 20.0)),
            anchor(2, px(0.0, 30.0, 40.0, 50.0)),
            anchor(3, px(50.0, 30.0, 90.0, 50.0)),
        ]
    }

    #[test]
    fn perfect_layout_is_all_center() {
        let cells = grid();
        let lines: Vec<TextLine> = cells
            .iter()
            .map(|c| TextLine::new(10 + c.cell_ordinal as u64, c.bbox.unwrap(), "x"))
            .collect();
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert!(a.unassigned.is_empty());
        for c in 0..4 {
            assert_eq!(a.lines_of(c), &[(10 + c as u64, Rule::Center)]);
        }
    }

    #[test]
    fn shifted_line_uses_iou() {
        let cells = grid();
        let lines = vec![TextLine::new(1, px(10.0, 2.0, 80.0, 18.0), "x")];
        // 10..80 overlaps cell 0 (10..40 = 30px) and cell 1 (50..80 = 30px): tie → lowest ordinal
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert_eq!(a.lines_of(0), &[(1, Rule::Iou)]);
        let lines = vec![TextLine::new(1, px(30.0, 2.0, 55.0, 18.0), "x")];
        // center 42.5 in the gap; overlap 10px with cell 0 and 5px with cell 1
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert_eq!(a.lines_of(0), &[(1, Rule::Iou)]);
    }

    #[test]
    fn distance_rule_for_unmatched_cell() {
        let cells = grid();
        let lines = vec![
            TextLine::new(1, px(0.0, 0.0, 40.0, 20.0), "a"),
            TextLine::new(2, px(100.0, 60.0, 120.0, 70.0), "far"),
        ];
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert_eq!(a.lines_of(0), &[(1, Rule::Center)]);
        // cell 3 is the nearest open cell to the stray line
        assert_eq!(a.lines_of(3), &[(2, Rule::Distance)]);
        assert!(a.unassigned.is_empty());
        let off = AssignConfig {
            distance_enabled: false,
            ..Default::default()
        };
        let a = assign(&cells, &lines, &off).unwrap();
        assert_eq!(a.unassigned, vec![2]);
    }

    #[test]
    fn overlapping_cells_tie_break() {
        let cells = vec![
            anchor(0, px(0.0, 0.0, 100.0, 100.0)),
            anchor(1, px(44.0, 44.0, 64.0, 64.0)),
        ];
        // both contain the center; cell 1's center is nearer
        let lines = vec![TextLine::new(7, px(52.0, 52.0, 58.0, 58.0), "x")];
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert_eq!(a.lines_of(1), &[(7, Rule::Center)]);
        let same = vec![anchor(0, px(0.0, 0.0, 10.0, 10.0)), anchor(1, px(0.0, 0.0, 10.0, 10.0))];
        let a = assign(
            &same,
            &[TextLine::new(1, px(1.0, 1.0, 2.0, 2.0), "x")],
            &Default::default(),
        )
        .unwrap();
        assert_eq!(a.lines_of(0).len(), 1);
    }

    #[test]
    fn empty_forms_and_no_cells() {
        let mut cells = grid();
        for c in &mut cells {
            c.kind = CellKind::EmptyForm(0);
        }
        let lines = vec![TextLine::new(1, px(0.0, 0.0, 4.0, 4.0), "x")];
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert!(a.no_cells);
        assert_eq!(a.unassigned, vec![1]);
        let a = assign(&grid(), &[], &Default::default()).unwrap();
        assert!(a.cells.is_empty() && a.unassigned.is_empty());
    }

    #[test]
    fn input_errors() {
        let lines = vec![TextLine::new(1, BBox::normalized(0.0, 0.0, 0.1, 0.1), "x")];
        assert!(matches!(
            assign(&grid(), &lines, &Default::default()),
            Err(AssignError::Geometry(GeometryError::MixedCoordinateForms(..)))
        ));
        let dup = vec![
            TextLine::new(1, px(0.0, 0.0, 1.0, 1.0), "x"),
            TextLine::new(1, px(0.0, 0.0, 1.0, 1.0), "y"),
        ];
        assert_eq!(
            assign(&grid(), &dup, &Default::default()),
            Err(AssignError::DuplicateLineId(1))
        );
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_cell_text(&[]), "");
        let bottom = TextLine::new(1, px(0.0, 20.0, 50.0, 30.0), "hernia repair");
        let top = TextLine::new(2, px(0.0, 5.0, 50.0, 15.0), "Continuous");
        assert_eq!(merge_cell_text(&[&bottom, &top]), "Continuous hernia repair");
        let right = TextLine::new(3, px(60.0, 5.0, 80.0, 15.0), "b");
        let left = TextLine::new(4, px(0.0, 5.0, 20.0, 15.0), "a");
        assert_eq!(merge_cell_text(&[&right, &left]), "a b");
    }

    #[test]
    fn lists_in_reading_order() {
        let cells = vec![anchor(0, px(0.0, 0.0, 100.0, 100.0))];
        let lines = vec![
            TextLine::new(5, px(0.0, 60.0, 90.0, 70.0), "b"),
            TextLine::new(9, px(0.0, 10.0, 90.0, 20.0), "a"),
        ];
        let a = assign(&cells, &lines, &Default::default()).unwrap();
        assert_eq!(a.lines_of(0), &[(9, Rule::Center), (5, Rule::Center)]);
    }
}
