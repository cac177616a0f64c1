//! Synthetic tables with known ground truth, and simulated model outputs.
//!
//! Layouts are uniform grids: one column width and one row height per table.
//! Each cell's text is centered inside its grid region shrunk by `padding`,
//! so content boxes of neighboring cells are at least `2 * padding` apart.

mod simulate;
mod sweep;

pub use simulate::{simulate_outputs, simulate_outputs_with_truth, Simulated};
pub use sweep::{degradation_sweep, write_tsv, SweepGrid, SweepRow};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::annotation::{AnnotationHtml, CellRecord, StructureTokens};
use crate::dataset::{AnnotationRecord, RecordError};
use crate::geometry::{BBox, GeometryError, ImageSize};
use crate::pipeline::PipelineError;
use crate::structure::forms::split_markup;
use crate::structure::vocab::{EMPTY_FORM_COUNT, MAX_SPAN};
use crate::structure::{CodecError, EmptyFormTable};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Visible characters allowed in one cell.
pub const MAX_CELL_CHARS: usize = 100;
/// Shortest line generated, in characters.
pub const MIN_LINE_CHARS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Inclusive `[min, max]`.
    pub rows: [usize; 2],
    pub cols: [usize; 2],
    /// Header rows, capped at the row count.
    pub head_rows: [usize; 2],
    pub span_prob: f64,
    /// Largest colspan or rowspan drawn.
    pub max_span: u8,
    pub empty_prob: f64,
    pub multiline_prob: f64,
    /// Pixel ranges for the table's column width and row height.
    pub col_width: [f64; 2],
    pub row_height: [f64; 2],
    pub line_height: f64,
    pub line_gap: f64,
    pub char_width: f64,
    pub padding: f64,
    /// Blank border around the grid.
    pub margin: f64,
    /// Standard deviation of box displacement, per axis, in pixels.
    /// Displacements are truncated at two standard deviations.
    pub jitter_sigma: f64,
    pub drop_prob: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            rows: [2, 8],
            cols: [2, 6],
            head_rows: [0, 2],
            span_prob: 0.1,
            max_span: 3,
            empty_prob: 0.15,
            multiline_prob: 0.2,
            col_width: [60.0, 140.0],
            row_height: [26.0, 44.0],
            line_height: 10.0,
            line_gap: 2.0,
            char_width: 6.0,
            padding: 4.0,
            margin: 12.0,
            jitter_sigma: 0.0,
            drop_prob: 0.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InfeasibleParams(m));
        for (name, [lo, hi]) in [("rows", self.rows), ("cols", self.cols), ("head_rows", self.head_rows)] {
            if lo > hi {
                return bad(format!("{name} range [{lo}, {hi}] is empty"));
            }
        }
        if self.rows[0] == 0 || self.cols[0] == 0 {
            return bad("tables need at least one row and one column".into());
        }
        for (name, p) in [
            ("span_prob", self.span_prob),
            ("empty_prob", self.empty_prob),
            ("multiline_prob", self.multiline_prob),
            ("drop_prob", self.drop_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(1..=MAX_SPAN).contains(&self.max_span) {
            return bad(format!("max_span = {} is outside 1..={MAX_SPAN}", self.max_span));
        }
        for (name, [lo, hi]) in [("col_width", self.col_width), ("row_height", self.row_height)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("{name} range [{lo}, {hi}] is invalid"));
            }
        }
        let sizes = [("line_height", self.line_height), ("char_width", self.char_width)];
        for (name, v) in sizes {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("line_gap", self.line_gap),
            ("padding", self.padding),
            ("margin", self.margin),
            ("jitter_sigma", self.jitter_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative"));
            }
        }
        if self.row_height[0] < 2.0 * self.padding + self.line_height {
            return bad("row_height cannot hold one line inside the padding".into());
        }
        if self.col_width[0] < 2.0 * self.padding + MIN_LINE_CHARS as f64 * self.char_width {
            return bad("col_width cannot hold a short line inside the padding".into());
        }
        Ok(())
    }

    /// Lower bound on the distance between content boxes of distinct cells.
    pub fn min_cell_gap(&self) -> f64 {
        2.0 * self.padding
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineLayout {
    pub bbox: BBox,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    pub ordinal: usize,
    pub row: usize,
    pub col: usize,
    pub colspan: u8,
    pub rowspan: u8,
    /// The grid area the cell covers.
    pub region: BBox,
    /// Union of the line boxes; `None` for empty cells.
    pub content: Option<BBox>,
    pub lines: Vec<LineLayout>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub image_size: ImageSize,
    pub cells: Vec<CellLayout>,
}

impl Layout {
    /// Smallest separation between the content boxes of two cells, measured
    /// as the larger of the horizontal and vertical gaps. Infinite with
    /// fewer than two non-empty cells.
    pub fn min_gap(&self) -> f64 {
        let boxes: Vec<_> = self.cells.iter().filter_map(|c| c.content).map(|b| b.edges()).collect();
        let mut best = f64::INFINITY;
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                let gx = (b.0 - a.2).max(a.0 - b.2);
                let gy = (b.1 - a.3).max(a.1 - b.3);
                best = best.min(gx.max(gy));
            }
        }
        best
    }
}

const WORDS: &[&str] = &[
    "age", "sex", "group", "total", "mean", "median", "range", "ratio", "cases", "control", "dose", "week", "month",
    "year", "score", "weight", "height", "index", "value", "level", "model", "sample", "cohort", "yes", "no", "male",
    "female", "ns", "SD", "CI", "OR", "HR", "β1", "12.5", "0.031", "3.4", "(95%)", "1,204", "-0.7", "<0.001", "A&B",
    "±2.1", "μg/L", "na",
];

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn pick(rng: &mut ChaCha8Rng, [lo, hi]: [usize; 2]) -> usize {
    rng.random_range(lo..=hi)
}

/// Lines of text for one cell, each fitting `max_chars`, with at most
/// [`MAX_CELL_CHARS`] characters in total counting the joining spaces.
fn cell_lines(rng: &mut ChaCha8Rng, n_lines: usize, max_chars: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut budget = MAX_CELL_CHARS;
    for _ in 0..n_lines {
        let sep = usize::from(!lines.is_empty());
        let room = max_chars.min(budget.saturating_sub(sep));
        if room < MIN_LINE_CHARS {
            break;
        }
        let mut line = String::new();
        for _ in 0..rng.random_range(1..=3) {
            let w = WORDS[rng.random_range(0..WORDS.len())];
            let extra = w.chars().count() + usize::from(!line.is_empty());
            if line.chars().count() + extra > room {
                if line.is_empty() {
                    line = w.chars().take(room).collect();
                }
                break;
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(w);
        }
        budget -= sep + line.chars().count();
        lines.push(line);
    }
    lines
}

/// A random table and its pixel layout, determined by `params.seed`.
pub fn generate_table(params: &SynthParams, forms: &EmptyFormTable) -> Result<(AnnotationRecord, Layout), SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_rows = pick(&mut rng, params.rows);
    let n_cols = pick(&mut rng, params.cols);
    let n_head = pick(&mut rng, params.head_rows).min(n_rows);
    let col_w = uniform(&mut rng, params.col_width);
    let row_h = uniform(&mut rng, params.row_height);
    let max_span = params.max_span as usize;

    // place cells in reading order of their top-left corners
    let mut occupied = vec![vec![false; n_cols]; n_rows];
    let mut grid: Vec<(usize, usize, usize, usize)> = Vec::new();
    for r in 0..n_rows {
        let section_end = if r < n_head { n_head } else { n_rows };
        for c in 0..n_cols {
            if occupied[r][c] {
                continue;
            }
            let (mut cs, mut rs) = (1, 1);
            if rng.random_bool(params.span_prob) {
                let free = (c..n_cols).take_while(|&j| !occupied[r][j]).count().min(max_span);
                let down = (section_end - r).min(max_span);
                let kind = rng.random_range(0..3);
                if kind != 1 && free >= 2 {
                    cs = rng.random_range(2..=free);
                }
                if kind != 0 && down >= 2 {
                    rs = rng.random_range(2..=down);
                    // covered rows must stay free under the span and keep
                    // another free column, so no row ends up without a cell
                    for (rr, row) in occupied.iter().enumerate().take(r + rs).skip(r + 1) {
                        let under_free = (c..c + cs).all(|j| !row[j]);
                        let other_free = (0..n_cols).any(|j| !(c..c + cs).contains(&j) && !row[j]);
                        if !(under_free && other_free) {
                            rs = rr - r;
                            break;
                        }
                    }
                }
            }
            for row in occupied.iter_mut().skip(r).take(rs) {
                for slot in row.iter_mut().skip(c).take(cs) {
                    *slot = true;
                }
            }
            grid.push((r, c, cs, rs));
        }
    }

    let width = 2.0 * params.margin + n_cols as f64 * col_w;
    let height = 2.0 * params.margin + n_rows as f64 * row_h;
    let image_size = ImageSize::new(width, height).map_err(|e| SynthError::InfeasibleParams(e.to_string()))?;
    let p = params.padding;
    let mut cells = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len());
    for (ordinal, &(r, c, cs, rs)) in grid.iter().enumerate() {
        let x0 = params.margin + c as f64 * col_w;
        let y0 = params.margin + r as f64 * row_h;
        let region = BBox::pixel(x0, y0, x0 + cs as f64 * col_w, y0 + rs as f64 * row_h);
        let spanned = cs > 1 || rs > 1;
        let mut layout = CellLayout {
            ordinal,
            row: r,
            col: c,
            colspan: cs as u8,
            rowspan: rs as u8,
            region,
            content: None,
            lines: Vec::new(),
        };
        let tokens: Vec<String> = if rng.random_bool(params.empty_prob) {
            if spanned {
                Vec::new()
            } else {
                let u: f64 = rng.random();
                let form = if u < 0.6 {
                    0
                } else if u < 0.75 {
                    1
                } else {
                    rng.random_range(2..EMPTY_FORM_COUNT)
                };
                split_markup(forms.markup(form).unwrap_or_default())
            }
        } else {
            let inner_w = cs as f64 * col_w - 2.0 * p;
            let inner_h = rs as f64 * row_h - 2.0 * p;
            let fit = ((inner_h + params.line_gap) / (params.line_height + params.line_gap)).floor() as usize;
            let wanted = if rng.random_bool(params.multiline_prob) {
                rng.random_range(2..=3)
            } else {
                1
            };
            let max_chars = (inner_w / params.char_width).floor() as usize;
            let texts = cell_lines(&mut rng, wanted.min(fit).max(1), max_chars);
            let n = texts.len() as f64;
            let block_h = n * params.line_height + (n - 1.0) * params.line_gap;
            let (cx, cy) = region.center();
            let mut top = cy - block_h / 2.0;
            for t in &texts {
                let w = t.chars().count() as f64 * params.char_width;
                let bbox = BBox::pixel(cx - w / 2.0, top, cx + w / 2.0, top + params.line_height);
                layout.content = Some(match layout.content {
                    Some(u) => u.union(&bbox).expect("pixel boxes"),
                    None => bbox,
                });
                layout.lines.push(LineLayout {
                    bbox,
                    content: t.clone(),
                });
                top += params.line_height + params.line_gap;
            }
            let text = texts.join(" ");
            let chars = text.chars().map(String::from);
            if r < n_head {
                std::iter::once("<b>".to_string())
                    .chain(chars)
                    .chain(["</b>".to_string()])
                    .collect()
            } else {
                chars.collect()
            }
        };
        records.push(CellRecord {
            tokens,
            bbox: layout.content.map(|b| b.to_array()),
        });
        cells.push(layout);
    }

    let mut structure: Vec<String> = Vec::new();
    let emit_rows = |rows: std::ops::Range<usize>, structure: &mut Vec<String>| {
        for r in rows {
            structure.push("<tr>".into());
            for &(_, _, cs, rs) in grid.iter().filter(|g| g.0 == r) {
                if cs == 1 && rs == 1 {
                    structure.extend(["<td>".into(), "</td>".into()]);
                } else {
                    structure.push("<td".into());
                    if cs > 1 {
                        structure.push(format!(" colspan=\"{cs}\""));
                    }
                    if rs > 1 {
                        structure.push(format!(" rowspan=\"{rs}\""));
                    }
                    structure.extend([">".into(), "</td>".into()]);
                }
            }
            structure.push("</tr>".into());
        }
    };
    if n_head > 0 {
        structure.push("<thead>".into());
        emit_rows(0..n_head, &mut structure);
        structure.push("</thead>".into());
    }
    structure.push("<tbody>".into());
    emit_rows(n_head..n_rows, &mut structure);
    structure.push("</tbody>".into());

    let record = AnnotationRecord {
        filename: format!("synth_{:016x}.png", params.seed),
        split: "synth".into(),
        html: AnnotationHtml {
            structure: StructureTokens { tokens: structure },
            cells: records,
        },
        image_size: Some([width, height]),
    };
    Ok((record, Layout { image_size, cells }))
}
