//! Tree-Edit-Distance-based Similarity between table documents.

mod batch;
mod distance;

pub use batch::{
    batch_evaluate, evaluate_maps, load_html_file, parse_html_map, BatchError, BatchSummary, HtmlMap, SampleScore,
};
pub use distance::{normalized_levenshtein, tree_edit_distance, CostModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{parse_table_html, ParseError, TableTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pred,
    Gt,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Pred => "prediction",
            Side::Gt => "ground truth",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{side} does not parse: {source}")]
pub struct TedsError {
    pub side: Side,
    pub source: ParseError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TedsReport {
    pub score: f64,
    pub edit_distance: f64,
    pub size_pred: usize,
    pub size_gt: usize,
    pub struct_only: bool,
}

/// Scores two already-parsed trees.
pub fn teds_trees(pred: &TableTree, gt: &TableTree, struct_only: bool) -> TedsReport {
    let edit_distance = tree_edit_distance(pred, gt, &CostModel { struct_only });
    let size_pred = pred.node_count();
    let size_gt = gt.node_count();
    let score = 1.0 - edit_distance / size_pred.max(size_gt) as f64;
    TedsReport {
        score: score.clamp(0.0, 1.0),
        edit_distance,
        size_pred,
        size_gt,
        struct_only,
    }
}

pub fn teds(pred_html: &str, gt_html: &str, struct_only: bool) -> Result<TedsReport, TedsError> {
    let pred = parse_table_html(pred_html).map_err(|source| TedsError {
        side: Side::Pred,
        source,
    })?;
    let gt = parse_table_html(gt_html).map_err(|source| TedsError { side: Side::Gt, source })?;
    Ok(teds_trees(&pred, &gt, struct_only))
}

/// Rounds to 4 decimals, ties to even.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round_ties_even() / 1e4
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::to_html;

    /// One header row and three body rows of a single cell: 11 nodes.
    fn four_cells(contents: [&str; 4]) -> String {
        let row = |a: &str| TableTree::row(vec![TableTree::cell(a)]);
        to_html(&TableTree::table(
            vec![row(contents[0])],
            contents[1..].iter().map(|c| row(c)).collect(),
        ))
    }

    #[test]
    fn identity() {
        let h = four_cells(["a", "b", "c", "d"]);
        let r = teds(&h, &h, false).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.size_gt, 11);
    }

    #[test]
    fn emptied_contents() {
        // each emptied td costs one relabel of normalized distance 1
        let gt = four_cells(["ab", "c", "dddd", "e"]);
        let pred = four_cells(["", "", "", ""]);
        let r = teds(&pred, &gt, false).unwrap();
        assert_eq!(r.edit_distance, 4.0);
        assert_eq!(r.score, 1.0 - 4.0 / 11.0);
        assert_eq!(teds(&pred, &gt, true).unwrap().score, 1.0);
        // partial damage: "dddd" -> "ddd" is 1/4
        let pred = four_cells(["ab", "c", "ddd", "e"]);
        assert_eq!(teds(&pred, &gt, false).unwrap().edit_distance, 0.25);
    }

    #[test]
    fn parse_error_side() {
        let ok = four_cells(["", "", "", ""]);
        assert_eq!(teds("<table>", &ok, false).unwrap_err().side, Side::Pred);
        assert_eq!(teds(&ok, "<tr>", false).unwrap_err().side, Side::Gt);
    }

    #[test]
    fn rounding() {
        assert_eq!(round4(0.96844), 0.9684);
        assert_eq!(round4(0.96846), 0.9685);
        assert_eq!(round4(0.5), 0.5);
        assert_eq!(round4(1.0), 1.0);
        assert_eq!(round4(0.0), 0.0);
    }
}
