//! Reference implementation of [`assign`](super::assign): plain scans over all
//! cells for every line, and a stage 3 that re-searches the globally closest
//! remaining pair after every pull. Quadratic-to-cubic; meant for checking
//! the indexed implementation on small instances.

use std::collections::BTreeMap;

use super::{check_inputs, AssignConfig, AssignError, Assignment, Rule, TextLine};
use crate::geometry::{center_distance, contains_center, iou};
use crate::structure::CellAnchor;

pub fn assign_oracle(cells: &[CellAnchor], lines: &[TextLine], cfg: &AssignConfig) -> Result<Assignment, AssignError> {
    let mut cand = Vec::new();
    for a in cells {
        if a.accepts_text() {
            if let Some(b) = a.bbox {
                cand.push((a.cell_ordinal, b));
            }
        }
    }
    check_inputs(&cand, lines)?;

    let mut cell_of: Vec<Option<usize>> = vec![None; lines.len()];
    let mut rule_of: Vec<Option<Rule>> = vec![None; lines.len()];

    if !cand.is_empty() {
        // center rule
        for li in 0..lines.len() {
            let mut chosen: Option<usize> = None;
            let mut chosen_d = 0.0;
            for &(ord, b) in &cand {
                if contains_center(&b, &lines[li].bbox)? {
                    let d = center_distance(&b, &lines[li].bbox)?;
                    if chosen.is_none() || d < chosen_d || (d == chosen_d && ord < chosen.unwrap()) {
                        chosen = Some(ord);
                        chosen_d = d;
                    }
                }
            }
            if chosen.is_some() {
                cell_of[li] = chosen;
                rule_of[li] = Some(Rule::Center);
            }
        }

        // iou rule
        for li in 0..lines.len() {
            if cell_of[li].is_some() {
                continue;
            }
            let mut chosen: Option<usize> = None;
            let mut chosen_v = 0.0;
            for &(ord, b) in &cand {
                let v = iou(&b, &lines[li].bbox)?;
                if v > cfg.iou_floor && (chosen.is_none() || v > chosen_v || (v == chosen_v && ord < chosen.unwrap())) {
                    chosen = Some(ord);
                    chosen_v = v;
                }
            }
            if chosen.is_some() {
                cell_of[li] = chosen;
                rule_of[li] = Some(Rule::Iou);
            }
        }

        // distance rule
        if cfg.distance_enabled {
            let mut hungry: Vec<bool> = cand.iter().map(|(ord, _)| !cell_of.contains(&Some(*ord))).collect();
            loop {
                let mut best: Option<(f64, usize, u64, usize, usize)> = None;
                for (ci, &(ord, b)) in cand.iter().enumerate() {
                    if !hungry[ci] {
                        continue;
                    }
                    for li in 0..lines.len() {
                        if cell_of[li].is_some() {
                            continue;
                        }
                        let d = center_distance(&b, &lines[li].bbox)?;
                        let key = (d, ord, lines[li].id);
                        let better = match best {
                            None => true,
                            Some((bd, bo, bid, _, _)) => {
                                key.0 < bd || (key.0 == bd && (key.1 < bo || (key.1 == bo && key.2 < bid)))
                            }
                        };
                        if better {
                            best = Some((d, ord, lines[li].id, ci, li));
                        }
                    }
                }
                let Some((_, ord, _, ci, li)) = best else { break };
                cell_of[li] = Some(ord);
                rule_of[li] = Some(Rule::Distance);
                hungry[ci] = false;
                // a cell listed twice among the candidates is one cell
                for (cj, &(o, _)) in cand.iter().enumerate() {
                    if o == ord {
                        hungry[cj] = false;
                    }
                }
            }
        }
    }

    let mut out: BTreeMap<usize, Vec<(u64, Rule)>> = BTreeMap::new();
    let mut unassigned = Vec::new();
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by(|&a, &b| {
        let (ax, ay) = lines[a].bbox.center();
        let (bx, by) = lines[b].bbox.center();
        ay.total_cmp(&by)
            .then(ax.total_cmp(&bx))
            .then(lines[a].id.cmp(&lines[b].id))
    });
    for li in order {
        if let Some(c) = cell_of[li] {
            out.entry(c).or_default().push((lines[li].id, rule_of[li].unwrap()));
        }
    }
    for li in 0..lines.len() {
        if cell_of[li].is_none() {
            unassigned.push(lines[li].id);
        }
    }
    Ok(Assignment {
        cells: out,
        unassigned,
        no_cells: cand.is_empty(),
    })
}
