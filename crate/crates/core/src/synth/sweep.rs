use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_table, simulate_outputs, SynthError, SynthParams};
use crate::assignment::Rule;
use crate::dataset::record_to_html;
use crate::pipeline::{run_record, PipelineConfig};
use crate::structure::EmptyFormTable;
use crate::table::parse_table_html;
use crate::teds::teds_trees;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub jitter: Vec<f64>,
    pub drop: Vec<f64>,
    /// Samples per grid point, with seeds `base.seed .. base.seed + seeds`.
    pub seeds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub jitter_sigma: f64,
    pub drop_prob: f64,
    pub samples: u64,
    pub mean_teds: f64,
    /// Fractions of emitted text lines matched by each rule, or unmatched.
    pub center_share: f64,
    pub iou_share: f64,
    pub distance_share: f64,
    pub unassigned_share: f64,
}

#[derive(Default, Clone, Copy)]
struct Sample {
    teds: f64,
    center: usize,
    iou: usize,
    distance: usize,
    unassigned: usize,
}

fn run_seed(
    base: &SynthParams,
    grid: &SweepGrid,
    seed: u64,
    forms: &EmptyFormTable,
    cfg: &PipelineConfig,
) -> Result<Vec<Sample>, SynthError> {
    let p = SynthParams { seed, ..base.clone() };
    let (record, layout) = generate_table(&p, forms)?;
    let gt = parse_table_html(&record_to_html(&record)?).expect("generated tables serialize canonically");
    let mut out = Vec::with_capacity(grid.jitter.len() * grid.drop.len());
    for &jitter_sigma in &grid.jitter {
        for &drop_prob in &grid.drop {
            let q = SynthParams {
                jitter_sigma,
                drop_prob,
                ..p.clone()
            };
            let sim = simulate_outputs(&record, &layout, &q, forms)?;
            let res = run_record(&sim, None, cfg)?;
            let pred = parse_table_html(&res.html).expect("assembled tables serialize canonically");
            let counts = res.assignment.rule_counts();
            let n = |r| counts.get(&r).copied().unwrap_or(0);
            out.push(Sample {
                teds: teds_trees(&pred, &gt, false).score,
                center: n(Rule::Center),
                iou: n(Rule::Iou),
                distance: n(Rule::Distance),
                unassigned: res.assignment.unassigned.len(),
            });
        }
    }
    Ok(out)
}

/// Runs the full pipeline on `grid.seeds` generated tables at every
/// (jitter, drop) point. Rows are ordered by jitter, then drop. Each seed's
/// table is shared by all grid points. Runs on the current rayon pool; the
/// result does not depend on its size.
pub fn degradation_sweep(
    base: &SynthParams,
    grid: &SweepGrid,
    forms: &EmptyFormTable,
    cfg: &PipelineConfig,
) -> Result<Vec<SweepRow>, SynthError> {
    for &j in &grid.jitter {
        SynthParams {
            jitter_sigma: j,
            ..base.clone()
        }
        .validate()?;
    }
    for &d in &grid.drop {
        SynthParams {
            drop_prob: d,
            ..base.clone()
        }
        .validate()?;
    }
    let per_seed: Vec<Vec<Sample>> = (0..grid.seeds)
        .into_par_iter()
        .map(|i| run_seed(base, grid, base.seed.wrapping_add(i), forms, cfg))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut k = 0;
    for &jitter_sigma in &grid.jitter {
        for &drop_prob in &grid.drop {
            let mut sum = Sample::default();
            for s in per_seed.iter().map(|v| v[k]) {
                sum.teds += s.teds;
                sum.center += s.center;
                sum.iou += s.iou;
                sum.distance += s.distance;
                sum.unassigned += s.unassigned;
            }
            let lines = (sum.center + sum.iou + sum.distance + sum.unassigned).max(1) as f64;
            rows.push(SweepRow {
                jitter_sigma,
                drop_prob,
                samples: grid.seeds,
                mean_teds: if grid.seeds == 0 {
                    0.0
                } else {
                    sum.teds / grid.seeds as f64
                },
                center_share: sum.center as f64 / lines,
                iou_share: sum.iou as f64 / lines,
                distance_share: sum.distance as f64 / lines,
                unassigned_share: sum.unassigned as f64 / lines,
            });
            k += 1;
        }
    }
    Ok(rows)
}

/// Tab-separated table with a header line.
pub fn write_tsv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "jitter_sigma\tdrop_prob\tsamples\tmean_teds\tcenter_share\tiou_share\tdistance_share\tunassigned_share"
    )?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            r.jitter_sigma,
            r.drop_prob,
            r.samples,
            r.mean_teds,
            r.center_share,
            r.iou_share,
            r.distance_share,
            r.unassigned_share
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_point() {
        let grid = SweepGrid {
            jitter: vec![0.0],
            drop: vec![0.0],
            seeds: 20,
        };
        let rows = degradation_sweep(&SynthParams::default(), &grid, &Default::default(), &Default::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_teds, 1.0);
        assert_eq!(rows[0].center_share, 1.0);
    }

    #[test]
    fn shape_and_tsv() {
        let grid = SweepGrid {
            jitter: vec![0.0, 4.0],
            drop: vec![0.0, 0.3, 0.6],
            seeds: 5,
        };
        let rows = degradation_sweep(&SynthParams::default(), &grid, &Default::default(), &Default::default()).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[4].jitter_sigma, rows[4].drop_prob), (4.0, 0.3));
        let mut buf = Vec::new();
        write_tsv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
    }

    #[test]
    fn independent_of_thread_count() {
        let grid = SweepGrid {
            jitter: vec![2.0],
            drop: vec![0.2],
            seeds: 16,
        };
        let go = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| degradation_sweep(&SynthParams::default(), &grid, &Default::default(), &Default::default()))
                .unwrap()
        };
        assert_eq!(go(1), go(4));
    }
}
