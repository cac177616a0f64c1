//! Property tests over the public API.

use std::collections::BTreeSet;

use proptest::prelude::*;

use tabrec_core::assemble::{assemble_tree, format_correct_thead, AssembleOptions};
use tabrec_core::assignment::oracle::assign_oracle;
use tabrec_core::assignment::{anchors_to_pixel, assign, AssignConfig, TextLine};
use tabrec_core::dataset::{dataset_stats, record_to_html, StatsAccumulator, StatsOptions};
use tabrec_core::geometry::BBox;
use tabrec_core::structure::{
    build_vocabulary, decode_to_skeleton, encode_annotation, CellAnchor, CellKind, EmptyFormTable, EncodeOptions, Token,
};
use tabrec_core::synth::{generate_table, simulate_outputs_with_truth, SynthParams};
use tabrec_core::table::{parse_table_html, to_html, TableTree};
use tabrec_core::teds::{evaluate_maps, teds_trees, HtmlMap};

fn content() -> impl Strategy<Value = String> {
    prop_oneof![Just(String::new()), "[a-c]{1,4}", "[0-9.]{1,5}"]
}

fn cell() -> impl Strategy<Value = TableTree> {
    (content(), 1u8..=3, 1u8..=2).prop_map(|(c, cs, rs)| TableTree::span_cell(c, cs, rs))
}

fn rows(max: usize) -> impl Strategy<Value = Vec<TableTree>> {
    prop::collection::vec(prop::collection::vec(cell(), 0..4).prop_map(TableTree::row), 0..max)
}

fn table() -> impl Strategy<Value = TableTree> {
    (rows(2), rows(4)).prop_map(|(h, b)| TableTree::table(h, b))
}

/// Positions of every td as (section, row, cell) indices.
fn td_paths(t: &TableTree) -> Vec<(usize, usize, usize)> {
    let mut out = vec![];
    for (s, sec) in t.children.iter().enumerate() {
        for (r, row) in sec.children.iter().enumerate() {
            for c in 0..row.children.len() {
                out.push((s, r, c));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn teds_identity_symmetry_range(a in table(), b in table(), struct_only in any::<bool>()) {
        prop_assert_eq!(teds_trees(&a, &a, struct_only).score, 1.0);
        let ab = teds_trees(&a, &b, struct_only);
        let ba = teds_trees(&b, &a, struct_only);
        prop_assert!((ab.score - ba.score).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.score));
        prop_assert!(ab.edit_distance >= 0.0);
        prop_assert!(teds_trees(&a, &b, true).score >= teds_trees(&a, &b, false).score - 1e-12);
    }

    #[test]
    // Deleting from an arbitrary prediction can raise its score (an extra
    // cell is removed); damage is measured against a perfect prediction.
    fn self_damage_costs_exactly_the_deleted_cells(gt in table(), k in 0usize..4) {
        let paths = td_paths(&gt);
        let k = k.min(paths.len());
        let mut damaged = gt.clone();
        // remove from the back so earlier indices stay valid
        for &(s, r, c) in paths.iter().rev().take(k) {
            damaged.children[s].children[r].children.remove(c);
        }
        let rep = teds_trees(&damaged, &gt, false);
        prop_assert_eq!(rep.edit_distance, k as f64);
        prop_assert_eq!(rep.score, 1.0 - k as f64 / gt.node_count() as f64);
    }

    #[test]
    fn format_correction_is_idempotent(t in table()) {
        let once = format_correct_thead(t.clone());
        prop_assert_eq!(format_correct_thead(once.clone()), once.clone());
        prop_assert!(parse_table_html(&to_html(&once)).is_ok());
        // body cells are untouched
        prop_assert_eq!(once.body(), t.body());
    }

    #[test]
    fn vocabulary_ids_round_trip(id in 0usize..43) {
        let v = build_vocabulary();
        let sym = v.symbol(id).unwrap().to_string();
        prop_assert_eq!(v.id(&sym), Some(id));
        prop_assert_eq!(Token::from_id(id).unwrap().id(), id);
        prop_assert_eq!(v.token(&sym).map(Token::id), Some(id));
    }
}

fn grid_box() -> impl Strategy<Value = BBox> {
    (0u8..60, 0u8..60, 0u8..25, 0u8..15)
        .prop_map(|(x, y, w, h)| BBox::pixel(x as f64, y as f64, (x + w) as f64, (y + h) as f64))
}

fn anchors() -> impl Strategy<Value = Vec<CellAnchor>> {
    prop::collection::vec((prop::option::weighted(0.9, grid_box()), 0u8..10), 0..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (bbox, k))| CellAnchor {
                seq_index: i,
                kind: if k == 0 {
                    CellKind::EmptyForm(1)
                } else {
                    CellKind::NonEmpty
                },
                bbox,
                cell_ordinal: i,
            })
            .collect()
    })
}

fn lines() -> impl Strategy<Value = Vec<TextLine>> {
    prop::collection::vec(grid_box(), 0..30).prop_map(|boxes| {
        boxes
            .into_iter()
            .enumerate()
            .map(|(i, b)| TextLine::new((i as u64) * 7 + 3, b, format!("w{i}")))
            .collect()
    })
}

fn config() -> impl Strategy<Value = AssignConfig> {
    (prop_oneof![Just(0.0), Just(0.2)], any::<bool>()).prop_map(|(iou_floor, distance_enabled)| AssignConfig {
        iou_floor,
        distance_enabled,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn assignment_partitions_lines(cells in anchors(), lines in lines(), cfg in config()) {
        let a = assign(&cells, &lines, &cfg).unwrap();
        let mut seen: Vec<u64> = a.cells.values().flatten().map(|&(id, _)| id).chain(a.unassigned.iter().copied()).collect();
        seen.sort_unstable();
        let mut want: Vec<u64> = lines.iter().map(|l| l.id).collect();
        want.sort_unstable();
        prop_assert_eq!(seen, want);
        for (&ord, ls) in &a.cells {
            prop_assert!(cells[ord].accepts_text() && cells[ord].bbox.is_some());
            // reading order within the cell
            let centers: Vec<(f64, f64, u64)> = ls
                .iter()
                .map(|(id, _)| {
                    let l = lines.iter().find(|l| l.id == *id).unwrap();
                    let (x, y) = l.bbox.center();
                    (y, x, *id)
                })
                .collect();
            prop_assert!(centers.windows(2).all(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater)));
        }
        prop_assert_eq!(a, assign_oracle(&cells, &lines, &cfg).unwrap());
    }

    #[test]
    fn duplicate_ids_are_rejected(cells in anchors(), b in grid_box()) {
        let lines = vec![TextLine::new(5, b, "a"), TextLine::new(5, b, "b")];
        prop_assert!(assign(&cells, &lines, &AssignConfig::default()).is_err());
    }
}

fn synth_params() -> impl Strategy<Value = SynthParams> {
    (any::<u64>(), 0.0..0.4f64, 0.0..0.4f64, 0.0..0.6f64, 1u8..=5).prop_map(|(seed, span, empty, multi, max_span)| {
        SynthParams {
            seed,
            span_prob: span,
            empty_prob: empty,
            multiline_prob: multi,
            max_span,
            ..Default::default()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_tables_round_trip(p in synth_params()) {
        let forms = EmptyFormTable::default();
        let (record, layout) = generate_table(&p, &forms).unwrap();
        prop_assert_eq!(generate_table(&p, &forms).unwrap(), (record.clone(), layout.clone()));

        // every line lies inside its cell in the noiseless layout
        for c in &layout.cells {
            let (x0, y0, x1, y1) = c.region.edges();
            for l in &c.lines {
                let (a, b, cc, d) = l.bbox.edges();
                prop_assert!(a >= x0 && b >= y0 && cc <= x1 && d <= y1);
            }
        }

        let size = record.image_size().unwrap();
        let enc = encode_annotation(&record, size, &forms, &EncodeOptions { max_len: usize::MAX, ..Default::default() }).unwrap();
        let (skeleton, anchors) = decode_to_skeleton(&enc.sequence).unwrap();
        let gt = parse_table_html(&record_to_html(&record).unwrap()).unwrap();
        prop_assert_eq!(&skeleton, &gt.skeleton());
        prop_assert_eq!(gt.cells().len(), record.cells().len());

        // noisy outputs still assemble into a valid tree holding every
        // assigned line's text exactly once
        let noisy = SynthParams { jitter_sigma: 6.0, drop_prob: 0.3, ..p };
        let sim = simulate_outputs_with_truth(&record, &layout, &noisy, &forms).unwrap();
        let seq = sim.output.sequence(&build_vocabulary(), usize::MAX).unwrap();
        let (skeleton, anchors2) = decode_to_skeleton(&seq).unwrap();
        prop_assert_eq!(anchors.len(), anchors2.len());
        let anchors2 = anchors_to_pixel(&anchors2, size).unwrap();
        let lines = sim.output.text_lines();
        let a = assign(&anchors2, &lines, &AssignConfig::default()).unwrap();
        let opts = AssembleOptions { format_correction: false, forms: forms.clone() };
        let tree = assemble_tree(&skeleton, &anchors2, &a, &lines, &opts).unwrap();
        prop_assert!(tree.is_well_formed());
        let tds = tree.cells();
        for (id, ord) in a.cell_of() {
            let text = &lines[id as usize].content;
            prop_assert!(tds[ord].content.contains(text.as_str()));
        }
    }
}

#[test]
fn stats_merge_in_any_order() {
    let forms = EmptyFormTable::default();
    let opts = StatsOptions::default();
    let records: Vec<_> = (0..60)
        .map(|seed| {
            let p = SynthParams {
                seed,
                empty_prob: 0.3,
                ..Default::default()
            };
            generate_table(&p, &forms).unwrap().0
        })
        .collect();
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect();
    let (whole, skipped) = dataset_stats(text.as_bytes(), &forms, &opts);
    assert_eq!(skipped, 0);

    let shard = |rs: &[tabrec_core::dataset::AnnotationRecord]| {
        let mut acc = StatsAccumulator::default();
        for r in rs {
            acc.add(r, &forms, &opts);
        }
        acc
    };
    let (a, b, c) = (shard(&records[..7]), shard(&records[7..31]), shard(&records[31..]));
    let mut forward = a.clone();
    forward.merge(&b);
    forward.merge(&c);
    let mut backward = c.clone();
    backward.merge(&a);
    backward.merge(&b);
    assert_eq!(forward.report(&opts), whole.report(&opts));
    assert_eq!(backward.report(&opts), whole.report(&opts));
}

#[test]
fn batch_scores_do_not_depend_on_jobs() {
    let forms = EmptyFormTable::default();
    let mut gt = HtmlMap::new();
    let mut pred = HtmlMap::new();
    for seed in 0..100 {
        let (r, _) = generate_table(
            &SynthParams {
                seed,
                ..Default::default()
            },
            &forms,
        )
        .unwrap();
        let (other, _) = generate_table(
            &SynthParams {
                seed: seed + 1000,
                ..Default::default()
            },
            &forms,
        )
        .unwrap();
        gt.insert(r.filename.clone(), Ok(record_to_html(&r).unwrap()));
        if seed % 7 != 0 {
            pred.insert(r.filename.clone(), Ok(record_to_html(&other).unwrap()));
        }
    }
    let one = evaluate_maps(&pred, &gt, false, 1).unwrap();
    let names: BTreeSet<_> = one.per_sample.iter().map(|s| s.filename.clone()).collect();
    assert_eq!(names.len(), 100);
    assert!(one.per_sample.windows(2).all(|w| w[0].filename < w[1].filename));
    for jobs in [2, 3, 8] {
        let many = evaluate_maps(&pred, &gt, false, jobs).unwrap();
        assert_eq!(many, one);
        assert_eq!(many.mean.to_bits(), one.mean.to_bits());
    }
    // the mean counts missing predictions as zeros
    let sum: f64 = one.per_sample.iter().map(|s| s.score).sum();
    assert_eq!(one.mean, sum / 100.0);
}
