//! More jitter moves matches away from the center rule.

use tabrec_core::pipeline::PipelineConfig;
use tabrec_core::synth::{degradation_sweep, SweepGrid, SynthParams};

#[test]
fn jitter_shifts_rule_shares() {
    let grid = SweepGrid {
        jitter: vec![0.0, 3.0, 6.0, 12.0],
        drop: vec![0.0],
        seeds: 500,
    };
    let rows = degradation_sweep(
        &SynthParams::default(),
        &grid,
        &Default::default(),
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(rows[0].center_share, 1.0);
    for w in rows.windows(2) {
        assert!(w[1].center_share < w[0].center_share, "{rows:#?}");
        let fallback = |r: &tabrec_core::synth::SweepRow| r.iou_share + r.distance_share;
        assert!(fallback(&w[1]) > fallback(&w[0]), "{rows:#?}");
    }
    for r in &rows {
        let total = r.center_share + r.iou_share + r.distance_share + r.unassigned_share;
        assert!((total - 1.0).abs() < 1e-12);
    }
}
