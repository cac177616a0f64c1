use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Layout, SynthError, SynthParams};
use crate::dataset::model_output::{PredictedStructure, TextLineRecord};
use crate::dataset::{AnnotationRecord, ModelOutputRecord};
use crate::geometry::{BBox, BoxForm, ImageSize};
use crate::structure::{encode_tokens, EmptyFormTable, EncodeOptions};

/// A simulated model output plus, for each text line, the ordinal of the
/// cell it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub output: ModelOutputRecord,
    pub truth: Vec<usize>,
}

/// Standard normal draw restricted to [-2, 2]. The number of draws does not
/// depend on any noise parameter, so runs that differ only in `sigma` see
/// the same underlying randomness.
fn truncated_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= 2.0 {
            return z;
        }
    }
}

/// Moves a box by whole translation so it lies inside the image. Boxes
/// larger than the image are pinned to the top-left corner.
fn clamp_into(b: BBox, size: ImageSize) -> BBox {
    let (x0, y0, x1, y1) = b.edges();
    let shift = |lo: f64, hi: f64, max: f64| {
        if lo < 0.0 {
            -lo
        } else if hi > max {
            (max - hi).max(-lo)
        } else {
            0.0
        }
    };
    b.translated(shift(x0, x1, size.width), shift(y0, y1, size.height))
}

fn jitter(rng: &mut ChaCha8Rng, b: BBox, sigma: f64, size: ImageSize) -> BBox {
    let dx = sigma * truncated_normal(rng);
    let dy = sigma * truncated_normal(rng);
    if dx == 0.0 && dy == 0.0 {
        return b;
    }
    clamp_into(b.translated(dx, dy), size)
}

pub fn simulate_outputs_with_truth(
    record: &AnnotationRecord,
    layout: &Layout,
    params: &SynthParams,
    forms: &EmptyFormTable,
) -> Result<Simulated, SynthError> {
    params.validate()?;
    let size = layout.image_size;
    let enc = EncodeOptions {
        max_len: usize::MAX,
        unknown_empty_as_form0: false,
    };
    let (tokens, anchors, _) = encode_tokens(record, forms, &enc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(1);

    let mut boxes = Vec::with_capacity(anchors.len());
    for a in &anchors {
        let content = layout.cells.get(a.cell_ordinal).and_then(|c| c.content);
        // draw for every anchor so the stream does not depend on emptiness
        let moved = jitter(
            &mut rng,
            content.unwrap_or(BBox::pixel(0.0, 0.0, 0.0, 0.0)),
            params.jitter_sigma,
            size,
        );
        boxes.push(match content {
            Some(_) => Some(moved.convert(size, BoxForm::Normalized)?.to_array()),
            None => None,
        });
    }

    let mut lines = Vec::new();
    for cell in &layout.cells {
        for l in &cell.lines {
            let moved = jitter(&mut rng, l.bbox, params.jitter_sigma, size);
            let u: f64 = rng.random();
            if u >= params.drop_prob {
                lines.push((
                    TextLineRecord {
                        bbox: moved.to_array(),
                        content: l.content.clone(),
                    },
                    cell.ordinal,
                ));
            }
        }
    }
    lines.shuffle(&mut rng);
    let (text_lines, truth) = lines.into_iter().unzip();

    Ok(Simulated {
        output: ModelOutputRecord {
            filename: record.filename.clone(),
            structure: PredictedStructure {
                tokens: tokens.iter().map(|t| t.symbol()).collect(),
                boxes,
            },
            text_lines,
            image_size: Some([size.width, size.height]),
        },
        truth,
    })
}

/// Model outputs for a generated table: true structure, jittered boxes,
/// and text lines each dropped with `drop_prob`, in shuffled order.
pub fn simulate_outputs(
    record: &AnnotationRecord,
    layout: &Layout,
    params: &SynthParams,
    forms: &EmptyFormTable,
) -> Result<ModelOutputRecord, SynthError> {
    Ok(simulate_outputs_with_truth(record, layout, params, forms)?.output)
}
