//! Axis-aligned rectangle arithmetic.
//!
//! Boxes come in two coordinate forms: normalized `[x, y, w, h]` fractions of
//! the image size (what the structure model regresses) and pixel
//! `[x0, y0, x1, y1]` corners (what the annotations and the text-line detector
//! use). Binary operations require both operands in the same form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the upper bound of a normalized box.
pub const NORMALIZED_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("boxes are in different coordinate forms ({0:?} vs {1:?})")]
    MixedCoordinateForms(BoxForm, BoxForm),
    #[error("image size must be positive in both dimensions, got {0}x{1}")]
    DegenerateImageSize(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxForm {
    Normalized,
    Pixel,
}

/// A rectangle in one of the two supported coordinate forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BBox {
    Normalized { x: f64, y: f64, w: f64, h: f64 },
    Pixel { x0: f64, y0: f64, x1: f64, y1: f64 },
}

/// Image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: f64,
    pub height: f64,
}

impl ImageSize {
    pub fn new(width: f64, height: f64) -> Result<Self, GeometryError> {
        if width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite() {
            Ok(Self { width, height })
        } else {
            Err(GeometryError::DegenerateImageSize(width, height))
        }
    }
}

impl BBox {
    pub fn pixel(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox::Pixel { x0, y0, x1, y1 }
    }

    pub fn normalized(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox::Normalized { x, y, w, h }
    }

    pub fn form(&self) -> BoxForm {
        match self {
            BBox::Normalized { .. } => BoxForm::Normalized,
            BBox::Pixel { .. } => BoxForm::Pixel,
        }
    }

    /// Corner coordinates `(x0, y0, x1, y1)` in the box's own units.
    pub fn edges(&self) -> (f64, f64, f64, f64) {
        match *self {
            BBox::Normalized { x, y, w, h } => (x, y, x + w, y + h),
            BBox::Pixel { x0, y0, x1, y1 } => (x0, y0, x1, y1),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        let (x0, y0, x1, y1) = self.edges();
        ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }

    pub fn area(&self) -> f64 {
        let (x0, y0, x1, y1) = self.edges();
        (x1 - x0).max(0.0) * (y1 - y0).max(0.0)
    }

    /// Checks the form-specific invariants (ordered corners, unit-interval
    /// bounds for normalized boxes).
    pub fn is_valid(&self) -> bool {
        match *self {
            BBox::Normalized { x, y, w, h } => {
                [x, y, w, h].iter().all(|v| v.is_finite())
                    && w >= 0.0
                    && h >= 0.0
                    && x >= 0.0
                    && y >= 0.0
                    && x + w <= 1.0 + NORMALIZED_EPS
                    && y + h <= 1.0 + NORMALIZED_EPS
            }
            BBox::Pixel { x0, y0, x1, y1 } => [x0, y0, x1, y1].iter().all(|v| v.is_finite()) && x1 >= x0 && y1 >= y0,
        }
    }

    /// Returns the same box shifted by `(dx, dy)` in its own units.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        match *self {
            BBox::Normalized { x, y, w, h } => BBox::Normalized {
                x: x + dx,
                y: y + dy,
                w,
                h,
            },
            BBox::Pixel { x0, y0, x1, y1 } => BBox::Pixel {
                x0: x0 + dx,
                y0: y0 + dy,
                x1: x1 + dx,
                y1: y1 + dy,
            },
        }
    }

    /// Smallest box covering both inputs.
    pub fn union(&self, other: &BBox) -> Result<BBox, GeometryError> {
        same_form(self, other)?;
        let (a0, b0, a1, b1) = self.edges();
        let (c0, d0, c1, d1) = other.edges();
        let (x0, y0, x1, y1) = (a0.min(c0), b0.min(d0), a1.max(c1), b1.max(d1));
        Ok(match self.form() {
            BoxForm::Pixel => BBox::Pixel { x0, y0, x1, y1 },
            BoxForm::Normalized => BBox::Normalized {
                x: x0,
                y: y0,
                w: x1 - x0,
                h: y1 - y0,
            },
        })
    }

    /// Converts between pixel corners and normalized `[x, y, w, h]`.
    pub fn convert(&self, size: ImageSize, target: BoxForm) -> Result<BBox, GeometryError> {
        let size = ImageSize::new(size.width, size.height)?;
        Ok(match (*self, target) {
            (b @ BBox::Pixel { .. }, BoxForm::Pixel) | (b @ BBox::Normalized { .. }, BoxForm::Normalized) => b,
            (BBox::Pixel { x0, y0, x1, y1 }, BoxForm::Normalized) => BBox::Normalized {
                x: x0 / size.width,
                y: y0 / size.height,
                w: (x1 - x0) / size.width,
                h: (y1 - y0) / size.height,
            },
            (BBox::Normalized { x, y, w, h }, BoxForm::Pixel) => BBox::Pixel {
                x0: x * size.width,
                y0: y * size.height,
                x1: (x + w) * size.width,
                y1: (y + h) * size.height,
            },
        })
    }

    /// `[x, y, w, h]` for normalized boxes, `[x0, y0, x1, y1]` for pixel boxes.
    pub fn to_array(&self) -> [f64; 4] {
        match *self {
            BBox::Normalized { x, y, w, h } => [x, y, w, h],
            BBox::Pixel { x0, y0, x1, y1 } => [x0, y0, x1, y1],
        }
    }
}

fn same_form(a: &BBox, b: &BBox) -> Result<(), GeometryError> {
    if a.form() == b.form() {
        Ok(())
    } else {
        Err(GeometryError::MixedCoordinateForms(a.form(), b.form()))
    }
}

/// Intersection over union. Zero for disjoint or zero-area boxes.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64, GeometryError> {
    same_form(a, b)?;
    let (ax0, ay0, ax1, ay1) = a.edges();
    let (bx0, by0, bx1, by1) = b.edges();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return Ok(0.0);
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Whether the center of `line` falls inside `cell`. Boundary points count as
/// inside.
pub fn contains_center(cell: &BBox, line: &BBox) -> Result<bool, GeometryError> {
    same_form(cell, line)?;
    let (cx, cy) = line.center();
    let (x0, y0, x1, y1) = cell.edges();
    Ok(x0 <= cx && cx <= x1 && y0 <= cy && cy <= y1)
}

/// Euclidean distance between box centers.
pub fn center_distance(a: &BBox, b: &BBox) -> Result<f64, GeometryError> {
    same_form(a, b)?;
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    Ok((ax - bx).hypot(ay - by))
}
