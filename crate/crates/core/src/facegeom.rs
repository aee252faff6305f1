//! Crop geometry around detected faces.
//!
//! The crop is the union of all face boxes, grown on each side by `margin`
//! times the union's own width (left/right) or height (top), extended down
//! to the bottom of the image, rounded outward, and clamped.

use thiserror::Error;

use crate::model::{CropRect, FaceBox, ImageDims};

pub const DEFAULT_MARGIN: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaceGeomError {
    #[error("no faces to crop around")]
    NoFaces,
    #[error("margin {0} must be finite and non-negative")]
    InvalidMargin(f64),
    #[error("faces lie entirely outside the {width}x{height} image")]
    OutsideImage { width: u32, height: u32 },
}

/// Axis-aligned `(x, y, w, h)` rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }
}

/// Smallest rectangle containing every face box.
pub fn union_box(faces: &[FaceBox]) -> Result<Rect, FaceGeomError> {
    let first = faces.first().ok_or(FaceGeomError::NoFaces)?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.right(), first.bottom());
    for f in &faces[1..] {
        x0 = x0.min(f.x);
        y0 = y0.min(f.y);
        x1 = x1.max(f.right());
        y1 = y1.max(f.bottom());
    }
    Ok(Rect {
        x: x0,
        y: y0,
        w: x1 - x0,
        h: y1 - y0,
    })
}

// Products like 0.1 * 30 land a hair above the integer; snap those so
// outward rounding does not add a spurious pixel.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

pub fn face_crop_rect(faces: &[FaceBox], dims: ImageDims, margin: f64) -> Result<CropRect, FaceGeomError> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(FaceGeomError::InvalidMargin(margin));
    }
    let u = union_box(faces)?;
    let grow_x = snap(margin * f64::from(u.w));
    let grow_y = snap(margin * f64::from(u.h));

    let clamp_x = |v: f64| v.clamp(0.0, f64::from(dims.width)) as u32;
    let x0 = clamp_x(snap(f64::from(u.x) - grow_x).floor());
    let x1 = clamp_x(snap(f64::from(u.right()) + grow_x).ceil());
    let y0 = snap(f64::from(u.y) - grow_y).floor().clamp(0.0, f64::from(dims.height)) as u32;
    let y1 = dims.height;

    if x0 >= x1 || y0 >= y1 {
        return Err(FaceGeomError::OutsideImage {
            width: dims.width,
            height: dims.height,
        });
    }
    Ok(CropRect { x0, y0, x1, y1 })
}

/// Crop for a frame selected without regard to faces: face crop when faces
/// were found, otherwise the full frame.
pub fn crop_or_full(faces: &[FaceBox], dims: ImageDims, margin: f64) -> Result<CropRect, FaceGeomError> {
    if faces.is_empty() {
        return Ok(CropRect::full(dims));
    }
    face_crop_rect(faces, dims, margin)
}
