//! Minimal raster charts. No axes text; values live in the companion CSVs.

use image::{Rgb, RgbImage};

const BG: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([0, 0, 0]);
const PALETTE: [[u8; 3]; 4] = [[31, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40]];
const PAD: u32 = 10;

fn fill(img: &mut RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, c: Rgb<u8>) {
    for y in y0..y1.min(img.height()) {
        for x in x0..x1.min(img.width()) {
            img.put_pixel(x, y, c);
        }
    }
}

fn frame(width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, BG);
    fill(&mut img, PAD, height - PAD, width - PAD, height - PAD + 1, AXIS);
    fill(&mut img, PAD, PAD, PAD + 1, height - PAD, AXIS);
    img
}

/// Bar height in pixels for `v` on a `[0, max]` scale.
fn scaled(v: f64, max: f64, span: u32) -> u32 {
    if max <= 0.0 || !v.is_finite() {
        return 0;
    }
    ((v / max).clamp(0.0, 1.0) * f64::from(span)).round() as u32
}

/// Histogram of `counts`, one column per bin.
pub fn histogram(counts: &[u64], width: u32, height: u32) -> RgbImage {
    assert!(width > 3 * PAD && height > 3 * PAD, "plot too small");
    let mut img = frame(width, height);
    if counts.is_empty() {
        return img;
    }
    let span_w = width - 2 * PAD - 1;
    let span_h = height - 3 * PAD;
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    let base = height - PAD;
    for (i, &c) in counts.iter().enumerate() {
        let x0 = PAD + 1 + (i as u64 * u64::from(span_w) / counts.len() as u64) as u32;
        let x1 = PAD + 1 + ((i as u64 + 1) * u64::from(span_w) / counts.len() as u64) as u32;
        let h = scaled(c as f64, max, span_h);
        fill(&mut img, x0, base - h, x1.max(x0 + 1), base, Rgb(PALETTE[0]));
    }
    img
}

/// Bars with symmetric error whiskers; `bars` holds (value, error) pairs
/// on a `[0, max]` scale.
pub fn bars_with_errors(bars: &[(f64, Option<f64>)], max: f64, width: u32, height: u32) -> RgbImage {
    assert!(width > 3 * PAD && height > 3 * PAD, "plot too small");
    let mut img = frame(width, height);
    if bars.is_empty() {
        return img;
    }
    let span_w = width - 2 * PAD - 1;
    let span_h = height - 3 * PAD;
    let base = height - PAD;
    let slot = span_w / bars.len() as u32;
    for (i, &(v, err)) in bars.iter().enumerate() {
        let x0 = PAD + 1 + i as u32 * slot + slot / 4;
        let x1 = PAD + 1 + i as u32 * slot + 3 * slot / 4;
        let h = scaled(v, max, span_h);
        fill(&mut img, x0, base - h, x1.max(x0 + 1), base, Rgb(PALETTE[i % PALETTE.len()]));
        if let Some(e) = err {
            let lo = base - scaled(v - e, max, span_h);
            let hi = base - scaled(v + e, max, span_h);
            let xm = (x0 + x1) / 2;
            fill(&mut img, xm, hi, xm + 1, lo + 1, AXIS);
            fill(&mut img, xm.saturating_sub(3), hi, xm + 4, hi + 1, AXIS);
            fill(&mut img, xm.saturating_sub(3), lo, xm + 4, lo + 1, AXIS);
        }
    }
    img
}
