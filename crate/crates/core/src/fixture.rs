//! Deterministic synthetic event: a short run of frames with scene changes
//! and magenta face markers readable by `MarkerFaceDetector`.

use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atomic::write_atomic;
use crate::media::{encode_png, FrameManifest, ManifestEntry, MediaError, MANIFEST_FILE};
use crate::providers::mock::FACE_MARKER_RGB;

pub const FIXTURE_WIDTH: u32 = 96;
pub const FIXTURE_HEIGHT: u32 = 72;
pub const FIXTURE_FRAMES: usize = 60;
pub const FIXTURE_SCENES: usize = 6;

/// Face marker rectangles `(x, y, w, h)` drawn on frame `i`. Every fifth
/// frame has none.
pub fn fixture_faces(i: usize) -> Vec<(u32, u32, u32, u32)> {
    if i % 5 == 4 {
        return Vec::new();
    }
    let count = 1 + i % 3;
    (0..count)
        .map(|k| {
            let x = 8 + ((i * 7 + k * 29) % 70) as u32;
            let y = 6 + ((i * 3 + k * 11) % 40) as u32;
            (x, y, 10, 12)
        })
        .collect()
}

/// Renders frame `i`: a scene-colored gradient with seeded noise, plus
/// face markers. Noise never produces the marker color.
pub fn render_frame(i: usize, frames: usize, seed: u64) -> RgbImage {
    let scene = i * FIXTURE_SCENES / frames.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let base = [
        (40 + scene * 35) as u8,
        (200 - scene * 25) as u8,
        (60 + (scene * 53) % 150) as u8,
    ];
    let mut img = RgbImage::from_fn(FIXTURE_WIDTH, FIXTURE_HEIGHT, |x, y| {
        let g = ((x + y) / 4) as u8;
        Rgb([
            base[0].saturating_add(g).min(240),
            base[1].saturating_add(g / 2),
            base[2].saturating_add(g / 3),
        ])
    });
    for p in img.pixels_mut() {
        let n: u8 = rng.random_range(0..8);
        p.0[1] = p.0[1].saturating_add(n).max(16);
    }
    for (x, y, w, h) in fixture_faces(i) {
        for yy in y..(y + h).min(FIXTURE_HEIGHT) {
            for xx in x..(x + w).min(FIXTURE_WIDTH) {
                img.put_pixel(xx, yy, Rgb(FACE_MARKER_RGB));
            }
        }
    }
    img
}

/// Writes `frames` PNGs and a `frames.json` manifest sampled at 1 fps into
/// `dir`.
pub fn write_fixture(dir: &Path, frames: usize, seed: u64) -> Result<FrameManifest, MediaError> {
    fs::create_dir_all(dir).map_err(|source| MediaError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::with_capacity(frames);
    for i in 0..frames {
        let name = format!("frame_{:06}.png", i + 1);
        let path = dir.join(&name);
        let png = encode_png(&render_frame(i, frames, seed))?;
        write_atomic(&path, &png).map_err(|source| MediaError::Io { path, source })?;
        entries.push(ManifestEntry {
            frame_id: i as u64,
            timestamp_s: i as f64,
            path: name,
        });
    }
    let manifest = FrameManifest {
        source: "synthetic-fixture".into(),
        sample_rate_fps: 1.0,
        root: None,
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&path, &json).map_err(|source| MediaError::Io { path, source })?;
    Ok(manifest)
}
