//! Frame ingestion, cropping, and collage assembly.
//!
//! A frame corpus is a directory of PNG/JPEG files described by a
//! `frames.json` manifest. Video files are decoded by an external tool
//! (ffmpeg by default) into such a directory.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{CropRect, ImageDims};

pub const MANIFEST_FILE: &str = "frames.json";
pub const DEFAULT_FPS: f64 = 1.0;
/// Square cells matching the encoder's 336px input.
pub const DEFAULT_CELL: u32 = 336;

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("cannot read source {path}: {reason}")]
    SourceUnreadable { path: PathBuf, reason: String },
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("crop {crop:?} out of bounds for {width}x{height} image")]
    CropOutOfBounds { crop: CropRect, width: u32, height: u32 },
    #[error("{got} images do not fit a {rows}x{cols} collage")]
    TooManyImages { got: usize, rows: u32, cols: u32 },
    #[error("invalid collage spec: {0}")]
    InvalidSpec(String),
    #[error("image {path}: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error("frame extraction failed: {0}")]
    Extraction(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_id: u64,
    pub timestamp_s: f64,
    /// Relative to the manifest's root directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub source: String,
    pub sample_rate_fps: f64,
    /// Directory the entry paths are relative to. When absent, the
    /// directory holding the manifest file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    pub entries: Vec<ManifestEntry>,
}

impl FrameManifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        match &self.root {
            Some(root) => root.join(&entry.path),
            None => PathBuf::from(&entry.path),
        }
    }

    pub fn entry(&self, frame_id: u64) -> Option<&ManifestEntry> {
        self.entries.get(frame_id as usize).filter(|e| e.frame_id == frame_id)
    }

    /// Checks ids are dense from 0, timestamps never decrease, and every
    /// referenced file exists.
    pub fn validate(&self) -> Result<(), MediaError> {
        if !(self.sample_rate_fps > 0.0 && self.sample_rate_fps.is_finite()) {
            return Err(MediaError::ManifestInvalid(format!(
                "sample_rate_fps {} must be positive",
                self.sample_rate_fps
            )));
        }
        let mut prev_ts = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.frame_id != i as u64 {
                return Err(MediaError::ManifestInvalid(format!(
                    "entry {i} has frame_id {} (ids must be dense from 0)",
                    e.frame_id
                )));
            }
            if !(e.timestamp_s.is_finite() && e.timestamp_s >= prev_ts) {
                return Err(MediaError::ManifestInvalid(format!(
                    "frame {} timestamp {} is negative or decreasing",
                    e.frame_id, e.timestamp_s
                )));
            }
            prev_ts = e.timestamp_s;
            let path = self.resolve(e);
            if !path.is_file() {
                return Err(MediaError::ManifestInvalid(format!(
                    "frame {} references missing file {}",
                    e.frame_id,
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Loads `<dir>/frames.json`, roots it at `dir`, and validates it.
pub fn load_manifest_dir(dir: &Path) -> Result<FrameManifest, MediaError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(|e| MediaError::SourceUnreadable {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let mut manifest: FrameManifest = serde_json::from_slice(&bytes)
        .map_err(|e| MediaError::ManifestInvalid(format!("{}: {e}", path.display())))?;
    let root = manifest.root.take().unwrap_or_default();
    manifest.root = Some(if root.is_absolute() { root } else { dir.join(root) });
    manifest.validate()?;
    Ok(manifest)
}

/// Decodes a video into numbered image files in `out_dir`.
pub trait FrameExtractor {
    fn extract(&self, video: &Path, fps: f64, out_dir: &Path) -> Result<(), MediaError>;
}

/// Runs `ffmpeg -i <video> -vf fps=<fps> <out_dir>/frame_%06d.png`.
#[derive(Debug, Clone)]
pub struct FfmpegExtractor {
    pub program: String,
}

impl Default for FfmpegExtractor {
    fn default() -> Self {
        Self {
            program: "ffmpeg".into(),
        }
    }
}

impl FrameExtractor for FfmpegExtractor {
    fn extract(&self, video: &Path, fps: f64, out_dir: &Path) -> Result<(), MediaError> {
        let status = Command::new(&self.program)
            .arg("-loglevel")
            .arg("error")
            .arg("-i")
            .arg(video)
            .arg("-vf")
            .arg(format!("fps={fps}"))
            .arg(out_dir.join("frame_%06d.png"))
            .status()
            .map_err(|e| MediaError::Extraction(format!("cannot run {}: {e}", self.program)))?;
        if !status.success() {
            return Err(MediaError::Extraction(format!("{} exited with {status}", self.program)));
        }
        Ok(())
    }
}

fn is_image_file(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

/// Builds a manifest over the image files of `dir`, in file-name order,
/// with timestamps `index / fps`.
pub fn manifest_from_directory(dir: &Path, fps: f64, source: &str) -> Result<FrameManifest, MediaError> {
    let read = fs::read_dir(dir).map_err(|e| MediaError::SourceUnreadable {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut names: Vec<String> = read
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && is_image_file(p))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    let manifest = FrameManifest {
        source: source.to_string(),
        sample_rate_fps: fps,
        root: Some(dir.to_path_buf()),
        entries: names
            .into_iter()
            .enumerate()
            .map(|(i, path)| ManifestEntry {
                frame_id: i as u64,
                timestamp_s: i as f64 / fps,
                path,
            })
            .collect(),
    };
    manifest.validate()?;
    Ok(manifest)
}

/// Loads a frame directory with a manifest, or extracts frames from a video
/// file into `frames_dir` and describes them.
pub fn ingest_frames(
    source: &Path,
    fps: f64,
    frames_dir: &Path,
    extractor: &dyn FrameExtractor,
) -> Result<FrameManifest, MediaError> {
    if source.is_dir() {
        return load_manifest_dir(source);
    }
    if !source.is_file() {
        return Err(MediaError::SourceUnreadable {
            path: source.to_path_buf(),
            reason: "no such file or directory".into(),
        });
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(MediaError::ManifestInvalid(format!("fps {fps} must be positive")));
    }
    fs::create_dir_all(frames_dir).map_err(|source| MediaError::Io {
        path: frames_dir.to_path_buf(),
        source,
    })?;
    extractor.extract(source, fps, frames_dir)?;
    manifest_from_directory(frames_dir, fps, &source.display().to_string())
}

pub fn load_image(path: &Path) -> Result<RgbImage, MediaError> {
    Ok(image::open(path)
        .map_err(|e| MediaError::Image {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .to_rgb8())
}

pub fn image_dims(img: &RgbImage) -> ImageDims {
    ImageDims {
        width: img.width(),
        height: img.height(),
    }
}

/// Cuts `crop` out of `img` and fits it into `out_w x out_h`, keeping the
/// aspect ratio and padding with `background`.
pub fn apply_crop(
    img: &RgbImage,
    crop: CropRect,
    out_w: u32,
    out_h: u32,
    background: [u8; 3],
) -> Result<RgbImage, MediaError> {
    if crop.check(image_dims(img)).is_err() {
        return Err(MediaError::CropOutOfBounds {
            crop,
            width: img.width(),
            height: img.height(),
        });
    }
    if out_w == 0 || out_h == 0 {
        return Err(MediaError::InvalidSpec(format!("output size {out_w}x{out_h}")));
    }
    let region = imageops::crop_imm(img, crop.x0, crop.y0, crop.width(), crop.height()).to_image();
    if region.dimensions() == (out_w, out_h) {
        return Ok(region);
    }
    let scale = f64::min(
        f64::from(out_w) / f64::from(crop.width()),
        f64::from(out_h) / f64::from(crop.height()),
    );
    let fit_w = ((f64::from(crop.width()) * scale).round() as u32).clamp(1, out_w);
    let fit_h = ((f64::from(crop.height()) * scale).round() as u32).clamp(1, out_h);
    let resized = imageops::resize(&region, fit_w, fit_h, FilterType::Triangle);
    let mut canvas = RgbImage::from_pixel(out_w, out_h, Rgb(background));
    imageops::replace(
        &mut canvas,
        &resized,
        i64::from((out_w - fit_w) / 2),
        i64::from((out_h - fit_h) / 2),
    );
    Ok(canvas)
}

/// One image to crop and fit into a collage cell.
pub struct CropJob {
    pub image: RgbImage,
    pub crop: CropRect,
}

/// Crops a batch into cells, in parallel when enabled.
pub fn crop_cells(jobs: &[CropJob], spec: &CollageSpec, exec: Execution) -> Result<Vec<RgbImage>, MediaError> {
    exec.map_slice(jobs, |job| {
        apply_crop(&job.image, job.crop, spec.cell_width, spec.cell_height, spec.background)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollageSpec {
    pub rows: u32,
    pub cols: u32,
    pub cell_width: u32,
    pub cell_height: u32,
    pub background: [u8; 3],
}

impl Default for CollageSpec {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            cell_width: DEFAULT_CELL,
            cell_height: DEFAULT_CELL,
            background: [0, 0, 0],
        }
    }
}

impl CollageSpec {
    pub fn validate(&self) -> Result<(), MediaError> {
        if self.rows == 0 || self.cols == 0 || self.cell_width == 0 || self.cell_height == 0 {
            return Err(MediaError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        (self.rows * self.cols) as usize
    }
}

/// Lays images out row-major; empty cells keep the background color.
/// Images that are not cell-sized are letterboxed into their cell.
pub fn make_collage(images: &[RgbImage], spec: &CollageSpec) -> Result<RgbImage, MediaError> {
    spec.validate()?;
    if images.len() > spec.capacity() {
        return Err(MediaError::TooManyImages {
            got: images.len(),
            rows: spec.rows,
            cols: spec.cols,
        });
    }
    let mut canvas = RgbImage::from_pixel(
        spec.cols * spec.cell_width,
        spec.rows * spec.cell_height,
        Rgb(spec.background),
    );
    for (i, img) in images.iter().enumerate() {
        let (r, c) = (i as u32 / spec.cols, i as u32 % spec.cols);
        let cell = if img.dimensions() == (spec.cell_width, spec.cell_height) {
            img.clone()
        } else {
            apply_crop(
                img,
                CropRect::full(image_dims(img)),
                spec.cell_width,
                spec.cell_height,
                spec.background,
            )?
        };
        imageops::replace(
            &mut canvas,
            &cell,
            i64::from(c * spec.cell_width),
            i64::from(r * spec.cell_height),
        );
    }
    Ok(canvas)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, MediaError> {
    let mut buf = Vec::new();
    img.write_to(&mut Cursor::new(&mut buf), image::ImageFormat::Png)
        .map_err(|e| MediaError::Image {
            path: PathBuf::from("<memory>"),
            reason: e.to_string(),
        })?;
    Ok(buf)
}
