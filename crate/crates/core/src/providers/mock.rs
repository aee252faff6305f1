//! Deterministic providers for tests and offline runs.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{Embedder, FaceDetector, LanguageModel, ModelInfo, ProviderError};
use crate::hygiene::CorpusKind;
use crate::model::{EmbeddingVector, FaceBox, ImageDims, LmParams};
use crate::shotlist;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Unit vector of `dim` standard normals drawn from xoshiro256++ seeded
/// with the FNV-1a hash of `content`. The same content always gives the
/// same vector; `kind` does not enter the seed.
pub fn mock_embedding(content: &[u8], dim: usize, _kind: CorpusKind) -> EmbeddingVector {
    assert!(dim >= 2, "mock embeddings need dim >= 2");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(fnv1a64(content));
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return EmbeddingVector::new_normalized(raw.into_iter().map(|v| v / norm).collect())
                .expect("unit vector");
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockEmbedder {
    model: ModelInfo,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            model: ModelInfo {
                model_id: format!("mock-fnv-xoshiro-{dim}"),
                dim,
            },
        }
    }
}

impl Embedder for MockEmbedder {
    fn model(&self) -> &ModelInfo {
        &self.model
    }

    fn embed_text(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyBatch);
        }
        Ok(texts
            .iter()
            .map(|t| mock_embedding(t.as_bytes(), self.model.dim, CorpusKind::Text))
            .collect())
    }

    fn embed_image(&self, images: &[Vec<u8>]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if images.is_empty() {
            return Err(ProviderError::EmptyBatch);
        }
        Ok(images
            .iter()
            .map(|b| mock_embedding(b, self.model.dim, CorpusKind::Image))
            .collect())
    }
}

#[derive(Debug, Default)]
struct Transcript {
    prompts: Vec<String>,
}

/// Replays canned completions in order and records every prompt.
#[derive(Debug)]
pub struct ScriptedLm {
    replies: Mutex<VecDeque<Result<String, ProviderError>>>,
    repeat_last: bool,
    transcript: Mutex<Transcript>,
}

impl ScriptedLm {
    pub fn new(replies: Vec<String>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().map(Ok).collect()),
            repeat_last: false,
            transcript: Mutex::default(),
        }
    }

    /// Answers every call with the same reply.
    pub fn repeating(reply: String) -> Self {
        Self {
            repeat_last: true,
            ..Self::new(vec![reply])
        }
    }

    /// Fails every call with `err`.
    pub fn failing(err: ProviderError) -> Self {
        Self {
            replies: Mutex::new(VecDeque::from([Err(err)])),
            repeat_last: true,
            transcript: Mutex::default(),
        }
    }

    pub fn calls(&self) -> usize {
        self.transcript.lock().unwrap().prompts.len()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.transcript.lock().unwrap().prompts.clone()
    }
}

impl LanguageModel for ScriptedLm {
    fn complete(&self, prompt: &str, _params: &LmParams) -> Result<String, ProviderError> {
        self.transcript.lock().unwrap().prompts.push(prompt.to_string());
        let mut replies = self.replies.lock().unwrap();
        if self.repeat_last && replies.len() == 1 {
            return replies[0].clone();
        }
        replies
            .pop_front()
            .unwrap_or_else(|| Err(ProviderError::LmUnavailable("script exhausted".into())))
    }
}

const PLANNER_SUBJECTS: [&str; 12] = [
    "the guests arriving",
    "the host greeting people",
    "people laughing together",
    "the food being served",
    "the decorations",
    "a group photo of everyone",
    "people talking in small groups",
    "the main activity of the event",
    "someone giving a toast",
    "the table settings",
    "children playing",
    "the guests saying goodbye",
];

/// Offline planner: answers a prompt built by [`shotlist::build_prompt`]
/// with a fixed, clean enumerated list of the requested length.
#[derive(Debug, Default, Clone)]
pub struct PlannerLm;

impl LanguageModel for PlannerLm {
    fn complete(&self, prompt: &str, _params: &LmParams) -> Result<String, ProviderError> {
        let (event, n) = shotlist::parse_request(prompt)
            .ok_or_else(|| ProviderError::Protocol("prompt has no recognizable request".into()))?;
        let ideas: Vec<String> = (0..n)
            .map(|i| {
                let subject = PLANNER_SUBJECTS[i % PLANNER_SUBJECTS.len()];
                match i / PLANNER_SUBJECTS.len() {
                    0 => format!("A photo of {subject} at {event}"),
                    round => format!("Another photo of {subject} at {event} ({})", round + 1),
                }
            })
            .collect();
        Ok(shotlist::render_enumerated(&ideas))
    }
}

/// Returns boxes scripted per image (keyed by FNV-1a of the bytes); every
/// other decodable image has no faces.
#[derive(Debug, Default, Clone)]
pub struct ScriptedFaceDetector {
    scripted: HashMap<u64, Vec<FaceBox>>,
}

impl ScriptedFaceDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_faces(mut self, image: &[u8], faces: Vec<FaceBox>) -> Self {
        self.scripted.insert(fnv1a64(image), faces);
        self
    }
}

impl FaceDetector for ScriptedFaceDetector {
    fn detect_faces(&self, image: &[u8]) -> Result<Vec<FaceBox>, ProviderError> {
        let dims = super::decode_dims(image)?;
        Ok(self
            .scripted
            .get(&fnv1a64(image))
            .map(|faces| faces.iter().filter_map(|f| f.clamp_to(dims)).collect())
            .unwrap_or_default())
    }
}

/// Color the synthetic fixtures use to paint faces.
pub const FACE_MARKER_RGB: [u8; 3] = [255, 0, 255];

/// Treats every 4-connected region of an exact marker color as a face.
/// Regions are reported in scan order of their first pixel.
#[derive(Debug, Clone)]
pub struct MarkerFaceDetector {
    pub marker: [u8; 3],
    pub min_pixels: usize,
}

impl Default for MarkerFaceDetector {
    fn default() -> Self {
        Self {
            marker: FACE_MARKER_RGB,
            min_pixels: 4,
        }
    }
}

impl FaceDetector for MarkerFaceDetector {
    fn detect_faces(&self, image: &[u8]) -> Result<Vec<FaceBox>, ProviderError> {
        let img = image::load_from_memory(image)
            .map_err(|e| ProviderError::UndecodableImage(e.to_string()))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let dims = ImageDims::new(w, h).map_err(|e| ProviderError::UndecodableImage(e.to_string()))?;
        let is_marker = |x: u32, y: u32| img.get_pixel(x, y).0 == self.marker;
        let mut seen = vec![false; (w * h) as usize];
        let mut faces = Vec::new();
        for y0 in 0..h {
            for x0 in 0..w {
                if seen[(y0 * w + x0) as usize] || !is_marker(x0, y0) {
                    continue;
                }
                let (mut min_x, mut min_y, mut max_x, mut max_y) = (x0, y0, x0, y0);
                let mut pixels = 0usize;
                let mut stack = vec![(x0, y0)];
                seen[(y0 * w + x0) as usize] = true;
                while let Some((x, y)) = stack.pop() {
                    pixels += 1;
                    min_x = min_x.min(x);
                    min_y = min_y.min(y);
                    max_x = max_x.max(x);
                    max_y = max_y.max(y);
                    let neighbors = [
                        (x.wrapping_sub(1), y),
                        (x + 1, y),
                        (x, y.wrapping_sub(1)),
                        (x, y + 1),
                    ];
                    for (nx, ny) in neighbors {
                        if nx < w && ny < h && !seen[(ny * w + nx) as usize] && is_marker(nx, ny) {
                            seen[(ny * w + nx) as usize] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
                if pixels >= self.min_pixels {
                    let face = FaceBox::new(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1, 0.99)
                        .expect("non-empty region");
                    faces.extend(face.clamp_to(dims));
                }
            }
        }
        Ok(faces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn png(img: &image::RgbImage) -> Vec<u8> {
        let mut buf = Vec::new();
        img.write_to(&mut Cursor::new(&mut buf), image::ImageFormat::Png).unwrap();
        buf
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn mock_embeddings_are_deterministic_unit_vectors() {
        let a = mock_embedding(b"A photo of the cake", 64, CorpusKind::Text);
        let b = mock_embedding(b"A photo of the cake", 64, CorpusKind::Text);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let c = mock_embedding(b"A photo of the guests", 64, CorpusKind::Text);
        assert!(a.dot(&c) < 0.99);
        let circle = mock_embedding(b"x", 2, CorpusKind::Image);
        assert!((circle.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mock_embedder_preserves_order() {
        let e = MockEmbedder::new(16);
        let texts: Vec<String> = ["one", "two", "three"].iter().map(|s| s.to_string()).collect();
        let out = e.embed_text(&texts).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[1], mock_embedding(b"two", 16, CorpusKind::Text));
        assert_eq!(e.embed_text(&texts[..1]).unwrap()[0], out[0]);
        assert_eq!(e.embed_text(&[]), Err(ProviderError::EmptyBatch));
    }

    #[test]
    fn scripted_lm_replays_and_records() {
        let lm = ScriptedLm::new(vec!["first".into(), "second".into()]);
        let p = LmParams::default();
        assert_eq!(lm.complete("a", &p).unwrap(), "first");
        assert_eq!(lm.complete("b", &p).unwrap(), "second");
        assert!(matches!(lm.complete("c", &p), Err(ProviderError::LmUnavailable(_))));
        assert_eq!(lm.prompts(), vec!["a", "b", "c"]);

        let fixed = ScriptedLm::repeating("1. A photo\n".into());
        for _ in 0..3 {
            assert_eq!(fixed.complete("q", &p).unwrap(), "1. A photo\n");
        }
    }

    #[test]
    fn planner_answers_its_own_prompts() {
        let spec = shotlist::PromptSpec::new("a wine tasting event", 14).unwrap();
        let prompt = shotlist::build_prompt(&spec).unwrap();
        let reply = PlannerLm.complete(&prompt, &LmParams::default()).unwrap();
        let ideas = shotlist::parse_shotlist(&reply, 14).unwrap();
        assert!(ideas[0].text.contains("a wine tasting event"));
        assert!(shotlist::find_rejected_terms(&ideas, &shotlist::RejectionPolicy::default()).is_empty());
        assert!(PlannerLm.complete("hello", &LmParams::default()).is_err());
    }

    #[test]
    fn face_detectors() {
        let blank = png(&image::RgbImage::from_pixel(40, 30, image::Rgb([20, 20, 20])));
        assert!(MarkerFaceDetector::default().detect_faces(&blank).unwrap().is_empty());
        assert!(ScriptedFaceDetector::new().detect_faces(&blank).unwrap().is_empty());

        let mut img = image::RgbImage::from_pixel(40, 30, image::Rgb([20, 20, 20]));
        for y in 5..10 {
            for x in 3..9 {
                img.put_pixel(x, y, image::Rgb(FACE_MARKER_RGB));
            }
        }
        for y in 20..30 {
            for x in 30..40 {
                img.put_pixel(x, y, image::Rgb(FACE_MARKER_RGB));
            }
        }
        let faces = MarkerFaceDetector::default().detect_faces(&png(&img)).unwrap();
        assert_eq!(faces.len(), 2);
        assert_eq!((faces[0].x, faces[0].y, faces[0].w, faces[0].h), (3, 5, 6, 5));
        assert_eq!((faces[1].x, faces[1].y, faces[1].w, faces[1].h), (30, 20, 10, 10));

        let one = FaceBox::new(1, 2, 3, 4, 0.8).unwrap();
        let det = ScriptedFaceDetector::new().with_faces(&blank, vec![one]);
        assert_eq!(det.detect_faces(&blank).unwrap(), vec![one]);

        let corrupt = b"\x89PNG\r\n\x1a\nnot really".to_vec();
        assert!(matches!(
            MarkerFaceDetector::default().detect_faces(&corrupt),
            Err(ProviderError::UndecodableImage(_))
        ));
        assert!(matches!(det.detect_faces(&corrupt), Err(ProviderError::UndecodableImage(_))));
    }
}
