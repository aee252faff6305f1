//! Pipeline stages. Each stage reads its inputs from the work directory and
//! writes its outputs there atomically.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use eventshot_core::atomic::write_atomic;
use eventshot_core::baseline::{summarize_with, SummaryConfig, SummaryMode, ScoreWeights};
use eventshot_core::exec::Execution;
use eventshot_core::facegeom::{crop_or_full, face_crop_rect};
use eventshot_core::hygiene::{
    dimension_stats_with, dominant_dims, l2_normalize_with, max_magnitude_frame, suppress_batch, write_stats_csv,
    CorpusKind, DEFAULT_BINS,
};
use eventshot_core::media::{
    self, crop_cells, encode_png, ingest_frames, load_image, load_manifest_dir, CropJob, FfmpegExtractor,
    FrameManifest,
};
use eventshot_core::model::{CropRect, EmbeddingVector, FaceBox, FrameRecord, ImageDims, ShotList};
use eventshot_core::providers::embfile::{read_embeddings, write_embeddings, EmbeddingsManifest, HygieneRecord, RowRef};
use eventshot_core::providers::http::{HttpProvider, ProviderEndpoint};
use eventshot_core::providers::mock::{MarkerFaceDetector, MockEmbedder, PlannerLm};
use eventshot_core::providers::{decode_dims, Embedder, FaceDetector, LanguageModel, ModelInfo};
use eventshot_core::retrieval::{candidate_pool, select_portfolio, similarity_matrix_with, SelectionMode};
use eventshot_core::shotlist::{generate_shotlist, PromptSpec, RejectionPolicy};
use eventshot_core::{eval, fixture, plot};
use serde::{Deserialize, Serialize};

use crate::config::{BaselineModeName, Config, ProviderKind};
use crate::error::DataError;

pub const SHOTLIST_FILE: &str = "shotlist.json";
pub const FACES_FILE: &str = "faces.json";
pub const FRAME_EMB_FILE: &str = "frames.emb";
pub const IDEA_EMB_FILE: &str = "ideas.emb";
pub const PORTFOLIO_FILE: &str = "portfolio.json";
pub const BASELINE_FILE: &str = "baseline.json";

pub struct Providers {
    pub lm: Box<dyn LanguageModel>,
    pub embedder: Box<dyn Embedder>,
    pub faces: Box<dyn FaceDetector>,
}

impl Providers {
    pub fn from_config(cfg: &Config) -> anyhow::Result<Self> {
        let p = &cfg.providers;
        Ok(match p.kind {
            ProviderKind::Mock => Self {
                lm: Box::new(PlannerLm),
                embedder: Box::new(MockEmbedder::new(p.dim)),
                faces: Box::new(MarkerFaceDetector::default()),
            },
            ProviderKind::Http => {
                let mut endpoint = ProviderEndpoint::new(
                    p.base_url.clone(),
                    ModelInfo {
                        model_id: p.model_id.clone(),
                        dim: p.dim,
                    },
                );
                endpoint.timeout_s = p.timeout_s;
                endpoint.retries = p.retries;
                endpoint.backoff_ms = p.backoff_ms;
                let local = HttpProvider::new(endpoint.clone())?;
                endpoint.auth_env = p.lm_auth_env.clone();
                Self {
                    lm: Box::new(HttpProvider::new(endpoint)?),
                    embedder: Box::new(local.clone()),
                    faces: Box::new(local),
                }
            }
        })
    }
}

/// Shared state for one invocation.
pub struct Ctx {
    pub cfg: Config,
    pub exec: Execution,
}

impl Ctx {
    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.workdir.join(name)
    }

    fn ensure_workdir(&self) -> anyhow::Result<()> {
        fs::create_dir_all(&self.cfg.workdir)
            .with_context(|| format!("creating work directory {}", self.cfg.workdir.display()))
    }

    /// Path of a stage input, or a data error naming the stage that makes it.
    fn require(&self, name: &str, producer: &str) -> anyhow::Result<PathBuf> {
        let p = self.path(name);
        if !p.is_file() {
            return Err(DataError(format!("missing {} (run `{producer}` first)", p.display())).into());
        }
        Ok(p)
    }

    fn manifest(&self) -> anyhow::Result<FrameManifest> {
        self.require(media::MANIFEST_FILE, "ingest")?;
        Ok(load_manifest_dir(&self.cfg.workdir)?)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| DataError(format!("{}: {e}", path.display())).into())
}

pub fn plan(ctx: &Ctx, providers: &Providers, event: &str, n: Option<usize>) -> anyhow::Result<ShotList> {
    let mut spec = PromptSpec::new(event, n.unwrap_or(ctx.cfg.portfolio_size))?;
    if let Some(p) = &ctx.cfg.priming {
        spec = spec.with_priming(p.clone())?;
    }
    let policy = RejectionPolicy::new(ctx.cfg.rejection.terms.clone(), ctx.cfg.rejection.max_retries)?;
    let list = generate_shotlist(&spec, &policy, &ctx.cfg.lm, providers.lm.as_ref())?;
    ctx.ensure_workdir()?;
    write_json(&ctx.path(SHOTLIST_FILE), &list)?;
    Ok(list)
}

/// Writes `frames.json` into the work directory, rooted at the absolute
/// frame directory.
pub fn ingest(ctx: &Ctx, source: &Path, fps: f64) -> anyhow::Result<FrameManifest> {
    ctx.ensure_workdir()?;
    let extractor = FfmpegExtractor {
        program: ctx.cfg.ffmpeg.clone(),
    };
    let mut manifest = ingest_frames(source, fps, &ctx.path("frames"), &extractor)?;
    if let Some(root) = manifest.root.take() {
        manifest.root = Some(root.canonicalize().with_context(|| format!("resolving {}", root.display()))?);
    }
    write_json(&ctx.path(media::MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFaces {
    pub frame_id: u64,
    pub width: u32,
    pub height: u32,
    pub faces: Vec<FaceBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacesFile {
    pub frames: Vec<FrameFaces>,
}

impl FacesFile {
    fn by_id(&self) -> BTreeMap<u64, &FrameFaces> {
        self.frames.iter().map(|f| (f.frame_id, f)).collect()
    }
}

pub fn faces(ctx: &Ctx, providers: &Providers) -> anyhow::Result<FacesFile> {
    let manifest = ctx.manifest()?;
    let results = ctx.exec.map_slice(&manifest.entries, |e| -> anyhow::Result<FrameFaces> {
        let path = manifest.resolve(e);
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let dims = decode_dims(&bytes)?;
        let faces = providers
            .faces
            .detect_faces(&bytes)
            .with_context(|| format!("detecting faces in frame {}", e.frame_id))?;
        Ok(FrameFaces {
            frame_id: e.frame_id,
            width: dims.width,
            height: dims.height,
            faces,
        })
    });
    let file = FacesFile {
        frames: results.into_iter().collect::<anyhow::Result<_>>()?,
    };
    write_json(&ctx.path(FACES_FILE), &file)?;
    Ok(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedKind {
    Frames,
    Ideas,
}

fn finish_rows(
    ctx: &Ctx,
    raw: Vec<EmbeddingVector>,
    hygiene: bool,
) -> anyhow::Result<(Vec<Vec<f32>>, HygieneRecord)> {
    let vectors = if hygiene {
        suppress_batch(&raw, &ctx.cfg.hygiene, ctx.exec)?
    } else {
        raw
    };
    Ok((
        vectors.iter().map(EmbeddingVector::to_f32).collect(),
        HygieneRecord {
            applied: hygiene,
            policy: ctx.cfg.hygiene,
        },
    ))
}

pub fn embed(ctx: &Ctx, providers: &Providers, kind: EmbedKind, hygiene: bool) -> anyhow::Result<PathBuf> {
    let model = providers.embedder.model().clone();
    let batch = ctx.cfg.providers.embed_batch.max(1);
    let (out, corpus, raw, rows) = match kind {
        EmbedKind::Frames => {
            let manifest = ctx.manifest()?;
            let mut raw = Vec::with_capacity(manifest.entries.len());
            for chunk in manifest.entries.chunks(batch) {
                let images = chunk
                    .iter()
                    .map(|e| {
                        let p = manifest.resolve(e);
                        fs::read(&p).with_context(|| format!("reading {}", p.display()))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                raw.extend(providers.embedder.embed_image(&images)?);
            }
            let rows = manifest
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| RowRef {
                    row: i as u64,
                    frame_id: Some(e.frame_id),
                    timestamp_s: Some(e.timestamp_s),
                    ..RowRef::default()
                })
                .collect::<Vec<_>>();
            (FRAME_EMB_FILE, CorpusKind::Image, raw, rows)
        }
        EmbedKind::Ideas => {
            let list: ShotList = read_json(&ctx.require(SHOTLIST_FILE, "plan")?)?;
            let texts: Vec<String> = list.ideas.iter().map(|i| i.text.clone()).collect();
            let mut raw = Vec::with_capacity(texts.len());
            for chunk in texts.chunks(batch) {
                raw.extend(providers.embedder.embed_text(chunk)?);
            }
            let rows = list
                .ideas
                .iter()
                .enumerate()
                .map(|(i, idea)| RowRef {
                    row: i as u64,
                    idea_index: Some(idea.index),
                    text: Some(idea.text.clone()),
                    ..RowRef::default()
                })
                .collect();
            (IDEA_EMB_FILE, CorpusKind::Text, raw, rows)
        }
    };
    let (data, record) = finish_rows(ctx, raw, hygiene)?;
    let manifest = EmbeddingsManifest {
        kind: corpus,
        dim: model.dim,
        model_id: model.model_id,
        hygiene: record,
        rows,
    };
    let path = ctx.path(out);
    write_embeddings(&path, &data, &manifest)?;
    Ok(path)
}

/// Reads an embeddings file and unit-normalizes every row in f64.
fn load_unit_rows(ctx: &Ctx, path: &Path) -> anyhow::Result<(Vec<EmbeddingVector>, EmbeddingsManifest)> {
    let (rows, manifest) = read_embeddings(path)?;
    let vectors = rows
        .iter()
        .map(|r| -> anyhow::Result<EmbeddingVector> {
            Ok(l2_normalize_with(&EmbeddingVector::from_f32(r)?, ctx.cfg.hygiene.epsilon_norm)?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok((vectors, manifest))
}

fn frame_id_of(row: &RowRef, path: &Path) -> anyhow::Result<u64> {
    row.frame_id
        .ok_or_else(|| DataError(format!("{}: row {} has no frame_id", path.display(), row.row)).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioItem {
    pub idea_index: usize,
    pub idea_text: String,
    pub frame_id: u64,
    pub timestamp_s: f64,
    pub score: f64,
    pub crop: Option<CropRect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub event_name: String,
    pub selection: SelectionMode,
    pub entries: Vec<PortfolioItem>,
}

pub fn select(ctx: &Ctx, mode: Option<SelectionMode>) -> anyhow::Result<Portfolio> {
    let mode = mode.unwrap_or(ctx.cfg.selection);
    let list: ShotList = read_json(&ctx.require(SHOTLIST_FILE, "plan")?)?;
    let idea_path = ctx.require(IDEA_EMB_FILE, "embed --kind ideas")?;
    let frame_path = ctx.require(FRAME_EMB_FILE, "embed --kind frames")?;
    let faces: FacesFile = read_json(&ctx.require(FACES_FILE, "faces")?)?;
    let (phrases, idea_manifest) = load_unit_rows(ctx, &idea_path)?;
    let (frame_vecs, frame_manifest) = load_unit_rows(ctx, &frame_path)?;
    if idea_manifest.rows.len() != list.ideas.len() {
        bail!(DataError(format!(
            "{} holds {} ideas but {} lists {}",
            idea_path.display(),
            idea_manifest.rows.len(),
            SHOTLIST_FILE,
            list.ideas.len()
        )));
    }

    let face_map = faces.by_id();
    let mut records = Vec::with_capacity(frame_vecs.len());
    for (row, v) in frame_manifest.rows.iter().zip(frame_vecs) {
        let id = frame_id_of(row, &frame_path)?;
        let mut rec = FrameRecord::new(id, row.timestamp_s.unwrap_or(0.0), id.to_string())?.with_embedding(v);
        if let Some(f) = face_map.get(&id) {
            rec = rec.with_faces(f.faces.clone());
        }
        records.push(rec);
    }
    let pool = candidate_pool(&records)?;
    let frames: Vec<(u64, EmbeddingVector)> = pool
        .iter()
        .map(|r| (r.frame_id, r.embedding.clone().expect("embedded above")))
        .collect();
    let matrix = similarity_matrix_with(&phrases, &frames, ctx.exec)?;
    let picks = select_portfolio(&matrix, mode)?;

    let by_id: BTreeMap<u64, &FrameRecord> = pool.iter().map(|r| (r.frame_id, r)).collect();
    let mut entries = Vec::with_capacity(picks.len());
    for pick in picks {
        let rec = by_id[&pick.frame_id];
        let ff = face_map[&pick.frame_id];
        let dims = ImageDims::new(ff.width, ff.height)?;
        let crop = face_crop_rect(rec.faces.as_deref().unwrap_or_default(), dims, ctx.cfg.face_margin)?;
        entries.push(PortfolioItem {
            idea_index: pick.idea_index,
            idea_text: list.ideas[pick.idea_index - 1].text.clone(),
            frame_id: pick.frame_id,
            timestamp_s: rec.timestamp_s,
            score: pick.score,
            crop: Some(crop),
        });
    }
    let portfolio = Portfolio {
        event_name: list.event_name,
        selection: mode,
        entries,
    };
    write_json(&ctx.path(PORTFOLIO_FILE), &portfolio)?;
    Ok(portfolio)
}

#[derive(Debug, Clone, Default)]
pub struct BaselineOverrides {
    pub mode: Option<BaselineModeName>,
    pub k: Option<usize>,
    pub block_size: Option<usize>,
    pub weights: Option<ScoreWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOut {
    pub start_frame: u64,
    pub end_frame: u64,
    pub score: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutput {
    pub mode: SummaryMode,
    pub frame_ids: Vec<u64>,
    pub segments: Vec<SegmentOut>,
}

pub fn baseline(ctx: &Ctx, o: &BaselineOverrides) -> anyhow::Result<BaselineOutput> {
    let b = &ctx.cfg.baseline;
    let manifest = ctx.manifest()?;
    let path = ctx.require(FRAME_EMB_FILE, "embed --kind frames")?;
    let (features, emb_manifest) = load_unit_rows(ctx, &path)?;
    let ids = emb_manifest
        .rows
        .iter()
        .map(|r| frame_id_of(r, &path))
        .collect::<anyhow::Result<Vec<u64>>>()?;
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        bail!(DataError(format!("{}: frame ids are not ascending", path.display())));
    }
    let mode = match o.mode.unwrap_or(b.mode) {
        BaselineModeName::Budget => SummaryMode::Budget,
        BaselineModeName::Topk => SummaryMode::TopKCenters { k: o.k.unwrap_or(b.k) },
    };
    let config = SummaryConfig {
        mode,
        cut_count: b.cut_count,
        fps: manifest.sample_rate_fps,
        block_size: o.block_size.or(b.block_size),
        weights: o.weights.unwrap_or(b.weights),
        attention_temperature: b.attention_temperature,
    };
    let summary = summarize_with(&features, None, &config, ctx.exec)?;
    let out = BaselineOutput {
        mode,
        frame_ids: summary.frames.iter().map(|&i| ids[i]).collect(),
        segments: summary
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| SegmentOut {
                start_frame: ids[s.start],
                end_frame: ids[s.end - 1],
                score: summary.segment_scores[i],
                chosen: summary.chosen_segments.contains(&i),
            })
            .collect(),
    };
    ctx.ensure_workdir()?;
    write_json(&ctx.path(BASELINE_FILE), &out)?;
    Ok(out)
}

/// Renders a portfolio or a baseline selection. Portfolio crops are used
/// as stored; baseline frames get face crops when faces are known.
pub fn collage(ctx: &Ctx, input: &Path, output: Option<&Path>) -> anyhow::Result<PathBuf> {
    let value: serde_json::Value = read_json(input)?;
    let manifest = ctx.manifest()?;
    let picks: Vec<(u64, Option<CropRect>)> = if value.get("entries").is_some() {
        let p: Portfolio = serde_json::from_value(value).map_err(|e| DataError(format!("{}: {e}", input.display())))?;
        p.entries.iter().map(|e| (e.frame_id, e.crop)).collect()
    } else if value.get("frame_ids").is_some() {
        let b: BaselineOutput =
            serde_json::from_value(value).map_err(|e| DataError(format!("{}: {e}", input.display())))?;
        let faces: Option<FacesFile> = match ctx.path(FACES_FILE) {
            p if p.is_file() => Some(read_json(&p)?),
            _ => None,
        };
        let mut picks = Vec::with_capacity(b.frame_ids.len());
        for id in b.frame_ids {
            let crop = match faces.as_ref().and_then(|f| f.frames.iter().find(|x| x.frame_id == id)) {
                Some(ff) => Some(crop_or_full(&ff.faces, ImageDims::new(ff.width, ff.height)?, ctx.cfg.face_margin)?),
                None => None,
            };
            picks.push((id, crop));
        }
        picks
    } else {
        bail!(DataError(format!("{} is neither a portfolio nor a baseline selection", input.display())));
    };

    let mut jobs = Vec::with_capacity(picks.len());
    for (id, crop) in picks {
        let entry = manifest
            .entry(id)
            .ok_or_else(|| DataError(format!("frame {id} is not in the manifest")))?;
        let image = load_image(&manifest.resolve(entry))?;
        let crop = crop.unwrap_or_else(|| CropRect::full(media::image_dims(&image)));
        jobs.push(CropJob { image, crop });
    }
    let cells = crop_cells(&jobs, &ctx.cfg.collage, ctx.exec)?;
    let img = media::make_collage(&cells, &ctx.cfg.collage)?;
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("png"));
    write_atomic(&out, &encode_png(&img)?).with_context(|| format!("writing {}", out.display()))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantDim {
    pub dim: usize,
    pub max_abs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_frame: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub kind: CorpusKind,
    pub corpus_size: usize,
    pub dim: usize,
    pub hygiene_applied: bool,
    pub threshold: f64,
    pub dominant: Vec<DominantDim>,
}

/// Per-dimension statistics of unit-normalized rows, with a histogram of all
/// values and one per dominant dimension.
pub fn diagnose(ctx: &Ctx, kind: EmbedKind, input: Option<&Path>, bins: Option<usize>) -> anyhow::Result<Diagnosis> {
    let (default, producer, tag) = match kind {
        EmbedKind::Frames => (FRAME_EMB_FILE, "embed --kind frames", "frames"),
        EmbedKind::Ideas => (IDEA_EMB_FILE, "embed --kind ideas", "ideas"),
    };
    let path = match input {
        Some(p) => p.to_path_buf(),
        None => ctx.require(default, producer)?,
    };
    let (vectors, manifest) = load_unit_rows(ctx, &path)?;
    let stats = dimension_stats_with(&vectors, manifest.kind, bins.unwrap_or(DEFAULT_BINS), ctx.exec)?;
    let threshold = ctx.cfg.hygiene.threshold;
    let records: Option<Vec<FrameRecord>> = manifest
        .rows
        .iter()
        .zip(&vectors)
        .map(|(r, v)| {
            r.frame_id
                .and_then(|id| FrameRecord::new(id, r.timestamp_s.unwrap_or(0.0), id.to_string()).ok())
                .map(|f| f.with_embedding(v.clone()))
        })
        .collect();
    let dominant = dominant_dims(&stats, threshold)
        .into_iter()
        .map(|d| -> anyhow::Result<DominantDim> {
            Ok(DominantDim {
                dim: d,
                max_abs: stats.max_abs(d),
                worst_frame: match &records {
                    Some(r) => Some(max_magnitude_frame(r, d)?),
                    None => None,
                },
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    ctx.ensure_workdir()?;
    let mut csv = Vec::new();
    write_stats_csv(&stats, &mut csv)?;
    write_atomic(&ctx.path(&format!("diagnose_{tag}.csv")), &csv)?;
    let all: Vec<u64> = (0..stats.bin_edges.len() - 1)
        .map(|b| stats.counts.iter().map(|c| c[b]).sum())
        .collect();
    write_atomic(
        &ctx.path(&format!("diagnose_{tag}_all.png")),
        &encode_png(&plot::histogram(&all, 640, 320))?,
    )?;
    for d in &dominant {
        write_atomic(
            &ctx.path(&format!("diagnose_{tag}_dim{}.png", d.dim)),
            &encode_png(&plot::histogram(&stats.counts[d.dim], 640, 320))?,
        )?;
    }
    let diagnosis = Diagnosis {
        kind: manifest.kind,
        corpus_size: stats.corpus_size,
        dim: stats.dim(),
        hygiene_applied: manifest.hygiene.applied,
        threshold,
        dominant,
    };
    write_json(&ctx.path(&format!("diagnose_{tag}.json")), &diagnosis)?;
    Ok(diagnosis)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetsFile {
    pub sheets: Vec<eval::RaterSheet>,
}

/// `collages` is a JSON list of `{event, collages: {method: path}}`.
pub fn make_sheets(ctx: &Ctx, collages: &Path, seed: u64) -> anyhow::Result<(PathBuf, PathBuf)> {
    let events: Vec<eval::EventCollages> = read_json(collages)?;
    let (sheets, key) = eval::make_sheets(&events, seed)?;
    ctx.ensure_workdir()?;
    let (sp, kp) = (ctx.path("sheets.json"), ctx.path("sheets_key.json"));
    write_json(&sp, &SheetsFile { sheets })?;
    write_json(&kp, &key)?;
    Ok((sp, kp))
}

pub fn tally(ctx: &Ctx, votes: &Path, key: &Path, plot_png: bool) -> anyhow::Result<String> {
    let key: eval::SheetKey = read_json(key)?;
    let file = fs::File::open(votes).with_context(|| format!("reading {}", votes.display()))?;
    let t = eval::tally(&eval::read_votes(file)?, &key)?;
    let csv = eval::tally_csv(&t);
    ctx.ensure_workdir()?;
    write_atomic(&ctx.path("tally.csv"), csv.as_bytes())?;
    if plot_png {
        let bars: Vec<(f64, Option<f64>)> = t
            .events
            .iter()
            .chain(std::iter::once(&t.aggregate))
            .flat_map(|e| e.wins.values().map(|&w| (f64::from(w), None)))
            .collect();
        let max = bars.iter().map(|b| b.0).fold(1.0, f64::max);
        write_atomic(&ctx.path("tally.png"), &encode_png(&plot::bars_with_errors(&bars, max, 640, 320))?)?;
    }
    Ok(csv)
}

pub fn scores(ctx: &Ctx, scores: &Path, plot_png: bool) -> anyhow::Result<String> {
    let file = fs::File::open(scores).with_context(|| format!("reading {}", scores.display()))?;
    let stats = eval::score_stats(&eval::read_scores(file)?)?;
    let csv = eval::score_stats_csv(&stats);
    ctx.ensure_workdir()?;
    write_atomic(&ctx.path("scores.csv"), csv.as_bytes())?;
    if plot_png {
        let bars = [(stats.own.mean, stats.own.std), (stats.lm.mean, stats.lm.std)];
        write_atomic(
            &ctx.path("scores.png"),
            &encode_png(&plot::bars_with_errors(&bars, eval::SCORE_MAX, 320, 320))?,
        )?;
    }
    Ok(csv)
}

pub fn make_fixture(out: &Path, frames: usize, seed: u64) -> anyhow::Result<FrameManifest> {
    Ok(fixture::write_fixture(out, frames, seed)?)
}
