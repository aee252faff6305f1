//! Acceptance suite. Each criterion is checked against an independent
//! oracle written here, never against the library's own helpers, and
//! reports one PASS/FAIL line.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use eventshot_core::baseline::{
    block_diversity, knapsack_select, kts::segment_from_kernel, kts_segment, uniqueness, AttentionMatrix,
};
use eventshot_core::exec::Execution;
use eventshot_core::facegeom::face_crop_rect;
use eventshot_core::hygiene::{suppress_outlier_dims, HygieneError, HygienePolicy};
use eventshot_core::model::{CropRect, EmbeddingVector, FaceBox, ImageDims, LmParams};
use eventshot_core::providers::embfile::{read_embeddings, write_embeddings};
use eventshot_core::providers::mock::{PlannerLm, ScriptedLm};
use eventshot_core::retrieval::{select_portfolio, SelectionMode, SimilarityMatrix};
use eventshot_core::shotlist::{find_rejected_terms, generate_shotlist, PromptSpec, RejectionPolicy, ShotListError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------- hygiene

/// Normalize, zero components above the threshold, renormalize once.
/// `None` when every component is zeroed.
fn hygiene_oracle(x: &[f64], threshold: f64) -> Option<Vec<f64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let kept: Vec<f64> = unit.iter().map(|&u| if u.abs() > threshold { 0.0 } else { u }).collect();
    if kept == unit {
        return Some(unit);
    }
    let n2 = kept.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n2 == 0.0 {
        return None;
    }
    Some(kept.iter().map(|v| v / n2).collect())
}

fn hygiene_criterion() -> Outcome {
    let start = Instant::now();
    let policy = HygienePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4859);
    let (mut total, mut suppressed, mut degenerate, mut max_err) = (0usize, 0usize, 0usize, 0f64);
    for dim in [8usize, 64, 768] {
        for _ in 0..10_000 {
            let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            for _ in 0..rng.random_range(0..=2usize) {
                let d = rng.random_range(0..dim);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                x[d] = sign * rng.random_range(3.0..40.0);
            }
            total += 1;
            let got = suppress_outlier_dims(&EmbeddingVector::new(x.clone()).unwrap(), &policy);
            match (hygiene_oracle(&x, policy.threshold), got) {
                (None, Err(HygieneError::DegenerateEmbedding { .. })) => degenerate += 1,
                (Some(want), Ok(got)) => {
                    let g = got.values();
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    check((norm - 1.0).abs() <= 1e-6, || format!("D={dim}: norm {norm}"))?;
                    let unit_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let mut any = false;
                    for d in 0..dim {
                        if (x[d] / unit_norm).abs() > policy.threshold {
                            any = true;
                            check(g[d] == 0.0, || format!("D={dim}: dim {d} not exactly zero: {}", g[d]))?;
                        }
                        let err = (g[d] - want[d]).abs();
                        max_err = max_err.max(err);
                        check(err <= 1e-9, || format!("D={dim}: dim {d} differs by {err}"))?;
                    }
                    suppressed += usize::from(any);
                }
                (want, got) => return Err(format!("D={dim}: oracle {:?} vs library {:?}", want.is_some(), got.map(|_| ()))),
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 5.0)?;
    Ok(format!(
        "{total} vectors ({suppressed} suppressed, {degenerate} degenerate), max err {max_err:.1e}, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

// -------------------------------------------------------------- retrieval

/// Argmax of row `p` with the lowest index winning ties.
fn brute_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (f, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = f;
        }
    }
    best
}

/// Walks all cells by (score desc, phrase asc, frame asc), assigning a cell
/// when its phrase is open and its frame unclaimed.
fn greedy_trace(scores: &[Vec<f64>]) -> Vec<usize> {
    let (p, f) = (scores.len(), scores[0].len());
    let mut cells: Vec<(usize, usize)> = (0..p).flat_map(|i| (0..f).map(move |j| (i, j))).collect();
    cells.sort_by(|a, b| {
        scores[b.0][b.1]
            .total_cmp(&scores[a.0][a.1])
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut phrase_frame = vec![usize::MAX; p];
    let mut taken = vec![false; f];
    for (i, j) in cells {
        if phrase_frame[i] == usize::MAX && !taken[j] {
            phrase_frame[i] = j;
            taken[j] = true;
        }
    }
    phrase_frame
}

fn retrieval_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5245);
    let (mut unique_runs, mut ties) = (0, 0);
    for case in 0..200 {
        let p = rng.random_range(1..=20usize);
        let f = rng.random_range(1..=20usize);
        let coarse = case % 2 == 0;
        let scores: Vec<Vec<f64>> = (0..p)
            .map(|_| {
                (0..f)
                    .map(|_| {
                        if coarse {
                            f64::from(rng.random_range(-4..=4i32)) / 4.0
                        } else {
                            rng.random_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut ids = Vec::with_capacity(f);
        let mut next = rng.random_range(0..5u64);
        for _ in 0..f {
            ids.push(next);
            next += rng.random_range(1..4u64);
        }
        ties += scores
            .iter()
            .filter(|r| {
                let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                r.iter().filter(|&&v| v == m).count() > 1
            })
            .count();
        let m = SimilarityMatrix::new(scores.clone(), ids.clone()).map_err(|e| e.to_string())?;

        let dup = select_portfolio(&m, SelectionMode::AllowDuplicates).map_err(|e| e.to_string())?;
        for (i, e) in dup.iter().enumerate() {
            let j = brute_argmax(&scores[i]);
            check(e.idea_index == i + 1 && e.frame_id == ids[j] && e.score == scores[i][j], || {
                format!("case {case}: phrase {i} got frame {} want {}", e.frame_id, ids[j])
            })?;
        }

        let unique = select_portfolio(&m, SelectionMode::UniqueGreedy);
        if f < p {
            check(unique.is_err(), || format!("case {case}: unique mode accepted F < P"))?;
            continue;
        }
        unique_runs += 1;
        let unique = unique.map_err(|e| e.to_string())?;
        let trace = greedy_trace(&scores);
        for (i, e) in unique.iter().enumerate() {
            check(e.frame_id == ids[trace[i]], || {
                format!("case {case}: unique phrase {i} got {} want {}", e.frame_id, ids[trace[i]])
            })?;
        }
    }
    Ok(format!("200 matrices ({unique_runs} unique-mode traces, {ties} tied rows), exact"))
}

// --------------------------------------------------------------- knapsack

/// Every feasible subset; best value (1e-9 relative), then fewer frames,
/// then the lexicographically smallest index list.
fn knapsack_oracle(values: &[f64], weights: &[usize], budget: usize) -> Vec<usize> {
    let n = values.len();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let w: usize = set.iter().map(|&i| weights[i]).sum();
        if w > budget {
            continue;
        }
        let v: f64 = set.iter().map(|&i| values[i]).sum();
        let better = match &best {
            None => true,
            Some((bv, bw, bs)) => {
                let tol = 1e-9 * bv.abs().max(v.abs()).max(1.0);
                if v > bv + tol {
                    true
                } else if v < bv - tol {
                    false
                } else if w != *bw {
                    w < *bw
                } else {
                    set < *bs
                }
            }
        };
        if better {
            best = Some((v, w, set));
        }
    }
    best.map(|b| b.2).unwrap_or_default()
}

fn knapsack_criterion() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b4e);
    for case in 0..100 {
        let n = rng.random_range(1..=15usize);
        let integral = case % 2 == 0;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if integral {
                    f64::from(rng.random_range(0..6u32))
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect();
        let weights: Vec<usize> = (0..n).map(|_| rng.random_range(1..=6)).collect();
        let budget = rng.random_range(0..=weights.iter().sum::<usize>());
        let got = knapsack_select(&values, &weights, budget).map_err(|e| e.to_string())?;
        let want = knapsack_oracle(&values, &weights, budget);
        check(got == want, || {
            format!("case {case}: values {values:?} weights {weights:?} budget {budget}: got {got:?} want {want:?}")
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 5.0)?;
    Ok(format!("100 instances (half with integral ties), {:.2} s", elapsed.as_secs_f64()))
}

// -------------------------------------------------------------------- KTS

/// Direct scatter of `[a, b)`: sum of K_ii minus the block sum over length.
fn scatter(k: &[Vec<f64>], a: usize, b: usize) -> f64 {
    let diag: f64 = (a..b).map(|i| k[i][i]).sum();
    let block: f64 = (a..b).flat_map(|i| (a..b).map(move |j| (i, j))).map(|(i, j)| k[i][j]).sum();
    diag - block / (b - a) as f64
}

fn cut_sets(n: usize, m: usize, from: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if acc.len() == m {
        out.push(acc.clone());
        return;
    }
    for c in from..n {
        acc.push(c);
        cut_sets(n, m, c + 1, acc, out);
        acc.pop();
    }
}

/// Exhaustive search over increasing cut lists in `1..n`; ties within
/// 1e-9 relative go to the lexicographically smallest list.
fn kts_oracle(k: &[Vec<f64>], m: usize) -> Vec<usize> {
    let n = k.len();
    let mut all = Vec::new();
    cut_sets(n, m, 1, &mut Vec::new(), &mut all);
    let cost = |cuts: &[usize]| {
        let mut bounds = vec![0];
        bounds.extend_from_slice(cuts);
        bounds.push(n);
        bounds.windows(2).map(|w| scatter(k, w[0], w[1])).sum::<f64>()
    };
    let best = all.iter().map(|c| cost(c)).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.abs().max(1.0);
    all.into_iter().find(|c| cost(c) <= best + tol).expect("at least one cut list")
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> EmbeddingVector {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return EmbeddingVector::new_normalized(v.iter().map(|x| x / n).collect()).unwrap();
        }
    }
}

fn kts_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b54);
    let mut constant = 0;
    for case in 0..100 {
        let n = rng.random_range(2..=20usize);
        let m = rng.random_range(0..=3usize.min(n - 1));
        let dim = rng.random_range(2..=4usize);
        let feats: Vec<EmbeddingVector> = if case % 10 == 0 {
            constant += 1;
            vec![random_unit(&mut rng, dim); n]
        } else {
            // A few scenes with jitter, so real change points exist.
            let scenes: Vec<EmbeddingVector> = (0..4).map(|_| random_unit(&mut rng, dim)).collect();
            let mut scene = 0;
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.25) {
                        scene = (scene + 1) % scenes.len();
                    }
                    let mut v: Vec<f64> = scenes[scene].values().iter().map(|x| x + rng.random_range(-0.1..0.1)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                    EmbeddingVector::new_normalized(v).unwrap()
                })
                .collect()
        };
        let k: Vec<Vec<f64>> = feats.iter().map(|a| feats.iter().map(|b| a.dot(b)).collect()).collect();
        let segs = kts_segment(&feats, m).map_err(|e| e.to_string())?;
        let got: Vec<usize> = segs.iter().skip(1).map(|s| s.start).collect();
        let want = kts_oracle(&k, m);
        check(got == want, || format!("case {case} (n={n}, m={m}): got {got:?} want {want:?}"))?;
    }
    let xs = [0.0, 0.0, 0.0, 5.0, 5.0, 5.0];
    let k: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| a * b).collect()).collect();
    let segs = segment_from_kernel(&k, 1, Execution::Sequential).map_err(|e| e.to_string())?;
    check(segs.len() == 2 && segs[1].start == 3, || format!("[0,0,0,5,5,5] gave {segs:?}"))?;
    Ok(format!("100 instances ({constant} constant), [0,0,0,5,5,5]/m=1 cut at 3"))
}

// ------------------------------------------------------ entropy/diversity

fn entropy_criterion() -> Outcome {
    let mut notes = Vec::new();
    for n in [2usize, 4, 16] {
        let uniform = AttentionMatrix::new(vec![vec![1.0 / n as f64; n]; n], 1).map_err(|e| e.to_string())?;
        let u = uniqueness(&uniform);
        check(u.iter().all(|x| (x - 1.0).abs() <= 1e-9), || format!("uniform n={n}: {u:?}"))?;
        let one_hot: Vec<Vec<f64>> = (0..n).map(|t| (0..n).map(|j| f64::from(u8::from(j == t))).collect()).collect();
        let u = uniqueness(&AttentionMatrix::new(one_hot, 1).map_err(|e| e.to_string())?);
        check(u.iter().all(|&x| x == 0.0), || format!("one-hot n={n}: {u:?}"))?;
        notes.push(n.to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x454e);
    for (n, block) in [(8usize, 2usize), (30, 7), (61, 60)] {
        let f = random_unit(&mut rng, 16);
        let d = block_diversity(&vec![f; n], block).map_err(|e| e.to_string())?;
        check(d.iter().all(|x| (x - 1.0).abs() <= 1e-9), || format!("identical n={n}: {d:?}"))?;
    }
    Ok(format!("uniform rows -> 1, one-hot -> 0 for n in {{{}}}; identical corpus diversity 1", notes.join(",")))
}

// --------------------------------------------------------------- geometry

fn geometry_criterion() -> Outcome {
    let margin = 0.10;
    let example = face_crop_rect(
        &[FaceBox::new(40, 40, 20, 20, 0.99).unwrap()],
        ImageDims::new(100, 100).unwrap(),
        margin,
    )
    .map_err(|e| e.to_string())?;
    check(example == CropRect { x0: 38, y0: 38, x1: 62, y1: 100 }, || format!("worked example gave {example:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x4745);
    for case in 0..10_000 {
        let (w, h) = (rng.random_range(1..=640u32), rng.random_range(1..=480u32));
        let dims = ImageDims::new(w, h).unwrap();
        let faces: Vec<FaceBox> = (0..rng.random_range(1..=4))
            .map(|_| {
                let x = rng.random_range(0..w);
                let y = rng.random_range(0..h);
                let fw = rng.random_range(1..=w - x);
                let fh = rng.random_range(1..=h - y);
                FaceBox::new(x, y, fw, fh, 0.9).unwrap()
            })
            .collect();
        let m = if case % 4 == 0 { rng.random_range(0.0..0.5) } else { margin };
        let crop = face_crop_rect(&faces, dims, m).map_err(|e| format!("case {case}: {e}"))?;
        let ux0 = faces.iter().map(|f| f.x).min().unwrap();
        let uy0 = faces.iter().map(|f| f.y).min().unwrap();
        let ux1 = faces.iter().map(|f| (f.x + f.w).min(w)).max().unwrap();
        let uy1 = faces.iter().map(|f| (f.y + f.h).min(h)).max().unwrap();
        check(crop.x0 < crop.x1 && crop.x1 <= w && crop.y0 < crop.y1, || format!("case {case}: {crop:?} out of {w}x{h}"))?;
        check(crop.y1 == h, || format!("case {case}: bottom {} != {h}", crop.y1))?;
        check(crop.x0 <= ux0 && crop.y0 <= uy0 && crop.x1 >= ux1 && crop.y1 >= uy1, || {
            format!("case {case}: {crop:?} misses union ({ux0},{uy0})-({ux1},{uy1})")
        })?;
    }
    Ok("10000 random face sets within bounds; worked example (38,38,62,100)".into())
}

// -------------------------------------------------------------- shot list

fn numbered(items: &[&str]) -> String {
    items.iter().enumerate().map(|(i, t)| format!("{}. {t}\n", i + 1)).collect()
}

fn shotlist_criterion() -> Outcome {
    let clean: Vec<String> = (1..=9).map(|i| format!("guests sharing moment {i}")).collect();
    let clean_refs: Vec<&str> = clean.iter().map(String::as_str).collect();
    let clean_text = numbered(&clean_refs);
    let mut dirty_refs = clean_refs.clone();
    dirty_refs[4] = "a Close-Up of the cake";
    let dirty_text = numbered(&dirty_refs);
    let mut wide_refs = clean_refs.clone();
    wide_refs[0] = "a wide shot of the room";
    let wide_text = numbered(&wide_refs);

    let spec = PromptSpec::new("a birthday party", 9).map_err(|e| e.to_string())?;
    let policy = RejectionPolicy::default();
    let params = LmParams::default();
    let verify = |list: &eventshot_core::model::ShotList| -> Result<(), String> {
        check(list.ideas.len() == 9, || format!("list has {} ideas", list.ideas.len()))?;
        let hits = find_rejected_terms(&list.ideas, &policy);
        check(hits.is_empty(), || format!("returned list has rejected terms {hits:?}"))
    };

    let lm = ScriptedLm::new(vec![clean_text.clone()]);
    let list = generate_shotlist(&spec, &policy, &params, &lm).map_err(|e| e.to_string())?;
    check(list.provenance.attempt_count == 1, || format!("clean: {} attempts", list.provenance.attempt_count))?;
    verify(&list)?;

    let lm = ScriptedLm::new(vec![dirty_text, clean_text.clone()]);
    let list = generate_shotlist(&spec, &policy, &params, &lm).map_err(|e| e.to_string())?;
    check(list.provenance.attempt_count == 2, || format!("retry: {} attempts", list.provenance.attempt_count))?;
    verify(&list)?;

    let lm = ScriptedLm::repeating(wide_text);
    match generate_shotlist(&spec, &policy, &params, &lm) {
        Err(ShotListError::RetriesExhausted { attempts: 5, .. }) if lm.calls() == 5 => {}
        other => return Err(format!("exhaustion: {other:?} after {} calls", lm.calls())),
    }

    for event in ["a birthday party", "a wine tasting event", "a graduation"] {
        let spec = PromptSpec::new(event, 9).map_err(|e| e.to_string())?;
        verify(&generate_shotlist(&spec, &policy, &params, &PlannerLm).map_err(|e| e.to_string())?)?;
    }
    Ok("attempt counts 1 and 2, RetriesExhausted after exactly 5 calls, all lists 9 clean ideas".into())
}

// ------------------------------------------------------------ end to end

const BIN: &str = env!("CARGO_BIN_EXE_eventshot");

fn cli(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn pipeline_once(dir: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    cli(dir, &["fixture", "--out", "fx", "--frames", "60"])?;
    for args in [
        &["--workdir", "w", "plan", "--event", "a birthday party"][..],
        &["--workdir", "w", "ingest", "--source", "fx"],
        &["--workdir", "w", "faces"],
        &["--workdir", "w", "embed", "--kind", "frames"],
        &["--workdir", "w", "embed", "--kind", "ideas"],
        &["--workdir", "w", "select"],
        &["--workdir", "w", "collage", "--input", "w/portfolio.json"],
    ] {
        cli(dir, args)?;
    }
    let read = |p: &str| fs::read(dir.join(p)).map_err(|e| format!("{p}: {e}"));
    Ok((read("w/portfolio.json")?, read("w/portfolio.png")?))
}

fn e2e_criterion() -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (json_a, png_a) = pipeline_once(a.path())?;
    let (json_b, png_b) = pipeline_once(b.path())?;
    let elapsed = start.elapsed();
    check(json_a == json_b, || "portfolio JSON differs between runs".into())?;
    check(png_a == png_b, || "collage PNG differs between runs".into())?;

    let portfolio: serde_json::Value = serde_json::from_slice(&json_a).map_err(|e| e.to_string())?;
    let faces: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("w/faces.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let entries = portfolio["entries"].as_array().ok_or("no entries")?;
    check(entries.len() == 9, || format!("{} entries", entries.len()))?;
    for e in entries {
        let id = e["frame_id"].as_u64().ok_or("frame_id")?;
        let has_faces = faces["frames"]
            .as_array()
            .and_then(|fs| fs.iter().find(|f| f["frame_id"].as_u64() == Some(id)))
            .and_then(|f| f["faces"].as_array())
            .is_some_and(|f| !f.is_empty());
        check(has_faces, || format!("frame {id} is not in the face-filtered pool"))?;
    }

    let src = a.path().join("w/frames.emb");
    let (rows, manifest) = read_embeddings(&src).map_err(|e| e.to_string())?;
    let copy = a.path().join("copy.emb");
    write_embeddings(&copy, &rows, &manifest).map_err(|e| e.to_string())?;
    let (rows2, manifest2) = read_embeddings(&copy).map_err(|e| e.to_string())?;
    check(fs::read(&src).ok() == fs::read(&copy).ok(), || "re-encoded embeddings differ".into())?;
    let bits = |r: &[Vec<f32>]| r.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    check(bits(&rows) == bits(&rows2) && manifest == manifest2, || "embedding values changed".into())?;

    within(elapsed, 30.0)?;
    Ok(format!(
        "two runs byte-identical ({} B JSON, {} B PNG), 9 face-pool entries, {} x {} embeddings bit-exact, {:.2} s",
        json_a.len(),
        png_a.len(),
        rows.len(),
        manifest.dim,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------- bookkeeping

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn bookkeeping_criterion() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    fs::write(
        d.join("key.json"),
        r#"{"seed": 7, "entries": [
            {"event": "wine tasting", "left_method": "ours", "right_method": "baseline"},
            {"event": "birthday", "left_method": "baseline", "right_method": "ours"}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut votes = String::from("rater_id,event,choice\n");
    for r in 0..10 {
        votes += &format!("r{r},wine tasting,{}\n", if r < 5 { "left" } else { "right" });
        votes += &format!("r{r},birthday,{}\n", if r < 8 { "right" } else { "left" });
    }
    fs::write(d.join("votes.csv"), votes).map_err(|e| e.to_string())?;
    let out = cli(
        d,
        &["--workdir", "w", "evaluate", "tally", "--votes", "votes.csv", "--key", "key.json"],
    )?;
    let want = "event,method,wins,outcome\n\
                wine tasting,baseline,5,tie\nwine tasting,ours,5,tie\n\
                birthday,baseline,2,loss\nbirthday,ours,8,win\n\
                all,baseline,7,loss\nall,ours,13,win\n";
    check(out == want, || format!("tally output:\n{out}"))?;

    let own = [7.0, 8.0, 6.0, 9.0, 7.0, 8.0, 7.0, 6.0, 8.0, 8.0];
    let lm = [7.0, 7.0, 6.0, 8.0, 7.0, 7.0, 6.0, 8.0, 7.0, 7.0];
    let mut csv = String::from("rater_id,own_score,lm_score\n");
    for i in 0..10 {
        csv += &format!("r{i},{},{}\n", own[i], lm[i]);
    }
    fs::write(d.join("scores.csv"), csv).map_err(|e| e.to_string())?;
    let out = cli(d, &["--workdir", "w", "evaluate", "scores", "--scores", "scores.csv"])?;
    let mut lines = out.lines();
    check(lines.next() == Some("source,n,mean,std"), || format!("scores header: {out}"))?;
    let mut means = Vec::new();
    for (name, xs, want_mean) in [("own", &own, 7.4), ("lm", &lm, 7.0)] {
        let line = lines.next().ok_or("missing row")?;
        let cols: Vec<&str> = line.split(',').collect();
        let (mean, std) = mean_std(xs);
        let got_mean: f64 = cols[2].parse().map_err(|_| format!("bad mean in {line}"))?;
        let got_std: f64 = cols[3].parse().map_err(|_| format!("bad std in {line}"))?;
        check(cols[0] == name && cols[1] == "10", || format!("row {line}"))?;
        check((got_mean - want_mean).abs() <= 1e-9, || format!("{name} mean {got_mean} != {want_mean}"))?;
        check((got_mean - mean).abs() <= 1e-9 && (got_std - std).abs() <= 1e-9, || {
            format!("{name}: got ({got_mean}, {got_std}) want ({mean}, {std})")
        })?;
        means.push(format!("{got_mean} +/- {got_std:.4}"));
    }
    Ok(format!("5/5 tie and 8/2 win tallied; means {}", means.join(" vs ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("hygiene oracle", hygiene_criterion),
        ("retrieval oracle", retrieval_criterion),
        ("knapsack oracle", knapsack_criterion),
        ("KTS oracle", kts_criterion),
        ("entropy/diversity checks", entropy_criterion),
        ("geometry property", geometry_criterion),
        ("shot-list contract", shotlist_criterion),
        ("end-to-end determinism", e2e_criterion),
        ("figure bookkeeping", bookkeeping_criterion),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS [{}/{}] {name}: {detail}", i + 1, criteria.len()),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}/{}] {name}: {why}", i + 1, criteria.len());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
