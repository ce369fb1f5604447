//! Dataset factory and evaluation harness: batch-synthesizes labeled
//! fisheye/perspective pairs from a directory of perspective images,
//! persists a JSONL manifest, and drives the metrics end to end.
//!
//! Every sample is the triple (fisheye image, perspective image, camera
//! parameters); the manifest additionally records the valid-region mask,
//! the preset provenance, a train/test split, and the seed that selected
//! the presets, so any run can be reproduced or audited file by file.
//! Manifests are JSONL with a fixed key order: regenerating with the same
//! corpus and seed yields byte-identical output.

use crate::camera::{check_monotonic, CameraError, CameraParams, DEFAULT_THETA_MAX};
use crate::metrics::{evaluate_pairs, EvalMode, MetricsError, QualityReport};
use crate::presets::{adapt_to_size, sample_presets, Preset, PresetError};
use crate::warp::{load_image, save_image, save_mask, synthesize_fisheye_with, WarpError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus directory {0} contains no readable images")]
    EmptyCorpus(PathBuf),
    #[error("preset list is empty")]
    EmptyPresetList,
    #[error("failed to write {path}: {source}")]
    WriteFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("manifest entry {id}: {reason}")]
    InvalidEntry { id: String, reason: String },
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One dataset record; all paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Original corpus file name the pair was synthesized from.
    pub source: String,
    pub perspective_path: String,
    pub fisheye_path: String,
    pub mask_path: String,
    pub preset_name: String,
    pub category: String,
    pub split: Split,
    /// Seed that drew this source image's preset subset.
    pub seed: u64,
    pub theta_max: f64,
    pub width: usize,
    pub height: usize,
    pub params: CameraParams,
}

// Field names metrics::evaluate_pairs reads: perspective/fisheye/mask are
// exposed under short accessors to keep call sites tidy.
impl ManifestEntry {
    pub(crate) fn validate(&self) -> Result<(), PipelineError> {
        if !check_monotonic(&self.params.distortion, self.theta_max) {
            return Err(PipelineError::InvalidEntry {
                id: self.id.clone(),
                reason: format!("parameters not admissible over theta_max {}", self.theta_max),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn split(&self, which: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == which)
    }
}

/// Knobs for [`generate_dataset`]. Defaults are desk scale: 4 presets per
/// image, an 80/20 train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub per_image_presets: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub theta_max: f64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            per_image_presets: 4,
            seed: 0,
            train_fraction: 0.8,
            theta_max: DEFAULT_THETA_MAX,
        }
    }
}

/// Deterministic per-image seed derivation (splitmix64 over the run seed
/// and image index), so images can be processed in parallel while each
/// draw stays scheduling-independent.
fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ (index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "png" || e == "jpg" || e == "jpeg"
    )
}

fn write_err(path: &Path) -> impl FnOnce(WarpError) -> PipelineError + '_ {
    move |e| match e {
        WarpError::Io(source) => PipelineError::WriteFailure {
            path: path.to_path_buf(),
            source,
        },
        other => PipelineError::Warp(other),
    }
}

/// Synthesizes a labeled dataset from every readable image in
/// `corpus_dir`: for each source, a seeded draw of `per_image_presets`
/// presets, one fisheye + mask per draw, a re-encoded perspective copy,
/// and a JSONL manifest at `out_dir/manifest.jsonl`.
///
/// Source dimensions are preserved; preset intrinsics are rescaled to each
/// image. Unreadable sources are logged and skipped.
pub fn generate_dataset(
    corpus_dir: &Path,
    presets: &[Preset],
    config: &GenerateConfig,
    out_dir: &Path,
) -> Result<DatasetManifest, PipelineError> {
    if presets.is_empty() {
        return Err(PipelineError::EmptyPresetList);
    }
    let mut sources: Vec<PathBuf> = std::fs::read_dir(corpus_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image_file(p))
        .collect();
    sources.sort();
    if sources.is_empty() {
        return Err(PipelineError::EmptyCorpus(corpus_dir.to_path_buf()));
    }
    for sub in ["perspective", "fisheye", "mask"] {
        std::fs::create_dir_all(out_dir.join(sub))?;
    }

    let results: Vec<Result<Vec<ManifestEntry>, PipelineError>> = sources
        .par_iter()
        .enumerate()
        .map(|(index, src)| {
            let source_name = src
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let stem = src
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("img{index}"));
            let img = match load_image(src) {
                Ok(img) => img,
                Err(e) => {
                    log::warn!("skipping unreadable source {}: {e}", src.display());
                    return Ok(Vec::new());
                }
            };
            let image_seed = derive_seed(config.seed, index as u64);
            let chosen = sample_presets(presets, config.per_image_presets, image_seed)?;
            let perspective_rel = format!("perspective/{stem}.png");
            save_image(&img, &out_dir.join(&perspective_rel))
                .map_err(write_err(&out_dir.join(&perspective_rel)))?;
            let mut entries = Vec::with_capacity(chosen.len());
            for preset in chosen {
                let id = format!("{stem}_{}", preset.name);
                let params = adapt_to_size(&preset.params, img.width, img.height);
                let (fish, mask) =
                    synthesize_fisheye_with(&img, &params, config.theta_max, 0.0)?;
                let fisheye_rel = format!("fisheye/{id}.png");
                let mask_rel = format!("mask/{id}.png");
                save_image(&fish, &out_dir.join(&fisheye_rel))
                    .map_err(write_err(&out_dir.join(&fisheye_rel)))?;
                save_mask(&mask, &out_dir.join(&mask_rel))
                    .map_err(write_err(&out_dir.join(&mask_rel)))?;
                entries.push(ManifestEntry {
                    id,
                    source: source_name.clone(),
                    perspective_path: perspective_rel.clone(),
                    fisheye_path: fisheye_rel,
                    mask_path: mask_rel,
                    preset_name: preset.name.clone(),
                    category: preset.category.to_string(),
                    split: Split::Train, // assigned below, over the full set
                    seed: image_seed,
                    theta_max: config.theta_max,
                    width: img.width,
                    height: img.height,
                    params,
                });
            }
            Ok(entries)
        })
        .collect();

    let mut entries = Vec::new();
    for r in results {
        entries.extend(r?);
    }
    if entries.is_empty() {
        return Err(PipelineError::EmptyCorpus(corpus_dir.to_path_buf()));
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));

    // Seeded split: permute ids, mark the first round(n·fraction) train.
    let n = entries.len();
    let n_train = (n as f64 * config.train_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX));
    for i in 0..n {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
    }
    for (rank, &i) in order.iter().enumerate() {
        entries[i].split = if rank < n_train { Split::Train } else { Split::Test };
    }

    let manifest = DatasetManifest { entries };
    write_manifest(&manifest, &out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}

/// Serializes one entry per line with the struct's canonical key order.
pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<(), PipelineError> {
    let mut out = String::new();
    for entry in &manifest.entries {
        out.push_str(&serde_json::to_string(entry).expect("manifest entries serialize"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| PipelineError::WriteFailure {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses and re-validates a JSONL manifest: every line must decode to an
/// entry with valid, admissible parameters, and ids must be unique.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest, PipelineError> {
    let text = std::fs::read_to_string(path)?;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| PipelineError::ParseError {
                line: i + 1,
                message: e.to_string(),
            })?;
        entry.validate()?;
        if !seen.insert(entry.id.clone()) {
            return Err(PipelineError::InvalidEntry {
                id: entry.id.clone(),
                reason: "duplicate id".to_string(),
            });
        }
        entries.push(entry);
    }
    Ok(DatasetManifest { entries })
}

/// Scores the manifest's rectifications and optionally persists the report
/// as pretty JSON. `QuickRect` rectifies each fisheye with its recorded
/// ground-truth parameters, which is the pipeline's oracle upper bound.
pub fn run_evaluation(
    manifest: &DatasetManifest,
    root: &Path,
    mode: EvalMode,
    out_path: Option<&Path>,
) -> Result<QualityReport, PipelineError> {
    let report = evaluate_pairs(manifest, root, mode)?;
    if let Some(path) = out_path {
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        std::fs::write(path, json).map_err(|source| PipelineError::WriteFailure {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset_catalog;
    use crate::testimage::test_scene_indexed;

    fn write_corpus(dir: &Path, count: usize, size: usize) {
        for i in 0..count {
            let img = test_scene_indexed(size, size, i as u32);
            save_image(&img, &dir.join(format!("scene{i:02}.png"))).unwrap();
        }
    }

    #[test]
    fn ten_image_corpus_yields_forty_entries() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        let out = tmp.path().join("data");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 10, 64);
        let manifest = generate_dataset(
            &corpus,
            &preset_catalog(),
            &GenerateConfig::default(),
            &out,
        )
        .unwrap();
        assert_eq!(manifest.entries.len(), 40);
        for e in &manifest.entries {
            for rel in [&e.perspective_path, &e.fisheye_path, &e.mask_path] {
                assert!(out.join(rel).is_file(), "{rel} missing");
            }
            assert_eq!((e.width, e.height), (64, 64));
            assert!(check_monotonic(&e.params.distortion, e.theta_max));
        }
        // Ids unique, one per (image, preset) pair.
        let ids: BTreeSet<&str> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids.len(), 40);
        // Manifest on disk reloads cleanly and matches.
        let loaded = load_manifest(&out.join("manifest.jsonl")).unwrap();
        assert_eq!(loaded, manifest);
    }

    #[test]
    fn generation_is_byte_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 3, 48);
        let cfg = GenerateConfig {
            seed: 9,
            ..GenerateConfig::default()
        };
        let out1 = tmp.path().join("a");
        let out2 = tmp.path().join("b");
        generate_dataset(&corpus, &preset_catalog(), &cfg, &out1).unwrap();
        generate_dataset(&corpus, &preset_catalog(), &cfg, &out2).unwrap();
        let m1 = std::fs::read(out1.join("manifest.jsonl")).unwrap();
        let m2 = std::fs::read(out2.join("manifest.jsonl")).unwrap();
        assert_eq!(m1, m2);
        // And a different seed changes the draw.
        let out3 = tmp.path().join("c");
        let cfg2 = GenerateConfig {
            seed: 10,
            ..GenerateConfig::default()
        };
        generate_dataset(&corpus, &preset_catalog(), &cfg2, &out3).unwrap();
        let m3 = std::fs::read(out3.join("manifest.jsonl")).unwrap();
        assert_ne!(m1, m3);
    }

    #[test]
    fn manifest_write_load_write_is_byte_stable() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 2, 48);
        let out = tmp.path().join("data");
        generate_dataset(&corpus, &preset_catalog(), &GenerateConfig::default(), &out).unwrap();
        let path = out.join("manifest.jsonl");
        let first = std::fs::read(&path).unwrap();
        let manifest = load_manifest(&path).unwrap();
        let rewritten = tmp.path().join("rewritten.jsonl");
        write_manifest(&manifest, &rewritten).unwrap();
        assert_eq!(first, std::fs::read(&rewritten).unwrap());
    }

    #[test]
    fn split_is_disjoint_and_ratioed() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 5, 48);
        let out = tmp.path().join("data");
        let manifest = generate_dataset(
            &corpus,
            &preset_catalog(),
            &GenerateConfig::default(),
            &out,
        )
        .unwrap();
        let train: BTreeSet<&str> = manifest.split(Split::Train).map(|e| e.id.as_str()).collect();
        let test: BTreeSet<&str> = manifest.split(Split::Test).map(|e| e.id.as_str()).collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.len() + test.len(), 20);
        let want = (20.0 * 0.8f64).round();
        assert!((train.len() as f64 - want).abs() <= 1.0);
    }

    #[test]
    fn bad_corpus_and_presets_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let empty = tmp.path().join("empty");
        std::fs::create_dir_all(&empty).unwrap();
        let out = tmp.path().join("out");
        assert!(matches!(
            generate_dataset(&empty, &preset_catalog(), &GenerateConfig::default(), &out),
            Err(PipelineError::EmptyCorpus(_))
        ));
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 1, 48);
        assert!(matches!(
            generate_dataset(&corpus, &[], &GenerateConfig::default(), &out),
            Err(PipelineError::EmptyPresetList)
        ));
    }

    #[test]
    fn corrupt_sources_are_skipped_not_fatal() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 2, 48);
        std::fs::write(corpus.join("broken.png"), b"not a png at all").unwrap();
        let out = tmp.path().join("data");
        let manifest = generate_dataset(
            &corpus,
            &preset_catalog(),
            &GenerateConfig { per_image_presets: 2, ..GenerateConfig::default() },
            &out,
        )
        .unwrap();
        assert_eq!(manifest.entries.len(), 4);
    }

    #[test]
    fn manifest_parse_errors_carry_line_numbers() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("manifest.jsonl");
        // Line 2 lacks the params field entirely.
        std::fs::write(&path, "\n{\"id\":\"x\"}\n").unwrap();
        match load_manifest(&path) {
            Err(PipelineError::ParseError { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("missing field"), "{message}");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn manifest_rejects_short_parameter_vectors() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 1, 48);
        let out = tmp.path().join("data");
        let manifest =
            generate_dataset(&corpus, &preset_catalog(), &GenerateConfig::default(), &out)
                .unwrap();
        let line = serde_json::to_string(&manifest.entries[0]).unwrap();
        // Drop one distortion coefficient: 8 parameters instead of 9.
        let crippled = line.replace(
            &format!("\"k\":{}", serde_json::to_string(&manifest.entries[0].params.distortion.k).unwrap()),
            "\"k\":[0.9,0.02,0.01,0.005]",
        );
        assert_ne!(line, crippled, "replacement must take effect");
        let path = tmp.path().join("short.jsonl");
        std::fs::write(&path, crippled + "\n").unwrap();
        match load_manifest(&path) {
            Err(PipelineError::ParseError { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("5"), "{message}");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 1, 48);
        let out = tmp.path().join("data");
        let manifest =
            generate_dataset(&corpus, &preset_catalog(), &GenerateConfig::default(), &out)
                .unwrap();
        let line = serde_json::to_string(&manifest.entries[0]).unwrap();
        let path = tmp.path().join("dup.jsonl");
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(
            load_manifest(&path),
            Err(PipelineError::InvalidEntry { .. })
        ));
    }

    #[test]
    fn oracle_evaluation_meets_round_trip_bound() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 3, 96);
        let out = tmp.path().join("data");
        let manifest = generate_dataset(
            &corpus,
            &preset_catalog(),
            &GenerateConfig { seed: 4, ..GenerateConfig::default() },
            &out,
        )
        .unwrap();
        let report_path = out.join("report.json");
        let report =
            run_evaluation(&manifest, &out, EvalMode::QuickRect, Some(&report_path)).unwrap();
        assert!(report.skipped.is_empty(), "skipped: {:?}", report.skipped);
        assert_eq!(report.overall.count, 12);
        let mean = report.overall.mean_psnr_db.unwrap();
        assert!(mean >= 25.0, "oracle mean PSNR {mean:.2}");
        // Every category present in the manifest has a row.
        let mut want: Vec<&str> = manifest.entries.iter().map(|e| e.category.as_str()).collect();
        want.sort();
        want.dedup();
        let got: Vec<&str> = report.categories.iter().map(|r| r.category.as_str()).collect();
        assert_eq!(got, want);
        assert!(report_path.is_file());

        // Re-running yields an identical report.
        let again = run_evaluation(&manifest, &out, EvalMode::QuickRect, None).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&report).unwrap()
        );
    }

    #[test]
    fn ground_truth_predictions_score_perfectly() {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        std::fs::create_dir_all(&corpus).unwrap();
        write_corpus(&corpus, 2, 64);
        let out = tmp.path().join("data");
        let manifest = generate_dataset(
            &corpus,
            &preset_catalog(),
            &GenerateConfig { per_image_presets: 2, ..GenerateConfig::default() },
            &out,
        )
        .unwrap();
        // Feed the ground-truth perspectives as "predictions".
        let preds = tmp.path().join("preds");
        std::fs::create_dir_all(&preds).unwrap();
        for e in &manifest.entries {
            std::fs::copy(out.join(&e.perspective_path), preds.join(format!("{}.png", e.id)))
                .unwrap();
        }
        let report = run_evaluation(
            &manifest,
            &out,
            EvalMode::FullPipeline { predictions: &preds },
            None,
        )
        .unwrap();
        assert!(report.skipped.is_empty(), "skipped: {:?}", report.skipped);
        for row in report.categories.iter().chain([&report.overall]) {
            assert_eq!(row.mean_ssim, 1.0, "{}", row.category);
            assert_eq!(row.infinite_psnr_count, row.count);
            assert_eq!(row.mean_psnr_db, None);
        }
    }
}
