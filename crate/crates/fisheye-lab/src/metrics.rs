//! Image quality metrics and the paired-difference evaluation protocol:
//! PSNR, SSIM, their masked variants, and normal-approximation confidence
//! intervals over per-pair metric differences.
//!
//! Conventions fixed here so numbers are comparable across runs and tools:
//! PSNR peak comes from the buffer's sample format (255 for 8-bit scale,
//! 1.0 for unit floats); SSIM uses an 11×11 Gaussian window with σ = 1.5,
//! C1 = (0.01·L)², C2 = (0.03·L)², and Rec.601 luma for color inputs;
//! masked SSIM windows require full in-mask support. Aggregation uses
//! compensated summation, so results do not depend on parallelism.

use crate::pipeline::DatasetManifest;
use crate::warp::{
    build_warp_field, load_image, load_mask, pull_back_mask, rectify_image_with, ImageBuffer,
    ValidMask, WarpDirection, WarpError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

const SSIM_WINDOW: usize = 11;
const SSIM_RADIUS: usize = SSIM_WINDOW / 2;
const SSIM_SIGMA: f64 = 1.5;
/// Two-sided 95% normal quantile as conventionally printed; pinned so that
/// the default level reproduces published interval arithmetic digit for
/// digit instead of drifting in the 7th decimal.
const Z_95: f64 = 1.959964;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sample formats differ between inputs")]
    FormatMismatch,
    #[error("mask selects no usable pixels")]
    EmptyMask,
    #[error("image {width}x{height} is smaller than the {min}x{min} window")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("need at least 2 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("confidence level {level} is outside (0, 1)")]
    InvalidLevel { level: f64 },
    #[error("metric does not support {0}-channel buffers")]
    UnsupportedChannels(usize),
    #[error(transparent)]
    Warp(#[from] WarpError),
}

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn check_pair(a: &ImageBuffer, b: &ImageBuffer, mask: Option<&ValidMask>) -> Result<(), MetricsError> {
    if !a.same_shape(b) {
        return Err(MetricsError::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    if a.format != b.format {
        return Err(MetricsError::FormatMismatch);
    }
    if let Some(m) = mask {
        if m.width != a.width || m.height != a.height {
            return Err(MetricsError::DimensionMismatch(format!(
                "mask {}x{} vs image {}x{}",
                m.width, m.height, a.width, a.height
            )));
        }
        if m.count_true() == 0 {
            return Err(MetricsError::EmptyMask);
        }
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB: `10·log10(MAX² / MSE)`, MSE taken
/// over masked pixels and all channels. Identical inputs return positive
/// infinity; callers that aggregate must treat that as a sentinel.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer, mask: Option<&ValidMask>) -> Result<f64, MetricsError> {
    check_pair(a, b, mask)?;
    let mut sum = KahanSum::default();
    let mut n = 0usize;
    for y in 0..a.height {
        for x in 0..a.width {
            if mask.map_or(true, |m| m.get(x, y)) {
                for c in 0..a.channels {
                    let d = a.get(x, y, c) as f64 - b.get(x, y, c) as f64;
                    sum.add(d * d);
                }
                n += a.channels;
            }
        }
    }
    if n == 0 {
        return Err(MetricsError::EmptyMask);
    }
    let mse = sum.value() / n as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = a.peak() as f64;
    Ok(10.0 * (peak * peak / mse).log10())
}

fn luma(img: &ImageBuffer) -> Result<Vec<f64>, MetricsError> {
    let n = img.width * img.height;
    match img.channels {
        1 => Ok(img.data.iter().map(|&v| v as f64).collect()),
        3 => Ok((0..n)
            .map(|i| {
                let r = img.data[3 * i] as f64;
                let g = img.data[3 * i + 1] as f64;
                let b = img.data[3 * i + 2] as f64;
                0.299 * r + 0.587 * g + 0.114 * b
            })
            .collect()),
        c => Err(MetricsError::UnsupportedChannels(c)),
    }
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - SSIM_RADIUS as f64;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur, evaluated only where the full window fits.
/// Entries outside the interior are unspecified.
fn blur(src: &[f64], width: usize, height: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        for x in SSIM_RADIUS..width - SSIM_RADIUS {
            let mut acc = 0.0;
            for (i, &w) in k.iter().enumerate() {
                acc += w * src[y * width + x + i - SSIM_RADIUS];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
    for y in SSIM_RADIUS..height - SSIM_RADIUS {
        for x in SSIM_RADIUS..width - SSIM_RADIUS {
            let mut acc = 0.0;
            for (i, &w) in k.iter().enumerate() {
                acc += w * tmp[(y + i - SSIM_RADIUS) * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Marks window centers whose full 11×11 support lies inside the mask;
/// separable erosion.
fn erode_full_support(mask: &ValidMask) -> Vec<bool> {
    let (width, height) = (mask.width, mask.height);
    let mut tmp = vec![false; width * height];
    for y in 0..height {
        for x in SSIM_RADIUS..width - SSIM_RADIUS {
            tmp[y * width + x] =
                (0..SSIM_WINDOW).all(|i| mask.data[y * width + x + i - SSIM_RADIUS]);
        }
    }
    let mut out = vec![false; width * height];
    for y in SSIM_RADIUS..height - SSIM_RADIUS {
        for x in SSIM_RADIUS..width - SSIM_RADIUS {
            out[y * width + x] =
                (0..SSIM_WINDOW).all(|i| tmp[(y + i - SSIM_RADIUS) * width + x]);
        }
    }
    out
}

/// Mean local structural similarity over all fully supported windows.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer, mask: Option<&ValidMask>) -> Result<f64, MetricsError> {
    check_pair(a, b, mask)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(MetricsError::TooSmall {
            width: a.width,
            height: a.height,
            min: SSIM_WINDOW,
        });
    }
    let (width, height) = (a.width, a.height);
    let la = luma(a)?;
    let lb = luma(b)?;
    let k = gaussian_kernel();
    let mu_a = blur(&la, width, height, &k);
    let mu_b = blur(&lb, width, height, &k);
    let aa: Vec<f64> = la.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = lb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| x * y).collect();
    let m_aa = blur(&aa, width, height, &k);
    let m_bb = blur(&bb, width, height, &k);
    let m_ab = blur(&ab, width, height, &k);

    let support = mask.map(erode_full_support);
    let l = a.peak() as f64;
    let c1 = (0.01 * l) * (0.01 * l);
    let c2 = (0.03 * l) * (0.03 * l);

    let mut sum = KahanSum::default();
    let mut n = 0usize;
    for y in SSIM_RADIUS..height - SSIM_RADIUS {
        for x in SSIM_RADIUS..width - SSIM_RADIUS {
            let i = y * width + x;
            if let Some(s) = &support {
                if !s[i] {
                    continue;
                }
            }
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = m_aa[i] - ma * ma;
            let vb = m_bb[i] - mb * mb;
            let cov = m_ab[i] - ma * mb;
            let score = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            sum.add(score);
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricsError::EmptyMask);
    }
    Ok(sum.value() / n as f64)
}

/// Two-sided confidence interval for a mean. Serializes as
/// `{lower, upper, level, half_width, n, mean}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub half_width: f64,
    pub n: usize,
    pub mean: f64,
}

impl ConfidenceInterval {
    /// The no-significant-difference test: does the interval contain zero?
    pub fn contains_zero(&self) -> bool {
        self.lower <= 0.0 && 0.0 <= self.upper
    }
}

/// Normal-approximation interval for the mean of paired differences:
/// `mean ± z·s/√n` with the sample (n−1) standard deviation.
///
/// The z for level 0.95 is the pinned [`Z_95`]; other levels go through a
/// rational inverse-CDF approximation good to ~1e-9.
pub fn paired_diff_ci(diffs: &[f64], level: f64) -> Result<ConfidenceInterval, MetricsError> {
    let n = diffs.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples { n });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(MetricsError::InvalidLevel { level });
    }
    // Bit-identical samples have exactly zero spread; short-circuiting
    // avoids ulp-level variance from the mean rounding.
    let first = diffs[0];
    if diffs.iter().all(|&d| d == first) {
        return Ok(ConfidenceInterval {
            lower: first,
            upper: first,
            level,
            half_width: 0.0,
            n,
            mean: first,
        });
    }
    let mut s = KahanSum::default();
    for &d in diffs {
        s.add(d);
    }
    let mean = s.value() / n as f64;
    let mut sq = KahanSum::default();
    for &d in diffs {
        let e = d - mean;
        sq.add(e * e);
    }
    let sd = (sq.value() / (n - 1) as f64).sqrt();
    let z = if (level - 0.95).abs() < 1e-12 {
        Z_95
    } else {
        inverse_normal_cdf(0.5 + 0.5 * level)
    };
    let half = z * sd / (n as f64).sqrt();
    let lower = mean - half;
    let upper = mean + half;
    Ok(ConfidenceInterval {
        lower,
        upper,
        level,
        half_width: 0.5 * (upper - lower),
        n,
        mean,
    })
}

/// Inverse standard normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9 over (0, 1)).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must be in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |p_tail: f64| -> f64 {
        let q = (-2.0 * p_tail.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// Per-pair scores for one dataset entry. An infinite PSNR (identical
/// pixels under the mask) is stored as `None` so the report stays
/// JSON-serializable; infinite pairs are counted separately and excluded
/// from mean PSNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub id: String,
    pub category: String,
    pub psnr_db: Option<f64>,
    pub ssim: f64,
}

/// One aggregate row: a preset category, or the full dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub category: String,
    pub count: usize,
    /// Mean over pairs with finite PSNR; absent when every pair was exact.
    pub mean_psnr_db: Option<f64>,
    pub infinite_psnr_count: usize,
    pub mean_ssim: f64,
}

/// Evaluation results in the per-category plus full-dataset layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub pairs: Vec<PairScore>,
    pub categories: Vec<ReportRow>,
    pub overall: ReportRow,
    /// Entries that could not be scored, with reasons; never counted.
    pub skipped: Vec<String>,
}

impl QualityReport {
    /// Plain-text rendering: aligned columns, one row per category and a
    /// closing full-dataset row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>15} {:>8} {:>10}",
            "category", "pairs", "mean PSNR (dB)", "inf", "mean SSIM"
        );
        let mut row = |r: &ReportRow| {
            let p = r
                .mean_psnr_db
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<16} {:>6} {:>15} {:>8} {:>10.4}",
                r.category, r.count, p, r.infinite_psnr_count, r.mean_ssim
            );
        };
        for r in &self.categories {
            row(r);
        }
        row(&self.overall);
        out
    }
}

fn aggregate(category: &str, scores: &[&PairScore]) -> ReportRow {
    let mut psnr_sum = KahanSum::default();
    let mut ssim_sum = KahanSum::default();
    let mut finite = 0usize;
    let mut infinite = 0usize;
    for s in scores {
        match s.psnr_db {
            Some(v) => {
                psnr_sum.add(v);
                finite += 1;
            }
            None => infinite += 1,
        }
        ssim_sum.add(s.ssim);
    }
    ReportRow {
        category: category.to_string(),
        count: scores.len(),
        mean_psnr_db: (finite > 0).then(|| psnr_sum.value() / finite as f64),
        infinite_psnr_count: infinite,
        mean_ssim: ssim_sum.value() / scores.len().max(1) as f64,
    }
}

/// How predictions are produced during [`evaluate_pairs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode<'a> {
    /// Rectify each fisheye with its own ground-truth parameters (the
    /// oracle upper bound of the pipeline).
    QuickRect,
    /// Load externally produced rectifications named `<id>.png` from this
    /// directory (e.g. a trained model's outputs).
    FullPipeline { predictions: &'a Path },
}

/// Scores rectifications against ground-truth perspectives for every
/// manifest entry, masked by the geometric validity of the pair, and
/// aggregates per category and overall. Unreadable or mismatched entries
/// are skipped and reported, not fatal.
pub fn evaluate_pairs(
    manifest: &DatasetManifest,
    root: &Path,
    mode: EvalMode,
) -> Result<QualityReport, MetricsError> {
    let results: Vec<Result<PairScore, String>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let fail = |m: String| format!("{}: {}", entry.id, m);
            let persp = load_image(&root.join(&entry.perspective_path)).map_err(|e| fail(e.to_string()))?;
            let fish_mask = load_mask(&root.join(&entry.mask_path)).map_err(|e| fail(e.to_string()))?;
            let size = (persp.width, persp.height);
            let field = build_warp_field(&entry.params, size, WarpDirection::Rectify, entry.theta_max)
                .map_err(|e| fail(e.to_string()))?;
            let rect_supported =
                pull_back_mask(&field, &fish_mask).map_err(|e| fail(e.to_string()))?;
            let (prediction, pred_mask) = match mode {
                EvalMode::QuickRect => {
                    let fish =
                        load_image(&root.join(&entry.fisheye_path)).map_err(|e| fail(e.to_string()))?;
                    let (rect, rect_mask) =
                        rectify_image_with(&fish, &entry.params, entry.theta_max, 0.0)
                            .map_err(|e| fail(e.to_string()))?;
                    (rect, rect_mask)
                }
                EvalMode::FullPipeline { predictions } => {
                    let img = load_image(&predictions.join(format!("{}.png", entry.id)))
                        .map_err(|e| fail(e.to_string()))?;
                    let full = ValidMask::all_true(img.width, img.height);
                    (img, full)
                }
            };
            let mask = pred_mask
                .intersect(&rect_supported)
                .map_err(|e| fail(e.to_string()))?;
            let p = psnr(&prediction, &persp, Some(&mask)).map_err(|e| fail(e.to_string()))?;
            let s = ssim(&prediction, &persp, Some(&mask)).map_err(|e| fail(e.to_string()))?;
            Ok(PairScore {
                id: entry.id.clone(),
                category: entry.category.clone(),
                psnr_db: p.is_finite().then_some(p),
                ssim: s,
            })
        })
        .collect();

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(s) => pairs.push(s),
            Err(msg) => skipped.push(msg),
        }
    }
    let mut names: Vec<String> = pairs.iter().map(|p| p.category.clone()).collect();
    names.sort();
    names.dedup();
    let categories = names
        .iter()
        .map(|name| {
            let members: Vec<&PairScore> = pairs.iter().filter(|p| &p.category == name).collect();
            aggregate(name, &members)
        })
        .collect();
    let all: Vec<&PairScore> = pairs.iter().collect();
    let overall = aggregate("full dataset", &all);
    Ok(QualityReport {
        pairs,
        categories,
        overall,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testimage::test_scene;
    use crate::warp::SampleFormat;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn uniform(width: usize, height: usize, v: f32) -> ImageBuffer {
        ImageBuffer::from_fn(width, height, 1, SampleFormat::U8, |_, _, _| v)
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let img = test_scene(32, 32);
        assert_eq!(psnr(&img, &img, None).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_uniform_offsets() {
        let a = uniform(16, 16, 100.0);
        let b = uniform(16, 16, 116.0);
        let got = psnr(&a, &b, None).unwrap();
        let expect = 10.0 * (65025.0f64 / 256.0).log10();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!((got - 24.0486).abs() < 5e-4);

        let black = uniform(16, 16, 0.0);
        let white = uniform(16, 16, 255.0);
        assert_eq!(psnr(&black, &white, None).unwrap(), 0.0);
    }

    #[test]
    fn psnr_unit_float_peak() {
        let a = ImageBuffer::from_fn(8, 8, 1, SampleFormat::F32, |_, _, _| 0.25);
        let b = ImageBuffer::from_fn(8, 8, 1, SampleFormat::F32, |_, _, _| 0.75);
        // MSE = 0.25 against peak 1.0.
        let got = psnr(&a, &b, None).unwrap();
        assert!((got - 10.0 * (1.0f64 / 0.25).log10()).abs() < 1e-12);
    }

    #[test]
    fn psnr_symmetry_is_exact() {
        let a = test_scene(48, 48);
        let b = crate::testimage::test_scene_indexed(48, 48, 2);
        assert_eq!(psnr(&a, &b, None).unwrap(), psnr(&b, &a, None).unwrap());
    }

    #[test]
    fn psnr_decreases_with_error_magnitude() {
        let base = uniform(16, 16, 60.0);
        let mut last = f64::INFINITY;
        for e in 1..=40 {
            let noisy = uniform(16, 16, 60.0 + e as f32);
            let v = psnr(&base, &noisy, None).unwrap();
            assert!(v < last, "e={e}: {v} !< {last}");
            last = v;
        }
    }

    #[test]
    fn psnr_full_true_mask_matches_unmasked_bit_exactly() {
        let a = test_scene(40, 40);
        let b = crate::testimage::test_scene_indexed(40, 40, 1);
        let mask = ValidMask::all_true(40, 40);
        assert_eq!(psnr(&a, &b, None).unwrap(), psnr(&a, &b, Some(&mask)).unwrap());
        assert_eq!(ssim(&a, &b, None).unwrap(), ssim(&a, &b, Some(&mask)).unwrap());
    }

    #[test]
    fn psnr_mask_restricts_region() {
        let a = uniform(16, 16, 10.0);
        let mut b = uniform(16, 16, 10.0);
        // Corrupt the right half; a left-half mask must see a clean image.
        for y in 0..16 {
            for x in 8..16 {
                b.set(x, y, 0, 200.0);
            }
        }
        let mut mask = ValidMask::all_true(16, 16);
        for y in 0..16 {
            for x in 8..16 {
                mask.data[y * 16 + x] = false;
            }
        }
        assert_eq!(psnr(&a, &b, Some(&mask)).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &b, None).unwrap() < 20.0);
    }

    #[test]
    fn psnr_error_cases() {
        let a = uniform(8, 8, 1.0);
        let b = uniform(8, 9, 1.0);
        assert!(matches!(
            psnr(&a, &b, None),
            Err(MetricsError::DimensionMismatch(_))
        ));
        let empty = ValidMask {
            width: 8,
            height: 8,
            data: vec![false; 64],
        };
        assert!(matches!(
            psnr(&a, &a, Some(&empty)),
            Err(MetricsError::EmptyMask)
        ));
        let f = ImageBuffer::new(8, 8, 1, SampleFormat::F32);
        assert!(matches!(psnr(&a, &f, None), Err(MetricsError::FormatMismatch)));
    }

    #[test]
    fn ssim_identical_is_one() {
        let img = test_scene(64, 64);
        assert_eq!(ssim(&img, &img, None).unwrap(), 1.0);
    }

    #[test]
    fn ssim_negative_image_scores_low() {
        // Mid-contrast texture: ±60 gray levels at a ~13 px period, so
        // local window variance dwarfs the stabilizing constants.
        let img = ImageBuffer::from_fn(64, 64, 1, SampleFormat::U8, |x, y, _| {
            let v = 127.5
                + 60.0 * (x as f32 * 0.47).sin() * (y as f32 * 0.31).cos()
                + 25.0 * ((x + 2 * y) as f32 * 0.23).sin();
            v.clamp(0.0, 255.0).round()
        });
        let neg = ImageBuffer {
            data: img.data.iter().map(|&v| 255.0 - v).collect(),
            ..img.clone()
        };
        let s = ssim(&img, &neg, None).unwrap();
        assert!(s < 0.3, "negative image SSIM {s}");
    }

    #[test]
    fn ssim_symmetry() {
        let a = test_scene(48, 48);
        let b = crate::testimage::test_scene_indexed(48, 48, 4);
        let ab = ssim(&a, &b, None).unwrap();
        let ba = ssim(&b, &a, None).unwrap();
        assert!((ab - ba).abs() <= 1e-12);
    }

    #[test]
    fn ssim_too_small() {
        let a = uniform(10, 12, 1.0);
        assert!(matches!(
            ssim(&a, &a, None),
            Err(MetricsError::TooSmall { .. })
        ));
    }

    #[test]
    fn ssim_masked_requires_full_support() {
        let a = test_scene(32, 32);
        let b = crate::testimage::test_scene_indexed(32, 32, 1);
        // Mask valid only on the left 20 columns: centers with x ≥ 15 lose
        // support, so the masked score differs from the unmasked one.
        let mut mask = ValidMask::all_true(32, 32);
        for y in 0..32 {
            for x in 20..32 {
                mask.data[y * 32 + x] = false;
            }
        }
        let masked = ssim(&a, &b, Some(&mask)).unwrap();
        let unmasked = ssim(&a, &b, None).unwrap();
        assert!(masked != unmasked);
        // A mask with no fully supported window errors out.
        let mut sparse = ValidMask {
            width: 32,
            height: 32,
            data: vec![false; 32 * 32],
        };
        sparse.data[5 * 32 + 5] = true;
        assert!(matches!(
            ssim(&a, &b, Some(&sparse)),
            Err(MetricsError::EmptyMask)
        ));
    }

    /// Direct-definition SSIM: explicit 2-D window, covariance computed
    /// from weighted deviations rather than the E[x²]−μ² rearrangement.
    fn ssim_oracle(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
        let (w, h) = (a.width, a.height);
        let la = luma(a).unwrap();
        let lb = luma(b).unwrap();
        let mut win = [[0.0f64; SSIM_WINDOW]; SSIM_WINDOW];
        let mut norm = 0.0;
        for (i, row) in win.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let dy = i as f64 - 5.0;
                let dx = j as f64 - 5.0;
                *v = (-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5)).exp();
                norm += *v;
            }
        }
        let l = a.peak() as f64;
        let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
        let mut total = 0.0;
        let mut count = 0usize;
        for cy in 5..h - 5 {
            for cx in 5..w - 5 {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let p = (cy + i - 5) * w + cx + j - 5;
                        ma += win[i][j] * la[p];
                        mb += win[i][j] * lb[p];
                    }
                }
                ma /= norm;
                mb /= norm;
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let p = (cy + i - 5) * w + cx + j - 5;
                        let da = la[p] - ma;
                        let db = lb[p] - mb;
                        va += win[i][j] * da * da;
                        vb += win[i][j] * db * db;
                        cov += win[i][j] * da * db;
                    }
                }
                va /= norm;
                vb /= norm;
                cov /= norm;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_matches_direct_definition_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let a = crate::testimage::test_scene_indexed(24, 20, trial);
            // Mix of structured perturbations and raw noise.
            let b = ImageBuffer {
                data: a
                    .data
                    .iter()
                    .map(|&v| {
                        (v + rng.gen_range(-30.0..30.0)).clamp(0.0, 255.0).round()
                    })
                    .collect(),
                ..a.clone()
            };
            let fast = ssim(&a, &b, None).unwrap();
            let slow = ssim_oracle(&a, &b);
            assert!(
                (fast - slow).abs() <= 1e-3,
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn ci_zero_variance() {
        let ci = paired_diff_ci(&[0.37, 0.37, 0.37], 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.37, 0.37));
        assert_eq!(ci.half_width, 0.0);
        assert_eq!(ci.mean, 0.37);
        assert_eq!(ci.n, 3);
    }

    #[test]
    fn ci_hand_computed_two_sample() {
        let ci = paired_diff_ci(&[-1.0, 1.0], 0.95).unwrap();
        // s = √2, so the half width is exactly z·√2/√2 = z.
        assert_eq!(ci.mean, 0.0);
        assert_eq!(ci.half_width, 1.959964);
        assert_eq!(ci.lower, -1.959964);
        assert_eq!(ci.upper, 1.959964);
        assert!(ci.contains_zero());
    }

    #[test]
    fn ci_zero_membership_matches_mean_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(2..40);
            let shift = rng.gen_range(-0.5..0.5);
            let diffs: Vec<f64> = (0..n).map(|_| shift + rng.gen_range(-1.0..1.0)).collect();
            let ci = paired_diff_ci(&diffs, 0.95).unwrap();
            assert_eq!(ci.contains_zero(), ci.mean.abs() <= ci.half_width);
        }
    }

    #[test]
    fn ci_rejects_degenerate_input() {
        assert!(matches!(
            paired_diff_ci(&[1.0], 0.95),
            Err(MetricsError::TooFewSamples { n: 1 })
        ));
        assert!(matches!(
            paired_diff_ci(&[1.0, 2.0], 1.0),
            Err(MetricsError::InvalidLevel { .. })
        ));
    }

    #[test]
    fn ci_serializes_all_fields() {
        let ci = paired_diff_ci(&[-1.0, 0.5, 2.0], 0.95).unwrap();
        let json = serde_json::to_value(&ci).unwrap();
        for key in ["lower", "upper", "level", "half_width", "n", "mean"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn inverse_normal_cdf_reference_points() {
        assert!((inverse_normal_cdf(0.975) - 1.959963985).abs() < 1e-7);
        assert!((inverse_normal_cdf(0.995) - 2.575829304).abs() < 1e-7);
        assert!((inverse_normal_cdf(0.95) - 1.644853627).abs() < 1e-7);
        assert!((inverse_normal_cdf(0.5)).abs() < 1e-9);
        assert!((inverse_normal_cdf(0.001) + inverse_normal_cdf(0.999)).abs() < 1e-7);
    }

    #[test]
    fn ci_width_scales_as_inverse_sqrt_n() {
        // Mean log-width over many repeats per n, regressed against log n;
        // the slope must sit at −1/2.
        let ns = [10usize, 32, 100, 316, 1000, 3162, 10000];
        let repeats = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(424242);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in &ns {
            let mut log_sum = 0.0;
            for _ in 0..repeats {
                let diffs: Vec<f64> = (0..n)
                    .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect();
                let ci = paired_diff_ci(&diffs, 0.95).unwrap();
                log_sum += (2.0 * ci.half_width).log10();
            }
            xs.push((n as f64).log10());
            ys.push(log_sum / repeats as f64);
        }
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
        let slope = num / den;
        assert!(
            (slope + 0.5).abs() <= 0.02,
            "log-width slope {slope} not within -0.5 ± 0.02"
        );
    }

    proptest! {
        #[test]
        fn ci_is_ordered_and_centered(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..50);
            let diffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let ci = paired_diff_ci(&diffs, 0.95).unwrap();
            prop_assert!(ci.lower <= ci.upper);
            prop_assert!((ci.half_width - 0.5 * (ci.upper - ci.lower)).abs() <= 1e-15);
            prop_assert!((0.5 * (ci.lower + ci.upper) - ci.mean).abs() <= 1e-12);
        }

        // PSNR is invariant under swapping, masking with all-true, and
        // reflects only the masked region.
        #[test]
        fn psnr_swap_invariance(seed in 0u64..50) {
            let a = crate::testimage::test_scene_indexed(20, 20, seed as u32);
            let b = crate::testimage::test_scene_indexed(20, 20, seed as u32 + 1);
            prop_assert_eq!(psnr(&a, &b, None).unwrap(), psnr(&b, &a, None).unwrap());
        }
    }
}
