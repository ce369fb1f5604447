//! Distortion parameter laboratory: a named catalog of 12 fisheye presets
//! spanning the usual lens families, single-coefficient sweep montages,
//! and seeded random preset selection.
//!
//! The concrete catalog numbers are repository configuration, chosen so
//! the synthesized images visually span minor barrel distortion through
//! full-circle fisheyes on the canonical 256×256 raster. k₁ carries the
//! dominant variation; k₂..k₅ are kept small but intentionally nonzero so
//! higher-order terms are always exercised.

use crate::camera::{
    check_monotonic, CameraParams, DistortionCoeffs, IntrinsicParams, DEFAULT_THETA_MAX,
};
use crate::warp::{synthesize_fisheye, ImageBuffer, WarpError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Edge length of the raster the catalog intrinsics are expressed for.
pub const CANONICAL_SIZE: usize = 256;

pub const DEFAULT_SWEEP_LO: f64 = -0.9;
pub const DEFAULT_SWEEP_HI: f64 = 1.0;
pub const DEFAULT_SWEEP_STEPS: usize = 8;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("requested {count} presets from a catalog of {len}")]
    CountOutOfRange { count: usize, len: usize },
    #[error("sweep range is empty: lo {lo} must be < hi {hi} with steps >= 2 (got {steps})")]
    EmptyRange { lo: f64, hi: f64, steps: usize },
    #[error("coefficient index {0} is outside 1..=5")]
    CoefficientOutOfRange(usize),
    #[error("unknown preset name {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Warp(#[from] WarpError),
}

/// Lens family a preset imitates, ordered roughly by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DistortionCategory {
    Minor,
    FullFrame,
    Drum,
    SevereDrum,
    FullCircle,
}

impl std::fmt::Display for DistortionCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DistortionCategory::Minor => "minor",
            DistortionCategory::FullFrame => "full-frame",
            DistortionCategory::Drum => "drum",
            DistortionCategory::SevereDrum => "severe-drum",
            DistortionCategory::FullCircle => "full-circle",
        };
        // pad, not write_str, so table columns can width-format categories
        f.pad(s)
    }
}

/// A named, admissible parameter set on the canonical raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub category: DistortionCategory,
    pub params: CameraParams,
}

fn preset(name: &str, category: DistortionCategory, f: f64, k: [f64; 5]) -> Preset {
    let c = (CANONICAL_SIZE - 1) as f64 / 2.0;
    Preset {
        name: name.to_string(),
        category,
        params: CameraParams::new(
            IntrinsicParams {
                fx: f,
                fy: f,
                cx: c,
                cy: c,
            },
            DistortionCoeffs { k },
        )
        .expect("catalog parameters are valid"),
    }
}

/// The default catalog: 12 presets across five severity categories, all
/// admissible over [`DEFAULT_THETA_MAX`]. Deterministic: every call
/// returns identical values.
pub fn preset_catalog() -> Vec<Preset> {
    use DistortionCategory::*;
    vec![
        preset("minor-1", Minor, 200.0, [0.98, 0.015, 0.008, 0.004, 0.002]),
        preset("minor-2", Minor, 180.0, [0.95, 0.02, 0.01, 0.005, 0.002]),
        preset("minor-3", Minor, 190.0, [1.0, -0.02, 0.01, -0.004, 0.002]),
        preset("fullframe-1", FullFrame, 150.0, [0.85, 0.04, 0.015, 0.006, 0.003]),
        preset("fullframe-2", FullFrame, 140.0, [0.8, 0.05, 0.02, 0.008, 0.004]),
        preset("fullframe-3", FullFrame, 135.0, [0.9, -0.04, 0.02, -0.008, 0.004]),
        preset("drum-1", Drum, 105.0, [0.9, 0.03, 0.012, 0.005, 0.002]),
        preset("drum-2", Drum, 112.0, [0.82, 0.045, 0.018, 0.007, 0.003]),
        preset("severedrum-1", SevereDrum, 98.0, [0.75, 0.05, 0.02, 0.01, 0.005]),
        preset("severedrum-2", SevereDrum, 95.0, [0.7, 0.05, 0.025, 0.012, 0.006]),
        preset("fullcircle-1", FullCircle, 28.0, [0.95, 0.03, 0.012, 0.005, 0.002]),
        preset("fullcircle-2", FullCircle, 24.0, [1.0, 0.04, 0.015, 0.006, 0.003]),
    ]
}

/// Looks a preset up by name.
pub fn find_preset(name: &str) -> Result<Preset, PresetError> {
    preset_catalog()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| PresetError::UnknownPreset(name.to_string()))
}

/// Rescales canonical-raster parameters to another image size: focal
/// lengths scale with the short edge, the principal point moves to the
/// image center. At 256×256 this is the identity.
pub fn adapt_to_size(p: &CameraParams, width: usize, height: usize) -> CameraParams {
    let s = width.min(height) as f64 / CANONICAL_SIZE as f64;
    CameraParams::new(
        IntrinsicParams {
            fx: p.intrinsics.fx * s,
            fy: p.intrinsics.fy * s,
            cx: (width - 1) as f64 / 2.0,
            cy: (height - 1) as f64 / 2.0,
        },
        p.distortion,
    )
    .expect("rescaling preserves validity")
}

/// Draws `count` distinct presets uniformly without replacement, by a
/// partial Fisher–Yates shuffle over a ChaCha8 stream seeded with `seed`.
/// The algorithm is pinned: the same seed selects the same subset on every
/// platform and release.
pub fn sample_presets(
    catalog: &[Preset],
    count: usize,
    seed: u64,
) -> Result<Vec<Preset>, PresetError> {
    if count == 0 || count > catalog.len() {
        return Err(PresetError::CountOutOfRange {
            count,
            len: catalog.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..catalog.len()).collect();
    for i in 0..count {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    Ok(idx[..count].iter().map(|&i| catalog[i].clone()).collect())
}

/// One coefficient swept over a closed interval, everything else fixed at
/// the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// 1-based coefficient index into k.
    pub coefficient: usize,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub baseline: CameraParams,
}

impl SweepSpec {
    /// The conventional sweep window `[-0.9, 1.0]` in 8 steps over an
    /// equidistant baseline.
    pub fn standard(coefficient: usize, baseline: CameraParams) -> Self {
        Self {
            coefficient,
            lo: DEFAULT_SWEEP_LO,
            hi: DEFAULT_SWEEP_HI,
            steps: DEFAULT_SWEEP_STEPS,
            baseline,
        }
    }

    fn validate(&self) -> Result<(), PresetError> {
        if !(1..=5).contains(&self.coefficient) {
            return Err(PresetError::CoefficientOutOfRange(self.coefficient));
        }
        if !(self.lo < self.hi) || self.steps < 2 {
            return Err(PresetError::EmptyRange {
                lo: self.lo,
                hi: self.hi,
                steps: self.steps,
            });
        }
        Ok(())
    }

    /// Evenly spaced sweep values; the last one is `hi` exactly, not a
    /// rounded reconstruction of it.
    fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|t| {
                if t == n - 1 {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * t as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Parameters and admissibility verdict of one montage cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub coefficient: usize,
    pub index: usize,
    pub value: f64,
    pub params: CameraParams,
    pub admissible: bool,
}

/// A sweep montage plus the exact parameters behind every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub montage: ImageBuffer,
    pub cells: Vec<SweepCell>,
    pub cell_width: usize,
    pub cell_height: usize,
}

fn blit(dst: &mut ImageBuffer, src: &ImageBuffer, x0: usize, y0: usize) {
    let row = src.width * src.channels;
    for y in 0..src.height {
        let d = ((y0 + y) * dst.width + x0) * dst.channels;
        dst.data[d..d + row].copy_from_slice(&src.data[y * row..(y + 1) * row]);
    }
}

fn render_cells(
    spec: &SweepSpec,
    img: &ImageBuffer,
) -> Result<(Vec<SweepCell>, Vec<ImageBuffer>), PresetError> {
    spec.validate()?;
    let cells: Vec<SweepCell> = spec
        .values()
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let mut k = spec.baseline.distortion.k;
            k[spec.coefficient - 1] = value;
            let distortion = DistortionCoeffs { k };
            SweepCell {
                coefficient: spec.coefficient,
                index,
                value,
                params: CameraParams {
                    intrinsics: spec.baseline.intrinsics,
                    distortion,
                },
                admissible: check_monotonic(&distortion, DEFAULT_THETA_MAX),
            }
        })
        .collect();
    // Cell rendering is independent per cell; parallel order does not
    // affect bits because results are collected positionally.
    let images: Vec<ImageBuffer> = cells
        .par_iter()
        .map(|cell| {
            if cell.admissible {
                Ok(synthesize_fisheye(img, &cell.params)?.0)
            } else {
                // Inadmissible value: flagged in the cell record, rendered
                // as the fill color.
                Ok(ImageBuffer::new(img.width, img.height, img.channels, img.format))
            }
        })
        .collect::<Result<_, PresetError>>()?;
    Ok((cells, images))
}

/// Synthesizes one fisheye per sweep value and lays the results out in a
/// single montage row. Inadmissible values produce fill-colored, flagged
/// cells rather than failing the sweep.
pub fn sweep_parameter(spec: &SweepSpec, img: &ImageBuffer) -> Result<SweepResult, PresetError> {
    let (cells, images) = render_cells(spec, img)?;
    let mut montage = ImageBuffer::new(
        img.width * cells.len(),
        img.height,
        img.channels,
        img.format,
    );
    for (i, cell_img) in images.iter().enumerate() {
        blit(&mut montage, cell_img, i * img.width, 0);
    }
    Ok(SweepResult {
        montage,
        cells,
        cell_width: img.width,
        cell_height: img.height,
    })
}

/// Sweeps all five coefficients over the same window: one montage row per
/// coefficient, cells listed row-major.
pub fn sweep_all_parameters(
    baseline: &CameraParams,
    lo: f64,
    hi: f64,
    steps: usize,
    img: &ImageBuffer,
) -> Result<SweepResult, PresetError> {
    let mut montage = ImageBuffer::new(img.width * steps, img.height * 5, img.channels, img.format);
    let mut all_cells = Vec::with_capacity(5 * steps);
    for coefficient in 1..=5 {
        let spec = SweepSpec {
            coefficient,
            lo,
            hi,
            steps,
            baseline: *baseline,
        };
        let (cells, images) = render_cells(&spec, img)?;
        for (i, cell_img) in images.iter().enumerate() {
            blit(&mut montage, cell_img, i * img.width, (coefficient - 1) * img.height);
        }
        all_cells.extend(cells);
    }
    Ok(SweepResult {
        montage,
        cells: all_cells,
        cell_width: img.width,
        cell_height: img.height,
    })
}
