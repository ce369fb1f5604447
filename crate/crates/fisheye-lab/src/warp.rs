//! Whole-image resampling on top of the point mappings in [`crate::camera`]:
//! fisheye synthesis, rectification, channel concatenation, and the PNG /
//! sidecar I/O the tools exchange.
//!
//! Both directions use backward warping: for every output pixel the field
//! stores the continuous source coordinate, and [`apply_warp`] fills the
//! output by bilinear interpolation there. Backward warping leaves no holes
//! and needs no splatting; the price is a polynomial inversion per pixel
//! when synthesizing, which [`build_warp_field`] pays once per field.
//!
//! Pixel centers sit at integer coordinates. Sampling outside
//! `[0, W−1] × [0, H−1]` is reported, never clamped, so the valid mask
//! stays honest for downstream metrics.

use crate::camera::{
    pixel_to_theta_phi, synth_source_unchecked, CameraError, CameraParams, PixelCoord,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WarpError {
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation does not support {0}-channel buffers")]
    UnsupportedChannels(usize),
    #[error("sample formats differ between inputs")]
    FormatMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Nominal scale of the stored samples.
///
/// `U8` buffers keep values on the 0..255 scale (integral when freshly
/// decoded, possibly fractional after resampling); `F32` buffers live on
/// the unit interval. The tag decides the peak used by quality metrics and
/// the quantization applied when encoding to 8-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleFormat {
    U8,
    F32,
}

impl SampleFormat {
    pub fn peak(self) -> f32 {
        match self {
            SampleFormat::U8 => 255.0,
            SampleFormat::F32 => 1.0,
        }
    }
}

/// Row-major interleaved raster with 1, 3, or 6 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub format: SampleFormat,
    /// `data[(y * width + x) * channels + c]`, length `width·height·channels`.
    pub data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, format: SampleFormat) -> Self {
        Self {
            width,
            height,
            channels,
            format,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        format: SampleFormat,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            format,
            data,
        }
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.idx(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.idx(x, y, c);
        self.data[i] = v;
    }

    pub fn peak(&self) -> f32 {
        self.format.peak()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }

    /// Quantizes to 8-bit: clamp to `[0, peak]`, rescale to 0..255, round
    /// half up.
    pub fn to_u8(&self) -> Vec<u8> {
        let scale = 255.0 / self.peak();
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, self.peak()) * scale).round() as u8)
            .collect()
    }

    /// Reinterprets the buffer on the unit scale, dividing U8 data by 255.
    pub fn to_unit(&self) -> ImageBuffer {
        let peak = self.peak();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            format: SampleFormat::F32,
            data: self.data.iter().map(|&v| v / peak).collect(),
        }
    }
}

/// Per-pixel validity flags, same raster layout as the image they qualify.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl ValidMask {
    pub fn all_true(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn fraction_true(&self) -> f64 {
        self.count_true() as f64 / self.data.len() as f64
    }

    pub fn intersect(&self, other: &ValidMask) -> Result<ValidMask, WarpError> {
        if self.width != other.width || self.height != other.height {
            return Err(WarpError::DimensionMismatch(format!(
                "mask {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(ValidMask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }
}

/// Resampling direction for [`build_warp_field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpDirection {
    /// Output is a fisheye image; sources come from a perspective image.
    Synthesize,
    /// Output is a rectified (perspective) image; sources come from a
    /// fisheye image.
    Rectify,
}

/// Continuous source coordinates for every output pixel, plus in-domain
/// flags. Source and output rasters share the same dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpField {
    pub width: usize,
    pub height: usize,
    su: Vec<f64>,
    sv: Vec<f64>,
    valid: Vec<bool>,
}

impl WarpField {
    /// Field mapping every pixel to itself.
    pub fn identity(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| Some((x as f64, y as f64)))
    }

    /// Builds a field from an arbitrary per-pixel source function; `None`
    /// flags the pixel out of domain.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<(f64, f64)>,
    ) -> Self {
        let mut su = vec![f64::NAN; width * height];
        let mut sv = vec![f64::NAN; width * height];
        let mut valid = vec![false; width * height];
        for y in 0..height {
            for x in 0..width {
                if let Some((u, v)) = f(x, y) {
                    let i = y * width + x;
                    su[i] = u;
                    sv[i] = v;
                    valid[i] = true;
                }
            }
        }
        Self {
            width,
            height,
            su,
            sv,
            valid,
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    /// Source coordinate for an output pixel, `None` when out of domain.
    pub fn source(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        let i = y * self.width + x;
        if self.valid[i] {
            Some((self.su[i], self.sv[i]))
        } else {
            None
        }
    }

    pub fn mask(&self) -> ValidMask {
        ValidMask {
            width: self.width,
            height: self.height,
            data: self.valid.clone(),
        }
    }
}

#[inline]
fn in_sample_bounds(u: f64, v: f64, width: usize, height: usize) -> bool {
    u >= 0.0 && v >= 0.0 && u <= (width - 1) as f64 && v <= (height - 1) as f64
}

/// Writes the bilinear blend at `(u, v)` into `out`; returns `false`
/// without touching `out` when the coordinate is out of bounds.
#[inline]
fn sample_into(img: &ImageBuffer, u: f64, v: f64, out: &mut [f32]) -> bool {
    if !in_sample_bounds(u, v, img.width, img.height) {
        return false;
    }
    let x0 = u.floor() as usize;
    let y0 = v.floor() as usize;
    let fu = u - x0 as f64;
    let fv = v - y0 as f64;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let c = img.channels;
    let r00 = (y0 * img.width + x0) * c;
    let r01 = (y0 * img.width + x1) * c;
    let r10 = (y1 * img.width + x0) * c;
    let r11 = (y1 * img.width + x1) * c;
    for ch in 0..c {
        let v00 = img.data[r00 + ch] as f64;
        let v01 = img.data[r01 + ch] as f64;
        let v10 = img.data[r10 + ch] as f64;
        let v11 = img.data[r11 + ch] as f64;
        // Lerp form keeps constant inputs bit-exact: fu·(v01 − v00) is an
        // exact zero whenever the neighbors agree.
        let top = v00 + fu * (v01 - v00);
        let bot = v10 + fu * (v11 - v10);
        out[ch] = (top + fv * (bot - top)) as f32;
    }
    true
}

/// Bilinear blend of the four neighbors at a continuous coordinate, or
/// `None` when `(u, v)` lies outside `[0, W−1] × [0, H−1]`.
pub fn bilinear_sample(img: &ImageBuffer, u: f64, v: f64) -> Option<Vec<f32>> {
    let mut out = vec![0.0; img.channels];
    if sample_into(img, u, v, &mut out) {
        Some(out)
    } else {
        None
    }
}

/// Computes the per-pixel source coordinates for one resampling direction.
///
/// Admissibility of the distortion polynomial over `theta_max` is checked
/// once here; the per-pixel loop then runs the unchecked inversion. Pixels
/// whose source falls outside the raster or outside the modeled field of
/// view are flagged out of domain.
pub fn build_warp_field(
    p: &CameraParams,
    out_size: (usize, usize),
    direction: WarpDirection,
    theta_max: f64,
) -> Result<WarpField, CameraError> {
    if !p.distortion.is_admissible(theta_max) {
        return Err(CameraError::Inadmissible { theta_max });
    }
    let (width, height) = out_size;
    let mut su = vec![f64::NAN; width * height];
    let mut sv = vec![f64::NAN; width * height];
    let mut valid = vec![false; width * height];
    let i = p.intrinsics;
    su.par_chunks_mut(width)
        .zip(sv.par_chunks_mut(width))
        .zip(valid.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, ((su_row, sv_row), valid_row))| {
            for x in 0..width {
                let q = PixelCoord::new(x as f64, y as f64);
                let src = match direction {
                    WarpDirection::Synthesize => synth_source_unchecked(q, p, theta_max),
                    WarpDirection::Rectify => {
                        let s = pixel_to_theta_phi(q, &i);
                        if s.theta > theta_max {
                            None
                        } else {
                            let r_d = p.distortion.radius(s.theta);
                            Some(PixelCoord::new(
                                i.cx + i.fx * r_d * s.phi.cos(),
                                i.cy + i.fy * r_d * s.phi.sin(),
                            ))
                        }
                    }
                };
                if let Some(src) = src {
                    if in_sample_bounds(src.u, src.v, width, height) {
                        su_row[x] = src.u;
                        sv_row[x] = src.v;
                        valid_row[x] = true;
                    }
                }
            }
        });
    Ok(WarpField {
        width,
        height,
        su,
        sv,
        valid,
    })
}

/// Resamples `img` through `field`. Valid pixels take the bilinear sample
/// at their source; everything else takes `fill` and a `false` mask bit.
///
/// Source bounds are re-validated at sample time, so no field, however
/// constructed, can make this read outside the raster. Work splits by
/// output row and each row's result is independent of the split, so the
/// output is bit-identical at any parallelism degree.
pub fn apply_warp(
    img: &ImageBuffer,
    field: &WarpField,
    fill: f32,
) -> Result<(ImageBuffer, ValidMask), WarpError> {
    if img.width != field.width || img.height != field.height {
        return Err(WarpError::DimensionMismatch(format!(
            "image {}x{} vs field {}x{}",
            img.width, img.height, field.width, field.height
        )));
    }
    let (width, height, channels) = (img.width, img.height, img.channels);
    let mut out = ImageBuffer::new(width, height, channels, img.format);
    let mut mask = vec![false; width * height];
    out.data
        .par_chunks_mut(width * channels)
        .zip(mask.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (row, mask_row))| {
            for x in 0..width {
                let px = &mut row[x * channels..(x + 1) * channels];
                let i = y * width + x;
                let ok = field.valid[i] && sample_into(img, field.su[i], field.sv[i], px);
                if ok {
                    mask_row[x] = true;
                } else {
                    px.fill(fill);
                }
            }
        });
    Ok((
        out,
        ValidMask {
            width,
            height,
            data: mask,
        },
    ))
}

/// Distorts a perspective image into a fisheye view of the same size.
pub fn synthesize_fisheye(
    img: &ImageBuffer,
    p: &CameraParams,
) -> Result<(ImageBuffer, ValidMask), WarpError> {
    synthesize_fisheye_with(img, p, crate::camera::DEFAULT_THETA_MAX, 0.0)
}

pub fn synthesize_fisheye_with(
    img: &ImageBuffer,
    p: &CameraParams,
    theta_max: f64,
    fill: f32,
) -> Result<(ImageBuffer, ValidMask), WarpError> {
    let field = build_warp_field(p, (img.width, img.height), WarpDirection::Synthesize, theta_max)?;
    apply_warp(img, &field, fill)
}

/// Removes the radial distortion from a fisheye image of the same size.
pub fn rectify_image(
    img: &ImageBuffer,
    p: &CameraParams,
) -> Result<(ImageBuffer, ValidMask), WarpError> {
    rectify_image_with(img, p, crate::camera::DEFAULT_THETA_MAX, 0.0)
}

pub fn rectify_image_with(
    img: &ImageBuffer,
    p: &CameraParams,
    theta_max: f64,
    fill: f32,
) -> Result<(ImageBuffer, ValidMask), WarpError> {
    let field = build_warp_field(p, (img.width, img.height), WarpDirection::Rectify, theta_max)?;
    apply_warp(img, &field, fill)
}

/// Transfers a source-raster mask to the output raster of `field`: an
/// output pixel stays valid only when its source is in domain and every
/// neighbor its bilinear sample actually weights is valid in `src_mask`.
///
/// Neighbors with an exactly-zero weight are not required, so fields that
/// hit the grid exactly (identity, pure translation by integers) pass the
/// mask through unchanged.
pub fn pull_back_mask(field: &WarpField, src_mask: &ValidMask) -> Result<ValidMask, WarpError> {
    if field.width != src_mask.width || field.height != src_mask.height {
        return Err(WarpError::DimensionMismatch(format!(
            "field {}x{} vs mask {}x{}",
            field.width, field.height, src_mask.width, src_mask.height
        )));
    }
    let (width, height) = (field.width, field.height);
    let mut out = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if !field.valid[i] || !in_sample_bounds(field.su[i], field.sv[i], width, height) {
                continue;
            }
            let (u, v) = (field.su[i], field.sv[i]);
            let x0 = u.floor() as usize;
            let y0 = v.floor() as usize;
            let fu = u - x0 as f64;
            let fv = v - y0 as f64;
            let x1 = (x0 + 1).min(width - 1);
            let y1 = (y0 + 1).min(height - 1);
            let mut ok = src_mask.get(x0, y0);
            if fu > 0.0 {
                ok = ok && src_mask.get(x1, y0);
            }
            if fv > 0.0 {
                ok = ok && src_mask.get(x0, y1);
            }
            if fu > 0.0 && fv > 0.0 {
                ok = ok && src_mask.get(x1, y1);
            }
            out[i] = ok;
        }
    }
    Ok(ValidMask {
        width,
        height,
        data: out,
    })
}

/// Stacks two equal-size buffers channel-wise, `a`'s channels first.
pub fn concat_channels(a: &ImageBuffer, b: &ImageBuffer) -> Result<ImageBuffer, WarpError> {
    if a.width != b.width || a.height != b.height {
        return Err(WarpError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if a.format != b.format {
        return Err(WarpError::FormatMismatch);
    }
    let channels = a.channels + b.channels;
    let mut data = Vec::with_capacity(a.width * a.height * channels);
    for i in 0..a.width * a.height {
        data.extend_from_slice(&a.data[i * a.channels..(i + 1) * a.channels]);
        data.extend_from_slice(&b.data[i * b.channels..(i + 1) * b.channels]);
    }
    Ok(ImageBuffer {
        width: a.width,
        height: a.height,
        channels,
        format: a.format,
        data,
    })
}

/// Extracts `count` channels starting at `start` into a fresh buffer.
pub fn slice_channels(
    img: &ImageBuffer,
    start: usize,
    count: usize,
) -> Result<ImageBuffer, WarpError> {
    if start + count > img.channels || count == 0 {
        return Err(WarpError::UnsupportedChannels(img.channels));
    }
    let mut data = Vec::with_capacity(img.width * img.height * count);
    for i in 0..img.width * img.height {
        let base = i * img.channels + start;
        data.extend_from_slice(&img.data[base..base + count]);
    }
    Ok(ImageBuffer {
        width: img.width,
        height: img.height,
        channels: count,
        format: img.format,
        data,
    })
}

/// Decodes a PNG (or other supported format) into a U8-scale buffer:
/// grayscale sources become 1-channel, everything else 3-channel.
pub fn load_image(path: &Path) -> Result<ImageBuffer, WarpError> {
    let dynamic = image::open(path)?;
    let (width, height) = (dynamic.width() as usize, dynamic.height() as usize);
    let (channels, raw): (usize, Vec<u8>) = match dynamic.color() {
        image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8
        | image::ColorType::La16 => (1, dynamic.to_luma8().into_raw()),
        _ => (3, dynamic.to_rgb8().into_raw()),
    };
    Ok(ImageBuffer {
        width,
        height,
        channels,
        format: SampleFormat::U8,
        data: raw.into_iter().map(|v| v as f32).collect(),
    })
}

/// Encodes a 1- or 3-channel buffer as an 8-bit PNG.
pub fn save_image(img: &ImageBuffer, path: &Path) -> Result<(), WarpError> {
    let raw = img.to_u8();
    let (w, h) = (img.width as u32, img.height as u32);
    match img.channels {
        1 => image::GrayImage::from_raw(w, h, raw)
            .expect("raw length matches dimensions")
            .save(path)?,
        3 => image::RgbImage::from_raw(w, h, raw)
            .expect("raw length matches dimensions")
            .save(path)?,
        c => return Err(WarpError::UnsupportedChannels(c)),
    }
    Ok(())
}

/// Writes a mask as an 8-bit PNG, 255 for valid and 0 for invalid.
pub fn save_mask(mask: &ValidMask, path: &Path) -> Result<(), WarpError> {
    let raw: Vec<u8> = mask.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
    image::GrayImage::from_raw(mask.width as u32, mask.height as u32, raw)
        .expect("raw length matches dimensions")
        .save(path)?;
    Ok(())
}

/// Reads a mask PNG written by [`save_mask`]; any nonzero level counts as
/// valid.
pub fn load_mask(path: &Path) -> Result<ValidMask, WarpError> {
    let img = image::open(path)?.to_luma8();
    Ok(ValidMask {
        width: img.width() as usize,
        height: img.height() as usize,
        data: img.into_raw().into_iter().map(|v| v != 0).collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct FeatureSidecar {
    width: usize,
    height: usize,
    first: String,
    second: String,
}

/// Persists a 6-channel feature buffer as two 3-channel PNGs plus a JSON
/// sidecar naming the halves. `json_path` should end in `.json`; the PNGs
/// are written next to it with `.a.png` / `.b.png` suffixes.
pub fn save_feature(img: &ImageBuffer, json_path: &Path) -> Result<(), WarpError> {
    if img.channels != 6 {
        return Err(WarpError::UnsupportedChannels(img.channels));
    }
    let stem = json_path.with_extension("");
    let first = stem.with_extension("a.png");
    let second = stem.with_extension("b.png");
    save_image(&slice_channels(img, 0, 3)?, &first)?;
    save_image(&slice_channels(img, 3, 3)?, &second)?;
    let sidecar = FeatureSidecar {
        width: img.width,
        height: img.height,
        first: file_name(&first),
        second: file_name(&second),
    };
    std::fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Loads a feature buffer persisted by [`save_feature`].
pub fn load_feature(json_path: &Path) -> Result<ImageBuffer, WarpError> {
    let sidecar: FeatureSidecar = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    let dir = json_path.parent().unwrap_or_else(|| Path::new("."));
    let first = load_image(&dir.join(&sidecar.first))?;
    let second = load_image(&dir.join(&sidecar.second))?;
    concat_channels(&first, &second)
}

fn file_name(path: &PathBuf) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
