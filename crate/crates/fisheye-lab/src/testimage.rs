//! Deterministic synthetic photographs.
//!
//! Round-trip experiments need image content that is smooth enough to
//! survive resampling through the severest catalog presets (whose rim
//! compression is on the order of 10–20×) yet structured enough that PSNR
//! and SSIM measure something real. These scenes mix a handful of low
//! frequency plane and radial waves; the shortest wavelength is kept near
//! 50 px at the 256 scale so even heavily compressed regions stay well
//! above the sampling limit.
//!
//! Everything is a pure function of the pixel position and the variant
//! index: no RNG, no assets, identical on every platform.

use crate::warp::{ImageBuffer, SampleFormat};

const TAU: f64 = std::f64::consts::TAU;
/// Golden-ratio conjugate; decorrelates per-variant phase shifts.
const PHI_STEP: f64 = 0.618_033_988_749_894_9;

/// The default 3-channel scene (variant 0) at the requested size.
pub fn test_scene(width: usize, height: usize) -> ImageBuffer {
    test_scene_indexed(width, height, 0)
}

/// A family of smooth, visually distinct 3-channel scenes indexed by
/// `variant`. Values are quantized to the 0..255 integer scale, as if the
/// image had been decoded from an 8-bit PNG.
pub fn test_scene_indexed(width: usize, height: usize, variant: u32) -> ImageBuffer {
    assert!(width > 1 && height > 1, "scene needs at least 2x2 pixels");
    let scale = width.min(height) as f64;
    let rot = 0.7 * variant as f64;
    let (sin_r, cos_r) = rot.sin_cos();
    // Plane-wave directions, cycles per `scale` pixels. Magnitudes stay
    // below ~5.2 so wavelengths stay above ~scale/5.2 px.
    let waves: [(f64, f64, f64); 3] = [
        (0.70, 0.45, 0.17),  // ~307 px at scale 256
        (2.20, -1.40, 0.10), // ~98 px
        (4.00, 3.10, 0.05),  // ~51 px
    ];
    let phase = |term: usize, channel: usize| -> f64 {
        TAU * (PHI_STEP * (variant as f64 * 7.0 + term as f64 * 3.0 + channel as f64)).fract()
    };
    // Radial chirp center wanders with the variant but stays mid-frame.
    let cxn = 0.5 + 0.18 * (rot * 1.3).sin();
    let cyn = 0.5 + 0.18 * (rot * 0.9).cos();

    ImageBuffer::from_fn(width, height, 3, SampleFormat::U8, |x, y, c| {
        let sx = x as f64 / scale;
        let sy = y as f64 / scale;
        let mut v = 0.55;
        for (term, &(wx, wy, amp)) in waves.iter().enumerate() {
            let (dx, dy) = (wx * cos_r - wy * sin_r, wx * sin_r + wy * cos_r);
            v += amp * (TAU * (dx * sx + dy * sy) + phase(term, c)).sin();
        }
        let r = (sx - cxn).hypot(sy - cyn);
        v += 0.14 * (TAU * 1.3 * r + phase(3, c)).sin();
        (255.0 * v.clamp(0.0, 1.0)).round() as f32
    })
}
