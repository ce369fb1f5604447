//! Projection and distortion math as pure point functions.
//!
//! The model is a pinhole camera with an odd-polynomial radial distortion:
//!
//! ```text
//! perspective:  r = f · tan θ
//! fisheye:      r(θ) = k₁θ + k₂θ³ + k₃θ⁵ + k₄θ⁷ + k₅θ⁹
//! ```
//!
//! where θ is the angle between the incident ray and the optical axis and
//! r is the radius from the principal point in normalized units. A pixel
//! `(u, v)` is normalized through the intrinsics as
//! `x = (u − cx)/fx, y = (v − cy)/fy`, so the model reduces to the single-f
//! form when `fx == fy`.
//!
//! Everything here operates on scalars and points; whole-image resampling
//! lives in [`crate::warp`].

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Working upper bound on the incidence angle, in radians.
///
/// Covers the severe full-circle presets while staying clear of the tan
/// pole at π/2.
pub const DEFAULT_THETA_MAX: f64 = 1.35;

/// Number of sample points used by [`check_monotonic`].
pub const ADMISSIBILITY_SAMPLES: usize = 1024;

/// Absolute tolerance on `|r(θ) − r_d|` for polynomial inversion.
pub const INVERSION_TOLERANCE: f64 = 1e-10;

const NEWTON_MAX_ITERS: usize = 50;
const BISECTION_MAX_ITERS: usize = 200;
/// Incidence angles closer than this to π/2 are treated as out of view.
const OUT_OF_VIEW_MARGIN: f64 = 1e-6;
const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("point has non-positive camera-frame depth (Zc = {zc})")]
    NonPositiveDepth { zc: f64 },
    #[error("rotation matrix is not orthonormal with determinant +1")]
    InvalidRotation,
    #[error("incidence angle {theta} is outside the perspective domain [0, pi/2)")]
    OutOfDomain { theta: f64 },
    #[error("distortion coefficients are not monotonic over (0, {theta_max}]")]
    Inadmissible { theta_max: f64 },
    #[error("distorted radius {r_d} exceeds the modeled range [0, {r_max}]")]
    OutOfRange { r_d: f64, r_max: f64 },
    #[error("{field} must be {requirement}")]
    InvalidParam {
        field: &'static str,
        requirement: &'static str,
    },
}

/// Pinhole intrinsics: focal lengths and principal point, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicParams {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl IntrinsicParams {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, CameraError> {
        let i = Self { fx, fy, cx, cy };
        i.validate()?;
        Ok(i)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.fx.is_finite() && self.fx > 0.0) {
            return Err(CameraError::InvalidParam {
                field: "fx",
                requirement: "a positive finite number",
            });
        }
        if !(self.fy.is_finite() && self.fy > 0.0) {
            return Err(CameraError::InvalidParam {
                field: "fy",
                requirement: "a positive finite number",
            });
        }
        if !self.cx.is_finite() {
            return Err(CameraError::InvalidParam {
                field: "cx",
                requirement: "finite",
            });
        }
        if !self.cy.is_finite() {
            return Err(CameraError::InvalidParam {
                field: "cy",
                requirement: "finite",
            });
        }
        Ok(())
    }

    /// Principal point as a pixel coordinate.
    pub fn principal_point(&self) -> PixelCoord {
        PixelCoord {
            u: self.cx,
            v: self.cy,
        }
    }
}

/// Coefficients of the odd distortion polynomial `r(θ) = Σ kᵢ θ^{2i−1}`.
///
/// A coefficient set is *admissible over θ_max* iff `r'(θ) > 0` on
/// `(0, θ_max]`, which makes the polynomial invertible there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionCoeffs {
    pub k: [f64; 5],
}

impl DistortionCoeffs {
    pub fn new(k: [f64; 5]) -> Result<Self, CameraError> {
        let d = Self { k };
        d.validate()?;
        Ok(d)
    }

    /// The equidistant special case `r(θ) = θ`.
    pub fn equidistant() -> Self {
        Self {
            k: [1.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if self.k.iter().any(|v| !v.is_finite()) {
            return Err(CameraError::InvalidParam {
                field: "k",
                requirement: "an array of 5 finite numbers",
            });
        }
        Ok(())
    }

    /// Evaluates `r(θ) = k₁θ + k₂θ³ + k₃θ⁵ + k₄θ⁷ + k₅θ⁹` (Horner in θ²).
    pub fn radius(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let mut acc = self.k[4];
        for i in (0..4).rev() {
            acc = acc * t2 + self.k[i];
        }
        acc * theta
    }

    /// Evaluates `r'(θ) = Σ (2i−1) kᵢ θ^{2i−2}`.
    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let mut acc = 9.0 * self.k[4];
        for i in (0..4).rev() {
            acc = acc * t2 + (2 * i + 1) as f64 * self.k[i];
        }
        acc
    }

    /// Dense-sample admissibility check; see [`check_monotonic`].
    pub fn is_admissible(&self, theta_max: f64) -> bool {
        check_monotonic(self, theta_max)
    }

    /// Inverts the polynomial without re-checking admissibility or range.
    ///
    /// Callers must have established that the coefficients are admissible
    /// over `theta_max` and that `0 ≤ r_d ≤ r(theta_max)`; warp-field
    /// construction validates once and then calls this per pixel. The
    /// result satisfies `|r(θ) − r_d| ≤ 1e-10`.
    pub fn invert_radius_unchecked(&self, r_d: f64, theta_max: f64) -> f64 {
        if r_d == 0.0 {
            return 0.0;
        }
        let mut lo = 0.0_f64;
        let mut hi = theta_max;
        // k1 carries most of the curve, so the k1-only model seeds Newton
        // almost exactly.
        let mut theta = if self.k[0] > 0.0 {
            (r_d / self.k[0]).clamp(0.0, theta_max)
        } else {
            r_d.min(theta_max)
        };
        for _ in 0..NEWTON_MAX_ITERS {
            let f = self.radius(theta) - r_d;
            if f.abs() <= INVERSION_TOLERANCE {
                return theta;
            }
            if f > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let d = self.radius_derivative(theta);
            let next = theta - f / d;
            // Fall back to the bracket midpoint whenever Newton escapes it.
            theta = if d > 0.0 && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        for _ in 0..BISECTION_MAX_ITERS {
            let mid = 0.5 * (lo + hi);
            let f = self.radius(mid) - r_d;
            if f.abs() <= INVERSION_TOLERANCE {
                return mid;
            }
            if f > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// The 9-parameter camera label: five distortion coefficients plus the
/// four intrinsics. Serializes as `{"fx","fy","cx","cy","k":[k1..k5]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "CameraParamsRepr", try_from = "CameraParamsRepr")]
pub struct CameraParams {
    pub intrinsics: IntrinsicParams,
    pub distortion: DistortionCoeffs,
}

#[derive(Serialize, Deserialize)]
struct CameraParamsRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    k: [f64; 5],
}

impl From<CameraParams> for CameraParamsRepr {
    fn from(p: CameraParams) -> Self {
        Self {
            fx: p.intrinsics.fx,
            fy: p.intrinsics.fy,
            cx: p.intrinsics.cx,
            cy: p.intrinsics.cy,
            k: p.distortion.k,
        }
    }
}

impl TryFrom<CameraParamsRepr> for CameraParams {
    type Error = CameraError;

    fn try_from(r: CameraParamsRepr) -> Result<Self, CameraError> {
        CameraParams::new(
            IntrinsicParams {
                fx: r.fx,
                fy: r.fy,
                cx: r.cx,
                cy: r.cy,
            },
            DistortionCoeffs { k: r.k },
        )
    }
}

impl CameraParams {
    pub fn new(
        intrinsics: IntrinsicParams,
        distortion: DistortionCoeffs,
    ) -> Result<Self, CameraError> {
        intrinsics.validate()?;
        distortion.validate()?;
        Ok(Self {
            intrinsics,
            distortion,
        })
    }

    /// The nine numbers in label order `(k1..k5, fx, fy, cx, cy)`.
    pub fn to_vector(&self) -> [f64; 9] {
        let k = self.distortion.k;
        let i = self.intrinsics;
        [k[0], k[1], k[2], k[3], k[4], i.fx, i.fy, i.cx, i.cy]
    }
}

/// Rigid transform from the world frame to the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrinsicParams {
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl ExtrinsicParams {
    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0, 0.0, 0.0],
        }
    }

    /// Checks that the rotation is orthonormal with determinant +1.
    pub fn validate(&self) -> Result<(), CameraError> {
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|a| r[a][i] * r[a][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > ROTATION_TOLERANCE {
                    return Err(CameraError::InvalidRotation);
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(CameraError::InvalidRotation);
        }
        Ok(())
    }

    pub fn transform(&self, p: WorldPoint) -> CameraPoint {
        let r = &self.rotation;
        let t = &self.translation;
        CameraPoint {
            x: r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + t[0],
            y: r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + t[1],
            z: r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + t[2],
        }
    }
}

/// A 3-D point in world units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// A 3-D point in the camera frame; projectable only when `z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CameraPoint {
    pub fn normalize(&self) -> Result<NormalizedCoord, CameraError> {
        if self.z <= 0.0 {
            return Err(CameraError::NonPositiveDepth { zc: self.z });
        }
        Ok(NormalizedCoord {
            x: self.x / self.z,
            y: self.y / self.z,
        })
    }
}

/// Dimensionless camera-plane coordinate `(Xc/Zc, Yc/Zc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCoord {
    pub x: f64,
    pub y: f64,
}

impl NormalizedCoord {
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Continuous pixel position; `u` is the column, `v` the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Radial geometry of one pixel: incidence angle θ, azimuth φ, the
/// normalized perspective radius `tan θ`, and (once a distortion model has
/// been applied) the normalized fisheye radius `r(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSample {
    pub theta: f64,
    /// Full-quadrant angle of the normalized offset, measured from the +x
    /// axis, in `(−π, π]`; zero at the principal point.
    pub phi: f64,
    pub r_perspective: f64,
    pub r_distorted: Option<f64>,
}

impl RadialSample {
    /// Fills in the fisheye radius for the given coefficients.
    pub fn with_distortion(mut self, k: &DistortionCoeffs) -> Self {
        self.r_distorted = Some(k.radius(self.theta));
        self
    }
}

/// Projects a world point through extrinsics and intrinsics onto the image:
/// `u = fx·Xc/Zc + cx`, `v = fy·Yc/Zc + cy`.
pub fn project_world_point(
    p: WorldPoint,
    e: &ExtrinsicParams,
    i: &IntrinsicParams,
) -> Result<PixelCoord, CameraError> {
    e.validate()?;
    let n = e.transform(p).normalize()?;
    Ok(PixelCoord {
        u: i.fx * n.x + i.cx,
        v: i.fy * n.y + i.cy,
    })
}

/// Perspective projection radius `f · tan θ` for `θ ∈ [0, π/2)`.
pub fn perspective_radius(theta: f64, f: f64) -> Result<f64, CameraError> {
    if !theta.is_finite() || !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(CameraError::OutOfDomain { theta });
    }
    Ok(f * theta.tan())
}

/// Fisheye radius `r(θ) = Σ kᵢ θ^{2i−1}`.
pub fn distortion_radius(theta: f64, k: &DistortionCoeffs) -> f64 {
    k.radius(theta)
}

/// Derivative of the fisheye radius, `Σ (2i−1) kᵢ θ^{2i−2}`.
pub fn distortion_radius_derivative(theta: f64, k: &DistortionCoeffs) -> f64 {
    k.radius_derivative(theta)
}

/// True iff `r'(θ) > 0` on a dense sample of `(0, theta_max]`, including
/// `theta_max` itself. Admissible coefficient sets are invertible there.
pub fn check_monotonic(k: &DistortionCoeffs, theta_max: f64) -> bool {
    if !(theta_max > 0.0) {
        return false;
    }
    for j in 1..=ADMISSIBILITY_SAMPLES {
        let theta = theta_max * j as f64 / ADMISSIBILITY_SAMPLES as f64;
        if !(k.radius_derivative(theta) > 0.0) {
            return false;
        }
    }
    k.radius_derivative(theta_max) > 0.0
}

/// Inverts the distortion polynomial: finds θ with `r(θ) = r_d` to within
/// `1e-10`, by Newton iteration seeded at `r_d/k₁` with a bisection
/// safeguard on `[0, theta_max]`.
pub fn invert_distortion_radius(
    r_d: f64,
    k: &DistortionCoeffs,
    theta_max: f64,
) -> Result<f64, CameraError> {
    if !check_monotonic(k, theta_max) {
        return Err(CameraError::Inadmissible { theta_max });
    }
    let r_max = k.radius(theta_max);
    if !r_d.is_finite() || r_d < 0.0 || r_d > r_max {
        return Err(CameraError::OutOfRange { r_d, r_max });
    }
    Ok(k.invert_radius_unchecked(r_d, theta_max))
}

/// Normalizes a pixel and reads off its radial geometry:
/// `θ = arctan ‖(x, y)‖`, `φ = atan2(y, x)` (zero at the principal point).
pub fn pixel_to_theta_phi(q: PixelCoord, i: &IntrinsicParams) -> RadialSample {
    let x = (q.u - i.cx) / i.fx;
    let y = (q.v - i.cy) / i.fy;
    let r = x.hypot(y);
    let phi = if r == 0.0 {
        0.0
    } else {
        let a = y.atan2(x);
        // atan2 can return exactly −π for y = −0.0; keep φ in (−π, π].
        if a == -PI {
            PI
        } else {
            a
        }
    };
    RadialSample {
        theta: r.atan(),
        phi,
        r_perspective: r,
        r_distorted: None,
    }
}

/// Maps a perspective pixel to its fisheye position:
/// `(cx + fx·r(θ)·cos φ, cy + fy·r(θ)·sin φ)`.
pub fn distort_pixel(q: PixelCoord, p: &CameraParams) -> Result<PixelCoord, CameraError> {
    let sample = pixel_to_theta_phi(q, &p.intrinsics);
    if !sample.theta.is_finite() || sample.theta >= FRAC_PI_2 {
        return Err(CameraError::OutOfDomain {
            theta: sample.theta,
        });
    }
    let sample = sample.with_distortion(&p.distortion);
    let r_d = sample.r_distorted.expect("just filled");
    let i = &p.intrinsics;
    Ok(PixelCoord {
        u: i.cx + i.fx * r_d * sample.phi.cos(),
        v: i.cy + i.fy * r_d * sample.phi.sin(),
    })
}

/// Backward map of the rectification layer: given a pixel of the rectified
/// (perspective) output, returns where to sample the fisheye image.
///
/// This is the same radial displacement as [`distort_pixel`]; it is named
/// separately because it runs in the opposite resampling role.
pub fn rectify_source(q_rect: PixelCoord, p: &CameraParams) -> Result<PixelCoord, CameraError> {
    distort_pixel(q_rect, p)
}

/// Backward map for fisheye synthesis: given a pixel of the fisheye output,
/// returns where to sample the perspective image, or `None` when the pixel
/// lies outside the modeled field of view.
///
/// Checks admissibility on every call; batch users should validate once and
/// go through [`crate::warp::build_warp_field`] instead.
pub fn synth_source(
    q_fish: PixelCoord,
    p: &CameraParams,
    theta_max: f64,
) -> Result<Option<PixelCoord>, CameraError> {
    if !check_monotonic(&p.distortion, theta_max) {
        return Err(CameraError::Inadmissible { theta_max });
    }
    Ok(synth_source_unchecked(q_fish, p, theta_max))
}

/// [`synth_source`] without the admissibility re-check.
pub(crate) fn synth_source_unchecked(
    q_fish: PixelCoord,
    p: &CameraParams,
    theta_max: f64,
) -> Option<PixelCoord> {
    let i = &p.intrinsics;
    let x = (q_fish.u - i.cx) / i.fx;
    let y = (q_fish.v - i.cy) / i.fy;
    let r_d = x.hypot(y);
    if !r_d.is_finite() || r_d > p.distortion.radius(theta_max) {
        return None;
    }
    let theta = p.distortion.invert_radius_unchecked(r_d, theta_max);
    if theta >= FRAC_PI_2 - OUT_OF_VIEW_MARGIN {
        return None;
    }
    if r_d == 0.0 {
        return Some(i.principal_point());
    }
    let phi = y.atan2(x);
    let r_p = theta.tan();
    Some(PixelCoord {
        u: i.cx + i.fx * r_p * phi.cos(),
        v: i.cy + i.fy * r_p * phi.sin(),
    })
}
