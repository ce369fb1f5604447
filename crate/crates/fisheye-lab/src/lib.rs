//! Fisheye camera geometry lab.
//!
//! This crate synthesizes labeled fisheye/perspective image pairs from a
//! degree-9 odd polynomial radial distortion model, rectifies fisheye images
//! under known parameters, scores rectifications with PSNR/SSIM and paired
//! confidence intervals, and exercises a Wasserstein-GAN training loop with
//! manual gradients at desk scale.
//!
//! The main capabilities, one module each:
//!
//! * [`camera`]: projection and distortion math as pure point functions,
//!   covering the pinhole model, the odd-polynomial radial model
//!   `r(θ) = Σ kᵢ θ^{2i−1}`, its Newton inversion, and the
//!   forward/backward pixel mappings.
//! * [`warp`]: whole-image resampling built on those mappings, with
//!   fisheye synthesis, rectification, bilinear sampling, valid masks,
//!   and PNG I/O.
//! * [`presets`]: a 12-entry distortion catalog spanning minor to
//!   full-circle fisheye looks, single-coefficient sweep montages, and
//!   seeded preset sampling.
//! * [`metrics`]: PSNR, SSIM (masked variants) and the paired-difference
//!   confidence-interval protocol.
//! * [`toynet`]: a small dense network with hand-written reverse-mode
//!   gradients, the WGAN critic/generator losses, RMSProp with weight
//!   clipping, the adversarial training loop, a toy radial-profile
//!   calibration regression, and a receptive-field calculator.
//! * [`pipeline`]: the dataset factory from corpus to fisheye PNGs plus
//!   JSONL manifest, and the end-to-end evaluation harness.
//! * [`testimage`]: deterministic procedural test scenes used by the
//!   examples and test suites.
//!
//! Every capability is demonstrated by a runnable program under `examples/`;
//! the `fisheye-lab` binary exposes the same operations as subcommands.

pub mod camera;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod testimage;
pub mod toynet;
pub mod warp;

pub use camera::{CameraParams, DistortionCoeffs, IntrinsicParams, PixelCoord};
pub use warp::{ImageBuffer, ValidMask, WarpField};
