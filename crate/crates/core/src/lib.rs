//! Inverse-attention noise estimation and denoising for camera-based
//! physiological measurement.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below pin the common double-precision instantiations.

pub mod attention;
pub mod denoise;
pub mod dsp;
pub mod error;
pub mod extractors;
mod linalg;
mod rng;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod scalar;
pub mod signalio;

pub use error::{Error, Result};
pub use scalar::Real;
pub use signalio::{MaskSequence, Signal, VideoTensor};

pub type Signal64 = Signal<f64>;
pub type Signal32 = Signal<f32>;
pub type VideoTensor64 = VideoTensor<f64>;
pub type VideoTensor32 = VideoTensor<f32>;
pub type MaskSequence64 = MaskSequence<f64>;
pub type MaskSequence32 = MaskSequence<f32>;
