//! Synthetic ground truth and rendered scenes with noise shared between the
//! skin and the surrounding regions.

mod corrupt;
mod noise;
mod scene;
mod waveform;

pub use corrupt::corrupt_mask;
pub use noise::band_limited_noise;
pub use scene::{render_scene, FlickerMode, Rect, SceneConfig, SceneOutput};
pub use waveform::{breathing_waveform, pulse_waveform, PulseTemplate, RateTrajectory};
