//! Preprocessing primitives shared by every pipeline stage.

mod banded;
mod detrend;
mod filter;
mod normalize;
mod spectrum;
mod window;

pub use detrend::{detrend, trend, DetrendConfig};
pub use filter::{bandpass, Biquad, Butterworth, BANDPASS_ORDER};
pub use normalize::{normalize_acdc, normalize_channel, zscore_channel};
pub use spectrum::{default_pad, power_spectrum, Spectrum, DEFAULT_PAD_FACTOR};
pub use window::{hann_periodic, hop_for, overlap_add_hann, window, window_starts, Window};

/// Physiological pass band used throughout, in Hz.
pub const PULSE_BAND_HZ: (f64, f64) = (0.7, 2.5);
