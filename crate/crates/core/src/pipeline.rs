//! End-to-end processing chains shared by the command-line tool and tests.

use crate::attention::{noise_from_attention, InversionConfig, Region, MASK_SIZE};
use crate::denoise::{denoise_lstm, freq_sub, stack_inputs, training_windows, wave_sub, LstmDenoiser, TrainSample};
use crate::dsp::{bandpass, detrend, normalize_acdc, DetrendConfig, PULSE_BAND_HZ};
use crate::error::{Error, Result};
use crate::extractors::{extract, spatial_average, ExtractionMethod};
use crate::scalar::Real;
use crate::signalio::{resample, MaskSequence, Signal, VideoTensor};

pub const TARGET_FPS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocess {
    pub band_hz: (f64, f64),
    /// `None` selects the smoothing parameter from the frame rate.
    pub detrend: Option<DetrendConfig>,
    /// Resample to this rate first when it differs from the input rate.
    pub target_fps: Option<f64>,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self { band_hz: PULSE_BAND_HZ, detrend: None, target_fps: Some(TARGET_FPS) }
    }
}

/// Resample, detrend, band-pass and AC/DC-normalise every channel.
pub fn preprocess<T: Real>(signal: &Signal<T>, config: &Preprocess) -> Result<Signal<T>> {
    let sig = match config.target_fps {
        Some(fps) if fps != signal.fps() => resample(signal, fps)?,
        _ => signal.clone(),
    };
    let lambda = config.detrend.unwrap_or_else(|| DetrendConfig::for_fps(sig.fps()));
    let filtered = bandpass(&detrend(&sig, lambda)?, config.band_hz.0, config.band_hz.1)?;
    // Filtering a constant leaves rounding residue that normalisation would
    // blow up to full scale; measure it against the input magnitude instead.
    let mut samples = filtered.samples().to_owned();
    for (c, mut col) in samples.columns_mut().into_iter().enumerate() {
        let scale = sig.channel(c).iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let peak = col.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if peak <= T::lit(1024.0) * T::epsilon() * scale {
            col.fill(T::zero());
        }
    }
    normalize_acdc(&filtered.replace_samples(samples)?)
}

/// Preprocessed pulse estimate from the pixels selected by `roi`.
pub fn extract_pulse<T: Real>(
    video: &VideoTensor<T>,
    roi: &MaskSequence<T>,
    method: ExtractionMethod,
    config: &Preprocess,
) -> Result<Signal<T>> {
    let trace = spatial_average(video, roi)?;
    preprocess(&extract(&trace, method)?, config)?.with_names(["bvp"])
}

/// Preprocessed three-channel noise estimate from the ignored regions.
pub fn estimate_noise<T: Real>(
    video: &VideoTensor<T>,
    attention: &MaskSequence<T>,
    inversion: InversionConfig,
    region: Region,
    config: &Preprocess,
) -> Result<Signal<T>> {
    let raw = noise_from_attention(video, attention, inversion, region, MASK_SIZE)?;
    preprocess(&raw, config)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Denoiser<T> {
    None,
    FreqSub,
    WaveSub,
    Lstm(LstmDenoiser<T>),
    /// Model trained without noise inputs.
    LstmNoNoise(LstmDenoiser<T>),
}

pub fn denoise<T: Real>(
    estimate: &Signal<T>,
    noise: Option<&Signal<T>>,
    denoiser: &Denoiser<T>,
    band_hz: (f64, f64),
) -> Result<Signal<T>> {
    let need_noise = || noise.ok_or_else(|| Error::invalid("this denoiser needs a noise estimate"));
    match denoiser {
        Denoiser::None => Ok(estimate.clone()),
        Denoiser::FreqSub => freq_sub(estimate, need_noise()?, band_hz),
        Denoiser::WaveSub => wave_sub(estimate, need_noise()?),
        Denoiser::Lstm(model) => denoise_lstm(model, estimate, Some(need_noise()?)),
        Denoiser::LstmNoNoise(model) => denoise_lstm(model, estimate, None),
    }
}

/// Ground truth resampled to `fps`, AC/DC-normalised and cut to `len`
/// samples so it lines up with an estimate.
pub fn align_reference<T: Real>(truth: &Signal<T>, fps: f64, len: usize) -> Result<Signal<T>> {
    let sig = if truth.fps() != fps { resample(truth, fps)? } else { truth.clone() };
    if sig.len() < len {
        return Err(Error::dims(format!(
            "reference has {} samples at {fps} fps, estimate has {len}",
            sig.len()
        )));
    }
    normalize_acdc(&sig.slice(0, len)?.select(0)?)
}

/// Denoiser training windows for one recording: stacked estimate and noise
/// features against the aligned ground-truth pulse.
pub fn denoiser_samples<T: Real>(
    estimate: &Signal<T>,
    noise: Option<&Signal<T>>,
    truth: &Signal<T>,
    window: usize,
    overlap: f64,
) -> Result<Vec<TrainSample<T>>> {
    let features = stack_inputs(estimate, noise)?;
    let target = align_reference(truth, estimate.fps(), estimate.len())?;
    training_windows(&features, &target, window, overlap)
}
