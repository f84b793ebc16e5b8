use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

/// Zero-padding factor applied before rounding up to a power of two.
pub const DEFAULT_PAD_FACTOR: usize = 8;

/// One-sided power spectrum with frequencies in beats per minute.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub power: Vec<T>,
    pub freqs_bpm: Vec<f64>,
    pub resolution_bpm: f64,
}

impl<T: Real> Spectrum<T> {
    /// Indices of bins whose centre lies in `[lo, hi]` BPM.
    pub fn band(&self, lo_bpm: f64, hi_bpm: f64) -> std::ops::Range<usize> {
        let start = self.freqs_bpm.partition_point(|&f| f < lo_bpm);
        let end = self.freqs_bpm.partition_point(|&f| f <= hi_bpm);
        start..end.max(start)
    }

    /// Frequency and power of the strongest bin in `[lo, hi]` BPM.
    pub fn peak_in(&self, lo_bpm: f64, hi_bpm: f64) -> Option<(f64, T)> {
        let band = self.band(lo_bpm, hi_bpm);
        band.max_by(|&a, &b| self.power[a].partial_cmp(&self.power[b]).unwrap())
            .map(|i| (self.freqs_bpm[i], self.power[i]))
    }
}

pub fn default_pad(n: usize) -> usize {
    (DEFAULT_PAD_FACTOR * n).next_power_of_two()
}

/// Periodogram `|X_k|² / n` of the mean-removed channel, zero-padded to
/// `pad_to` (default: next power of two at or above `8·n`).
pub fn power_spectrum<T: Real>(signal: &Signal<T>, channel: usize, pad_to: Option<usize>) -> Result<Spectrum<T>> {
    if channel >= signal.num_channels() {
        return Err(Error::invalid(format!("channel {channel} out of range")));
    }
    let x = signal.channel(channel);
    let n = x.len();
    if n < 4 {
        return Err(Error::invalid("power spectrum needs at least 4 samples"));
    }
    let nfft = pad_to.unwrap_or_else(|| default_pad(n));
    if nfft < n {
        return Err(Error::invalid(format!("pad length {nfft} shorter than signal {n}")));
    }
    let mean = x.sum() / T::from_usize_lossy(n);
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v - mean, T::zero())).collect();
    buf.resize(nfft, Complex::new(T::zero(), T::zero()));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let scale = T::from_usize_lossy(n);
    let bins = nfft / 2 + 1;
    let resolution_bpm = signal.fps() * 60.0 / nfft as f64;
    Ok(Spectrum {
        power: buf[..bins].iter().map(|c| c.norm_sqr() / scale).collect(),
        freqs_bpm: (0..bins).map(|k| k as f64 * resolution_bpm).collect(),
        resolution_bpm,
    })
}
