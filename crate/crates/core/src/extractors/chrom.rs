use ndarray::{Array1, ArrayView1};

use crate::dsp::{hann_periodic, window_starts, Butterworth, BANDPASS_ORDER, PULSE_BAND_HZ};
use crate::error::Result;
use crate::scalar::Real;
use crate::signalio::Signal;

use super::{std_dev, RgbTrace};

pub const CHROM_WINDOW_SEC: f64 = 1.6;

/// Chrominance-based pulse extraction.
///
/// Channels are band-passed around their DC level, then processed in 1.6 s
/// windows with half-window steps: each window is divided by its mean,
/// band-passed again, projected onto `A = 3y_r - 2y_g` and
/// `B = 1.5y_r + y_g - 1.5y_b`, combined as `A - (σA/σB)·B`, Hann-weighted and
/// overlap-added. Windows with `σB = 0` contribute nothing.
pub fn chrom<T: Real>(trace: &RgbTrace<T>) -> Result<Signal<T>> {
    let sig = trace.signal();
    let fps = sig.fps();
    let n = sig.len();
    let half = ((CHROM_WINDOW_SEC / 2.0) * fps).round() as usize;
    let len = 2 * half.max(1);
    let filter = Butterworth::<T>::bandpass(BANDPASS_ORDER, PULSE_BAND_HZ.0, PULSE_BAND_HZ.1, fps)?;

    // Filtering the fluctuation only keeps the DC level needed for the
    // per-window mean normalisation.
    let prefiltered: Vec<Array1<T>> = (0..3)
        .map(|c| {
            let col = sig.channel(c);
            let mean = col.sum() / T::from_usize_lossy(n);
            let ac = col.mapv(|v| v - mean);
            Ok(filter.filtfilt(ac.view())?.mapv(|v| v + mean))
        })
        .collect::<Result<_>>()?;

    let hann = hann_periodic::<T>(len);
    let mut out = Array1::zeros(n);
    for start in window_starts(n, len, 0.5)? {
        if let Some(s) = chrom_window(&prefiltered, start, len, &filter)? {
            for i in 0..len {
                out[start + i] += s[i] * hann[i];
            }
        }
    }
    Signal::new(out.insert_axis(ndarray::Axis(1)), fps)
}

fn chrom_window<T: Real>(
    channels: &[Array1<T>],
    start: usize,
    len: usize,
    filter: &Butterworth<T>,
) -> Result<Option<Vec<T>>> {
    let mut y = Vec::with_capacity(3);
    for ch in channels {
        let w: ArrayView1<'_, T> = ch.slice(ndarray::s![start..start + len]);
        let mean = w.sum() / T::from_usize_lossy(len);
        if mean <= T::zero() {
            return Ok(None);
        }
        y.push(filter.filtfilt(w.mapv(|v| v / mean).view())?);
    }
    let (yr, yg, yb) = (&y[0], &y[1], &y[2]);
    let a: Vec<T> = (0..len).map(|i| T::lit(3.0) * yr[i] - T::lit(2.0) * yg[i]).collect();
    let b: Vec<T> = (0..len)
        .map(|i| T::lit(1.5) * yr[i] + yg[i] - T::lit(1.5) * yb[i])
        .collect();
    let sb = std_dev(&b);
    if sb == T::zero() {
        return Ok(None);
    }
    let alpha = std_dev(&a) / sb;
    Ok(Some((0..len).map(|i| a[i] - alpha * b[i]).collect()))
}
