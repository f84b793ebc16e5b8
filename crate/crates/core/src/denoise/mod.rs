//! Denoising of a preliminary physiological estimate using noise estimates
//! from ignored image regions.

mod lstm;
mod train;

pub use lstm::{
    lstm_forward, LstmCell, LstmDenoiser, DEFAULT_HIDDEN, DEFAULT_LAYERS, MODEL_MAGIC, MODEL_VERSION,
};
pub use train::{
    lstm_train, train_from, training_windows, TrainConfig, TrainOutput, TrainSample, DEFAULT_OVERLAP,
    DEFAULT_WINDOW,
};

use ndarray::{Array1, Array2, ArrayView2};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dsp::{bandpass, hann_periodic, normalize_channel, window_starts};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

fn check_aligned<T: Real>(a: &Signal<T>, b: &Signal<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dims(format!("lengths {} and {} differ", a.len(), b.len())));
    }
    if a.fps() != b.fps() {
        return Err(Error::dims(format!("rates {} and {} differ", a.fps(), b.fps())));
    }
    Ok(())
}

/// Feature sequence for the denoiser: the estimate followed by the noise
/// channels, if any.
pub fn stack_inputs<T: Real>(estimate: &Signal<T>, noise: Option<&Signal<T>>) -> Result<Signal<T>> {
    if estimate.num_channels() != 1 {
        return Err(Error::dims("estimate must have one channel"));
    }
    let Some(noise) = noise else {
        return Ok(estimate.clone());
    };
    check_aligned(estimate, noise)?;
    let k = noise.num_channels();
    let mut out = Array2::zeros((estimate.len(), 1 + k));
    out.column_mut(0).assign(&estimate.channel(0));
    out.slice_mut(ndarray::s![.., 1..]).assign(&noise.samples());
    let mut names = vec![estimate.resolved_names().remove(0)];
    names.extend(noise.resolved_names().into_iter().map(|n| format!("noise_{n}")));
    Signal::new(out, estimate.fps())?.with_names(names)
}

/// Spectral subtraction of the channel-averaged noise magnitude.
///
/// The noise magnitude is scaled by the least-squares coefficient fitted on
/// the in-band bins, subtracted from the estimate's magnitude on every bin,
/// floored at zero and recombined with the estimate's phase. The result is
/// band-passed to `band_hz`.
pub fn freq_sub<T: Real>(estimate: &Signal<T>, noise: &Signal<T>, band_hz: (f64, f64)) -> Result<Signal<T>> {
    if estimate.num_channels() != 1 {
        return Err(Error::dims("estimate must have one channel"));
    }
    check_aligned(estimate, noise)?;
    let n = estimate.len();
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(n);
    let spectrum = |x: ndarray::ArrayView1<'_, T>| {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft.process(&mut buf);
        buf
    };
    let s = spectrum(estimate.channel(0));
    let mut noise_mag = vec![T::zero(); n];
    for c in 0..noise.num_channels() {
        for (acc, v) in noise_mag.iter_mut().zip(spectrum(noise.channel(c))) {
            *acc += v.norm();
        }
    }
    let k = T::from_usize_lossy(noise.num_channels());
    noise_mag.iter_mut().for_each(|v| *v /= k);

    let fps = estimate.fps();
    let in_band = |bin: usize| {
        let f = bin.min(n - bin) as f64 * fps / n as f64;
        f >= band_hz.0 && f <= band_hz.1
    };
    let (mut num, mut den) = (T::zero(), T::zero());
    for bin in (0..n).filter(|&b| in_band(b)) {
        num += s[bin].norm() * noise_mag[bin];
        den += noise_mag[bin] * noise_mag[bin];
    }
    let beta = if den > T::zero() { num / den } else { T::zero() };

    let mut out: Vec<Complex<T>> = s
        .iter()
        .zip(&noise_mag)
        .map(|(sv, &nm)| {
            let mag = sv.norm();
            if mag == T::zero() {
                return Complex::new(T::zero(), T::zero());
            }
            let kept = (mag - beta * nm).max(T::zero());
            *sv * (kept / mag)
        })
        .collect();
    planner.plan_fft_inverse(n).process(&mut out);
    let scale = T::from_usize_lossy(n);
    let values = Array1::from_iter(out.iter().map(|c| c.re / scale));
    let sig = Signal::new(values.insert_axis(ndarray::Axis(1)), fps)?;
    bandpass(&sig, band_hz.0, band_hz.1)?.with_names(["bvp"])
}

/// Least-squares fit of the estimate on the noise channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSubFit<T> {
    /// Coefficient per noise channel; zero for channels dropped as dependent.
    pub coefficients: Vec<T>,
    /// `estimate - Σ β_c · noise_c`, before normalisation.
    pub residual: Array1<T>,
}

/// Ordinary least squares via modified Gram-Schmidt; channels that are
/// (numerically) in the span of earlier ones are dropped.
pub fn wave_sub_fit<T: Real>(estimate: &Signal<T>, noise: &Signal<T>) -> Result<WaveSubFit<T>> {
    if estimate.num_channels() != 1 {
        return Err(Error::dims("estimate must have one channel"));
    }
    check_aligned(estimate, noise)?;
    let k = noise.num_channels();
    let tol = T::lit(1e-10);
    // Orthonormal basis q_j and the triangular factor r (q = noise · r⁻¹).
    let mut basis: Vec<Array1<T>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut r = Array2::<T>::zeros((k, k));
    for c in 0..k {
        let orig = noise.channel(c).to_owned();
        let norm0 = orig.dot(&orig).sqrt();
        let mut v = orig;
        for _ in 0..2 {
            for (j, q) in basis.iter().enumerate() {
                let p = q.dot(&v);
                r[[j, kept.len()]] += p;
                v.scaled_add(-p, q);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm0 == T::zero() || norm <= tol * norm0 {
            for j in 0..basis.len() {
                r[[j, kept.len()]] = T::zero();
            }
            continue;
        }
        r[[kept.len(), kept.len()]] = norm;
        basis.push(v / norm);
        kept.push(c);
    }
    let e = estimate.channel(0).to_owned();
    let proj: Vec<T> = basis.iter().map(|q| q.dot(&e)).collect();
    let mut residual = e;
    for (q, &p) in basis.iter().zip(&proj) {
        residual.scaled_add(-p, q);
    }
    // Back-substitute r · β = proj for the kept channels.
    let m = kept.len();
    let mut beta = vec![T::zero(); m];
    for i in (0..m).rev() {
        let mut acc = proj[i];
        for j in i + 1..m {
            acc -= r[[i, j]] * beta[j];
        }
        beta[i] = acc / r[[i, i]];
    }
    let mut coefficients = vec![T::zero(); k];
    for (i, &c) in kept.iter().enumerate() {
        coefficients[c] = beta[i];
    }
    Ok(WaveSubFit { coefficients, residual })
}

/// Time-domain subtraction of the least-squares noise fit, re-normalised.
pub fn wave_sub<T: Real>(estimate: &Signal<T>, noise: &Signal<T>) -> Result<Signal<T>> {
    let fit = wave_sub_fit(estimate, noise)?;
    let e = estimate.channel(0);
    let residual_norm = fit.residual.dot(&fit.residual).sqrt();
    let out = if residual_norm <= T::lit(1e-12) * e.dot(&e).sqrt() {
        Array1::zeros(e.len())
    } else {
        normalize_channel(fit.residual.view())
    };
    Signal::new(out.insert_axis(ndarray::Axis(1)), estimate.fps())?.with_names(["bvp"])
}

/// Window starts covering the whole signal: regular hops plus one
/// end-aligned window when the tail would otherwise be missed.
pub fn covering_starts(n: usize, window: usize, overlap: f64) -> Result<Vec<usize>> {
    let mut starts = window_starts(n, window, overlap)?;
    if let Some(&last) = starts.last() {
        if last + window < n {
            starts.push(n - window);
        }
    }
    Ok(starts)
}

/// Model output recombined from overlapping windows with periodic-Hann
/// weights, before normalisation. Samples whose Hann weights sum to zero
/// (the very first sample) fall back to a plain average.
pub fn denoise_lstm_raw<T: Real>(model: &LstmDenoiser<T>, features: &Signal<T>, window: usize) -> Result<Array1<T>> {
    if features.num_channels() != model.input_dim() {
        return Err(Error::dims(format!(
            "model expects {} input channels, got {}",
            model.input_dim(),
            features.num_channels()
        )));
    }
    let n = features.len();
    if n < window {
        return Err(Error::invalid(format!("signal of {n} samples is shorter than the {window}-sample window")));
    }
    let starts = covering_starts(n, window, DEFAULT_OVERLAP)?;
    let hann = hann_periodic::<T>(window);
    let mut acc = vec![T::zero(); n];
    let mut weight = vec![T::zero(); n];
    let mut plain = vec![T::zero(); n];
    let mut count = vec![0usize; n];
    let samples = features.samples();
    for chunk in starts.chunks(64) {
        let views: Vec<ArrayView2<'_, T>> = chunk
            .iter()
            .map(|&s| samples.slice(ndarray::s![s..s + window, ..]))
            .collect();
        for (&s, y) in chunk.iter().zip(model.forward_batch(&views)?) {
            for i in 0..window {
                acc[s + i] += hann[i] * y[i];
                weight[s + i] += hann[i];
                plain[s + i] += y[i];
                count[s + i] += 1;
            }
        }
    }
    Ok(Array1::from_shape_fn(n, |i| {
        if weight[i] > T::zero() {
            acc[i] / weight[i]
        } else {
            plain[i] / T::from_usize_lossy(count[i])
        }
    }))
}

/// Denoise with a trained model: stack inputs, run overlapping windows,
/// recombine and re-normalise.
pub fn denoise_lstm<T: Real>(
    model: &LstmDenoiser<T>,
    estimate: &Signal<T>,
    noise: Option<&Signal<T>>,
) -> Result<Signal<T>> {
    let features = stack_inputs(estimate, noise)?;
    let raw = denoise_lstm_raw(model, &features, DEFAULT_WINDOW)?;
    Signal::new(normalize_channel(raw.view()).insert_axis(ndarray::Axis(1)), estimate.fps())?.with_names(["bvp"])
}
