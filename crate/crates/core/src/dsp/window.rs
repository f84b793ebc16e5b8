use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

/// A segment of a longer signal, remembering where it starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    pub start: usize,
    pub signal: Signal<T>,
}

pub fn hop_for(length: usize, overlap_fraction: f64) -> usize {
    ((length as f64 * (1.0 - overlap_fraction)).round() as usize).max(1)
}

/// Start indices of every full window; the trailing partial window is dropped.
pub fn window_starts(n: usize, length: usize, overlap_fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid(format!("overlap fraction {overlap_fraction} outside [0, 1)")));
    }
    if length == 0 || length > n {
        return Err(Error::invalid(format!("window length {length} exceeds signal length {n}")));
    }
    let hop = hop_for(length, overlap_fraction);
    Ok((0..=(n - length) / hop).map(|i| i * hop).collect())
}

pub fn window<T: Real>(signal: &Signal<T>, length: usize, overlap_fraction: f64) -> Result<Vec<Window<T>>> {
    window_starts(signal.len(), length, overlap_fraction)?
        .into_iter()
        .map(|start| {
            Ok(Window {
                start,
                signal: signal.slice(start, length)?,
            })
        })
        .collect()
}

/// Periodic Hann window, `0.5 - 0.5·cos(2πi/L)`.
pub fn hann_periodic<T: Real>(len: usize) -> Vec<T> {
    let l = T::from_usize_lossy(len);
    (0..len)
        .map(|i| {
            let x = T::lit(2.0) * T::PI() * T::from_usize_lossy(i) / l;
            T::lit(0.5) - T::lit(0.5) * x.cos()
        })
        .collect()
}

/// Hann-weighted overlap-add into a signal of `len` samples.
///
/// Windows must share one length `L` and `hop` must equal `L / 2`; the
/// periodic Hann then sums to exactly one wherever two windows overlap.
pub fn overlap_add_hann<T: Real>(windows: &[Window<T>], hop: usize, len: usize, fps: f64) -> Result<Signal<T>> {
    let Some(first) = windows.first() else {
        return Signal::new(Array2::zeros((len.max(1), 1)), fps);
    };
    let wl = first.signal.len();
    let channels = first.signal.num_channels();
    if windows
        .iter()
        .any(|w| w.signal.len() != wl || w.signal.num_channels() != channels)
    {
        return Err(Error::dims("windows have inconsistent shapes"));
    }
    if 2 * hop != wl {
        return Err(Error::invalid(format!("hop {hop} is not half the window length {wl}")));
    }
    let hann = hann_periodic::<T>(wl);
    let mut out = Array2::zeros((len, channels));
    for w in windows {
        if w.start + wl > len {
            return Err(Error::dims(format!("window at {} overruns output length {len}", w.start)));
        }
        let mut dst = out.slice_mut(s![w.start..w.start + wl, ..]);
        for (i, row) in w.signal.samples().rows().into_iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                dst[[i, c]] += v * hann[i];
            }
        }
    }
    let mut res = Signal::new(out, fps)?;
    if let Some(names) = first.signal.channel_names() {
        res = res.with_names(names.to_vec())?;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Signal<f64> {
        Signal::from_vec((0..n).map(|i| i as f64).collect(), 30.0).unwrap()
    }

    #[test]
    fn half_overlap_starts() {
        let w = window(&ramp(120), 60, 0.5).unwrap();
        assert_eq!(w.iter().map(|w| w.start).collect::<Vec<_>>(), vec![0, 30, 60]);
        assert_eq!(w[1].signal.channel(0)[0], 30.0);
    }

    #[test]
    fn no_overlap_starts() {
        assert_eq!(window(&ramp(120), 60, 0.0).unwrap().len(), 2);
    }

    #[test]
    fn too_long_window() {
        assert!(window(&ramp(59), 60, 0.5).is_err());
        assert!(window(&ramp(100), 60, 1.0).is_err());
    }

    #[test]
    fn single_window_is_hann_weighted() {
        let sig = Signal::from_vec(vec![2.0; 8], 30.0).unwrap();
        let w = vec![Window { start: 0, signal: sig }];
        let out = overlap_add_hann(&w, 4, 8, 30.0).unwrap();
        let hann = hann_periodic::<f64>(8);
        for i in 0..8 {
            assert!((out.channel(0)[i] - 2.0 * hann[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn no_windows_is_zero() {
        let out = overlap_add_hann::<f64>(&[], 4, 10, 30.0).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inconsistent_windows_rejected() {
        let a = Window { start: 0, signal: ramp(8) };
        let b = Window { start: 4, signal: ramp(6) };
        assert!(overlap_add_hann(&[a, b], 4, 16, 30.0).is_err());
    }
}
