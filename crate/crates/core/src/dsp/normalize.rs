use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

/// Mean removal, standard-deviation scaling and peak scaling of one channel.
///
/// The result has zero mean and peak magnitude exactly 1. A channel whose
/// spread is at rounding level relative to its magnitude is treated as
/// constant and maps to zeros.
pub fn normalize_channel<T: Real>(x: ArrayView1<'_, T>) -> Array1<T> {
    let n = T::from_usize_lossy(x.len());
    let mean = x.sum() / n;
    let centered = x.mapv(|v| v - mean);
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let spread = centered.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if spread <= T::lit(64.0) * T::epsilon() * scale || spread == T::zero() {
        return Array1::zeros(x.len());
    }
    let std = (centered.iter().map(|&v| v * v).sum::<T>() / n).sqrt();
    let z = centered.mapv(|v| v / std);
    let peak = z.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    z.mapv(|v| v / peak)
}

/// AC/DC normalization of every channel to the range `[-1, 1]`.
pub fn normalize_acdc<T: Real>(signal: &Signal<T>) -> Result<Signal<T>> {
    if signal.len() < 2 {
        return Err(Error::invalid("normalization needs at least 2 samples"));
    }
    signal.map_channels(|col| Ok(normalize_channel(col)))
}

/// Zero mean, unit (population) variance; constant channels map to zeros.
pub fn zscore_channel<T: Real>(x: ArrayView1<'_, T>) -> Array1<T> {
    let n = T::from_usize_lossy(x.len());
    let mean = x.sum() / n;
    let centered = x.mapv(|v| v - mean);
    let std = (centered.iter().map(|&v| v * v).sum::<T>() / n).sqrt();
    if std == T::zero() {
        return Array1::zeros(x.len());
    }
    centered.mapv(|v| v / std)
}
