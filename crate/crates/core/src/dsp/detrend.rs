//! Smoothness-priors detrending.
//!
//! The trend is the solution of `(I + λ² D₂ᵀD₂) z_trend = z`, where `D₂` is the
//! `(n - 2) × n` second-difference operator; the detrended signal is
//! `z - z_trend`. The system is pentadiagonal SPD and solved by banded Cholesky.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

use super::banded::BandedCholesky;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetrendConfig {
    pub lambda: f64,
}

impl DetrendConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("detrend lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    /// 500 for high-rate video (above 60 fps), 50 at 25-30 fps.
    pub fn for_fps(fps: f64) -> Self {
        Self {
            lambda: if fps > 60.0 { 500.0 } else { 50.0 },
        }
    }
}

impl Default for DetrendConfig {
    fn default() -> Self {
        Self { lambda: 50.0 }
    }
}

fn system<T: Real>(n: usize, lambda: T) -> Vec<Vec<T>> {
    let l2 = lambda * lambda;
    let mut band = vec![vec![T::zero(); 3]; n];
    for row in band.iter_mut() {
        row[0] = T::one();
    }
    let d = [T::one(), T::lit(-2.0), T::one()];
    // Accumulate λ²·DᵀD one difference row at a time.
    for r in 0..n - 2 {
        for a in 0..3 {
            for b in 0..=a {
                band[r + a][a - b] += l2 * d[a] * d[b];
            }
        }
    }
    band
}

/// Trend of one channel.
pub fn trend<T: Real>(values: ArrayView1<'_, T>, config: DetrendConfig) -> Result<Array1<T>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::invalid("detrending needs at least 3 samples"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("detrend input".into()));
    }
    let chol = BandedCholesky::factor(system(n, T::lit(config.lambda)), 2)?;
    let rhs: Vec<T> = values.iter().copied().collect();
    Ok(Array1::from(chol.solve(&rhs)))
}

pub fn detrend<T: Real>(signal: &Signal<T>, config: DetrendConfig) -> Result<Signal<T>> {
    signal.map_channels(|col| {
        let t = trend(col, config)?;
        Ok(&col - &t)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_maps_to_zero() {
        let s = Signal::from_vec(vec![3.25f64; 50], 30.0).unwrap();
        let d = detrend(&s, DetrendConfig::default()).unwrap();
        assert!(d.channel(0).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn short_input_rejected() {
        let s = Signal::from_vec(vec![1.0, 2.0], 30.0).unwrap();
        assert!(detrend(&s, DetrendConfig::default()).is_err());
    }

    #[test]
    fn lambda_by_rate() {
        assert_eq!(DetrendConfig::for_fps(120.0).lambda, 500.0);
        assert_eq!(DetrendConfig::for_fps(30.0).lambda, 50.0);
        assert!(DetrendConfig::new(0.0).is_err());
    }
}
