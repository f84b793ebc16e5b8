use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Gaussian noise restricted to `band_hz` by zeroing FFT bins, scaled to a
/// peak absolute value of 1. A band containing no bins yields zeros.
pub fn band_limited_noise<R: Rng>(rng: &mut R, n: usize, fps: f64, band_hz: (f64, f64)) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("noise length must be positive"));
    }
    if !(band_hz.0 >= 0.0 && band_hz.1 > band_hz.0) {
        return Err(Error::invalid(format!("invalid noise band {:?}", band_hz)));
    }
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fps / n as f64;
        if f < band_hz.0 || f > band_hz.1 {
            *v = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let out: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(out);
    }
    Ok(out.into_iter().map(|v| v / peak).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn peak_is_one_and_band_respected() {
        let mut rng = stream(3, 0, 0);
        let x = band_limited_noise(&mut rng, 600, 30.0, (0.5, 1.0)).unwrap();
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(600).process(&mut buf);
        for (k, v) in buf.iter().enumerate().take(301) {
            let f = k as f64 * 30.0 / 600.0;
            if !(0.5..=1.0).contains(&f) {
                assert!(v.norm() < 1e-9, "bin {k} leaks {}", v.norm());
            }
        }
    }
}
