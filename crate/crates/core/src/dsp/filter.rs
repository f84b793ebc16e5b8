//! Zero-phase Butterworth band-pass filtering.
//!
//! Coefficients come from the analog low-pass prototype, a low-pass to
//! band-pass transform, and the bilinear transform with pre-warped band edges.
//! The filter is applied forward then backward over an even-symmetric
//! extension of the signal; every section starts from its steady-state
//! response to the first extended sample.

use ndarray::{Array1, ArrayView1};
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

/// Default band-pass order (per band edge).
pub const BANDPASS_ORDER: usize = 3;

/// Second-order section in transposed direct form II; `a[0]` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 3],
}

impl<T: Real> Biquad<T> {
    fn dc_gain(&self) -> T {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    fn response(&self, z: Complex<T>) -> Complex<T> {
        let zi = z.inv();
        let zi2 = zi * zi;
        let num = Complex::from(self.b[0]) + zi * self.b[1] + zi2 * self.b[2];
        let den = Complex::from(self.a[0]) + zi * self.a[1] + zi2 * self.a[2];
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth<T> {
    sections: Vec<Biquad<T>>,
}

impl<T: Real> Butterworth<T> {
    /// Band-pass of prototype order `order` (overall order `2·order`).
    pub fn bandpass(order: usize, lo: f64, hi: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
            return Err(Error::invalid(format!(
                "band [{lo}, {hi}] Hz must satisfy 0 < lo < hi < {} Hz",
                fs / 2.0
            )));
        }
        let two = T::lit(2.0);
        let fs2 = T::lit(2.0 * fs);
        let warp = |f: f64| fs2 * (T::PI() * T::lit(f / fs)).tan();
        let (w_lo, w_hi) = (warp(lo), warp(hi));
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;

        let bilinear = |s: Complex<T>| {
            let half = s / fs2;
            (Complex::from(T::one()) + half) / (Complex::from(T::one()) - half)
        };
        let section = |z1: Complex<T>, z2: Complex<T>| Biquad {
            b: [T::one(), T::zero(), -T::one()],
            a: [T::one(), -(z1 + z2).re, (z1 * z2).re],
        };

        let mut sections = Vec::with_capacity(order);
        for k in 0..order {
            let theta = T::PI() * T::lit((2 * k + order + 1) as f64) / T::lit((2 * order) as f64);
            let p = Complex::new(theta.cos(), theta.sin());
            if p.im < -T::lit(1e-12) {
                continue; // conjugate partner handled with its twin
            }
            let pb = p * bw;
            let disc = (pb * pb - Complex::from(T::lit(4.0) * w0_sq)).sqrt();
            let s1 = (pb + disc) / two;
            let s2 = (pb - disc) / two;
            if p.im.abs() <= T::lit(1e-12) {
                sections.push(section(bilinear(s1), bilinear(s2)));
            } else {
                sections.push(section(bilinear(s1), bilinear(s1).conj()));
                sections.push(section(bilinear(s2), bilinear(s2).conj()));
            }
        }

        // Unit gain at the digital centre frequency.
        let w0_digital = two * (w0_sq.sqrt() / fs2).atan();
        let z0 = Complex::new(w0_digital.cos(), w0_digital.sin());
        let gain = sections
            .iter()
            .fold(Complex::from(T::one()), |acc, s| acc * s.response(z0))
            .norm();
        for b in sections[0].b.iter_mut() {
            *b /= gain;
        }
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad<T>] {
        &self.sections
    }

    /// Order of the full transfer function.
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Edge extension length: three times the coefficient-vector length.
    pub fn pad_len(&self) -> usize {
        3 * (self.order() + 1)
    }

    /// Magnitude response at `f` Hz for sample rate `fs`.
    pub fn magnitude(&self, f: f64, fs: f64) -> T {
        let w = T::lit(2.0 * std::f64::consts::PI * f / fs);
        let z = Complex::new(w.cos(), w.sin());
        self.sections
            .iter()
            .fold(Complex::from(T::one()), |acc, s| acc * s.response(z))
            .norm()
    }

    /// Causal filtering with each section initialised at the steady state
    /// for a constant input equal to `x[0]`.
    fn run(&self, x: &mut [T]) {
        let Some(&x0) = x.first() else { return };
        let mut scale = x0;
        for s in &self.sections {
            let g = s.dc_gain();
            let mut z1 = scale * (g - s.b[0]);
            let mut z2 = scale * (s.b[2] - s.a[2] * g);
            scale *= g;
            for v in x.iter_mut() {
                let xin = *v;
                let y = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[1] * y + z2;
                z2 = s.b[2] * xin - s.a[2] * y;
                *v = y;
            }
        }
    }

    /// Forward-backward (zero-phase) filtering of one channel.
    pub fn filtfilt(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let n = x.len();
        let pad = self.pad_len();
        if n <= pad {
            return Err(Error::invalid(format!(
                "signal of {n} samples is too short for zero-phase filtering (needs more than {pad})"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| x[i]));
        ext.extend(x.iter().copied());
        ext.extend((n - 1 - pad..n - 1).rev().map(|i| x[i]));
        self.run(&mut ext);
        ext.reverse();
        self.run(&mut ext);
        ext.reverse();
        Ok(Array1::from(ext[pad..pad + n].to_vec()))
    }
}

/// Zero-phase third-order Butterworth band-pass on every channel.
pub fn bandpass<T: Real>(signal: &Signal<T>, lo: f64, hi: f64) -> Result<Signal<T>> {
    let filter = Butterworth::bandpass(BANDPASS_ORDER, lo, hi, signal.fps())?;
    signal.map_channels(|col| filter.filtfilt(col))
}
