use std::f64::consts::PI;

use crate::dsp::normalize_acdc;
use crate::error::{Error, Result};
use crate::metrics::{BR_BAND_BPM, HR_BAND_BPM};
use crate::scalar::Real;
use crate::signalio::Signal;

/// Piecewise-linear rate in BPM over time in seconds, constant beyond the
/// first and last knots.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTrajectory {
    knots: Vec<(f64, f64)>,
}

impl RateTrajectory {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("rate trajectory needs at least one knot"));
        }
        if knots.iter().any(|(t, r)| !t.is_finite() || !r.is_finite()) {
            return Err(Error::NonFinite("rate trajectory knot".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("rate knots must have increasing times"));
        }
        Ok(Self { knots })
    }

    pub fn constant(bpm: f64) -> Self {
        Self { knots: vec![(0.0, bpm)] }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&(kt, _)| kt <= t);
        if i == 0 {
            return k[0].1;
        }
        if i == k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, r0) = k[i - 1];
        let (t1, r1) = k[i];
        r0 + (r1 - r0) * (t - t0) / (t1 - t0)
    }

    pub fn range(&self) -> (f64, f64) {
        self.knots
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, r)| (lo.min(r), hi.max(r)))
    }
}

/// One beat as a function of phase in `[0, 1)`: an asymmetric Gaussian
/// systolic lobe plus a diastolic lobe of relative height `notch_depth`.
/// The dicrotic notch is the valley between the two lobes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTemplate {
    pub systolic_pos: f64,
    pub systolic_rise: f64,
    pub systolic_fall: f64,
    pub notch_depth: f64,
    pub diastolic_pos: f64,
    pub diastolic_width: f64,
}

impl Default for PulseTemplate {
    fn default() -> Self {
        Self {
            systolic_pos: 0.2,
            systolic_rise: 0.05,
            systolic_fall: 0.09,
            notch_depth: 0.4,
            diastolic_pos: 0.55,
            diastolic_width: 0.08,
        }
    }
}

fn lobe(phase: f64, pos: f64, rise: f64, fall: f64) -> f64 {
    (-1..=1)
        .map(|k| {
            let d = phase + k as f64 - pos;
            let w = if d < 0.0 { rise } else { fall };
            (-0.5 * d * d / (w * w)).exp()
        })
        .sum()
}

impl PulseTemplate {
    pub fn validate(&self) -> Result<()> {
        let widths = [self.systolic_rise, self.systolic_fall, self.diastolic_width];
        if widths.iter().any(|w| !(*w > 0.0 && *w <= 0.2)) {
            return Err(Error::invalid("lobe widths must lie in (0, 0.2]"));
        }
        if !(0.0..1.0).contains(&self.notch_depth) {
            return Err(Error::invalid(format!("notch depth {} outside [0, 1)", self.notch_depth)));
        }
        if !(0.0 < self.systolic_pos && self.systolic_pos < self.diastolic_pos && self.diastolic_pos < 1.0) {
            return Err(Error::invalid("lobe positions must satisfy 0 < systolic < diastolic < 1"));
        }
        Ok(())
    }

    fn raw(&self, phase: f64) -> f64 {
        lobe(phase, self.systolic_pos, self.systolic_rise, self.systolic_fall)
            + self.notch_depth * lobe(phase, self.diastolic_pos, self.diastolic_width, self.diastolic_width)
    }

    /// Mean of the raw beat over one period (Gaussian integrals; the wrapped
    /// tails beyond one period are below 1e-9 for admissible widths).
    fn mean(&self) -> f64 {
        let c = (PI / 2.0).sqrt();
        c * (self.systolic_rise + self.systolic_fall) + self.notch_depth * 2.0 * c * self.diastolic_width
    }

    /// Zero-mean beat value at `phase` (taken modulo 1).
    pub fn eval(&self, phase: f64) -> f64 {
        self.raw(phase.rem_euclid(1.0)) - self.mean()
    }
}

fn sample_count(fps: f64, duration: f64) -> Result<usize> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::invalid(format!("invalid fps {fps}")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid(format!("invalid duration {duration}")));
    }
    let n = (duration * fps).round() as usize;
    if n < 2 {
        return Err(Error::invalid("waveform needs at least two samples"));
    }
    Ok(n)
}

/// Ground-truth pulse rendered by accumulating phase at the instantaneous
/// rate; AC/DC normalised. The first systolic peak falls at
/// `systolic_pos` beats into the signal.
pub fn pulse_waveform<T: Real>(
    rate: &RateTrajectory,
    template: &PulseTemplate,
    fps: f64,
    duration: f64,
) -> Result<Signal<T>> {
    template.validate()?;
    let (lo, hi) = rate.range();
    if lo < HR_BAND_BPM.0 || hi > HR_BAND_BPM.1 {
        return Err(Error::invalid(format!(
            "heart rate range [{lo}, {hi}] BPM outside [{}, {}]",
            HR_BAND_BPM.0, HR_BAND_BPM.1
        )));
    }
    let n = sample_count(fps, duration)?;
    let dt = 1.0 / fps;
    let mut phase = 0.0f64;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        values.push(T::lit(template.eval(phase)));
        let t = i as f64 * dt;
        // Trapezoidal phase increment.
        phase += 0.5 * (rate.at(t) + rate.at(t + dt)) / 60.0 * dt;
    }
    normalize_acdc(&Signal::from_vec(values, fps)?)?.with_names(["bvp"])
}

/// Breathing as a sinusoid with a 10% second harmonic; AC/DC normalised.
pub fn breathing_waveform<T: Real>(br_bpm: f64, fps: f64, duration: f64) -> Result<Signal<T>> {
    if !(BR_BAND_BPM.0..=BR_BAND_BPM.1).contains(&br_bpm) {
        return Err(Error::invalid(format!(
            "breathing rate {br_bpm} BPM outside [{}, {}]",
            BR_BAND_BPM.0, BR_BAND_BPM.1
        )));
    }
    let n = sample_count(fps, duration)?;
    let w = 2.0 * PI * br_bpm / 60.0;
    let values = (0..n)
        .map(|i| {
            let t = i as f64 / fps;
            T::lit((w * t + PI / 4.0).sin() + 0.1 * (2.0 * w * t + PI / 4.0).sin())
        })
        .collect();
    normalize_acdc(&Signal::from_vec(values, fps)?)?.with_names(["breathing"])
}
