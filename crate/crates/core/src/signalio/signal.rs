use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniformly sampled multi-channel time series.
///
/// Samples are stored `[num_samples × num_channels]`. Construction validates
/// that there is at least one sample, the rate is positive and every value is
/// finite; the signal is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Array2<T>,
    fps: f64,
    channel_names: Option<Vec<String>>,
}

impl<T: Real> Signal<T> {
    pub fn new(samples: Array2<T>, fps: f64) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::invalid("signal needs at least one sample and one channel"));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid(format!("sample rate must be positive, got {fps}")));
        }
        if let Some((i, _)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sample {} channel {}",
                i / samples.ncols(),
                i % samples.ncols()
            )));
        }
        Ok(Self {
            samples: samples.as_standard_layout().into_owned(),
            fps,
            channel_names: None,
        })
    }

    /// Single-channel signal.
    pub fn from_vec(values: Vec<T>, fps: f64) -> Result<Self> {
        let n = values.len();
        let samples = Array2::from_shape_vec((n, 1), values).map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(samples, fps)
    }

    /// Build from per-channel columns of equal length.
    pub fn from_channels(channels: &[Array1<T>], fps: f64) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::invalid("no channels"));
        };
        let n = first.len();
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::dims("channel lengths differ"));
        }
        let mut samples = Array2::zeros((n, channels.len()));
        for (c, ch) in channels.iter().enumerate() {
            samples.column_mut(c).assign(ch);
        }
        Self::new(samples, fps)
    }

    pub fn with_names<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != self.num_channels() {
            return Err(Error::dims(format!(
                "{} names for {} channels",
                names.len(),
                self.num_channels()
            )));
        }
        self.channel_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Time spanned by the samples, `(n - 1) / fps`.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 / self.fps
    }

    pub fn samples(&self) -> ArrayView2<'_, T> {
        self.samples.view()
    }

    pub fn into_samples(self) -> Array2<T> {
        self.samples
    }

    pub fn channel(&self, c: usize) -> ArrayView1<'_, T> {
        self.samples.column(c)
    }

    pub fn channel_names(&self) -> Option<&[String]> {
        self.channel_names.as_deref()
    }

    /// Names to use on disk; unnamed channels become `ch0`, `ch1`, ...
    pub fn resolved_names(&self) -> Vec<String> {
        match &self.channel_names {
            Some(n) => n.clone(),
            None => (0..self.num_channels()).map(|c| format!("ch{c}")).collect(),
        }
    }

    /// Single-channel signal holding channel `c`, keeping its name.
    pub fn select(&self, c: usize) -> Result<Self> {
        if c >= self.num_channels() {
            return Err(Error::invalid(format!("channel {c} out of range")));
        }
        let col = self.samples.column(c).to_owned().insert_axis(Axis(1));
        let mut out = Self::new(col, self.fps)?;
        if let Some(names) = &self.channel_names {
            out.channel_names = Some(vec![names[c].clone()]);
        }
        Ok(out)
    }

    /// Apply `f` to every channel; names and rate are carried over.
    pub fn map_channels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(ArrayView1<'_, T>) -> Result<Array1<T>>,
    {
        let mut out = Array2::zeros(self.samples.raw_dim());
        for (c, col) in self.samples.columns().into_iter().enumerate() {
            let mapped = f(col)?;
            if mapped.len() != self.len() {
                return Err(Error::dims("channel map changed the length"));
            }
            out.column_mut(c).assign(&mapped);
        }
        self.replace_samples(out)
    }

    /// Same metadata, new sample matrix (length may differ, channel count may not).
    pub fn replace_samples(&self, samples: Array2<T>) -> Result<Self> {
        if samples.ncols() != self.num_channels() {
            return Err(Error::dims("channel count changed"));
        }
        let mut out = Self::new(samples, self.fps)?;
        out.channel_names = self.channel_names.clone();
        Ok(out)
    }

    pub fn with_fps(&self, fps: f64) -> Result<Self> {
        let mut out = Self::new(self.samples.clone(), fps)?;
        out.channel_names = self.channel_names.clone();
        Ok(out)
    }

    /// Samples `[start, start + len)` as a new signal.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() || len == 0 {
            return Err(Error::invalid(format!(
                "slice {start}+{len} outside signal of length {}",
                self.len()
            )));
        }
        let part = self.samples.slice(ndarray::s![start..start + len, ..]).to_owned();
        self.replace_samples(part)
    }

    pub fn cast<U: Real>(&self) -> Signal<U> {
        Signal {
            samples: self.samples.mapv(|v| U::lit(v.as_f64())),
            fps: self.fps,
            channel_names: self.channel_names.clone(),
        }
    }
}

/// Linear-interpolation resampling to `target_fps`.
///
/// The output covers the same time span: `floor((n - 1) * target / fps) + 1`
/// samples, the last of which lies within one output period of the input end.
pub fn resample<T: Real>(signal: &Signal<T>, target_fps: f64) -> Result<Signal<T>> {
    if !(target_fps.is_finite() && target_fps > 0.0) {
        return Err(Error::invalid(format!("target rate must be positive, got {target_fps}")));
    }
    let n = signal.len();
    if n < 2 {
        return Err(Error::invalid("resampling needs at least two samples"));
    }
    if target_fps == signal.fps() {
        return Ok(signal.clone());
    }
    let ratio = signal.fps() / target_fps;
    // Guard the floor against roundoff when the span is an exact multiple.
    let n_out = (((n - 1) as f64) / ratio + 1e-9).floor() as usize + 1;
    let src = signal.samples();
    let mut out = Array2::zeros((n_out, signal.num_channels()));
    for i in 0..n_out {
        let pos = i as f64 * ratio;
        let lo = (pos.floor() as usize).min(n - 1);
        let hi = (lo + 1).min(n - 1);
        let frac = T::lit(pos - lo as f64);
        for c in 0..signal.num_channels() {
            let a = src[[lo, c]];
            let b = src[[hi, c]];
            out[[i, c]] = a + (b - a) * frac;
        }
    }
    let mut res = Signal::new(out, target_fps)?;
    res.channel_names = signal.channel_names.clone();
    Ok(res)
}
