//! Classical pulse extractors operating on spatially averaged RGB traces.

mod chrom;
mod ica;
mod jade;
mod pos;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::{MaskSequence, Signal, VideoTensor};

pub use chrom::{chrom, CHROM_WINDOW_SEC};
pub use ica::{ica_pulse, select_pulse_component};
pub use jade::{jade, JadeOutput, JADE_MAX_SWEEPS, JADE_MIN_ANGLE};
pub use pos::{pos, POS_WINDOW_SEC};

/// Three-channel `R, G, B` trace with strictly positive channel means.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbTrace<T>(Signal<T>);

impl<T: Real> RgbTrace<T> {
    pub fn new(signal: Signal<T>) -> Result<Self> {
        if signal.num_channels() != 3 {
            return Err(Error::invalid(format!(
                "RGB trace needs 3 channels, got {}",
                signal.num_channels()
            )));
        }
        let n = T::from_usize_lossy(signal.len());
        for c in 0..3 {
            if signal.channel(c).sum() / n <= T::zero() {
                return Err(Error::invalid(format!("channel {c} has a non-positive mean")));
            }
        }
        Ok(Self(signal))
    }

    pub fn signal(&self) -> &Signal<T> {
        &self.0
    }

    pub fn into_signal(self) -> Signal<T> {
        self.0
    }

    pub fn fps(&self) -> f64 {
        self.0.fps()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Mean colour inside a binary region of interest, frame by frame.
///
/// Unlike the noise estimate, the divisor is the number of selected pixels.
pub fn spatial_average<T: Real>(video: &VideoTensor<T>, roi: &MaskSequence<T>) -> Result<Signal<T>> {
    if !roi.is_binary() {
        return Err(Error::invalid("region of interest must be binary"));
    }
    if roi.frames() != video.frames() || (roi.height(), roi.width()) != (video.height(), video.width()) {
        return Err(Error::dims("region of interest does not match the video"));
    }
    let channels = video.channels();
    let mut out = Array2::zeros((video.frames(), channels));
    for t in 0..video.frames() {
        let frame = video.frame(t);
        let mask = roi.frame(t);
        let mut count = 0usize;
        let mut acc = vec![T::zero(); channels];
        for ((y, x), &m) in mask.indexed_iter() {
            if m == T::one() {
                count += 1;
                for (c, a) in acc.iter_mut().enumerate() {
                    *a += frame[[y, x, c]];
                }
            }
        }
        if count == 0 {
            return Err(Error::invalid(format!("empty region of interest in frame {t}")));
        }
        let count = T::from_usize_lossy(count);
        for (c, a) in acc.into_iter().enumerate() {
            out[[t, c]] = a / count;
        }
    }
    let sig = Signal::new(out, video.fps())?;
    if channels == 3 {
        sig.with_names(["R", "G", "B"])
    } else {
        Ok(sig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMethod {
    Chrom,
    Pos,
    Ica,
    /// Green channel of the spatial average.
    Mean,
}

impl std::str::FromStr for ExtractionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chrom" => Ok(Self::Chrom),
            "pos" => Ok(Self::Pos),
            "ica" => Ok(Self::Ica),
            "mean" => Ok(Self::Mean),
            other => Err(Error::invalid(format!("unknown extraction method `{other}`"))),
        }
    }
}

/// Raw (unpreprocessed) pulse estimate from an RGB trace.
pub fn extract<T: Real>(trace: &Signal<T>, method: ExtractionMethod) -> Result<Signal<T>> {
    let out = match method {
        ExtractionMethod::Mean => {
            let c = if trace.num_channels() == 3 { 1 } else { 0 };
            return trace.select(c)?.with_names(["bvp"]);
        }
        ExtractionMethod::Chrom => chrom(&RgbTrace::new(trace.clone())?)?,
        ExtractionMethod::Pos => pos(&RgbTrace::new(trace.clone())?)?,
        ExtractionMethod::Ica => ica_pulse(&RgbTrace::new(trace.clone())?)?,
    };
    out.with_names(["bvp"])
}

/// Population standard deviation.
pub(crate) fn std_dev<T: Real>(x: &[T]) -> T {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    (x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n).sqrt()
}
