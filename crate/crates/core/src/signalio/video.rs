use ndarray::{Array3, Array4, ArrayView2, ArrayView3, ArrayView4, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Frames `[T × H × W × C]` with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor<T> {
    data: Array4<T>,
    fps: f64,
}

impl<T: Real> VideoTensor<T> {
    /// Validates shape and finiteness, then clamps every value into `[0, 1]`.
    pub fn new(mut data: Array4<T>, fps: f64) -> Result<Self> {
        let (t, h, w, c) = data.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::invalid(format!("empty video {t}x{h}x{w}")));
        }
        if c != 1 && c != 3 {
            return Err(Error::invalid(format!("video must have 1 or 3 channels, got {c}")));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid(format!("frame rate must be positive, got {fps}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("video pixel".into()));
        }
        data.mapv_inplace(|v| v.max(T::zero()).min(T::one()));
        Ok(Self {
            data: data.as_standard_layout().into_owned(),
            fps,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn height(&self) -> usize {
        self.data.dim().1
    }

    pub fn width(&self) -> usize {
        self.data.dim().2
    }

    pub fn channels(&self) -> usize {
        self.data.dim().3
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn data(&self) -> ArrayView4<'_, T> {
        self.data.view()
    }

    pub fn frame(&self, t: usize) -> ArrayView3<'_, T> {
        self.data.index_axis(Axis(0), t)
    }

    pub fn into_data(self) -> Array4<T> {
        self.data
    }
}

/// Per-frame single-channel weights `[T × H × W]`.
///
/// `normalized` holds when every weight lies in `[0, 1]`; `binary` when every
/// weight is exactly 0 or 1. Both are computed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence<T> {
    data: Array3<T>,
    normalized: bool,
    binary: bool,
}

impl<T: Real> MaskSequence<T> {
    pub fn new(data: Array3<T>) -> Result<Self> {
        let (t, h, w) = data.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::invalid(format!("empty mask {t}x{h}x{w}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mask weight".into()));
        }
        let normalized = data.iter().all(|&v| v >= T::zero() && v <= T::one());
        let binary = data.iter().all(|&v| v == T::zero() || v == T::one());
        Ok(Self {
            data: data.as_standard_layout().into_owned(),
            normalized,
            binary,
        })
    }

    /// Same mask on every one of `frames` frames.
    pub fn repeat(frame: ArrayView2<'_, T>, frames: usize) -> Result<Self> {
        let (h, w) = frame.dim();
        let mut data = Array3::zeros((frames, h, w));
        for mut f in data.outer_iter_mut() {
            f.assign(&frame);
        }
        Self::new(data)
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn height(&self) -> usize {
        self.data.dim().1
    }

    pub fn width(&self) -> usize {
        self.data.dim().2
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_binary(&self) -> bool {
        self.binary
    }

    pub fn data(&self) -> ArrayView3<'_, T> {
        self.data.view()
    }

    pub fn frame(&self, t: usize) -> ArrayView2<'_, T> {
        self.data.index_axis(Axis(0), t)
    }

    pub fn into_data(self) -> Array3<T> {
        self.data
    }
}
