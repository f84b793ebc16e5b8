//! Inverse-attention noise estimation.
//!
//! Attention weights are min-max normalised per frame, inverted (binary
//! threshold or `1 - A`), optionally restricted to the centre or the edges of
//! the frame, and used to weight the pixels of a frame downsampled to the
//! mask resolution. The noise estimate for channel `c` at frame `t` is
//!
//! ```text
//! N[c, t] = 1/(H·W) · Σ_y Σ_x I[t, y, x, c] · M[t, y, x]
//! ```
//!
//! The divisor is the full mask area, not the size of the mask support.

use ndarray::{Array2, Array3, Array4, ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::{MaskSequence, Signal, VideoTensor};

/// Side length of attention masks produced by the encoder.
pub const MASK_SIZE: usize = 34;
pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMode {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub mode: InversionMode,
    /// Attention values above this are dropped in binary mode.
    pub threshold: f64,
}

impl InversionConfig {
    pub fn binary(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold {threshold} outside (0, 1)")));
        }
        Ok(Self {
            mode: InversionMode::Binary,
            threshold,
        })
    }

    pub fn continuous() -> Self {
        Self {
            mode: InversionMode::Continuous,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            mode: InversionMode::Binary,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    All,
    /// Central `H/2 × W/2` block only.
    Center,
    /// Everything outside the central block.
    Edges,
}

/// Per-frame min-max scaling to `[0, 1]`; constant frames become zero.
pub fn normalize_mask<T: Real>(raw: &MaskSequence<T>) -> Result<MaskSequence<T>> {
    let mut data = raw.data().to_owned();
    for mut frame in data.outer_iter_mut() {
        let (lo, hi) = frame
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi > lo {
            let span = hi - lo;
            frame.mapv_inplace(|v| (v - lo) / span);
        } else {
            frame.fill(T::zero());
        }
    }
    MaskSequence::new(data)
}

pub fn invert_mask<T: Real>(mask: &MaskSequence<T>, config: InversionConfig) -> Result<MaskSequence<T>> {
    if !mask.is_normalized() {
        return Err(Error::invalid("mask must be normalized to [0, 1] before inversion"));
    }
    let data = match config.mode {
        InversionMode::Binary => {
            let t = T::lit(config.threshold);
            mask.data().mapv(|a| if a > t { T::zero() } else { T::one() })
        }
        InversionMode::Continuous => mask.data().mapv(|a| T::one() - a),
    };
    MaskSequence::new(data)
}

/// Catmull-Rom cubic convolution kernel (a = -0.5).
fn cubic_weight<T: Real>(x: T) -> T {
    let a = T::lit(-0.5);
    let x = x.abs();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    if x <= T::one() {
        ((a + two) * x - (a + three)) * x * x + T::one()
    } else if x < two {
        ((a * x - T::lit(5.0) * a) * x + T::lit(8.0) * a) * x - T::lit(4.0) * a
    } else {
        T::zero()
    }
}

/// Four clamped taps and weights for sampling position `pos` on `0..len`.
fn cubic_taps<T: Real>(pos: T, len: usize) -> [(usize, T); 4] {
    let base = pos.floor();
    let frac = pos - base;
    let base = base.to_isize().unwrap();
    let last = len as isize - 1;
    std::array::from_fn(|k| {
        let offset = k as isize - 1;
        let idx = (base + offset).clamp(0, last) as usize;
        (idx, cubic_weight(frac - T::lit(offset as f64)))
    })
}

/// Source coordinate of output sample `i` when resizing `src` to `dst`
/// samples with the corner samples aligned.
fn aligned_coord<T: Real>(i: usize, src: usize, dst: usize) -> T {
    if dst == 1 {
        T::lit((src as f64 - 1.0) / 2.0)
    } else {
        T::lit(i as f64 * (src as f64 - 1.0) / (dst as f64 - 1.0))
    }
}

/// Shift `line` by `shift` samples (positive moves content towards higher
/// indices) with Catmull-Rom interpolation and edge clamping.
pub fn shift_line<T: Real>(line: &[T], shift: T) -> Vec<T> {
    let n = line.len();
    (0..n)
        .map(|i| {
            cubic_taps(T::from_usize_lossy(i) - shift, n)
                .iter()
                .fold(T::zero(), |acc, &(j, w)| acc + w * line[j])
        })
        .collect()
}

/// Bicubic resize of an `H × W × C` frame to `target = (H_m, W_m)`.
pub fn downsample_frame<T: Real>(frame: ArrayView3<'_, T>, target: (usize, usize)) -> Result<Array3<T>> {
    let (h, w, c) = frame.dim();
    let (th, tw) = target;
    if th == 0 || tw == 0 || th > h || tw > w {
        return Err(Error::invalid(format!("cannot downsample {h}x{w} to {th}x{tw}")));
    }
    if (th, tw) == (h, w) {
        return Ok(frame.to_owned());
    }
    let src = frame.as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let stride = w * c;
    // Rows first, then columns.
    let mut rows = vec![T::zero(); th * stride];
    for i in 0..th {
        let dst = &mut rows[i * stride..(i + 1) * stride];
        for (y, wt) in cubic_taps::<T>(aligned_coord(i, h, th), h) {
            for (d, &v) in dst.iter_mut().zip(&src[y * stride..(y + 1) * stride]) {
                *d += wt * v;
            }
        }
    }
    let mut out = vec![T::zero(); th * tw * c];
    for j in 0..tw {
        let taps = cubic_taps::<T>(aligned_coord(j, w, tw), w);
        for i in 0..th {
            let o = (i * tw + j) * c;
            for &(x, wt) in &taps {
                let r = i * stride + x * c;
                for ch in 0..c {
                    out[o + ch] += wt * rows[r + ch];
                }
            }
        }
    }
    let out = Array3::from_shape_vec((th, tw, c), out).expect("shape matches buffer");
    Ok(out)
}

pub fn downsample_video<T: Real>(video: &VideoTensor<T>, target: (usize, usize)) -> Result<VideoTensor<T>> {
    if (video.height(), video.width()) == target {
        return Ok(video.clone());
    }
    let mut data = Array4::zeros((video.frames(), target.0, target.1, video.channels()));
    for (t, mut dst) in data.outer_iter_mut().enumerate() {
        dst.assign(&downsample_frame(video.frame(t), target)?);
    }
    VideoTensor::new(data, video.fps())
}

pub fn downsample_mask<T: Real>(mask: &MaskSequence<T>, target: (usize, usize)) -> Result<MaskSequence<T>> {
    if (mask.height(), mask.width()) == target {
        return Ok(mask.clone());
    }
    let mut data = Array3::zeros((mask.frames(), target.0, target.1));
    for (t, mut dst) in data.outer_iter_mut().enumerate() {
        let frame = mask.frame(t).insert_axis(Axis(2));
        dst.assign(&downsample_frame(frame, target)?.index_axis(Axis(2), 0));
    }
    MaskSequence::new(data)
}

/// Per-frame, per-channel inverse-mask-weighted spatial average.
pub fn noise_estimate<T: Real>(video: &VideoTensor<T>, inverse_mask: &MaskSequence<T>) -> Result<Signal<T>> {
    if video.frames() != inverse_mask.frames() {
        return Err(Error::dims(format!(
            "video has {} frames, mask has {}",
            video.frames(),
            inverse_mask.frames()
        )));
    }
    if (video.height(), video.width()) != (inverse_mask.height(), inverse_mask.width()) {
        return Err(Error::dims(format!(
            "frame {}x{} does not match mask {}x{}",
            video.height(),
            video.width(),
            inverse_mask.height(),
            inverse_mask.width()
        )));
    }
    let area = T::from_usize_lossy(video.height() * video.width());
    let channels = video.channels();
    let mut out = Array2::zeros((video.frames(), channels));
    for t in 0..video.frames() {
        let frame = video.frame(t);
        let mask = inverse_mask.frame(t);
        for c in 0..channels {
            let plane = frame.index_axis(Axis(2), c);
            let acc = ndarray::Zip::from(&plane)
                .and(&mask)
                .fold(T::zero(), |acc, &i, &m| acc + i * m);
            out[[t, c]] = acc / area;
        }
    }
    let sig = Signal::new(out, video.fps())?;
    if channels == 3 {
        sig.with_names(["R", "G", "B"])
    } else {
        Ok(sig)
    }
}

/// Row/column range of the central half-size block.
pub fn central_block(h: usize, w: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let (bh, bw) = (h / 2, w / 2);
    let (y0, x0) = ((h - bh) / 2, (w - bw) / 2);
    (y0..y0 + bh, x0..x0 + bw)
}

fn region_weights<T: Real>(h: usize, w: usize, region: Region) -> Array2<T> {
    let (rows, cols) = central_block(h, w);
    Array2::from_shape_fn((h, w), |(y, x)| {
        let inside = rows.contains(&y) && cols.contains(&x);
        let keep = match region {
            Region::All => true,
            Region::Center => inside,
            Region::Edges => !inside,
        };
        if keep {
            T::one()
        } else {
            T::zero()
        }
    })
}

pub fn region_partition<T: Real>(mask: &MaskSequence<T>, region: Region) -> Result<MaskSequence<T>> {
    let keep: Array2<T> = region_weights(mask.height(), mask.width(), region);
    let mut data = mask.data().to_owned();
    for mut frame in data.outer_iter_mut() {
        frame *= &keep;
    }
    MaskSequence::new(data)
}

/// Downsample raw attention to `size × size` and normalise it.
pub fn prepare_attention<T: Real>(raw: &MaskSequence<T>, size: usize) -> Result<MaskSequence<T>> {
    normalize_mask(&downsample_mask(raw, (size, size))?)
}

/// Full noise path: resize frames to the mask, normalise, invert, restrict to
/// a region and apply the weighted average.
pub fn noise_from_attention<T: Real>(
    video: &VideoTensor<T>,
    attention: &MaskSequence<T>,
    config: InversionConfig,
    region: Region,
    size: usize,
) -> Result<Signal<T>> {
    let frames = downsample_video(video, (size, size))?;
    let mask = prepare_attention(attention, size)?;
    let inverse = region_partition(&invert_mask(&mask, config)?, region)?;
    noise_estimate(&frames, &inverse)
}

/// Number of nonzero weights per frame.
pub fn support_sizes<T: Real>(mask: ArrayView3<'_, T>) -> Vec<usize> {
    mask.outer_iter()
        .map(|f| f.iter().filter(|&&v| v != T::zero()).count())
        .collect()
}
