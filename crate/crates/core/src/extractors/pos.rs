use ndarray::Array1;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

use super::{std_dev, RgbTrace};

pub const POS_WINDOW_SEC: f64 = 1.6;

/// Plane-orthogonal-to-skin pulse extraction.
///
/// A 1.6 s window slides one frame at a time. Each window is divided by its
/// channel means, projected to `X = g - b` and `Y = -2r + g + b`, combined as
/// `X + (σX/σY)·Y`, mean-centred and added into the output at its position.
pub fn pos<T: Real>(trace: &RgbTrace<T>) -> Result<Signal<T>> {
    let sig = trace.signal();
    let n = sig.len();
    let len = (POS_WINDOW_SEC * sig.fps()).round() as usize;
    if len < 2 || len > n {
        return Err(Error::invalid(format!(
            "POS needs at least {POS_WINDOW_SEC} s of samples ({len}), got {n}"
        )));
    }
    let (r, g, b) = (sig.channel(0), sig.channel(1), sig.channel(2));
    let inv_len = T::one() / T::from_usize_lossy(len);
    let mut out = Array1::zeros(n);
    let mut xs = vec![T::zero(); len];
    let mut ys = vec![T::zero(); len];
    for start in 0..=n - len {
        let span = start..start + len;
        let mr = r.slice(ndarray::s![span.clone()]).sum() * inv_len;
        let mg = g.slice(ndarray::s![span.clone()]).sum() * inv_len;
        let mb = b.slice(ndarray::s![span]).sum() * inv_len;
        if mr <= T::zero() || mg <= T::zero() || mb <= T::zero() {
            continue;
        }
        for i in 0..len {
            let (nr, ng, nb) = (r[start + i] / mr, g[start + i] / mg, b[start + i] / mb);
            xs[i] = ng - nb;
            ys[i] = T::lit(-2.0) * nr + ng + nb;
        }
        let sy = std_dev(&ys);
        let ratio = if sy > T::zero() { std_dev(&xs) / sy } else { T::zero() };
        let s: Vec<T> = (0..len).map(|i| xs[i] + ratio * ys[i]).collect();
        let mean = s.iter().copied().sum::<T>() * inv_len;
        for i in 0..len {
            out[start + i] += s[i] - mean;
        }
    }
    Signal::new(out.insert_axis(ndarray::Axis(1)), sig.fps())
}
