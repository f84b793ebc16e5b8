//! Stacked bidirectional LSTM with a per-timestep linear read-out.
//!
//! Sequences are processed in batches laid out time-major: row `t·B + b` of
//! every activation matrix holds timestep `t` of sequence `b`. Input
//! projections for a whole sequence are one matrix product; only the
//! recurrent term is evaluated step by step.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_MAGIC: &[u8; 4] = b"LSD1";
pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_LAYERS: usize = 2;
pub const DEFAULT_HIDDEN: usize = 128;

/// Weights of one direction of one layer. Gate rows are ordered `i, f, g, o`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell<T> {
    /// `4H × in`
    pub w: Array2<T>,
    /// `4H × H`
    pub u: Array2<T>,
    /// `4H`
    pub b: Array1<T>,
}

impl<T: Real> LstmCell<T> {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((4 * hidden, input)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }
}

/// Parameters of the denoiser. The same type doubles as a gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDenoiser<T> {
    input_dim: usize,
    hidden: usize,
    /// `layers[l] = [forward, backward]`
    pub layers: Vec<[LstmCell<T>; 2]>,
    /// `2H` read-out weights over `[h_forward, h_backward]`.
    pub out_w: Array1<T>,
    /// Read-out bias, stored as a length-1 array.
    pub out_b: Array1<T>,
}

impl<T: Real> LstmDenoiser<T> {
    pub fn zeros(layers: usize, hidden: usize, input_dim: usize) -> Result<Self> {
        if layers == 0 || hidden == 0 || input_dim == 0 {
            return Err(Error::invalid("layers, hidden size and input size must be positive"));
        }
        let layers = (0..layers)
            .map(|l| {
                let input = if l == 0 { input_dim } else { 2 * hidden };
                [LstmCell::zeros(input, hidden), LstmCell::zeros(input, hidden)]
            })
            .collect();
        Ok(Self {
            input_dim,
            hidden,
            layers,
            out_w: Array1::zeros(2 * hidden),
            out_b: Array1::zeros(1),
        })
    }

    /// Uniform initialisation in `[-1/√H, 1/√H]`, drawn in parameter order.
    pub fn init_uniform<R: Rng>(layers: usize, hidden: usize, input_dim: usize, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(layers, hidden, input_dim)?;
        let k = 1.0 / (hidden as f64).sqrt();
        for block in m.blocks_mut() {
            for v in block.iter_mut() {
                *v = T::lit(rng.random_range(-k..=k));
            }
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.num_layers(), self.hidden, self.input_dim).expect("valid dimensions")
    }

    /// Parameter blocks in serialisation order: layer-major, direction-major,
    /// then `W, U, b`; the read-out weights and bias last.
    pub fn blocks(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(6 * self.layers.len() + 2);
        for pair in &self.layers {
            for cell in pair {
                out.push(cell.w.as_slice().expect("standard layout"));
                out.push(cell.u.as_slice().expect("standard layout"));
                out.push(cell.b.as_slice().expect("standard layout"));
            }
        }
        out.push(self.out_w.as_slice().expect("standard layout"));
        out.push(self.out_b.as_slice().expect("standard layout"));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(6 * self.layers.len() + 2);
        for pair in &mut self.layers {
            for cell in pair {
                out.push(cell.w.as_slice_mut().expect("standard layout"));
                out.push(cell.u.as_slice_mut().expect("standard layout"));
                out.push(cell.b.as_slice_mut().expect("standard layout"));
            }
        }
        out.push(self.out_w.as_slice_mut().expect("standard layout"));
        out.push(self.out_b.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<T> {
        self.blocks().concat()
    }

    pub fn set_flat_params(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::dims(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            let n = block.len();
            block.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Same model with the forward and backward cells of every layer swapped.
    pub fn swap_directions(&self) -> Self {
        let mut m = self.clone();
        let h = self.hidden;
        for (l, pair) in m.layers.iter_mut().enumerate() {
            pair.swap(0, 1);
            if l > 0 {
                // Upper layers read [h_forward, h_backward]; keep that pairing.
                for cell in pair.iter_mut() {
                    let w = cell.w.clone();
                    cell.w.slice_mut(s![.., ..h]).assign(&w.slice(s![.., h..]));
                    cell.w.slice_mut(s![.., h..]).assign(&w.slice(s![.., ..h]));
                }
            }
        }
        let mut w = Array1::zeros(2 * h);
        w.slice_mut(s![..h]).assign(&self.out_w.slice(s![h..]));
        w.slice_mut(s![h..]).assign(&self.out_w.slice(s![..h]));
        m.out_w = w;
        m
    }

    pub fn cast<U: Real>(&self) -> LstmDenoiser<U> {
        let mut m = LstmDenoiser::<U>::zeros(self.num_layers(), self.hidden, self.input_dim).expect("valid dimensions");
        let flat: Vec<U> = self.flat_params().iter().map(|v| U::lit(v.as_f64())).collect();
        m.set_flat_params(&flat).expect("same shape");
        m
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 8 * self.num_params());
        out.extend_from_slice(MODEL_MAGIC);
        for v in [MODEL_VERSION, self.num_layers() as u32, self.hidden as u32, self.input_dim as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for block in self.blocks() {
            for v in block {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 {
            return Err(Error::Format { offset: bytes.len() as u64, reason: "truncated model header".into() });
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(Error::Format { offset: 0, reason: "bad model magic".into() });
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes")) as usize;
        if word(0) != MODEL_VERSION as usize {
            return Err(Error::Format { offset: 4, reason: format!("unsupported model version {}", word(0)) });
        }
        let mut m = Self::zeros(word(1), word(2), word(3))
            .map_err(|e| Error::Format { offset: 8, reason: e.to_string() })?;
        let expected = 20 + 8 * m.num_params();
        if bytes.len() != expected {
            return Err(Error::Format {
                offset: bytes.len().min(expected) as u64,
                reason: format!("model payload is {} bytes, expected {}", bytes.len(), expected),
            });
        }
        let mut offset = 20;
        for block in m.blocks_mut() {
            for v in block.iter_mut() {
                let x = f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"));
                if !x.is_finite() {
                    return Err(Error::Format { offset: offset as u64, reason: "non-finite parameter".into() });
                }
                *v = T::lit(x);
                offset += 8;
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Add `scale · other` to every parameter.
    pub fn axpy(&mut self, scale: T, other: &Self) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * *y;
            }
        }
    }
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `tanh` through one exponential; several times faster than the libm
/// routine and accurate to a few ulps of 1.
#[inline]
fn tanh<T: Real>(x: T) -> T {
    let two = T::lit(2.0);
    two / (T::one() + (-two * x).exp()) - T::one()
}

/// Activations of one direction, rows in time-major order.
struct DirTape<T> {
    /// Post-nonlinearity gates `[i, f, g, o]`, `LB × 4H`.
    gates: Array2<T>,
    cells: Array2<T>,
    hidden: Array2<T>,
}

pub(crate) struct Tape<T> {
    steps: usize,
    batch: usize,
    /// Input to each layer, `LB × in_l`.
    inputs: Vec<Array2<T>>,
    dirs: Vec<[DirTape<T>; 2]>,
    /// Concatenated top-layer hidden states, `LB × 2H`.
    top: Array2<T>,
    pub(crate) output: Array1<T>,
}

fn run_direction<T: Real>(cell: &LstmCell<T>, x: &Array2<T>, steps: usize, batch: usize, reverse: bool) -> DirTape<T> {
    let h = cell.u.ncols();
    let mut gates = Array2::zeros((steps * batch, 4 * h));
    general_mat_mul(T::one(), x, &cell.w.t(), T::zero(), &mut gates);
    gates += &cell.b;
    let mut cells = Array2::zeros((steps * batch, h));
    let mut hidden = Array2::zeros((steps * batch, h));
    let mut h_prev = Array2::<T>::zeros((batch, h));
    let mut c_prev = Array2::<T>::zeros((batch, h));
    for s in 0..steps {
        let t = if reverse { steps - 1 - s } else { s };
        let rows = t * batch..(t + 1) * batch;
        let mut a = gates.slice_mut(s![rows.clone(), ..]);
        if s > 0 {
            general_mat_mul(T::one(), &h_prev, &cell.u.t(), T::one(), &mut a);
        }
        for b in 0..batch {
            let r = t * batch + b;
            let mut ar = a.row_mut(b);
            let ar = ar.as_slice_mut().expect("contiguous row");
            let (ai, rest) = ar.split_at_mut(h);
            let (af, rest) = rest.split_at_mut(h);
            let (ag, ao) = rest.split_at_mut(h);
            let cp = c_prev.row(b);
            let cp = cp.as_slice().expect("contiguous row");
            let mut cr = cells.row_mut(r);
            let cr = cr.as_slice_mut().expect("contiguous row");
            let mut hr = hidden.row_mut(r);
            let hr = hr.as_slice_mut().expect("contiguous row");
            for j in 0..h {
                let i = sigmoid(ai[j]);
                let f = sigmoid(af[j]);
                let g = tanh(ag[j]);
                let o = sigmoid(ao[j]);
                (ai[j], af[j], ag[j], ao[j]) = (i, f, g, o);
                let c = f * cp[j] + i * g;
                cr[j] = c;
                hr[j] = o * tanh(c);
            }
        }
        h_prev.assign(&hidden.slice(s![rows.clone(), ..]));
        c_prev.assign(&cells.slice(s![rows, ..]));
    }
    DirTape { gates, cells, hidden }
}

/// Gradient of one direction given `dh` (`LB × H`) on its outputs. Returns
/// the gradient with respect to the direction's input.
#[allow(clippy::too_many_arguments)]
fn backprop_direction<T: Real>(
    cell: &LstmCell<T>,
    grad: &mut LstmCell<T>,
    tape: &DirTape<T>,
    x: &Array2<T>,
    dh_out: &Array2<T>,
    steps: usize,
    batch: usize,
    reverse: bool,
) -> Array2<T> {
    let h = cell.u.ncols();
    let mut da = Array2::<T>::zeros((steps * batch, 4 * h));
    let mut h_prev_all = Array2::<T>::zeros((steps * batch, h));
    let mut dh_next = Array2::<T>::zeros((batch, h));
    let mut dc_next = Array2::<T>::zeros((batch, h));
    for s in (0..steps).rev() {
        let t = if reverse { steps - 1 - s } else { s };
        let prev = if s == 0 { None } else { Some(if reverse { t + 1 } else { t - 1 }) };
        let zeros = vec![T::zero(); h];
        for b in 0..batch {
            let r = t * batch + b;
            let g = tape.gates.row(r);
            let g = g.as_slice().expect("contiguous row");
            let (gi, rest) = g.split_at(h);
            let (gf, rest) = rest.split_at(h);
            let (gg, go) = rest.split_at(h);
            let c = tape.cells.row(r);
            let c = c.as_slice().expect("contiguous row");
            let cp_row = prev.map(|p| tape.cells.row(p * batch + b));
            let cp = cp_row.as_ref().map_or(&zeros[..], |v| v.as_slice().expect("contiguous row"));
            let dho = dh_out.row(r);
            let dho = dho.as_slice().expect("contiguous row");
            let dhn = dh_next.row(b);
            let dhn = dhn.as_slice().expect("contiguous row");
            let mut dcn = dc_next.row_mut(b);
            let dcn = dcn.as_slice_mut().expect("contiguous row");
            let mut dar = da.row_mut(r);
            let dar = dar.as_slice_mut().expect("contiguous row");
            let (di, rest) = dar.split_at_mut(h);
            let (df, rest) = rest.split_at_mut(h);
            let (dg, d_o) = rest.split_at_mut(h);
            for j in 0..h {
                let (ig, fg, ggv, og) = (gi[j], gf[j], gg[j], go[j]);
                let dh = dho[j] + dhn[j];
                let tc = tanh(c[j]);
                let dc = dcn[j] + dh * og * (T::one() - tc * tc);
                di[j] = dc * ggv * ig * (T::one() - ig);
                df[j] = dc * cp[j] * fg * (T::one() - fg);
                dg[j] = dc * ig * (T::one() - ggv * ggv);
                d_o[j] = dh * tc * og * (T::one() - og);
                dcn[j] = dc * fg;
            }
            if let Some(p) = prev {
                h_prev_all.row_mut(r).assign(&tape.hidden.row(p * batch + b));
            }
        }
        let rows = t * batch..(t + 1) * batch;
        general_mat_mul(T::one(), &da.slice(s![rows, ..]), &cell.u, T::zero(), &mut dh_next);
    }
    general_mat_mul(T::one(), &da.t(), x, T::one(), &mut grad.w);
    general_mat_mul(T::one(), &da.t(), &h_prev_all, T::one(), &mut grad.u);
    grad.b += &da.sum_axis(Axis(0));
    da.dot(&cell.w)
}

impl<T: Real> LstmDenoiser<T> {
    fn check_inputs(&self, windows: &[ArrayView2<'_, T>]) -> Result<usize> {
        let first = windows.first().ok_or_else(|| Error::invalid("empty batch"))?;
        let steps = first.nrows();
        if steps == 0 {
            return Err(Error::invalid("windows must contain at least one timestep"));
        }
        for w in windows {
            if w.ncols() != self.input_dim {
                return Err(Error::dims(format!(
                    "window has {} features, model expects {}",
                    w.ncols(),
                    self.input_dim
                )));
            }
            if w.nrows() != steps {
                return Err(Error::dims("windows in a batch must have equal length"));
            }
        }
        Ok(steps)
    }

    pub(crate) fn forward_tape(&self, windows: &[ArrayView2<'_, T>]) -> Result<Tape<T>> {
        let steps = self.check_inputs(windows)?;
        let batch = windows.len();
        let mut x = Array2::zeros((steps * batch, self.input_dim));
        for (b, w) in windows.iter().enumerate() {
            for t in 0..steps {
                x.row_mut(t * batch + b).assign(&w.row(t));
            }
        }
        let h = self.hidden;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut dirs = Vec::with_capacity(self.layers.len());
        for pair in &self.layers {
            let fwd = run_direction(&pair[0], &x, steps, batch, false);
            let bwd = run_direction(&pair[1], &x, steps, batch, true);
            let mut next = Array2::zeros((steps * batch, 2 * h));
            next.slice_mut(s![.., ..h]).assign(&fwd.hidden);
            next.slice_mut(s![.., h..]).assign(&bwd.hidden);
            inputs.push(std::mem::replace(&mut x, next));
            dirs.push([fwd, bwd]);
        }
        let output = x.dot(&self.out_w) + self.out_b[0];
        Ok(Tape { steps, batch, inputs, dirs, top: x, output })
    }

    /// Outputs for a batch of equal-length windows (`L × input_dim` each).
    pub fn forward_batch(&self, windows: &[ArrayView2<'_, T>]) -> Result<Vec<Array1<T>>> {
        let tape = self.forward_tape(windows)?;
        Ok(unpack(&tape.output, tape.steps, tape.batch))
    }

    /// Mean squared error over all timesteps of the batch and its gradient.
    pub fn loss_and_gradient(&self, windows: &[ArrayView2<'_, T>], targets: &[Array1<T>]) -> Result<(T, Self)> {
        let tape = self.forward_tape(windows)?;
        let (steps, batch) = (tape.steps, tape.batch);
        if targets.len() != batch || targets.iter().any(|t| t.len() != steps) {
            return Err(Error::dims("targets do not match the windows"));
        }
        let count = T::from_usize_lossy(steps * batch);
        let mut dy = Array1::zeros(steps * batch);
        let mut loss = T::zero();
        for (b, target) in targets.iter().enumerate() {
            for t in 0..steps {
                let r = t * batch + b;
                let e = tape.output[r] - target[t];
                loss += e * e;
                dy[r] = T::lit(2.0) * e / count;
            }
        }
        loss /= count;

        let mut grad = self.zeros_like();
        grad.out_w = tape.top.t().dot(&dy);
        grad.out_b[0] = dy.sum();
        let h = self.hidden;
        // dL/d(top hidden) = dy ⊗ out_w
        let mut d_above = dy.insert_axis(Axis(1)).dot(&self.out_w.view().insert_axis(Axis(0)));
        for l in (0..self.layers.len()).rev() {
            let dh_f = d_above.slice(s![.., ..h]).as_standard_layout().into_owned();
            let dh_b = d_above.slice(s![.., h..]).as_standard_layout().into_owned();
            let x = &tape.inputs[l];
            let [gf, gb] = &mut grad.layers[l];
            let dx_f = backprop_direction(&self.layers[l][0], gf, &tape.dirs[l][0], x, &dh_f, steps, batch, false);
            let dx_b = backprop_direction(&self.layers[l][1], gb, &tape.dirs[l][1], x, &dh_b, steps, batch, true);
            d_above = dx_f + dx_b;
        }
        Ok((loss, grad))
    }
}

fn unpack<T: Real>(flat: &Array1<T>, steps: usize, batch: usize) -> Vec<Array1<T>> {
    (0..batch)
        .map(|b| Array1::from_shape_fn(steps, |t| flat[t * batch + b]))
        .collect()
}

/// Denoised output for one window of `L × input_dim` features.
pub fn lstm_forward<T: Real>(model: &LstmDenoiser<T>, features: ArrayView2<'_, T>) -> Result<Array1<T>> {
    Ok(model.forward_batch(&[features])?.remove(0))
}
