use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Real;
use crate::signalio::Signal;

/// Joint diagonalisation stops once every Givens angle in a sweep is below this.
pub const JADE_MIN_ANGLE: f64 = 1e-8;
pub const JADE_MAX_SWEEPS: usize = 100;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct JadeOutput<T> {
    /// Estimated sources as channels `s0, s1, ...`, unit variance.
    pub components: Signal<T>,
    /// Unmixing matrix applied to the mean-centred input.
    pub unmixing: Array2<T>,
    pub sweeps: usize,
}

/// Blind source separation by joint approximate diagonalisation of
/// fourth-order cumulant matrices.
pub fn jade<T: Real>(input: &Signal<T>) -> Result<JadeOutput<T>> {
    let k = input.num_channels();
    let n = input.len();
    if !(2..=3).contains(&k) {
        return Err(Error::invalid(format!("JADE supports 2 or 3 channels, got {k}")));
    }
    if n < 10 * k {
        return Err(Error::invalid(format!("JADE needs at least {} samples, got {n}", 10 * k)));
    }
    let nf = T::from_usize_lossy(n);
    // k x n, centred
    let mut x = input.samples().t().to_owned();
    for mut row in x.axis_iter_mut(Axis(0)) {
        let mean = row.sum() / nf;
        row.mapv_inplace(|v| v - mean);
    }

    let cov = x.dot(&x.t()) / nf;
    let (values, vectors) = symmetric_eigen(&cov);
    let lo = values[0];
    let hi = values[k - 1];
    let condition = if lo > T::zero() { (hi / lo).as_f64() } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }
    let mut whitening = vectors.t().to_owned();
    for (mut row, &l) in whitening.axis_iter_mut(Axis(0)).zip(&values) {
        row.mapv_inplace(|v| v / l.sqrt());
    }
    let z = whitening.dot(&x);

    let mut cms = cumulant_matrices(&z);
    let (rotation, sweeps) = joint_diagonalize(&mut cms, k);

    let unmixing = rotation.t().dot(&whitening);
    let sources = unmixing.dot(&x);
    let names: Vec<String> = (0..k).map(|i| format!("s{i}")).collect();
    let components = Signal::new(sources.t().to_owned(), input.fps())?.with_names(names)?;
    Ok(JadeOutput { components, unmixing, sweeps })
}

/// `Q_ij` for `i >= j` of whitened data; off-diagonal pairs scaled by √2.
fn cumulant_matrices<T: Real>(z: &Array2<T>) -> Vec<Array2<T>> {
    let k = z.nrows();
    let nf = T::from_usize_lossy(z.ncols());
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    let sqrt2 = T::lit(2.0).sqrt();
    for i in 0..k {
        let zi = z.row(i);
        for j in 0..=i {
            let zj = z.row(j);
            let weight = &zi * &zj;
            let weighted = z * &weight;
            let mut q = weighted.dot(&z.t()) / nf;
            if i == j {
                for d in 0..k {
                    q[[d, d]] -= T::one();
                }
                q[[i, i]] -= T::lit(2.0);
            } else {
                q[[i, j]] -= T::one();
                q[[j, i]] -= T::one();
                q.mapv_inplace(|v| v * sqrt2);
            }
            out.push(q);
        }
    }
    out
}

fn joint_diagonalize<T: Real>(cms: &mut [Array2<T>], k: usize) -> (Array2<T>, usize) {
    let mut v = Array2::<T>::eye(k);
    let threshold = T::lit(JADE_MIN_ANGLE);
    let mut sweeps = 0;
    while sweeps < JADE_MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (mut g11, mut g22, mut g12) = (T::zero(), T::zero(), T::zero());
                for m in cms.iter() {
                    let a = m[[p, p]] - m[[q, q]];
                    let b = m[[p, q]] + m[[q, p]];
                    g11 += a * a;
                    g22 += b * b;
                    g12 += a * b;
                }
                let ton = g11 - g22;
                let toff = T::lit(2.0) * g12;
                let theta = T::lit(0.5) * toff.atan2(ton + (ton * ton + toff * toff).sqrt());
                let (s, c) = theta.sin_cos();
                if s.abs() <= threshold {
                    continue;
                }
                rotated = true;
                for r in 0..k {
                    let (vp, vq) = (v[[r, p]], v[[r, q]]);
                    v[[r, p]] = c * vp + s * vq;
                    v[[r, q]] = c * vq - s * vp;
                }
                for m in cms.iter_mut() {
                    for col in 0..k {
                        let (mp, mq) = (m[[p, col]], m[[q, col]]);
                        m[[p, col]] = c * mp + s * mq;
                        m[[q, col]] = c * mq - s * mp;
                    }
                    for row in 0..k {
                        let (mp, mq) = (m[[row, p]], m[[row, q]]);
                        m[[row, p]] = c * mp + s * mq;
                        m[[row, q]] = c * mq - s * mp;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (v, sweeps)
}
