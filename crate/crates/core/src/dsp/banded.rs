use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cholesky factor of a symmetric positive-definite band matrix.
///
/// Only the lower band is stored: `rows[i][k]` holds entry `(i, i - k)` for
/// `k = 0..=bandwidth`. Factorisation and solves are O(n·p²).
pub(crate) struct BandedCholesky<T> {
    bandwidth: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Real> BandedCholesky<T> {
    /// `band[i][k]` is the matrix entry `(i, i - k)`.
    pub fn factor(band: Vec<Vec<T>>, bandwidth: usize) -> Result<Self> {
        let n = band.len();
        let mut l = vec![vec![T::zero(); bandwidth + 1]; n];
        for i in 0..n {
            let j0 = i.saturating_sub(bandwidth);
            for j in j0..=i {
                let mut s = band[i][i - j];
                let k0 = i.saturating_sub(bandwidth).max(j.saturating_sub(bandwidth));
                for k in k0..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if i == j {
                    if s <= T::zero() {
                        return Err(Error::invalid("band matrix is not positive definite"));
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][i - j] = s / l[j][0];
                }
            }
        }
        Ok(Self { bandwidth, rows: l })
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.rows.len();
        let p = self.bandwidth;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(p)..i {
                s -= self.rows[i][i - k] * y[k];
            }
            y[i] = s / self.rows[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + p + 1).min(n) {
                s -= self.rows[k][k - i] * y[k];
            }
            y[i] = s / self.rows[i][0];
        }
        y
    }
}
