use std::ops::{Index, IndexMut};

use crate::scalar::{one, zero, Real, C};

use super::ChannelError;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<R>>,
}

impl<R: Real> ComplexMatrix<R> {
    pub fn new(rows: usize, cols: usize, data: Vec<C<R>>) -> Result<Self, ChannelError> {
        if data.len() != rows * cols {
            return Err(ChannelError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ChannelError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Square matrix from nested rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, rows[0].len(), |i, j| C::new(R::of(rows[i][j].0), R::of(rows[i][j].1)))
    }

    pub fn diag(entries: &[C<R>]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C<R>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C<R>> {
        self.data
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, ChannelError> {
        if self.cols != rhs.rows {
            return Err(ChannelError::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == zero() {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        Self::from_fn(r, c, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, ChannelError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, ChannelError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C<R>, C<R>) -> C<R>) -> Result<Self, ChannelError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(ChannelError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: rhs.rows * rhs.cols,
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: C<R>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn trace(&self) -> C<R> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(zero(), |a, b| a + b)
    }

    /// Largest entry-wise modulus of `self - rhs`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> R {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return R::infinity();
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(R::zero(), R::max)
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().map(|z| z.norm()).fold(R::zero(), R::max)
    }

    pub fn hermiticity_deviation(&self) -> R {
        if !self.is_square() {
            return R::infinity();
        }
        let mut worst = R::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn cast<S: Real>(&self) -> ComplexMatrix<S> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| C::new(S::of(z.re.as_f64()), S::of(z.im.as_f64()))).collect(),
        }
    }
}

impl<R: Real> Index<(usize, usize)> for ComplexMatrix<R> {
    type Output = C<R>;
    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for ComplexMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Cyclic Jacobi on the real symmetric embedding `[[A, -B], [B, A]]` of
/// `A + iB`; every eigenvalue appears twice there and is reported once.
pub fn hermitian_eigenvalues<R: Real>(m: &ComplexMatrix<R>) -> Vec<R> {
    let n = m.rows();
    let dim = 2 * n;
    let mut a = vec![R::zero(); dim * dim];
    for i in 0..n {
        for j in 0..n {
            // symmetrize to wash out rounding asymmetry
            let z = (m[(i, j)] + m[(j, i)].conj()) * R::of(0.5);
            a[i * dim + j] = z.re;
            a[(i + n) * dim + j + n] = z.re;
            a[(i + n) * dim + j] = z.im;
            a[i * dim + j + n] = -z.im;
        }
    }
    let eps = R::epsilon();
    for _sweep in 0..100 {
        let mut off = R::zero();
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    off += a[i * dim + j] * a[i * dim + j];
                }
            }
        }
        let scale: R = a.iter().map(|x| *x * *x).sum();
        if off <= eps * eps * scale.max(R::min_positive_value()) {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq == R::zero() {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (R::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let cs = R::one() / (t * t + R::one()).sqrt();
                let sn = t * cs;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = cs * akp - sn * akq;
                    a[k * dim + q] = sn * akp + cs * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = cs * apk - sn * aqk;
                    a[q * dim + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<R> = (0..dim).map(|i| a[i * dim + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev.chunks(2).map(|p| (p[0] + p[1]) * R::of(0.5)).collect()
}
