use serde::{Deserialize, Serialize};

use crate::scalar::{zero, Real, C};

use super::matrix::{hermitian_eigenvalues, ComplexMatrix};
use super::ChannelError;

/// Channel on `num_qubits` qubits in Choi form.
///
/// `C = Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` with the input factor major, so
/// `C[(i·d + k), (j·d + l)] = ⟨k|Λ(|i⟩⟨j|)|l⟩`. Within a multi-qubit basis
/// index the first qubit is the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix<R: Real> {
    num_qubits: usize,
    matrix: ComplexMatrix<R>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet<R: Real> {
    pub num_qubits: usize,
    pub operators: Vec<ComplexMatrix<R>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptpReport {
    pub min_eigenvalue: f64,
    pub trace_preservation_deviation: f64,
    pub hermiticity_deviation: f64,
    pub passed: bool,
}

fn dim_of(num_qubits: usize) -> usize {
    1 << num_qubits
}

impl<R: Real> ChoiMatrix<R> {
    pub fn new(num_qubits: usize, matrix: ComplexMatrix<R>) -> Result<Self, ChannelError> {
        let d2 = dim_of(2 * num_qubits);
        if matrix.rows() != d2 || matrix.cols() != d2 {
            return Err(ChannelError::DimensionMismatch { expected: d2, found: matrix.rows() });
        }
        Ok(Self { num_qubits, matrix })
    }

    pub fn identity(num_qubits: usize) -> Self {
        let d = dim_of(num_qubits);
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = crate::scalar::one();
            }
        }
        Self { num_qubits, matrix: m }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        dim_of(self.num_qubits)
    }

    pub fn matrix(&self) -> &ComplexMatrix<R> {
        &self.matrix
    }

    /// `⟨k|Λ(|i⟩⟨j|)|l⟩`.
    #[inline]
    pub fn element(&self, i: usize, k: usize, j: usize, l: usize) -> C<R> {
        let d = self.dim();
        self.matrix[(i * d + k, j * d + l)]
    }

    pub fn from_kraus(kraus: &KrausSet<R>) -> Result<Self, ChannelError> {
        let d = dim_of(kraus.num_qubits);
        for k in &kraus.operators {
            if k.rows() != d || k.cols() != d {
                return Err(ChannelError::DimensionMismatch { expected: d, found: k.rows() });
            }
        }
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for op in &kraus.operators {
            for i in 0..d {
                for k in 0..d {
                    let a = op[(k, i)];
                    if a == zero() {
                        continue;
                    }
                    for j in 0..d {
                        for l in 0..d {
                            m[(i * d + k, j * d + l)] += a * op[(l, j)].conj();
                        }
                    }
                }
            }
        }
        Ok(Self { num_qubits: kraus.num_qubits, matrix: m })
    }

    pub fn from_unitary(num_qubits: usize, u: &ComplexMatrix<R>) -> Result<Self, ChannelError> {
        Self::from_kraus(&KrausSet { num_qubits, operators: vec![u.clone()] })
    }

    pub fn apply(&self, rho: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>, ChannelError> {
        let d = self.dim();
        if rho.rows() != d || rho.cols() != d {
            return Err(ChannelError::DimensionMismatch { expected: d, found: rho.rows() });
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let r = rho[(i, j)];
                if r == zero() {
                    continue;
                }
                for k in 0..d {
                    for l in 0..d {
                        out[(k, l)] += r * self.element(i, k, j, l);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `later ∘ self`: `self` acts first.
    pub fn then(&self, later: &Self) -> Result<Self, ChannelError> {
        compose(later, self)
    }

    /// Product channel; `self` acts on the leading qubits.
    pub fn tensor(&self, rhs: &Self) -> Self {
        let (da, db) = (self.dim(), rhs.dim());
        let d = da * db;
        let m = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
            let (i, k) = (row / d, row % d);
            let (j, l) = (col / d, col % d);
            self.element(i / db, k / db, j / db, l / db) * rhs.element(i % db, k % db, j % db, l % db)
        });
        Self { num_qubits: self.num_qubits + rhs.num_qubits, matrix: m }
    }

    /// `Tr_out C`, which equals the identity for trace-preserving maps.
    pub fn partial_trace_output(&self) -> ComplexMatrix<R> {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|k| self.element(i, k, j, k)).fold(zero(), |a, b| a + b)
        })
    }

    pub fn scale(&self, s: R) -> Self {
        Self { num_qubits: self.num_qubits, matrix: self.matrix.scale(C::new(s, R::zero())) }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, ChannelError> {
        Ok(Self { num_qubits: self.num_qubits, matrix: self.matrix.add(&rhs.matrix)? })
    }

    pub fn trace(&self) -> R {
        self.matrix.trace().re
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> R {
        self.matrix.max_abs_diff(&rhs.matrix)
    }

    /// True when `Λ(|i⟩⟨j|) = c_ij |i⟩⟨j|` for all basis pairs.
    pub fn is_diagonal_action(&self, tol: R) -> bool {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        if (k != i || l != j) && self.element(i, k, j, l).norm() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// True when every diagonal input maps to a diagonal output.
    pub fn preserves_diagonal(&self, tol: R) -> bool {
        let d = self.dim();
        for i in 0..d {
            for k in 0..d {
                for l in 0..d {
                    if k != l && self.element(i, k, i, l).norm() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn cptp_check(&self, tol: f64) -> CptpReport {
        let herm = self.matrix.hermiticity_deviation().as_f64();
        let min_ev = hermitian_eigenvalues(&self.matrix)
            .first()
            .map(|x| x.as_f64())
            .unwrap_or(0.0);
        let pt = self.partial_trace_output();
        let tp = pt.max_abs_diff(&ComplexMatrix::identity(self.dim())).as_f64();
        let norm = self.matrix.max_abs().as_f64().max(1.0);
        CptpReport {
            min_eigenvalue: min_ev,
            trace_preservation_deviation: tp,
            hermiticity_deviation: herm,
            passed: min_ev >= -tol * norm && tp <= tol && herm <= tol,
        }
    }

    pub fn cast<S: Real>(&self) -> ChoiMatrix<S> {
        ChoiMatrix { num_qubits: self.num_qubits, matrix: self.matrix.cast() }
    }
}

/// Sequential composition; `earlier` acts first.
pub fn compose<R: Real>(later: &ChoiMatrix<R>, earlier: &ChoiMatrix<R>) -> Result<ChoiMatrix<R>, ChannelError> {
    if later.num_qubits != earlier.num_qubits {
        return Err(ChannelError::DimensionMismatch { expected: earlier.num_qubits, found: later.num_qubits });
    }
    let d = earlier.dim();
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for mm in 0..d {
                for n in 0..d {
                    let a = earlier.element(i, mm, j, n);
                    if a == zero() {
                        continue;
                    }
                    for k in 0..d {
                        for l in 0..d {
                            m[(i * d + k, j * d + l)] += a * later.element(mm, k, n, l);
                        }
                    }
                }
            }
        }
    }
    Ok(ChoiMatrix { num_qubits: d.trailing_zeros() as usize, matrix: m })
}

impl<R: Real> KrausSet<R> {
    pub fn new(num_qubits: usize, operators: Vec<ComplexMatrix<R>>) -> Result<Self, ChannelError> {
        let d = dim_of(num_qubits);
        if operators.is_empty() {
            return Err(ChannelError::InvalidParameter("empty Kraus set".into()));
        }
        for k in &operators {
            if k.rows() != d || k.cols() != d {
                return Err(ChannelError::DimensionMismatch { expected: d, found: k.rows() });
            }
        }
        Ok(Self { num_qubits, operators })
    }

    pub fn apply(&self, rho: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>, ChannelError> {
        let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for k in &self.operators {
            out = out.add(&k.matmul(rho)?.matmul(&k.dagger())?)?;
        }
        Ok(out)
    }

    /// Max deviation of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> R {
        let d = dim_of(self.num_qubits);
        let mut acc = ComplexMatrix::zeros(d, d);
        for k in &self.operators {
            acc = acc.add(&k.dagger().matmul(k).expect("square")).expect("same shape");
        }
        acc.max_abs_diff(&ComplexMatrix::identity(d))
    }

    /// Kraus set of `later ∘ self`.
    pub fn then(&self, later: &Self) -> Result<Self, ChannelError> {
        let mut ops = Vec::new();
        for b in &later.operators {
            for a in &self.operators {
                ops.push(b.matmul(a)?);
            }
        }
        Self::new(self.num_qubits, ops)
    }
}
