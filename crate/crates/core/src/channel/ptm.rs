use serde::{Deserialize, Serialize};

use crate::scalar::{c, zero, Real, C};

use super::choi::ChoiMatrix;
use super::matrix::ComplexMatrix;
use super::ChannelError;

/// Real Pauli transfer matrix, basis order I, X, Y, Z per qubit (first
/// qubit most significant), normalized so the identity channel maps to the
/// identity matrix: `P_ij = Tr[σ_i Λ(σ_j)] / 2^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTransferMatrix<R: Real> {
    num_qubits: usize,
    entries: Vec<R>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateSummary {
    pub p_bit: f64,
    pub p_phase: f64,
    pub p_y: f64,
    /// Non-unital shifts along X, Y, Z (first column, rows 1..3).
    pub shifts: [f64; 3],
    /// Coherent rotation magnitudes about X, Y, Z.
    pub rotations: [f64; 3],
}

/// Single-qubit Pauli matrix: 0=I, 1=X, 2=Y, 3=Z.
pub fn pauli<R: Real>(which: usize) -> ComplexMatrix<R> {
    let o = zero::<R>();
    let (a, b, cc, d) = match which {
        0 => (c(1.0, 0.0), o, o, c(1.0, 0.0)),
        1 => (o, c(1.0, 0.0), c(1.0, 0.0), o),
        2 => (o, c(0.0, -1.0), c(0.0, 1.0), o),
        3 => (c(1.0, 0.0), o, o, c(-1.0, 0.0)),
        _ => panic!("pauli index {which} out of range"),
    };
    ComplexMatrix::new(2, 2, vec![a, b, cc, d]).expect("2x2")
}

/// n-qubit Pauli string for base-4 index `idx` (first qubit most significant).
pub fn pauli_string<R: Real>(idx: usize, num_qubits: usize) -> ComplexMatrix<R> {
    let mut m = ComplexMatrix::identity(1);
    for q in 0..num_qubits {
        let digit = (idx >> (2 * (num_qubits - 1 - q))) & 3;
        m = m.kron(&pauli(digit));
    }
    m
}

impl<R: Real> PauliTransferMatrix<R> {
    pub fn new(num_qubits: usize, entries: Vec<R>) -> Result<Self, ChannelError> {
        let d = 1usize << (2 * num_qubits);
        if entries.len() != d * d {
            return Err(ChannelError::DimensionMismatch { expected: d * d, found: entries.len() });
        }
        Ok(Self { num_qubits, entries })
    }

    pub fn identity(num_qubits: usize) -> Self {
        let d = 1usize << (2 * num_qubits);
        let mut e = vec![R::zero(); d * d];
        for i in 0..d {
            e[i * d + i] = R::one();
        }
        Self { num_qubits, entries: e }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << (2 * self.num_qubits)
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.entries[i * self.dim() + j]
    }

    pub fn entries(&self) -> &[R] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<R>> {
        self.entries.chunks(self.dim()).map(|r| r.to_vec()).collect()
    }

    pub fn from_choi(choi: &ChoiMatrix<R>) -> Self {
        let n = choi.num_qubits();
        let d = 1usize << (2 * n);
        let norm = R::one() / R::of((1usize << n) as f64);
        let paulis: Vec<ComplexMatrix<R>> = (0..d).map(|i| pauli_string(i, n)).collect();
        let mut e = vec![R::zero(); d * d];
        for j in 0..d {
            let out = choi.apply(&paulis[j]).expect("dimension matches");
            for i in 0..d {
                let tr = paulis[i].matmul(&out).expect("square").trace();
                e[i * d + j] = tr.re * norm;
            }
        }
        Self { num_qubits: n, entries: e }
    }

    pub fn to_choi(&self) -> ChoiMatrix<R> {
        let n = self.num_qubits;
        let dq = 1usize << n;
        let d = self.dim();
        let norm = R::one() / R::of(dq as f64);
        let paulis: Vec<ComplexMatrix<R>> = (0..d).map(|i| pauli_string(i, n)).collect();
        // Λ(σ_j) = Σ_i P_ij σ_i
        let images: Vec<ComplexMatrix<R>> = (0..d)
            .map(|j| {
                let mut acc = ComplexMatrix::zeros(dq, dq);
                for i in 0..d {
                    let p = self.get(i, j);
                    if p != R::zero() {
                        acc = acc.add(&paulis[i].scale(C::new(p, R::zero()))).expect("same shape");
                    }
                }
                acc
            })
            .collect();
        let mut m = ComplexMatrix::zeros(dq * dq, dq * dq);
        // |a⟩⟨b| = (1/d) Σ_j ⟨b|σ_j|a⟩ σ_j
        for a in 0..dq {
            for b in 0..dq {
                for j in 0..d {
                    let coef = paulis[j][(b, a)] * C::new(norm, R::zero());
                    if coef == zero() {
                        continue;
                    }
                    for k in 0..dq {
                        for l in 0..dq {
                            m[(a * dq + k, b * dq + l)] += coef * images[j][(k, l)];
                        }
                    }
                }
            }
        }
        ChoiMatrix::new(n, m).expect("consistent dimension")
    }

    /// Matrix product `self · rhs` (channel `self ∘ rhs`).
    pub fn matmul(&self, rhs: &Self) -> Self {
        let d = self.dim();
        let mut e = vec![R::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    e[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        Self { num_qubits: self.num_qubits, entries: e }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let e = self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| a - b).collect();
        Self { num_qubits: self.num_qubits, entries: e }
    }

    pub fn scale(&self, s: R) -> Self {
        Self { num_qubits: self.num_qubits, entries: self.entries.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let e = self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| a + b).collect();
        Self { num_qubits: self.num_qubits, entries: e }
    }

    /// Entry-wise 1-norm.
    pub fn norm1(&self) -> R {
        self.entries.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_max(&self) -> R {
        self.entries.iter().map(|x| x.abs()).fold(R::zero(), R::max)
    }

    pub fn diagonal_sum(&self) -> R {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Max deviation of the first row from (1, 0, ..., 0).
    pub fn first_row_deviation(&self) -> R {
        (0..self.dim())
            .map(|j| (self.get(0, j) - if j == 0 { R::one() } else { R::zero() }).abs())
            .fold(R::zero(), R::max)
    }

    pub fn error_rates(&self) -> Result<ErrorRateSummary, ChannelError> {
        if self.num_qubits != 1 {
            return Err(ChannelError::NotSingleQubit(self.num_qubits));
        }
        let p = |i, j| self.get(i, j).as_f64();
        let half = |x: f64| x / 2.0;
        Ok(ErrorRateSummary {
            p_phase: half(1.0 - p(1, 1)),
            p_y: half(1.0 - p(2, 2)),
            p_bit: half(1.0 - p(3, 3)),
            shifts: [p(1, 0), p(2, 0), p(3, 0)],
            rotations: [
                half((p(2, 3) - p(3, 2)).abs()),
                half((p(1, 3) - p(3, 1)).abs()),
                half((p(1, 2) - p(2, 1)).abs()),
            ],
        })
    }

    pub fn cast<S: Real>(&self) -> PauliTransferMatrix<S> {
        PauliTransferMatrix {
            num_qubits: self.num_qubits,
            entries: self.entries.iter().map(|x| S::of(x.as_f64())).collect(),
        }
    }

    /// Plain-text rendering in scientific notation, one row per line.
    pub fn render(&self) -> String {
        let labels = ["I", "X", "Y", "Z"];
        let mut s = String::new();
        if self.num_qubits == 1 {
            s.push_str("      ");
            for l in labels {
                s.push_str(&format!("{l:>11}"));
            }
            s.push('\n');
        }
        for (i, row) in self.rows().into_iter().enumerate() {
            if self.num_qubits == 1 {
                s.push_str(&format!("{:>6}", labels[i]));
            }
            for x in row {
                s.push_str(&format!("{:>11.2e}", x.as_f64()));
            }
            s.push('\n');
        }
        s
    }
}

pub fn ptm_from_choi<R: Real>(choi: &ChoiMatrix<R>) -> PauliTransferMatrix<R> {
    PauliTransferMatrix::from_choi(choi)
}

pub fn choi_from_ptm<R: Real>(ptm: &PauliTransferMatrix<R>) -> ChoiMatrix<R> {
    ptm.to_choi()
}
