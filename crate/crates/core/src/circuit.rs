//! Order-only channel circuit: the common input of the tensor-network
//! builder and the dense oracle. Times are gone; each op is a channel on a
//! few qubits applied in sequence.

use crate::channel::{ChoiMatrix, ComplexMatrix};
use crate::scalar::{Real, C};

/// Pauli used by classically controlled corrections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix<R: Real>(self) -> ComplexMatrix<R> {
        crate::channel::pauli(match self {
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        })
    }
}

#[derive(Clone, Debug)]
pub enum CircuitOp<R: Real> {
    /// General completely positive map in Choi form.
    Channel { qubits: Vec<usize>, choi: ChoiMatrix<R> },
    /// Unitary conjugation.
    Unitary { qubits: Vec<usize>, matrix: ComplexMatrix<R> },
    /// Computational-basis readout writing declared bit `bit`; the declared
    /// value differs from the true one with probability `eps`.
    Measure { qubit: usize, bit: usize, eps: f64 },
    /// Apply `pauli` when declared bit `bit` is 1.
    ConditionalPauli { qubit: usize, pauli: Pauli, bit: usize },
    /// Discard the qubit and prepare |0⟩.
    Reset { qubit: usize },
}

impl<R: Real> CircuitOp<R> {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            CircuitOp::Channel { qubits, .. } | CircuitOp::Unitary { qubits, .. } => qubits.clone(),
            CircuitOp::Measure { qubit, .. } | CircuitOp::ConditionalPauli { qubit, .. } | CircuitOp::Reset { qubit } => {
                vec![*qubit]
            }
        }
    }
}

/// Initial state of a group of qubits.
#[derive(Clone, Debug)]
pub enum Boundary<R: Real> {
    Zero(usize),
    /// `Σ_{a,b} |ψ_a⟩⟨ψ_b|` with `a` (ket) and `b` (bra) left open; the
    /// amplitudes are indexed with the first listed qubit most significant.
    Encoded { qubits: Vec<usize>, states: [Vec<C<R>>; 2] },
}

/// Fate of a group of qubits at the end.
#[derive(Clone, Debug)]
pub enum Terminal<R: Real> {
    Trace(usize),
    /// Ket and bra legs left open.
    Open(usize),
    /// Contract with `⟨ψ_a'|·|ψ_b'⟩`, leaving `a'` and `b'` open.
    Decode { qubits: Vec<usize>, states: [Vec<C<R>>; 2] },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSpec {
    pub label: String,
    pub open: bool,
}

/// Open legs of a circuit, in the canonical output order: open bits first
/// (bit order), then per boundary `Encoded` the (ket, bra) labels, then per
/// terminal `Open` (ket, bra) and `Decode` (ket, bra) in terminal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpenLeg {
    Bit(usize),
    InputKet(usize),
    InputBra(usize),
    OutputKet(usize),
    OutputBra(usize),
}

#[derive(Clone, Debug)]
pub struct ChannelCircuit<R: Real> {
    pub num_qubits: usize,
    pub inputs: Vec<Boundary<R>>,
    pub ops: Vec<CircuitOp<R>>,
    pub outputs: Vec<Terminal<R>>,
    pub bits: Vec<BitSpec>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("qubit {0} out of range")]
    QubitOutOfRange(usize),
    #[error("qubit {0} has {1} boundary specifications, expected exactly one")]
    Boundary(usize, usize),
    #[error("qubit {0} has {1} terminal specifications, expected exactly one")]
    Terminal(usize, usize),
    #[error("bit {0} used before it is measured or out of range")]
    Bit(usize),
    #[error("bit {0} written twice")]
    BitRewritten(usize),
    #[error("op touches repeated qubits {0:?}")]
    RepeatedQubit(Vec<usize>),
    #[error("op dimension does not match its {0} qubits")]
    Dimension(usize),
    #[error("amplitude vector of length {0} does not match {1} qubits")]
    Amplitudes(usize, usize),
}

impl<R: Real> ChannelCircuit<R> {
    pub fn open_legs(&self) -> Vec<OpenLeg> {
        let mut legs: Vec<OpenLeg> = (0..self.bits.len()).filter(|&b| self.bits[b].open).map(OpenLeg::Bit).collect();
        for (i, b) in self.inputs.iter().enumerate() {
            if matches!(b, Boundary::Encoded { .. }) {
                legs.push(OpenLeg::InputKet(i));
                legs.push(OpenLeg::InputBra(i));
            }
        }
        for (i, t) in self.outputs.iter().enumerate() {
            if !matches!(t, Terminal::Trace(_)) {
                legs.push(OpenLeg::OutputKet(i));
                legs.push(OpenLeg::OutputBra(i));
            }
        }
        legs
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.num_qubits;
        let check_q = |q: usize| if q < n { Ok(()) } else { Err(CircuitError::QubitOutOfRange(q)) };
        let mut init = vec![0usize; n];
        for b in &self.inputs {
            match b {
                Boundary::Zero(q) => {
                    check_q(*q)?;
                    init[*q] += 1;
                }
                Boundary::Encoded { qubits, states } => {
                    for &q in qubits {
                        check_q(q)?;
                        init[q] += 1;
                    }
                    for s in states {
                        if s.len() != 1 << qubits.len() {
                            return Err(CircuitError::Amplitudes(s.len(), qubits.len()));
                        }
                    }
                }
            }
        }
        if let Some(q) = (0..n).find(|&q| init[q] != 1) {
            return Err(CircuitError::Boundary(q, init[q]));
        }
        let mut written = vec![false; self.bits.len()];
        for op in &self.ops {
            let qs = op.qubits();
            for &q in &qs {
                check_q(q)?;
            }
            let mut sorted = qs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != qs.len() {
                return Err(CircuitError::RepeatedQubit(qs));
            }
            match op {
                CircuitOp::Channel { qubits, choi } => {
                    if choi.num_qubits() != qubits.len() {
                        return Err(CircuitError::Dimension(qubits.len()));
                    }
                }
                CircuitOp::Unitary { qubits, matrix } => {
                    if matrix.rows() != 1 << qubits.len() || !matrix.is_square() {
                        return Err(CircuitError::Dimension(qubits.len()));
                    }
                }
                CircuitOp::Measure { bit, .. } => {
                    if *bit >= written.len() {
                        return Err(CircuitError::Bit(*bit));
                    }
                    if written[*bit] {
                        return Err(CircuitError::BitRewritten(*bit));
                    }
                    written[*bit] = true;
                }
                CircuitOp::ConditionalPauli { bit, .. } => {
                    if *bit >= written.len() || !written[*bit] {
                        return Err(CircuitError::Bit(*bit));
                    }
                }
                CircuitOp::Reset { .. } => {}
            }
        }
        if let Some(b) = written.iter().position(|w| !w) {
            return Err(CircuitError::Bit(b));
        }
        let mut fin = vec![0usize; n];
        for t in &self.outputs {
            match t {
                Terminal::Trace(q) | Terminal::Open(q) => {
                    check_q(*q)?;
                    fin[*q] += 1;
                }
                Terminal::Decode { qubits, states } => {
                    for &q in qubits {
                        check_q(q)?;
                        fin[q] += 1;
                    }
                    for s in states {
                        if s.len() != 1 << qubits.len() {
                            return Err(CircuitError::Amplitudes(s.len(), qubits.len()));
                        }
                    }
                }
            }
        }
        if let Some(q) = (0..n).find(|&q| fin[q] != 1) {
            return Err(CircuitError::Terminal(q, fin[q]));
        }
        Ok(())
    }
}
