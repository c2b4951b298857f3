//! Channel algebra: Choi and Pauli-transfer representations, composition,
//! and the elementary noise channels of the model.

mod choi;
mod elementary;
mod matrix;
mod ptm;

pub use choi::{compose, ChoiMatrix, CptpReport, KrausSet};
pub use elementary::{
    amplitude_damping, amplitude_damping_kraus, anisotropic_depolarizing, dephasing_with_factor,
    gate_channel, gate_unitary, idle_channel, idle_probabilities, phase_damping, phase_damping_kraus,
    photon_dephasing_probability, GateKind,
};
pub use matrix::{hermitian_eigenvalues, ComplexMatrix};
pub use ptm::{choi_from_ptm, pauli, pauli_string, ptm_from_choi, ErrorRateSummary, PauliTransferMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected a single-qubit channel, got {0} qubits")]
    NotSingleQubit(usize),
}

pub fn choi_from_kraus<R: crate::scalar::Real>(kraus: &KrausSet<R>) -> Result<ChoiMatrix<R>, ChannelError> {
    ChoiMatrix::from_kraus(kraus)
}

pub fn tensor_product<R: crate::scalar::Real>(a: &ChoiMatrix<R>, b: &ChoiMatrix<R>) -> ChoiMatrix<R> {
    a.tensor(b)
}

pub fn apply_channel<R: crate::scalar::Real>(
    choi: &ChoiMatrix<R>,
    rho: &ComplexMatrix<R>,
) -> Result<ComplexMatrix<R>, ChannelError> {
    choi.apply(rho)
}
