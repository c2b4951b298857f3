use serde::{Deserialize, Serialize};

use crate::scalar::{c, re, zero, Real};

use super::choi::{ChoiMatrix, KrausSet};
use super::matrix::ComplexMatrix;
use super::ChannelError;

/// Named gates of the model's gate set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    RyPlus,
    RyMinus,
    Hadamard,
    Cz,
    /// `diag(1, 1, 1, e^{iθ})`
    Cphase(f64),
    PauliX,
    PauliY,
    PauliZ,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cz | GateKind::Cphase(_) => 2,
            _ => 1,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, GateKind::Cz | GateKind::Cphase(_) | GateKind::PauliZ)
    }

    pub fn name(&self) -> String {
        match self {
            GateKind::RyPlus => "ry+".into(),
            GateKind::RyMinus => "ry-".into(),
            GateKind::Hadamard => "h".into(),
            GateKind::Cz => "cz".into(),
            GateKind::Cphase(t) => format!("cphase({t:.6})"),
            GateKind::PauliX => "x".into(),
            GateKind::PauliY => "y".into(),
            GateKind::PauliZ => "z".into(),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), ChannelError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(ChannelError::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Single-qubit Choi from the four numbers that fix a damping-type channel.
fn damping_choi<R: Real>(coherence: f64, decay: f64) -> ChoiMatrix<R> {
    let m = ComplexMatrix::from_rows(&[
        vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (coherence, 0.0)],
        vec![(0.0, 0.0); 4],
        vec![(0.0, 0.0), (0.0, 0.0), (decay, 0.0), (0.0, 0.0)],
        vec![(coherence, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0 - decay, 0.0)],
    ]);
    ChoiMatrix::new(1, m).expect("4x4")
}

/// Amplitude damping: `|1⟩ → |0⟩` with probability `p1`.
pub fn amplitude_damping<R: Real>(p1: f64) -> Result<ChoiMatrix<R>, ChannelError> {
    check_prob("p1", p1)?;
    Ok(damping_choi((1.0 - p1).sqrt(), p1))
}

/// Phase damping: off-diagonals scaled by `√(1 − pφ)`.
pub fn phase_damping<R: Real>(p_phi: f64) -> Result<ChoiMatrix<R>, ChannelError> {
    check_prob("p_phi", p_phi)?;
    Ok(damping_choi((1.0 - p_phi).sqrt(), 0.0))
}

/// Phase damping parameterized directly by the off-diagonal factor.
pub fn dephasing_with_factor<R: Real>(factor: f64) -> Result<ChoiMatrix<R>, ChannelError> {
    if !(0.0..=1.0).contains(&factor) {
        return Err(ChannelError::InvalidParameter(format!("coherence factor {factor} outside [0, 1]")));
    }
    Ok(damping_choi(factor, 0.0))
}

pub fn amplitude_damping_kraus<R: Real>(p1: f64) -> KrausSet<R> {
    let k0 = ComplexMatrix::diag(&[c(1.0, 0.0), c((1.0 - p1).sqrt(), 0.0)]);
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1[(0, 1)] = c(p1.sqrt(), 0.0);
    KrausSet { num_qubits: 1, operators: vec![k0, k1] }
}

pub fn phase_damping_kraus<R: Real>(p_phi: f64) -> KrausSet<R> {
    let k0 = ComplexMatrix::diag(&[c(1.0, 0.0), c((1.0 - p_phi).sqrt(), 0.0)]);
    let k1 = ComplexMatrix::diag(&[zero(), c(p_phi.sqrt(), 0.0)]);
    KrausSet { num_qubits: 1, operators: vec![k0, k1] }
}

/// Damping probabilities `(p1, pφ)` accumulated over an idle time `t`.
pub fn idle_probabilities(t: f64, t1: f64, t_phi: f64) -> Result<(f64, f64), ChannelError> {
    if t1 <= 0.0 || t_phi <= 0.0 || t1.is_nan() || t_phi.is_nan() {
        return Err(ChannelError::InvalidParameter(format!("time constants must be positive (T1={t1}, Tphi={t_phi})")));
    }
    if t < 0.0 || t.is_nan() {
        return Err(ChannelError::InvalidParameter(format!("negative idle time {t}")));
    }
    Ok((-(-t / t1).exp_m1(), -(-t / t_phi).exp_m1()))
}

/// Amplitude-phase damping over an idle period of `t` ns.
pub fn idle_channel<R: Real>(t: f64, t1: f64, t_phi: f64) -> Result<ChoiMatrix<R>, ChannelError> {
    let (p1, p_phi) = idle_probabilities(t, t1, t_phi)?;
    Ok(damping_choi(((1.0 - p1) * (1.0 - p_phi)).sqrt(), p1))
}

/// Bloch-sphere shrink by `1 − p_plane` in the x–z plane and `1 − p_axis`
/// along y.
pub fn anisotropic_depolarizing<R: Real>(p_plane: f64, p_axis: f64) -> Result<ChoiMatrix<R>, ChannelError> {
    check_prob("p_plane", p_plane)?;
    check_prob("p_axis", p_axis)?;
    let (pp, pa) = (p_plane / 2.0, p_axis / 2.0);
    let m = ComplexMatrix::from_rows(&[
        vec![(1.0 - pp, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0 - pp - pa, 0.0)],
        vec![(0.0, 0.0), (pp, 0.0), (pa - pp, 0.0), (0.0, 0.0)],
        vec![(0.0, 0.0), (pa - pp, 0.0), (pp, 0.0), (0.0, 0.0)],
        vec![(1.0 - pp - pa, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0 - pp, 0.0)],
    ]);
    Ok(ChoiMatrix::new(1, m).expect("4x4"))
}

/// Dephasing factor from leftover resonator photons over `[t1, t2]`.
///
/// `t_m` is the start of the preceding measurement and `t_g` the time of
/// the basis rotation opening the coherent step. Returns the raw closed
/// form `exp(2χα₀ e^{κ(t_m − t_g)} [F]_{t1−t_g}^{t2−t_g})` with
/// `F(t) = e^{−κt}(−κ sin 2χt − 2χ cos 2χt)/(4χ² + κ²)`.
pub fn photon_dephasing_probability(
    t1: f64,
    t2: f64,
    t_m: f64,
    t_g: f64,
    kappa: f64,
    chi: f64,
    alpha0: f64,
) -> Result<f64, ChannelError> {
    if kappa <= 0.0 || kappa.is_nan() {
        return Err(ChannelError::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    if t2 < t1 {
        return Err(ChannelError::InvalidParameter(format!("interval end {t2} before start {t1}")));
    }
    let f = |t: f64| {
        (-kappa * t).exp() / (4.0 * chi * chi + kappa * kappa)
            * (-kappa * (2.0 * chi * t).sin() - 2.0 * chi * (2.0 * chi * t).cos())
    };
    let bracket = f(t2 - t_g) - f(t1 - t_g);
    Ok((2.0 * chi * alpha0 * (kappa * (t_m - t_g)).exp() * bracket).exp())
}

pub fn gate_unitary<R: Real>(kind: GateKind) -> ComplexMatrix<R> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::RyPlus => ComplexMatrix::from_rows(&[vec![(h, 0.0), (-h, 0.0)], vec![(h, 0.0), (h, 0.0)]]),
        GateKind::RyMinus => ComplexMatrix::from_rows(&[vec![(h, 0.0), (h, 0.0)], vec![(-h, 0.0), (h, 0.0)]]),
        GateKind::Hadamard => ComplexMatrix::from_rows(&[vec![(h, 0.0), (h, 0.0)], vec![(h, 0.0), (-h, 0.0)]]),
        GateKind::Cz => ComplexMatrix::diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]),
        GateKind::Cphase(theta) => {
            let e = num_complex::Complex::new(R::of(theta.cos()), R::of(theta.sin()));
            ComplexMatrix::diag(&[re(R::one()), re(R::one()), re(R::one()), e])
        }
        GateKind::PauliX => super::ptm::pauli(1),
        GateKind::PauliY => super::ptm::pauli(2),
        GateKind::PauliZ => super::ptm::pauli(3),
    }
}

pub fn gate_channel<R: Real>(kind: GateKind) -> ChoiMatrix<R> {
    ChoiMatrix::from_unitary(kind.arity(), &gate_unitary(kind)).expect("gate dimension")
}
