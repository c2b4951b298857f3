//! Physical error model: parameter set, noisy gate dressing, and the
//! two-outcome readout instrument.

use serde::{Deserialize, Serialize};

use crate::channel::{
    anisotropic_depolarizing, compose, dephasing_with_factor, gate_channel, idle_channel,
    photon_dephasing_probability, ChannelError, ChoiMatrix, ComplexMatrix, GateKind, KrausSet,
};
use crate::scalar::{one, Real};

/// Model parameters. Durations in ns, rates in 1/ns, `chi` in rad/ns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseParameters {
    pub t1: f64,
    pub t_phi: f64,
    pub t_g1q: f64,
    pub t_g2q: f64,
    pub tau_c: f64,
    pub tau_d: f64,
    pub tau_d_fast: f64,
    pub tau_m: f64,
    pub tau_m_fast: f64,
    pub p_axis: f64,
    pub p_plane: f64,
    pub eps_ro: f64,
    pub kappa: f64,
    pub chi: f64,
    /// Photons left in the resonator at the start of depletion.
    pub alpha0: f64,
    /// Crosstalk strength as the dimensionless product k·t of one CZ-region;
    /// the discretized CPHASE angle is `-4 * k_xtalk`.
    pub k_xtalk: f64,
}

impl Default for NoiseParameters {
    fn default() -> Self {
        default_parameters()
    }
}

pub fn default_parameters() -> NoiseParameters {
    NoiseParameters {
        t1: 30_000.0,
        t_phi: 60_000.0,
        t_g1q: 20.0,
        t_g2q: 40.0,
        tau_c: 200.0,
        tau_d: 300.0,
        tau_d_fast: 100.0,
        tau_m: 300.0,
        tau_m_fast: 100.0,
        p_axis: 1e-4,
        p_plane: 5e-4,
        eps_ro: 0.0015,
        kappa: 1.0 / 250.0,
        chi: -2.6 * std::f64::consts::PI * 1e-3,
        alpha0: 0.0,
        k_xtalk: 0.03,
    }
}

impl NoiseParameters {
    /// Every error source switched off; durations kept.
    pub fn noiseless() -> Self {
        Self {
            t1: f64::INFINITY,
            t_phi: f64::INFINITY,
            p_axis: 0.0,
            p_plane: 0.0,
            eps_ro: 0.0,
            alpha0: 0.0,
            k_xtalk: 0.0,
            ..default_parameters()
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let durations = [
            ("t_g1q", self.t_g1q),
            ("t_g2q", self.t_g2q),
            ("tau_c", self.tau_c),
            ("tau_d", self.tau_d),
            ("tau_d_fast", self.tau_d_fast),
            ("tau_m", self.tau_m),
            ("tau_m_fast", self.tau_m_fast),
        ];
        for (name, v) in durations {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ChannelError::InvalidParameter(format!("{name} = {v} must be a finite non-negative duration")));
            }
        }
        for (name, v) in [("t1", self.t1), ("t_phi", self.t_phi), ("kappa", self.kappa)] {
            if !(v > 0.0) {
                return Err(ChannelError::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("p_axis", self.p_axis), ("p_plane", self.p_plane), ("eps_ro", self.eps_ro)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ChannelError::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.alpha0 >= 0.0) || !self.chi.is_finite() || !self.k_xtalk.is_finite() {
            return Err(ChannelError::InvalidParameter("alpha0, chi and k_xtalk must be finite, alpha0 >= 0".into()));
        }
        Ok(())
    }

    /// Stable hex digest of the parameter values.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serde_json::to_string(self).expect("parameters serialize");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }

    pub fn idle<R: Real>(&self, t: f64) -> Result<ChoiMatrix<R>, ChannelError> {
        idle_channel(t, self.t1, self.t_phi)
    }
}

/// Gate error applied right after the ideal gate.
pub fn gate_error<R: Real>(kind: GateKind, params: &NoiseParameters) -> Result<ChoiMatrix<R>, ChannelError> {
    match kind.arity() {
        1 => anisotropic_depolarizing(params.p_plane, params.p_axis),
        _ => Ok(ChoiMatrix::identity(2)),
    }
}

/// `idle(d/2) ∘ error ∘ gate ∘ idle(d/2)` on every qubit the gate touches.
pub fn noisy_gate<R: Real>(kind: GateKind, duration: f64, params: &NoiseParameters) -> Result<ChoiMatrix<R>, ChannelError> {
    if !(duration >= 0.0) {
        return Err(ChannelError::InvalidParameter(format!("negative gate duration {duration}")));
    }
    let half: ChoiMatrix<R> = params.idle(duration / 2.0)?;
    let mut damp = half.clone();
    for _ in 1..kind.arity() {
        damp = damp.tensor(&half);
    }
    let core = compose(&gate_error(kind, params)?, &gate_channel(kind))?;
    compose(&damp, &compose(&core, &damp)?)
}

/// Readout instrument: one completely positive map per declared bit.
#[derive(Clone, Debug)]
pub struct MeasurementInstrument<R: Real> {
    pub outcome_maps: [ChoiMatrix<R>; 2],
    pub declaration_error: f64,
}

fn projector_map<R: Real>(bit: usize) -> ChoiMatrix<R> {
    let mut p = ComplexMatrix::zeros(2, 2);
    p[(bit, bit)] = one();
    ChoiMatrix::from_kraus(&KrausSet { num_qubits: 1, operators: vec![p] }).expect("2x2")
}

/// Projective Z readout at the midpoint of `duration`, with outcome-independent
/// declaration error.
pub fn measurement_instrument_with<R: Real>(
    duration: f64,
    params: &NoiseParameters,
) -> Result<MeasurementInstrument<R>, ChannelError> {
    let eps = params.eps_ro;
    let half: ChoiMatrix<R> = params.idle(duration / 2.0)?;
    let maps = [0usize, 1].map(|d| {
        let core = projector_map::<R>(d)
            .scale(R::of(1.0 - eps))
            .add(&projector_map::<R>(1 - d).scale(R::of(eps)))
            .expect("same shape");
        compose(&half, &compose(&core, &half).expect("1 qubit")).expect("1 qubit")
    });
    Ok(MeasurementInstrument { outcome_maps: maps, declaration_error: eps })
}

pub fn measurement_instrument<R: Real>(params: &NoiseParameters) -> Result<MeasurementInstrument<R>, ChannelError> {
    measurement_instrument_with(params.tau_m, params)
}

/// Coherence factor of the photon-induced dephasing over `[t1, t2]`.
///
/// The closed form can exceed one depending on the sign of χ; the channel
/// uses `exp(-|exponent|)` so it always damps coherences.
pub fn photon_coherence_factor(t1: f64, t2: f64, t_m: f64, t_g: f64, params: &NoiseParameters) -> Result<f64, ChannelError> {
    let v = photon_dephasing_probability(t1, t2, t_m, t_g, params.kappa, params.chi, params.alpha0)?;
    Ok(v.min(1.0 / v))
}

pub fn photon_dephasing_channel<R: Real>(
    interval: (f64, f64),
    t_m: f64,
    t_g: f64,
    params: &NoiseParameters,
) -> Result<ChoiMatrix<R>, ChannelError> {
    dephasing_with_factor(photon_coherence_factor(interval.0, interval.1, t_m, t_g, params)?)
}
