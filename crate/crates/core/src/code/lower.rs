use crate::channel::{compose, gate_unitary, ChannelError, ChoiMatrix, ComplexMatrix, GateKind};
use crate::circuit::{Boundary, BitSpec, ChannelCircuit, CircuitOp, Terminal};
use crate::noise::{gate_error, photon_coherence_factor, NoiseParameters};
use crate::scalar::{Real, C};

use super::decoder::{syndrome_decoder, DecoderGate};
use super::layout::Role;
use super::schedule::{CircuitSchedule, MemoryExperimentCircuit, OpKind};

/// How the ideal final round is realized in the lowered circuit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalRound {
    /// Ancilla-based syndrome extraction, pure-error corrections and
    /// decoding onto the logical basis, as scheduled.
    Ancilla,
    /// The same map realized on the data qubits alone: a Clifford decoder
    /// that moves each stabilizer bit onto one data qubit, error-free
    /// readout of those qubits and a Pauli fix-up on the logical qubit.
    #[default]
    Decoder,
}

enum Pending<R: Real> {
    Unitary(ComplexMatrix<R>),
    Channel(ChoiMatrix<R>),
}

impl<R: Real> Pending<R> {
    fn into_choi(self) -> ChoiMatrix<R> {
        match self {
            Pending::Unitary(u) => ChoiMatrix::from_unitary(1, &u).expect("2x2"),
            Pending::Channel(c) => c,
        }
    }
}

struct Lowering<R: Real> {
    pending: Vec<Option<Pending<R>>>,
    ops: Vec<CircuitOp<R>>,
}

impl<R: Real> Lowering<R> {
    fn push_unitary(&mut self, q: usize, u: ComplexMatrix<R>) {
        self.pending[q] = Some(match self.pending[q].take() {
            None => Pending::Unitary(u),
            Some(Pending::Unitary(v)) => Pending::Unitary(u.matmul(&v).expect("2x2")),
            Some(Pending::Channel(c)) => {
                Pending::Channel(compose(&ChoiMatrix::from_unitary(1, &u).expect("2x2"), &c).expect("1 qubit"))
            }
        });
    }

    fn push_channel(&mut self, q: usize, ch: ChoiMatrix<R>) {
        self.pending[q] = Some(match self.pending[q].take() {
            None => Pending::Channel(ch),
            Some(p) => Pending::Channel(compose(&ch, &p.into_choi()).expect("1 qubit")),
        });
    }

    fn flush(&mut self, q: usize) {
        match self.pending[q].take() {
            None => {}
            Some(Pending::Unitary(u)) => self.ops.push(CircuitOp::Unitary { qubits: vec![q], matrix: u }),
            Some(Pending::Channel(c)) => self.ops.push(CircuitOp::Channel { qubits: vec![q], choi: c }),
        }
    }
}

fn damps(params: &NoiseParameters) -> bool {
    params.t1.is_finite() || params.t_phi.is_finite()
}

/// Turns a timed schedule into an order-only channel circuit. Each op acts
/// at the midpoint of its interval; every qubit idles between consecutive
/// op instants up to `noisy_until`. Runs of single-qubit channels are
/// fused into one map.
pub fn lower_schedule<R: Real>(
    schedule: &CircuitSchedule,
    params: &NoiseParameters,
    inputs: Vec<Boundary<R>>,
    outputs: Vec<Terminal<R>>,
    open_bits: &[usize],
) -> Result<ChannelCircuit<R>, ChannelError> {
    let n = schedule.qubits.len();
    let mut lw = Lowering { pending: (0..n).map(|_| None).collect(), ops: Vec::new() };
    let mut last = vec![0.0f64; n];
    let idle = |lw: &mut Lowering<R>, q: usize, from: f64, to: f64| -> Result<(), ChannelError> {
        let to = to.min(schedule.noisy_until);
        if to - from > 1e-12 && damps(params) {
            lw.push_channel(q, params.idle(to - from)?);
        }
        Ok(())
    };
    for op in schedule.ordered_ops() {
        let t = op.instant();
        if op.noisy {
            for &q in &op.qubits {
                idle(&mut lw, q, last[q], t)?;
                last[q] = last[q].max(t.min(schedule.noisy_until));
            }
        }
        match &op.kind {
            OpKind::Gate(g) if g.arity() == 1 => {
                let q = op.qubits[0];
                lw.push_unitary(q, gate_unitary(*g));
                if op.noisy {
                    let err: ChoiMatrix<R> = gate_error(*g, params)?;
                    if err.max_abs_diff(&ChoiMatrix::identity(1)) > R::zero() {
                        lw.push_channel(q, err);
                    }
                }
            }
            OpKind::Gate(g) => {
                for &q in &op.qubits {
                    lw.flush(q);
                }
                lw.ops.push(CircuitOp::Unitary { qubits: op.qubits.clone(), matrix: gate_unitary(*g) });
            }
            OpKind::CompensatedCz { .. } => {
                for &q in &op.qubits {
                    lw.flush(q);
                }
                lw.ops.push(CircuitOp::Unitary { qubits: op.qubits.clone(), matrix: gate_unitary(GateKind::Cz) });
            }
            OpKind::Crosstalk { angle } => {
                for &q in &op.qubits {
                    lw.flush(q);
                }
                lw.ops.push(CircuitOp::Unitary { qubits: op.qubits.clone(), matrix: gate_unitary(GateKind::Cphase(*angle)) });
            }
            OpKind::Measure { bit } => {
                let q = op.qubits[0];
                lw.flush(q);
                let eps = if op.noisy { params.eps_ro } else { 0.0 };
                lw.ops.push(CircuitOp::Measure { qubit: q, bit: *bit, eps });
            }
            OpKind::PhotonDephasing { t1, t2, t_m, t_g } => {
                let f = photon_coherence_factor(*t1, *t2, *t_m, *t_g, params)?;
                if f < 1.0 {
                    lw.push_channel(op.qubits[0], crate::channel::dephasing_with_factor(f)?);
                }
            }
            OpKind::Reset => {
                let q = op.qubits[0];
                lw.pending[q] = None;
                lw.ops.push(CircuitOp::Reset { qubit: q });
            }
            OpKind::ConditionalPauli { pauli, bit } => {
                let q = op.qubits[0];
                lw.flush(q);
                lw.ops.push(CircuitOp::ConditionalPauli { qubit: q, pauli: *pauli, bit: *bit });
            }
        }
    }
    for q in 0..n {
        idle(&mut lw, q, last[q], schedule.noisy_until)?;
        lw.flush(q);
    }
    let bits = (0..schedule.bits.len())
        .map(|b| {
            let l = &schedule.bits[b];
            BitSpec { label: format!("r{}s{}", l.round, l.stabilizer), open: open_bits.contains(&b) }
        })
        .collect();
    Ok(ChannelCircuit { num_qubits: n, inputs, ops: lw.ops, outputs, bits })
}

/// Lowered memory experiment: data qubits start in `Σ_ab |a_L⟩⟨b_L|` and
/// end decoded onto `(a', b')`; ancillas start in |0⟩ and are traced out.
pub fn memory_channel_circuit<R: Real>(
    mem: &MemoryExperimentCircuit,
    params: &NoiseParameters,
) -> Result<ChannelCircuit<R>, ChannelError> {
    memory_channel_circuit_with(mem, params, FinalRound::default())
}

pub fn memory_channel_circuit_with<R: Real>(
    mem: &MemoryExperimentCircuit,
    params: &NoiseParameters,
    final_round: FinalRound,
) -> Result<ChannelCircuit<R>, ChannelError> {
    let states = mem.layout.logical_states();
    let conv = |v: &Vec<f64>| v.iter().map(|&x| C::new(R::of(x), R::zero())).collect::<Vec<_>>();
    let data: Vec<usize> = (0..mem.layout.qubits.len()).filter(|&i| mem.layout.qubits[i].role == Role::Data).collect();
    let ancillas: Vec<usize> = (0..mem.layout.qubits.len()).filter(|q| !data.contains(q)).collect();
    let mut inputs = vec![Boundary::Encoded { qubits: data.clone(), states: [conv(&states[0]), conv(&states[1])] }];
    inputs.extend(ancillas.iter().map(|&q| Boundary::Zero(q)));
    match final_round {
        FinalRound::Ancilla => {
            let mut outputs = vec![Terminal::Decode { qubits: data.clone(), states: [conv(&states[0]), conv(&states[1])] }];
            outputs.extend(ancillas.iter().map(|&q| Terminal::Trace(q)));
            lower_schedule(&mem.schedule, params, inputs, outputs, &mem.open_bits)
        }
        FinalRound::Decoder => {
            let dec = syndrome_decoder(&mem.layout);
            let logical = data[dec.logical_qubit];
            let mut noisy = mem.schedule.clone();
            noisy.ops.retain(|op| op.noisy);
            let rounds = mem.schedule.bits.iter().map(|b| b.round).max().unwrap_or(0);
            let mut outputs: Vec<Terminal<R>> = data
                .iter()
                .map(|&q| if q == logical { Terminal::Open(q) } else { Terminal::Trace(q) })
                .collect();
            outputs.extend(ancillas.iter().map(|&q| Terminal::Trace(q)));
            let mut c = lower_schedule(&noisy, params, inputs, outputs, &mem.open_bits)?;
            for g in &dec.gates {
                c.ops.push(match *g {
                    DecoderGate::Cnot { control, target } => {
                        CircuitOp::Unitary { qubits: vec![data[control], data[target]], matrix: cnot() }
                    }
                    DecoderGate::Hadamard(q) => {
                        CircuitOp::Unitary { qubits: vec![data[q]], matrix: gate_unitary(GateKind::Hadamard) }
                    }
                });
            }
            for (j, &q) in dec.syndrome_qubit.iter().enumerate() {
                c.ops.push(CircuitOp::Measure { qubit: data[q], bit: rounds * 8 + j, eps: 0.0 });
            }
            for &(j, pauli) in &dec.corrections {
                c.ops.push(CircuitOp::ConditionalPauli { qubit: logical, pauli, bit: rounds * 8 + j });
            }
            Ok(c)
        }
    }
}

fn cnot<R: Real>() -> ComplexMatrix<R> {
    let perm = [0, 1, 3, 2];
    ComplexMatrix::from_fn(4, 4, |i, j| C::new(if perm[j] == i { R::one() } else { R::zero() }, R::zero()))
}
