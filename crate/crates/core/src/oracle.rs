//! Brute-force density-matrix simulation of channel circuits on at most
//! ten qubits. Independent of the tensor-network engine and used to check
//! it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{dephasing_with_factor, gate_unitary, ChoiMatrix, ComplexMatrix, GateKind};
use crate::circuit::{BitSpec, Boundary, ChannelCircuit, CircuitError, CircuitOp, OpenLeg, Pauli, Terminal};
use crate::noise::{default_parameters, noisy_gate, NoiseParameters};
use crate::scalar::{one, zero, Real, C};
use crate::tn::Tensor;

pub const MAX_QUBITS: usize = 10;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} qubits exceed the oracle limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("initial state has {found} qubits, circuit has {expected}")]
    InitialState { expected: usize, found: usize },
    #[error("density matrix invalid: {0}")]
    InvalidState(String),
    #[error("qubit {0} outside the circuit")]
    Subsystem(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<R: Real> {
    pub num_qubits: usize,
    pub matrix: ComplexMatrix<R>,
}

impl<R: Real> DensityMatrix<R> {
    /// Checks shape, Hermiticity and unit trace within `tol`, and positivity
    /// within `10 * tol`.
    pub fn new(num_qubits: usize, matrix: ComplexMatrix<R>, tol: f64) -> Result<Self, OracleError> {
        if num_qubits > MAX_QUBITS {
            return Err(OracleError::TooManyQubits(num_qubits));
        }
        let d = 1 << num_qubits;
        if matrix.rows() != d || matrix.cols() != d {
            return Err(OracleError::InvalidState(format!("expected {d}x{d}, found {}x{}", matrix.rows(), matrix.cols())));
        }
        let herm = matrix.hermiticity_deviation().as_f64();
        if herm > tol {
            return Err(OracleError::InvalidState(format!("hermiticity deviation {herm:.3e}")));
        }
        let tr = matrix.trace();
        if (tr.re.as_f64() - 1.0).abs() > tol || tr.im.as_f64().abs() > tol {
            return Err(OracleError::InvalidState(format!("trace {tr}")));
        }
        if num_qubits <= 6 {
            let min = crate::channel::hermitian_eigenvalues(&matrix).into_iter().map(|v| v.as_f64()).fold(f64::INFINITY, f64::min);
            if min < -10.0 * tol {
                return Err(OracleError::InvalidState(format!("eigenvalue {min:.3e}")));
            }
        }
        Ok(Self { num_qubits, matrix })
    }

    /// |0…0⟩⟨0…0|.
    pub fn zero_state(num_qubits: usize) -> Self {
        let d = 1 << num_qubits;
        let mut matrix = ComplexMatrix::zeros(d, d);
        matrix[(0, 0)] = one();
        Self { num_qubits, matrix }
    }

    /// `|ψ⟩⟨ψ|` for an amplitude vector, qubit 0 most significant.
    pub fn pure(amplitudes: &[C<R>]) -> Result<Self, OracleError> {
        let n = amplitudes.len().trailing_zeros() as usize;
        if amplitudes.len() != 1 << n {
            return Err(OracleError::InvalidState(format!("{} amplitudes", amplitudes.len())));
        }
        let m = ComplexMatrix::from_fn(1 << n, 1 << n, |i, j| amplitudes[i] * amplitudes[j].conj());
        Self::new(n, m, 1e-10)
    }
}

/// One measurement record: declared values of the recorded bits, its
/// probability and the conditional state.
#[derive(Clone, Debug)]
pub struct Branch<R: Real> {
    pub bits: Vec<u8>,
    pub probability: f64,
    /// Unnormalized; its trace is `probability`.
    pub state: ComplexMatrix<R>,
}

impl<R: Real> Branch<R> {
    pub fn normalized(&self) -> Option<DensityMatrix<R>> {
        (self.probability > 0.0).then(|| DensityMatrix {
            num_qubits: self.state.rows().trailing_zeros() as usize,
            matrix: self.state.scale(C::new(R::of(1.0 / self.probability), R::zero())),
        })
    }
}

fn bit_of(x: usize, n: usize, q: usize) -> usize {
    x >> (n - 1 - q) & 1
}

/// Local index of `x` on `qubits` (first listed most significant) and `x`
/// with those bits cleared.
fn split_index(x: usize, n: usize, qubits: &[usize]) -> (usize, usize) {
    let mut local = 0;
    let mut rest = x;
    for &q in qubits {
        local = local << 1 | bit_of(x, n, q);
        rest &= !(1 << (n - 1 - q));
    }
    (local, rest)
}

fn insert_index(rest: usize, local: usize, n: usize, qubits: &[usize]) -> usize {
    let m = qubits.len();
    let mut x = rest;
    for (p, &q) in qubits.iter().enumerate() {
        x |= (local >> (m - 1 - p) & 1) << (n - 1 - q);
    }
    x
}

fn apply_choi<R: Real>(x: &ComplexMatrix<R>, n: usize, qubits: &[usize], choi: &ChoiMatrix<R>) -> ComplexMatrix<R> {
    let dim = x.rows();
    let d = choi.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        let (i, r0) = split_index(r, n, qubits);
        for c in 0..dim {
            let v = x[(r, c)];
            if v == zero() {
                continue;
            }
            let (j, c0) = split_index(c, n, qubits);
            for k in 0..d {
                let rk = insert_index(r0, k, n, qubits);
                for l in 0..d {
                    let e = choi.element(i, k, j, l);
                    if e != zero() {
                        out[(rk, insert_index(c0, l, n, qubits))] += v * e;
                    }
                }
            }
        }
    }
    out
}

fn apply_unitary<R: Real>(x: &ComplexMatrix<R>, n: usize, qubits: &[usize], u: &ComplexMatrix<R>) -> ComplexMatrix<R> {
    apply_choi(x, n, qubits, &ChoiMatrix::from_unitary(qubits.len(), u).expect("square unitary"))
}

/// Keeps the computational-basis diagonal block `t` of qubit `q`, weighted
/// by the declared-bit likelihood.
fn measure_branch<R: Real>(x: &ComplexMatrix<R>, n: usize, q: usize, declared: usize, eps: f64) -> ComplexMatrix<R> {
    let dim = x.rows();
    ComplexMatrix::from_fn(dim, dim, |r, c| {
        let (tr, tc) = (bit_of(r, n, q), bit_of(c, n, q));
        if tr != tc {
            return zero();
        }
        let w = if tr == declared { 1.0 - eps } else { eps };
        x[(r, c)] * C::new(R::of(w), R::zero())
    })
}

fn reset<R: Real>(x: &ComplexMatrix<R>, n: usize, q: usize) -> ComplexMatrix<R> {
    let dim = x.rows();
    let mask = 1 << (n - 1 - q);
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if (r & mask) == (c & mask) {
                out[(r & !mask, c & !mask)] += x[(r, c)];
            }
        }
    }
    out
}

/// Runs `ops` on `x`, tracking one operator per assignment of the bits that
/// are still needed: bits in `keep` always, other bits until their last
/// conditional use.
fn run<R: Real>(ops: &[CircuitOp<R>], n: usize, x: ComplexMatrix<R>, num_bits: usize, keep: &[bool]) -> BTreeMap<u64, ComplexMatrix<R>> {
    let mut last_use = vec![None; num_bits];
    for (i, op) in ops.iter().enumerate() {
        if let CircuitOp::ConditionalPauli { bit, .. } = op {
            last_use[*bit] = Some(i);
        }
    }
    let mut branches: BTreeMap<u64, ComplexMatrix<R>> = BTreeMap::new();
    branches.insert(0, x);
    for (i, op) in ops.iter().enumerate() {
        let mut next = BTreeMap::new();
        for (key, x) in branches {
            match op {
                CircuitOp::Channel { qubits, choi } => {
                    next.insert(key, apply_choi(&x, n, qubits, choi));
                }
                CircuitOp::Unitary { qubits, matrix } => {
                    next.insert(key, apply_unitary(&x, n, qubits, matrix));
                }
                CircuitOp::Measure { qubit, bit, eps } => {
                    for d in 0..2u64 {
                        next.insert(key | d << bit, measure_branch(&x, n, *qubit, d as usize, *eps));
                    }
                }
                CircuitOp::ConditionalPauli { qubit, pauli, bit } => {
                    let y = if key >> bit & 1 == 1 { apply_unitary(&x, n, &[*qubit], &pauli.matrix()) } else { x };
                    next.insert(key, y);
                }
                CircuitOp::Reset { qubit } => {
                    next.insert(key, reset(&x, n, *qubit));
                }
            }
        }
        // forget bits nothing downstream reads
        let mut mask = 0u64;
        for b in 0..num_bits {
            if keep[b] || last_use[b].is_some_and(|l| l > i) {
                mask |= 1 << b;
            }
        }
        branches = BTreeMap::new();
        for (key, x) in next {
            match branches.entry(key & mask) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(x);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let s = e.get().add(&x).expect("same shape");
                    e.insert(s);
                }
            }
        }
    }
    branches
}

fn check_size<R: Real>(circuit: &ChannelCircuit<R>) -> Result<(), OracleError> {
    if circuit.num_qubits > MAX_QUBITS {
        return Err(OracleError::TooManyQubits(circuit.num_qubits));
    }
    if circuit.bits.len() > 63 {
        return Err(OracleError::Circuit(CircuitError::Bit(circuit.bits.len())));
    }
    Ok(())
}

/// Applies the circuit's ops to `initial` (its boundary and terminal
/// specifications are ignored). With `record_outcomes` every bit
/// assignment is a branch, in increasing order of the bits read as a
/// binary number with bit 0 least significant; otherwise one branch holds
/// the averaged state.
pub fn simulate_density<R: Real>(
    circuit: &ChannelCircuit<R>,
    initial: &DensityMatrix<R>,
    record_outcomes: bool,
) -> Result<Vec<Branch<R>>, OracleError> {
    check_size(circuit)?;
    if initial.num_qubits != circuit.num_qubits {
        return Err(OracleError::InitialState { expected: circuit.num_qubits, found: initial.num_qubits });
    }
    let nb = circuit.bits.len();
    let keep = vec![record_outcomes; nb];
    let out = run(&circuit.ops, circuit.num_qubits, initial.matrix.clone(), nb, &keep);
    Ok(out
        .into_iter()
        .map(|(key, state)| Branch {
            bits: if record_outcomes { (0..nb).map(|b| (key >> b & 1) as u8).collect() } else { Vec::new() },
            probability: state.trace().re.as_f64(),
            state,
        })
        .collect())
}

fn amplitude<R: Real>(state: &[C<R>], x: usize, n: usize, qubits: &[usize]) -> C<R> {
    state[split_index(x, n, qubits).0]
}

/// The circuit's open tensor by direct simulation: same legs and order as
/// the tensor network of the circuit.
pub fn branch_tensor<R: Real>(circuit: &ChannelCircuit<R>) -> Result<Tensor<R>, OracleError> {
    circuit.validate()?;
    check_size(circuit)?;
    let n = circuit.num_qubits;
    let dim = 1usize << n;
    let legs = circuit.open_legs();
    let open_bits: Vec<usize> = legs.iter().filter_map(|l| if let OpenLeg::Bit(b) = l { Some(*b) } else { None }).collect();
    let encoded: Vec<(&Vec<usize>, &[Vec<C<R>>; 2])> = circuit
        .inputs
        .iter()
        .filter_map(|b| if let Boundary::Encoded { qubits, states } = b { Some((qubits, states)) } else { None })
        .collect();
    let out_terms: Vec<&Terminal<R>> = circuit.outputs.iter().filter(|t| !matches!(t, Terminal::Trace(_))).collect();
    let traced: Vec<usize> = circuit.outputs.iter().filter_map(|t| if let Terminal::Trace(q) = t { Some(*q) } else { None }).collect();
    let mut keep = vec![false; circuit.bits.len()];
    for &b in &open_bits {
        keep[b] = true;
    }
    let ne = encoded.len();
    let no = out_terms.len();
    let rank = legs.len();
    let mut data = vec![zero::<R>(); 1 << rank];
    let trace_mask: usize = traced.iter().map(|&q| 1 << (n - 1 - q)).sum();
    for inp in 0..1usize << (2 * ne) {
        // |v_ket⟩⟨v_bra| with every non-encoded qubit in |0⟩
        let sel = |e: usize, side: usize| inp >> (2 * (ne - 1 - e) + (1 - side)) & 1;
        let vec_for = |side: usize| -> Vec<C<R>> {
            (0..dim)
                .map(|x| {
                    let mut v = one::<R>();
                    let mut covered = 0usize;
                    for (e, (qs, st)) in encoded.iter().enumerate() {
                        v = v * amplitude(&st[sel(e, side)], x, n, qs);
                        covered |= qs.iter().map(|&q| 1 << (n - 1 - q)).sum::<usize>();
                    }
                    if x & !covered != 0 {
                        zero()
                    } else if side == 1 {
                        v.conj()
                    } else {
                        v
                    }
                })
                .collect()
        };
        let (vk, vb) = (vec_for(0), vec_for(1));
        let x0 = ComplexMatrix::from_fn(dim, dim, |r, c| vk[r] * vb[c]);
        let branches = run(&circuit.ops, n, x0, circuit.bits.len(), &keep);
        for (key, x) in branches {
            let bit_part = open_bits.iter().fold(0usize, |acc, &b| acc << 1 | (key >> b & 1) as usize);
            for outs in 0..1usize << (2 * no) {
                let pick = |t: usize, side: usize| outs >> (2 * (no - 1 - t) + (1 - side)) & 1;
                let mut total = zero::<R>();
                for r in 0..dim {
                    for c in 0..dim {
                        if (r ^ c) & trace_mask != 0 {
                            continue;
                        }
                        let v = x[(r, c)];
                        if v == zero() {
                            continue;
                        }
                        let mut w = one::<R>();
                        for (t, term) in out_terms.iter().enumerate() {
                            match term {
                                Terminal::Open(q) => {
                                    if bit_of(r, n, *q) != pick(t, 0) || bit_of(c, n, *q) != pick(t, 1) {
                                        w = zero();
                                    }
                                }
                                Terminal::Decode { qubits, states } => {
                                    w = w * amplitude(&states[pick(t, 0)], r, n, qubits).conj() * amplitude(&states[pick(t, 1)], c, n, qubits);
                                }
                                Terminal::Trace(_) => unreachable!(),
                            }
                            if w == zero() {
                                break;
                            }
                        }
                        total += v * w;
                    }
                }
                let pos = ((bit_part << (2 * ne)) | inp) << (2 * no) | outs;
                data[pos] += total;
            }
        }
    }
    let indices: Vec<usize> = (0..rank).collect();
    Ok(Tensor::new(indices, data).expect("shape"))
}

/// Choi matrix of the map from `subsystem` at the start to `subsystem` at
/// the end, with the other qubits starting in |0⟩, bits averaged and the
/// other qubits traced out.
pub fn channel_tomography<R: Real>(circuit: &ChannelCircuit<R>, subsystem: &[usize]) -> Result<ChoiMatrix<R>, OracleError> {
    check_size(circuit)?;
    let n = circuit.num_qubits;
    if let Some(&q) = subsystem.iter().find(|&&q| q >= n) {
        return Err(OracleError::Subsystem(q));
    }
    let m = subsystem.len();
    let d = 1usize << m;
    let dim = 1usize << n;
    let keep = vec![false; circuit.bits.len()];
    let mut choi = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut x = ComplexMatrix::zeros(dim, dim);
            x[(insert_index(0, i, n, subsystem), insert_index(0, j, n, subsystem))] = one();
            let out = run(&circuit.ops, n, x, circuit.bits.len(), &keep);
            for y in out.values() {
                for r in 0..dim {
                    let (k, r0) = split_index(r, n, subsystem);
                    for c in 0..dim {
                        let (l, c0) = split_index(c, n, subsystem);
                        if r0 == c0 {
                            choi[(i * d + k, j * d + l)] += y[(r, c)];
                        }
                    }
                }
            }
        }
    }
    Ok(ChoiMatrix::new(m, choi).expect("square"))
}

fn random_state<R: Real>(rng: &mut impl Rng, len: usize) -> Vec<C<R>> {
    let v: Vec<(f64, f64)> = (0..len).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    v.into_iter().map(|(a, b)| C::new(R::of(a / norm), R::of(b / norm))).collect()
}

fn random_subset(rng: &mut impl Rng, from: &[usize], k: usize) -> Vec<usize> {
    let mut v = from.to_vec();
    v.shuffle(rng);
    v.truncate(k);
    v
}

/// Seeded random noisy circuit on 2 to `max_qubits` qubits for oracle
/// cross-checks: gates of the model's gate set dressed with idle damping
/// and depolarizing error, idles, photon dephasing, noisy readout with
/// conditional Paulis, resets, an encoded input group and a mix of traced,
/// open and decoded outputs. At most 4 bits and 2 output groups keep the
/// dense side cheap.
pub fn random_circuit<R: Real>(seed: u64, max_qubits: usize) -> ChannelCircuit<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_qubits.max(2));
    let params = NoiseParameters {
        t1: rng.gen_range(10e3..60e3),
        t_phi: rng.gen_range(10e3..100e3),
        p_plane: rng.gen_range(0.0..2e-3),
        p_axis: rng.gen_range(0.0..5e-4),
        eps_ro: rng.gen_range(0.0..5e-3),
        ..default_parameters()
    };
    let all: Vec<usize> = (0..n).collect();
    let k = rng.gen_range(1..=n.min(3));
    let enc = random_subset(&mut rng, &all, k);
    let d = 1 << enc.len();
    let mut inputs = vec![Boundary::Encoded { qubits: enc.clone(), states: [random_state(&mut rng, d), random_state(&mut rng, d)] }];
    inputs.extend(all.iter().filter(|q| !enc.contains(q)).map(|&q| Boundary::Zero(q)));
    let one_q = [GateKind::RyPlus, GateKind::RyMinus, GateKind::Hadamard, GateKind::PauliX, GateKind::PauliY, GateKind::PauliZ];
    let mut ops = Vec::new();
    let mut bits = Vec::new();
    for _ in 0..rng.gen_range(10..30) {
        let q = rng.gen_range(0..n);
        let pair = random_subset(&mut rng, &all, 2);
        match rng.gen_range(0..10) {
            0 | 1 => {
                let kind = one_q[rng.gen_range(0..one_q.len())];
                ops.push(CircuitOp::Channel { qubits: vec![q], choi: noisy_gate(kind, params.t_g1q, &params).expect("valid") });
            }
            2 => {
                let kind = one_q[rng.gen_range(0..one_q.len())];
                ops.push(CircuitOp::Unitary { qubits: vec![q], matrix: gate_unitary(kind) });
            }
            3 => {
                let kind = if rng.gen_bool(0.5) { GateKind::Cz } else { GateKind::Cphase(rng.gen_range(-0.3..0.3)) };
                if rng.gen_bool(0.5) {
                    ops.push(CircuitOp::Unitary { qubits: pair, matrix: gate_unitary(kind) });
                } else {
                    ops.push(CircuitOp::Channel { qubits: pair, choi: noisy_gate(kind, params.t_g2q, &params).expect("valid") });
                }
            }
            4 => ops.push(CircuitOp::Channel { qubits: vec![q], choi: params.idle(rng.gen_range(0.0..600.0)).expect("valid") }),
            5 => ops.push(CircuitOp::Channel { qubits: vec![q], choi: dephasing_with_factor(rng.gen_range(0.9..1.0)).expect("valid") }),
            6 | 7 if bits.len() < 4 => {
                ops.push(CircuitOp::Measure { qubit: q, bit: bits.len(), eps: params.eps_ro });
                bits.push(BitSpec { label: format!("m{}", bits.len()), open: rng.gen_bool(0.6) });
            }
            8 if !bits.is_empty() => {
                let pauli = [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)];
                ops.push(CircuitOp::ConditionalPauli { qubit: q, pauli, bit: rng.gen_range(0..bits.len()) });
            }
            9 => ops.push(CircuitOp::Reset { qubit: q }),
            _ => ops.push(CircuitOp::Channel { qubits: vec![q], choi: params.idle(rng.gen_range(0.0..100.0)).expect("valid") }),
        }
    }
    let mut outputs = Vec::new();
    let mut rest = all.clone();
    rest.shuffle(&mut rng);
    let groups = rng.gen_range(0..=2);
    for g in 0..groups {
        if rest.is_empty() {
            break;
        }
        if g == 0 && rest.len() >= 2 && rng.gen_bool(0.5) {
            let k = rng.gen_range(1..=2);
            let qs: Vec<usize> = rest.drain(..k).collect();
            let d = 1 << qs.len();
            outputs.push(Terminal::Decode { states: [random_state(&mut rng, d), random_state(&mut rng, d)], qubits: qs });
        } else {
            outputs.push(Terminal::Open(rest.remove(0)));
        }
    }
    outputs.extend(rest.into_iter().map(Terminal::Trace));
    ChannelCircuit { num_qubits: n, inputs, ops, outputs, bits }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EquivalenceCase {
    pub seed: u64,
    pub num_qubits: usize,
    pub open_legs: usize,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EquivalenceReport {
    pub cases: Vec<EquivalenceCase>,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Tn(#[from] crate::tn::TnError),
}

/// Contracts `count` random circuits (seeds `seed..seed + count`) as tensor
/// networks and compares each with its dense branch tensor.
pub fn equivalence_suite(count: usize, max_qubits: usize, seed: u64, tolerance: f64) -> Result<EquivalenceReport, CheckError> {
    use crate::tn::{contract, network_from_circuit, plan_network, DecompositionBudget};
    let start = std::time::Instant::now();
    let budget = DecompositionBudget { max_time_secs: 5.0, max_restarts: 8, seed: 0, refine_steps: 500 };
    let mut cases = Vec::with_capacity(count);
    for s in seed..seed + count as u64 {
        let circ = random_circuit::<f64>(s, max_qubits);
        let net = network_from_circuit(&circ)?;
        let (plan, _) = plan_network(&net, &budget)?;
        let tn = contract(&net, &plan)?;
        let dense = branch_tensor(&circ)?;
        let diff = if tn.data.len() == dense.data.len() { tn.max_abs_diff(&dense) } else { f64::INFINITY };
        cases.push(EquivalenceCase { seed: s, num_qubits: circ.num_qubits, open_legs: net.open.len(), max_abs_diff: diff });
    }
    let max_abs_diff = cases.iter().map(|c| c.max_abs_diff).fold(0.0, f64::max);
    Ok(EquivalenceReport { cases, max_abs_diff, tolerance, passed: max_abs_diff <= tolerance, seconds: start.elapsed().as_secs_f64() })
}
