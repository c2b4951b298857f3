use num_complex::Complex64;

use crate::circuit::Pauli;

use super::layout::{DataPauli, StabilizerType, Surface17};

/// Clifford gate on data-qubit indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderGate {
    Cnot { control: usize, target: usize },
    Hadamard(usize),
}

/// Unitary on the nine data qubits that sends every syndrome-`s` code
/// state `E_s|ψ_a⟩` to a computational basis state: stabilizer `j`'s bit
/// lands on data qubit `syndrome_qubit[j]` and the logical bit on
/// `logical_qubit`, up to the Pauli `Z^z(s) X^x(s)` listed in
/// `corrections` and an `a`-independent phase.
#[derive(Clone, Debug)]
pub struct SyndromeDecoder {
    pub gates: Vec<DecoderGate>,
    pub syndrome_qubit: [usize; 8],
    pub logical_qubit: usize,
    /// `(stabilizer, pauli)`: apply `pauli` to the logical qubit when the
    /// stabilizer's bit is 1. X entries come before Z entries.
    pub corrections: Vec<(usize, Pauli)>,
}

fn conjugate(p: DataPauli, gates: &[DecoderGate]) -> DataPauli {
    let mut p = p;
    for g in gates {
        match *g {
            DecoderGate::Cnot { control, target } => {
                p.x ^= (p.x >> control & 1) << target;
                p.z ^= (p.z >> target & 1) << control;
            }
            DecoderGate::Hadamard(q) => {
                let (x, z) = (p.x >> q & 1, p.z >> q & 1);
                p.x = p.x & !(1 << q) | z << q;
                p.z = p.z & !(1 << q) | x << q;
            }
        }
    }
    p
}

/// Applies decoder gates to a 9-qubit state (data qubit 0 most significant).
pub fn apply_decoder_gates(state: &mut [Complex64], gates: &[DecoderGate]) {
    let bit = |q: usize| 1usize << (8 - q);
    for g in gates {
        match *g {
            DecoderGate::Cnot { control, target } => {
                for i in 0..512 {
                    if i & bit(control) != 0 && i & bit(target) == 0 {
                        state.swap(i, i | bit(target));
                    }
                }
            }
            DecoderGate::Hadamard(q) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..512 {
                    if i & bit(q) == 0 {
                        let (a, b) = (state[i], state[i | bit(q)]);
                        state[i] = (a + b) * h;
                        state[i | bit(q)] = (a - b) * h;
                    }
                }
            }
        }
    }
}

/// Applies a data Pauli `X^x Z^z` (Z first) to a 9-qubit state.
pub fn apply_data_pauli(state: &mut [Complex64], p: DataPauli) {
    let mut out = vec![Complex64::new(0.0, 0.0); 512];
    for (i, &v) in state.iter().enumerate() {
        let mut sign = 1.0;
        let mut j = i;
        for q in 0..9 {
            let b = 1usize << (8 - q);
            if p.z >> q & 1 == 1 && i & b != 0 {
                sign = -sign;
            }
            if p.x >> q & 1 == 1 {
                j ^= b;
            }
        }
        out[j] += v * sign;
    }
    state.copy_from_slice(&out);
}

/// Builds the decoder as the inverse of a CSS encoder (logical CNOT fan-out,
/// Hadamards on one pivot per X-stabilizer, pivot fan-outs), followed by a
/// CNOT network that turns Z-stabilizer parities into single bits.
pub fn syndrome_decoder(layout: &Surface17) -> SyndromeDecoder {
    let xs: Vec<(usize, u16)> = layout
        .stabilizers
        .iter()
        .enumerate()
        .filter(|(_, s)| s.pauli_type == StabilizerType::X)
        .map(|(j, s)| (j, layout.stabilizer_pauli(s).x))
        .collect();
    let lx = layout.logical_x_pauli().x;
    let mut pivots = Vec::new();
    for (k, &(_, m)) in xs.iter().enumerate() {
        let others = xs.iter().enumerate().filter(|(l, _)| *l != k).fold(0u16, |a, (_, s)| a | s.1);
        let p = (0..9).find(|&q| m >> q & 1 == 1 && others >> q & 1 == 0 && lx >> q & 1 == 0).expect("pivot qubit");
        pivots.push(p);
    }
    let logical = (0..9).find(|&q| lx >> q & 1 == 1 && !pivots.contains(&q)).expect("logical qubit");
    let mut enc = Vec::new();
    for t in (0..9).filter(|&t| lx >> t & 1 == 1 && t != logical) {
        enc.push(DecoderGate::Cnot { control: logical, target: t });
    }
    for &p in &pivots {
        enc.push(DecoderGate::Hadamard(p));
    }
    for (k, &(_, m)) in xs.iter().enumerate() {
        for t in (0..9).filter(|&t| m >> t & 1 == 1 && t != pivots[k]) {
            enc.push(DecoderGate::Cnot { control: pivots[k], target: t });
        }
    }
    let mut gates: Vec<DecoderGate> = enc.into_iter().rev().collect();

    // parity rows of every stabilizer over the eight syndrome registers
    let registers: Vec<usize> = (0..9).filter(|&q| q != logical).collect();
    let mut rows: Vec<u16> = layout
        .stabilizers
        .iter()
        .map(|s| {
            let img = conjugate(layout.stabilizer_pauli(s), &gates);
            assert!(img.x == 0 && img.z >> logical & 1 == 0, "stabilizer image must be Z-type on registers");
            img.z
        })
        .collect();
    // reduce rows to unit vectors; replaying the ops backwards as CNOTs
    // builds the rows from the measured registers
    let mut ops: Vec<(usize, usize)> = Vec::new();
    let mut pivot_of = [usize::MAX; 8];
    let mut used = [false; 8];
    for &c in &registers {
        let Some(r) = (0..8).find(|&r| !used[r] && rows[r] >> c & 1 == 1) else { continue };
        used[r] = true;
        pivot_of[r] = c;
        for r2 in 0..8 {
            if r2 != r && rows[r2] >> c & 1 == 1 {
                rows[r2] ^= rows[r];
                ops.push((r2, r));
            }
        }
    }
    assert!(pivot_of.iter().all(|&p| p != usize::MAX), "stabilizer images must be independent");
    for &(t, c) in ops.iter().rev() {
        gates.push(DecoderGate::Cnot { control: pivot_of[c], target: pivot_of[t] });
    }
    let mut dec = SyndromeDecoder { gates, syndrome_qubit: pivot_of, logical_qubit: logical, corrections: Vec::new() };
    dec.corrections = derive_corrections(layout, &dec);
    dec
}

/// Logical Pauli left behind by each pure error, read off by running the
/// decoder on `E_j|ψ_a⟩`.
fn derive_corrections(layout: &Surface17, dec: &SyndromeDecoder) -> Vec<(usize, Pauli)> {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for j in 0..8 {
        let (q, p) = layout.stabilizers[j].pure_error;
        let err = layout.single_pauli(q, p);
        let (bit0, amp0) = decode_basis(layout, dec, err, 0);
        let (bit1, amp1) = decode_basis(layout, dec, err, 1);
        let flip = bit0 >> (8 - dec.logical_qubit) & 1;
        let ratio = amp1 / amp0;
        if flip == 1 {
            xs.push((j, Pauli::X));
        }
        if ratio.re < 0.0 {
            zs.push((j, Pauli::Z));
        }
        debug_assert_eq!(bit0 ^ bit1, 1 << (8 - dec.logical_qubit));
    }
    xs.extend(zs);
    xs
}

/// Runs the decoder on `err|ψ_a⟩` and returns the single basis index it
/// lands on with its amplitude.
pub fn decode_basis(layout: &Surface17, dec: &SyndromeDecoder, err: DataPauli, a: usize) -> (usize, Complex64) {
    let states = layout.logical_states();
    let mut s: Vec<Complex64> = states[a].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    apply_data_pauli(&mut s, err);
    apply_decoder_gates(&mut s, &dec.gates);
    let (i, v) = s
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().partial_cmp(&y.1.norm()).unwrap())
        .map(|(i, v)| (i, *v))
        .expect("nonempty");
    (i, v)
}
