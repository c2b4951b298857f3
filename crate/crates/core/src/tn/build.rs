use crate::channel::ComplexMatrix;
use crate::circuit::{Boundary, ChannelCircuit, CircuitOp, OpenLeg, Terminal};
use crate::scalar::{Real, C};

use super::tensor::Tensor;
use super::{TensorNetwork, TnError};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        lo
    }
}

struct Builder<R: Real> {
    uf: UnionFind,
    labels: Vec<String>,
    raw: Vec<(Vec<usize>, Vec<C<R>>)>,
    ket: Vec<usize>,
    bra: Vec<usize>,
}

impl<R: Real> Builder<R> {
    fn fresh(&mut self, label: String) -> usize {
        let id = self.uf.parent.len();
        self.uf.parent.push(id);
        self.labels.push(label);
        id
    }

    fn tensor(&mut self, indices: Vec<usize>, data: Vec<C<R>>) {
        self.raw.push((indices, data));
    }

    /// Conjugation by `m` on `qubits`, ket and bra sides as separate
    /// factors. Qubits on which `m` is block diagonal (controls, phases)
    /// keep their leg; the others get a fresh output leg.
    fn unitary(&mut self, qubits: &[usize], m: &ComplexMatrix<R>, extra: &[usize], tag: &str) {
        let d = m.rows();
        let nq = qubits.len();
        let zero = C::new(R::zero(), R::zero());
        let keep: Vec<bool> = (0..nq)
            .map(|p| {
                let bit = 1 << (nq - 1 - p);
                (0..d).all(|i| (0..d).all(|j| (i ^ j) & bit == 0 || m[(i, j)] == zero))
            })
            .collect();
        let moved: Vec<usize> = (0..nq).filter(|&p| !keep[p]).collect();
        let n_extra = extra.len();
        let n_out = moved.len();
        for side in 0..2 {
            let cur: Vec<usize> = qubits.iter().map(|&q| if side == 0 { self.ket[q] } else { self.bra[q] }).collect();
            let val = |i: usize, j: usize| if side == 0 { m[(i, j)] } else { m[(i, j)].conj() };
            // extra indices select between identity (0) and `m` (1)
            let pick = |sel: usize, i: usize, j: usize| {
                if n_extra == 0 || sel == 1 {
                    val(i, j)
                } else if i == j {
                    C::new(R::one(), R::zero())
                } else {
                    zero
                }
            };
            let next: Vec<usize> = moved
                .iter()
                .map(|&p| self.fresh(format!("q{}.{}{tag}", qubits[p], if side == 0 { 'k' } else { 'b' })))
                .collect();
            let mut idx = extra.to_vec();
            idx.extend(&next);
            idx.extend(&cur);
            let data = (0..(1usize << (n_extra + n_out)) * d)
                .map(|o| {
                    let col = o % d;
                    let outs = o / d % (1 << n_out);
                    let mut row = col;
                    for (k, &p) in moved.iter().enumerate() {
                        let bit = 1 << (nq - 1 - p);
                        let v = outs >> (n_out - 1 - k) & 1;
                        row = if v == 1 { row | bit } else { row & !bit };
                    }
                    pick(o / d >> n_out, row, col)
                })
                .collect();
            self.tensor(idx, data);
            for (k, &p) in moved.iter().enumerate() {
                if side == 0 {
                    self.ket[qubits[p]] = next[k];
                } else {
                    self.bra[qubits[p]] = next[k];
                }
            }
        }
    }

    /// |0⟩⟨0| as a single leg shared by ket and bra.
    fn zero_state(&mut self, q: usize) {
        let t = self.fresh(format!("q{q}.0"));
        self.tensor(vec![t], vec![C::new(R::one(), R::zero()), C::new(R::zero(), R::zero())]);
        self.ket[q] = t;
        self.bra[q] = t;
    }

    /// Ket and bra share one leg: the state is diagonal on this qubit.
    fn classical(&mut self, q: usize) -> bool {
        self.uf.find(self.ket[q]) == self.uf.find(self.bra[q])
    }
}

fn amplitudes_tensor<R: Real>(leg: usize, legs: &[usize], states: &[Vec<C<R>>; 2], conj: bool) -> (Vec<usize>, Vec<C<R>>) {
    let mut idx = vec![leg];
    idx.extend(legs);
    let data = states
        .iter()
        .flat_map(|s| s.iter().map(move |&v| if conj { v.conj() } else { v }))
        .collect();
    (idx, data)
}

/// Open tensor network of a channel circuit. Open indices follow
/// [`ChannelCircuit::open_legs`].
pub fn network_from_circuit<R: Real>(circuit: &ChannelCircuit<R>) -> Result<TensorNetwork<R>, TnError> {
    circuit.validate()?;
    let n = circuit.num_qubits;
    let mut b = Builder { uf: UnionFind { parent: Vec::new() }, labels: Vec::new(), raw: Vec::new(), ket: vec![0; n], bra: vec![0; n] };
    let mut input_legs = Vec::new();
    for (bi, bd) in circuit.inputs.iter().enumerate() {
        match bd {
            Boundary::Zero(q) => b.zero_state(*q),
            Boundary::Encoded { qubits, states } => {
                let a = b.fresh(format!("in{bi}.a"));
                let c = b.fresh(format!("in{bi}.b"));
                let ks: Vec<usize> = qubits.iter().map(|&q| b.fresh(format!("q{q}.k0"))).collect();
                let bs: Vec<usize> = qubits.iter().map(|&q| b.fresh(format!("q{q}.b0"))).collect();
                let (i1, d1) = amplitudes_tensor(a, &ks, states, false);
                let (i2, d2) = amplitudes_tensor(c, &bs, states, true);
                b.tensor(i1, d1);
                b.tensor(i2, d2);
                for (k, &q) in qubits.iter().enumerate() {
                    b.ket[q] = ks[k];
                    b.bra[q] = bs[k];
                }
                input_legs.push((bi, a, c));
            }
        }
    }
    let mut bit_index = vec![usize::MAX; circuit.bits.len()];
    for (oi, op) in circuit.ops.iter().enumerate() {
        match op {
            CircuitOp::Unitary { qubits, matrix } => b.unitary(qubits, matrix, &[], &format!("@{oi}")),
            CircuitOp::Channel { qubits, choi } => {
                let m = qubits.len();
                let d = 1usize << m;
                let diag_action = (0..d * d).all(|r| {
                    (0..d * d).all(|c| {
                        let (i, k, j, l) = (r / d, r % d, c / d, c % d);
                        (i == k && j == l) || choi.matrix()[(r, c)] == C::new(R::zero(), R::zero())
                    })
                });
                let ins_k: Vec<usize> = qubits.iter().map(|&q| b.ket[q]).collect();
                let ins_b: Vec<usize> = qubits.iter().map(|&q| b.bra[q]).collect();
                let classical = qubits.iter().all(|&q| b.classical(q));
                if classical && !diag_action && choi.preserves_diagonal(R::zero()) {
                    // diagonal in, diagonal out: a stochastic matrix on one leg per qubit
                    let outs: Vec<usize> = qubits.iter().map(|&q| b.fresh(format!("q{q}.c@{oi}"))).collect();
                    let mut idx = ins_k;
                    idx.extend(&outs);
                    let data = (0..d * d).map(|o| {
                        let (i, k) = (o / d, o % d);
                        choi.matrix()[(i * d + k, i * d + k)]
                    });
                    b.tensor(idx, data.collect());
                    for (k, &q) in qubits.iter().enumerate() {
                        b.ket[q] = outs[k];
                        b.bra[q] = outs[k];
                    }
                } else if diag_action {
                    let mut idx = ins_k.clone();
                    idx.extend(&ins_b);
                    let data = (0..d * d).map(|o| {
                        let (k, l) = (o / d, o % d);
                        choi.matrix()[(k * d + k, l * d + l)]
                    });
                    b.tensor(idx, data.collect());
                } else {
                    let outs_k: Vec<usize> = qubits.iter().map(|&q| b.fresh(format!("q{q}.k@{oi}"))).collect();
                    let outs_b: Vec<usize> = qubits.iter().map(|&q| b.fresh(format!("q{q}.b@{oi}"))).collect();
                    let mut idx = ins_k;
                    idx.extend(&outs_k);
                    idx.extend(&ins_b);
                    idx.extend(&outs_b);
                    b.tensor(idx, choi.matrix().data().to_vec());
                    for (k, &q) in qubits.iter().enumerate() {
                        b.ket[q] = outs_k[k];
                        b.bra[q] = outs_b[k];
                    }
                }
            }
            CircuitOp::Measure { qubit, bit, eps } => {
                let t = b.uf.union(b.ket[*qubit], b.bra[*qubit]);
                b.ket[*qubit] = t;
                b.bra[*qubit] = t;
                let d = b.fresh(format!("bit{bit}"));
                if *eps == 0.0 {
                    b.uf.union(t, d);
                } else {
                    let (p, e) = (C::new(R::of(1.0 - eps), R::zero()), C::new(R::of(*eps), R::zero()));
                    b.tensor(vec![t, d], vec![p, e, e, p]);
                }
                bit_index[*bit] = d;
            }
            CircuitOp::ConditionalPauli { qubit, pauli, bit } => {
                b.unitary(&[*qubit], &pauli.matrix(), &[bit_index[*bit]], &format!("@{oi}"));
            }
            CircuitOp::Reset { qubit } => {
                b.uf.union(b.ket[*qubit], b.bra[*qubit]);
                b.zero_state(*qubit);
            }
        }
    }
    let mut output_legs = Vec::new();
    for (ti, t) in circuit.outputs.iter().enumerate() {
        match t {
            Terminal::Trace(q) => {
                b.uf.union(b.ket[*q], b.bra[*q]);
            }
            Terminal::Open(q) => output_legs.push((ti, b.ket[*q], b.bra[*q])),
            Terminal::Decode { qubits, states } => {
                let a = b.fresh(format!("out{ti}.a"));
                let c = b.fresh(format!("out{ti}.b"));
                let ks: Vec<usize> = qubits.iter().map(|&q| b.ket[q]).collect();
                let bs: Vec<usize> = qubits.iter().map(|&q| b.bra[q]).collect();
                let (i1, d1) = amplitudes_tensor(a, &ks, states, true);
                let (i2, d2) = amplitudes_tensor(c, &bs, states, false);
                b.tensor(i1, d1);
                b.tensor(i2, d2);
                output_legs.push((ti, a, c));
            }
        }
    }
    let mut open_raw = Vec::new();
    for leg in circuit.open_legs() {
        let raw = match leg {
            OpenLeg::Bit(i) => bit_index[i],
            OpenLeg::InputKet(i) => input_legs.iter().find(|l| l.0 == i).unwrap().1,
            OpenLeg::InputBra(i) => input_legs.iter().find(|l| l.0 == i).unwrap().2,
            OpenLeg::OutputKet(i) => output_legs.iter().find(|l| l.0 == i).unwrap().1,
            OpenLeg::OutputBra(i) => output_legs.iter().find(|l| l.0 == i).unwrap().2,
        };
        open_raw.push(raw);
    }
    // a leg that coincides with an earlier open leg gets its own copy
    let one = C::new(R::one(), R::zero());
    let zero = C::new(R::zero(), R::zero());
    let mut seen = Vec::new();
    for o in open_raw.iter_mut() {
        let r = b.uf.find(*o);
        if seen.contains(&r) {
            let label = b.labels[*o].clone();
            let fresh = b.fresh(format!("{label}'"));
            b.tensor(vec![fresh, r], vec![one, zero, zero, one]);
            *o = fresh;
            seen.push(fresh);
        } else {
            seen.push(r);
        }
    }
    // resolve merged ids and renumber densely in order of first use
    let mut dense = vec![usize::MAX; b.uf.parent.len()];
    let mut labels = Vec::new();
    let mut tensors = Vec::with_capacity(b.raw.len());
    let raw = std::mem::take(&mut b.raw);
    let mut number = |r: usize, b: &mut Builder<R>, labels: &mut Vec<String>| {
        let root = b.uf.find(r);
        if dense[root] == usize::MAX {
            dense[root] = labels.len();
            labels.push(b.labels[root].clone());
        }
        dense[root]
    };
    for (idx, data) in raw {
        let ids: Vec<usize> = idx.iter().map(|&i| number(i, &mut b, &mut labels)).collect();
        tensors.push(Tensor::with_repeats(ids, data)?);
    }
    let open: Vec<usize> = open_raw.iter().map(|&o| number(o, &mut b, &mut labels)).collect();
    Ok(TensorNetwork { tensors, num_indices: labels.len(), open, labels })
}
