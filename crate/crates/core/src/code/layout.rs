use serde::{Deserialize, Serialize};

use crate::circuit::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Data,
    XAncilla,
    ZAncilla,
}

/// A qubit of surface-17 by its lattice position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId {
    pub x: i32,
    pub y: i32,
    pub role: Role,
}

impl QubitId {
    pub const fn data(x: i32, y: i32) -> Self {
        Self { x, y, role: Role::Data }
    }

    pub fn label(&self) -> String {
        format!("({},{})", self.x, self.y)
    }
}

impl std::fmt::Display for QubitId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.role {
            Role::Data => 'd',
            Role::XAncilla => 'x',
            Role::ZAncilla => 'z',
        };
        write!(f, "{tag}({},{})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilizerType {
    X,
    Z,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerSpec {
    pub ancilla: QubitId,
    pub pauli_type: StabilizerType,
    pub support: Vec<QubitId>,
    /// Single-qubit Pauli flipping only this stabilizer.
    pub pure_error: (QubitId, Pauli),
}

/// Binary symplectic Pauli on the nine data qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct DataPauli {
    pub x: u16,
    pub z: u16,
}

impl DataPauli {
    pub fn commutes_with(&self, other: &DataPauli) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn compose(&self, other: &DataPauli) -> DataPauli {
        DataPauli { x: self.x ^ other.x, z: self.z ^ other.z }
    }
}

#[derive(Clone, Debug)]
pub struct Surface17 {
    /// Data qubits first (sorted by position), then X- and Z-ancillas in
    /// stabilizer order. The position in this list is the qubit's index in
    /// every circuit built from this layout.
    pub qubits: Vec<QubitId>,
    /// X-stabilizers (1,1), (5,1), (-1,3), (3,3) then Z-stabilizers
    /// (1,3), (1,-1), (3,1), (3,5). Syndrome bits follow this order.
    pub stabilizers: Vec<StabilizerSpec>,
    /// Ancilla–data neighbor pairs, ancilla first.
    pub edges: Vec<(QubitId, QubitId)>,
    pub logical_x: Vec<QubitId>,
    pub logical_z: Vec<QubitId>,
}

const X_ANCILLAS: [(i32, i32); 4] = [(1, 1), (5, 1), (-1, 3), (3, 3)];
const Z_ANCILLAS: [(i32, i32); 4] = [(1, 3), (1, -1), (3, 1), (3, 5)];

pub fn surface17_layout() -> Surface17 {
    let mut data = Vec::new();
    for x in [0, 2, 4] {
        for y in [0, 2, 4] {
            data.push(QubitId::data(x, y));
        }
    }
    let ancillas: Vec<QubitId> = X_ANCILLAS
        .iter()
        .map(|&(x, y)| QubitId { x, y, role: Role::XAncilla })
        .chain(Z_ANCILLAS.iter().map(|&(x, y)| QubitId { x, y, role: Role::ZAncilla }))
        .collect();
    let mut qubits = data.clone();
    qubits.extend(&ancillas);

    let mut edges = Vec::new();
    let mut stabilizers = Vec::new();
    for &a in &ancillas {
        let support: Vec<QubitId> = data
            .iter()
            .copied()
            .filter(|d| (d.x - a.x).abs() == 1 && (d.y - a.y).abs() == 1)
            .collect();
        for &d in &support {
            edges.push((a, d));
        }
        let pauli_type = if a.role == Role::XAncilla { StabilizerType::X } else { StabilizerType::Z };
        stabilizers.push(StabilizerSpec { ancilla: a, pauli_type, support, pure_error: (a, Pauli::X) });
    }
    let logical_x = data.iter().copied().filter(|d| d.y == 2).collect();
    let logical_z = data.iter().copied().filter(|d| d.x == 2).collect();
    let mut layout = Surface17 { qubits, stabilizers, edges, logical_x, logical_z };
    assign_pure_errors(&mut layout);
    layout
}

/// Smallest support qubit whose single-qubit Pauli flips only the given
/// stabilizer. X-stabilizers take a Z error and vice versa.
fn assign_pure_errors(layout: &mut Surface17) {
    let stabs: Vec<DataPauli> = layout.stabilizers.iter().map(|s| layout.stabilizer_pauli(s)).collect();
    for i in 0..layout.stabilizers.len() {
        let spec = &layout.stabilizers[i];
        let kind = match spec.pauli_type {
            StabilizerType::X => Pauli::Z,
            StabilizerType::Z => Pauli::X,
        };
        let mut candidates = spec.support.clone();
        candidates.sort();
        let chosen = candidates
            .into_iter()
            .find(|&q| {
                let e = layout.single_pauli(q, kind);
                stabs.iter().enumerate().all(|(j, s)| e.commutes_with(s) == (i != j))
            })
            .expect("surface-17 admits weight-1 pure errors");
        layout.stabilizers[i].pure_error = (chosen, kind);
    }
}

impl Surface17 {
    pub fn data_qubits(&self) -> &[QubitId] {
        &self.qubits[..9]
    }

    pub fn index_of(&self, q: QubitId) -> usize {
        self.qubits.iter().position(|&p| p == q).unwrap_or_else(|| panic!("{q} not in layout"))
    }

    pub fn find(&self, x: i32, y: i32) -> Option<QubitId> {
        self.qubits.iter().copied().find(|q| q.x == x && q.y == y)
    }

    pub fn has_edge(&self, a: QubitId, b: QubitId) -> bool {
        self.edges.iter().any(|&(p, q)| (p, q) == (a, b) || (q, p) == (a, b))
    }

    pub fn data_bit(&self, q: QubitId) -> u16 {
        assert_eq!(q.role, Role::Data, "{q} is not a data qubit");
        1 << self.index_of(q)
    }

    pub fn single_pauli(&self, q: QubitId, p: Pauli) -> DataPauli {
        let b = self.data_bit(q);
        match p {
            Pauli::X => DataPauli { x: b, z: 0 },
            Pauli::Y => DataPauli { x: b, z: b },
            Pauli::Z => DataPauli { x: 0, z: b },
        }
    }

    pub fn stabilizer_pauli(&self, s: &StabilizerSpec) -> DataPauli {
        let mask = s.support.iter().fold(0u16, |m, &q| m | self.data_bit(q));
        match s.pauli_type {
            StabilizerType::X => DataPauli { x: mask, z: 0 },
            StabilizerType::Z => DataPauli { x: 0, z: mask },
        }
    }

    pub fn logical_x_pauli(&self) -> DataPauli {
        DataPauli { x: self.logical_x.iter().fold(0, |m, &q| m | self.data_bit(q)), z: 0 }
    }

    pub fn logical_z_pauli(&self) -> DataPauli {
        DataPauli { x: 0, z: self.logical_z.iter().fold(0, |m, &q| m | self.data_bit(q)) }
    }

    /// Logical basis states |0_L⟩, |1_L⟩ over the data qubits (first data
    /// qubit most significant).
    pub fn logical_states(&self) -> [Vec<f64>; 2] {
        let xs: Vec<u16> = self
            .stabilizers
            .iter()
            .filter(|s| s.pauli_type == StabilizerType::X)
            .map(|s| self.stabilizer_pauli(s).x)
            .collect();
        let mut zero = vec![0.0; 512];
        let ngen = xs.len();
        let norm = 1.0 / ((1usize << ngen) as f64).sqrt();
        for subset in 0..(1usize << ngen) {
            let flips = (0..ngen).filter(|i| subset >> i & 1 == 1).fold(0u16, |m, i| m ^ xs[i]);
            zero[basis_index(flips)] += norm;
        }
        let lx = self.logical_x_pauli().x;
        let mut one = vec![0.0; 512];
        for (i, &amp) in zero.iter().enumerate() {
            if amp != 0.0 {
                one[i ^ basis_index(lx)] = amp;
            }
        }
        [zero, one]
    }
}

/// Map a data-qubit mask (bit i = data qubit i) to a basis index with data
/// qubit 0 as the most significant of nine bits.
pub fn basis_index(mask: u16) -> usize {
    (0..9).filter(|i| mask >> i & 1 == 1).fold(0usize, |acc, i| acc | 1 << (8 - i))
}
