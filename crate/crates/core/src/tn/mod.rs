//! Open tensor networks: construction from channel circuits, tree
//! decomposition planning, contraction and index splitting.

mod build;
mod cache;
mod graph;
mod plan;
mod tensor;

pub use build::network_from_circuit;
pub use cache::{plan_cached, PlanCache, PLAN_CACHE_ENV};
pub use graph::{line_graph, tree_decompose, tree_decompose_scored, validate_decomposition, DecompositionBudget, Hypergraph, TreeDecomposition, Violation};
pub use plan::{
    choose_split, contract, plan_from_decomposition, plan_network, plan_split, refine_order, replay, split_and_contract, ContractionPlan, Replay, SplitPlan,
    Step,
};
pub use tensor::{contract_pair, Tensor};

use crate::circuit::CircuitError;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum TnError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("tensor of rank {rank} holds {len} entries")]
    Shape { rank: usize, len: usize },
    #[error("repeated index in {0:?}")]
    RepeatedIndex(Vec<usize>),
    #[error("unknown index {0}")]
    UnknownIndex(usize),
    #[error("empty graph")]
    EmptyGraph,
    #[error("no bag covers the open indices")]
    OpenNotCovered,
    #[error("plan does not match network: {0}")]
    Mismatch(String),
    #[error("subtask width {width} exceeds cap {cap}")]
    TooWide { width: usize, cap: usize },
    #[error("plan cache: {0}")]
    Cache(String),
}

/// Tensors plus the open index list. Index ids run over `0..num_indices`;
/// ids removed by [`TensorNetwork::fix_index`] stay reserved so fixed
/// copies keep the same numbering.
#[derive(Clone, Debug)]
pub struct TensorNetwork<R: Real> {
    pub tensors: Vec<Tensor<R>>,
    pub num_indices: usize,
    /// Output legs in output order.
    pub open: Vec<usize>,
    pub labels: Vec<String>,
}

impl<R: Real> TensorNetwork<R> {
    /// Tensor ids adjacent to each index.
    pub fn hyperedges(&self) -> Vec<Vec<usize>> {
        let mut h = vec![Vec::new(); self.num_indices];
        for (t, tensor) in self.tensors.iter().enumerate() {
            for &i in &tensor.indices {
                h[i].push(t);
            }
        }
        h
    }

    /// Indices that appear in some tensor and are not open.
    pub fn closed_indices(&self) -> Vec<usize> {
        let h = self.hyperedges();
        (0..self.num_indices).filter(|i| !h[*i].is_empty() && !self.open.contains(i)).collect()
    }

    pub fn validate(&self) -> Result<(), TnError> {
        for t in &self.tensors {
            if t.data.len() != 1 << t.rank() {
                return Err(TnError::Shape { rank: t.rank(), len: t.data.len() });
            }
            if let Some(&i) = t.indices.iter().find(|&&i| i >= self.num_indices) {
                return Err(TnError::UnknownIndex(i));
            }
        }
        let h = self.hyperedges();
        if let Some(&o) = self.open.iter().find(|&&o| o >= self.num_indices || h[o].is_empty()) {
            return Err(TnError::UnknownIndex(o));
        }
        Ok(())
    }

    /// The network restricted to `index = value`.
    pub fn fix_index(&self, index: usize, value: usize) -> Result<Self, TnError> {
        if index >= self.num_indices || !self.tensors.iter().any(|t| t.position(index).is_some()) {
            return Err(TnError::UnknownIndex(index));
        }
        Ok(Self {
            tensors: self.tensors.iter().map(|t| t.slice(index, value & 1)).collect(),
            num_indices: self.num_indices,
            open: self.open.iter().copied().filter(|&o| o != index).collect(),
            labels: self.labels.clone(),
        })
    }

    /// Index lists of all tensors plus the open list; equal for networks
    /// that differ only in tensor values.
    pub fn shape(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        (self.tensors.iter().map(|t| t.indices.clone()).collect(), self.open.clone())
    }

    /// SHA-256 over the shape, hex encoded.
    pub fn structural_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.num_indices as u64).to_le_bytes());
        for t in &self.tensors {
            h.update((t.rank() as u64).to_le_bytes());
            for &i in &t.indices {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.update(b"open");
        for &o in &self.open {
            h.update((o as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Plain-text dump: a header line, one `index <id> <label>` line per
    /// used index, one `tensor <id> <rank> <indices...>` line per tensor and
    /// one `open <indices...>` line.
    pub fn dump(&self) -> String {
        let h = self.hyperedges();
        let mut s = format!("# tensors {} indices {} open {}\n", self.tensors.len(), self.num_indices, self.open.len());
        for i in 0..self.num_indices {
            if !h[i].is_empty() {
                let adj: Vec<String> = h[i].iter().map(|t| t.to_string()).collect();
                s.push_str(&format!("index {i} {} {}\n", self.labels[i], adj.join(",")));
            }
        }
        for (t, tensor) in self.tensors.iter().enumerate() {
            let idx: Vec<String> = tensor.indices.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!("tensor {t} {} {}\n", tensor.rank(), idx.join(" ")));
        }
        let open: Vec<String> = self.open.iter().map(|i| i.to_string()).collect();
        s.push_str(&format!("open {}\n", open.join(" ")));
        s
    }
}
