use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TensorNetwork, TnError};
use crate::scalar::Real;

/// Hypergraph over index ids; each edge is the index set of one tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub num_nodes: usize,
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(num_nodes: usize, edges: Vec<Vec<usize>>) -> Self {
        Self { num_nodes, edges }
    }

    /// Adds one edge spanning `nodes` (the virtual tensor on the open legs).
    pub fn with_edge(&self, nodes: &[usize]) -> Self {
        let mut g = self.clone();
        if !nodes.is_empty() {
            g.edges.push(nodes.to_vec());
        }
        g
    }

    /// Nodes that lie on at least one edge.
    pub fn active(&self) -> Vec<bool> {
        let mut a = vec![false; self.num_nodes];
        for e in &self.edges {
            for &v in e {
                a[v] = true;
            }
        }
        a
    }
}

/// One node per index, one hyperedge per tensor.
pub fn line_graph<R: Real>(network: &TensorNetwork<R>) -> Hypergraph {
    Hypergraph::new(network.num_indices, network.tensors.iter().map(|t| t.indices.clone()).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub parent: Vec<Option<usize>>,
    pub bags: Vec<Vec<usize>>,
    pub width: usize,
}

impl TreeDecomposition {
    pub fn single_bag(graph: &Hypergraph) -> Self {
        let active = graph.active();
        let bag: Vec<usize> = (0..graph.num_nodes).filter(|&v| active[v]).collect();
        Self { parent: vec![None], width: bag.len(), bags: vec![bag] }
    }

    /// Σ 2^|bag|.
    pub fn cost(&self) -> f64 {
        self.bags.iter().map(|b| 2f64.powi(b.len() as i32)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UncoveredEdge { edge: usize, nodes: Vec<usize> },
    Disconnected { node: usize },
    MissingNode { node: usize },
    NotATree,
    WidthMismatch { stated: usize, actual: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionBudget {
    pub max_time_secs: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Annealing moves spent refining the elimination order after the
    /// decomposition; 0 keeps the decomposition's order.
    pub refine_steps: usize,
}

impl Default for DecompositionBudget {
    fn default() -> Self {
        Self { max_time_secs: 120.0, max_restarts: 256, seed: 0, refine_steps: 90_000 }
    }
}

struct Elimination {
    words: usize,
    adj: Vec<Vec<u64>>,
    alive: Vec<bool>,
}

impl Elimination {
    fn new(graph: &Hypergraph) -> Self {
        let n = graph.num_nodes;
        let words = n.div_ceil(64).max(1);
        let mut adj = vec![vec![0u64; words]; n];
        for e in &graph.edges {
            for &u in e {
                for &v in e {
                    if u != v {
                        adj[u][v / 64] |= 1 << (v % 64);
                    }
                }
            }
        }
        Self { words, adj, alive: graph.active() }
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &bits) in self.adj[v].iter().enumerate() {
            let mut b = bits;
            while b != 0 {
                let t = b.trailing_zeros() as usize;
                out.push(w * 64 + t);
                b &= b - 1;
            }
        }
        out
    }

    fn fill(&self, v: usize) -> usize {
        let nv = &self.adj[v];
        let mut missing = 0usize;
        for u in self.neighbors(v) {
            let nu = &self.adj[u];
            let c: u32 = (0..self.words).map(|w| (nv[w] & !nu[w]).count_ones()).sum();
            missing += c as usize - 1;
        }
        missing / 2
    }

    fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Removes `v`, connecting its neighbors; returns the bag `{v} ∪ N(v)`.
    fn eliminate(&mut self, v: usize) -> Vec<usize> {
        let nb = self.neighbors(v);
        for &u in &nb {
            for &w in &nb {
                if u != w {
                    self.adj[u][w / 64] |= 1 << (w % 64);
                }
            }
            self.adj[u][v / 64] &= !(1 << (v % 64));
        }
        self.adj[v].iter_mut().for_each(|w| *w = 0);
        self.alive[v] = false;
        let mut bag = vec![v];
        bag.extend(nb);
        bag
    }
}

/// Greedy min-fill elimination. Ties go to lower degree, then to the lowest
/// id, or to a random choice when `rng` is given. With `loose`, any node
/// within one fill of the minimum may be picked at random.
fn min_fill_order(
    graph: &Hypergraph,
    mut rng: Option<&mut ChaCha8Rng>,
    loose: bool,
    bound: usize,
) -> Option<(Vec<usize>, Vec<Vec<usize>>)> {
    let mut el = Elimination::new(graph);
    let n = graph.num_nodes;
    let mut fill: Vec<usize> = (0..n).map(|v| if el.alive[v] { el.fill(v) } else { 0 }).collect();
    let mut order = Vec::new();
    let mut bags = Vec::new();
    let mut mark = vec![false; n];
    loop {
        let mut best: Option<(usize, usize)> = None;
        let mut ties: Vec<usize> = Vec::new();
        let min_fill = if loose { (0..n).filter(|&v| el.alive[v]).map(|v| fill[v]).min() } else { None };
        for v in 0..n {
            if !el.alive[v] {
                continue;
            }
            let key = match min_fill {
                Some(m) if fill[v] <= m + 1 => (m, 0),
                _ => (fill[v], el.degree(v)),
            };
            match best {
                None => {
                    best = Some(key);
                    ties = vec![v];
                }
                Some(b) if key < b => {
                    best = Some(key);
                    ties = vec![v];
                }
                Some(b) if key == b => ties.push(v),
                _ => {}
            }
        }
        if ties.is_empty() {
            break;
        }
        let v = match rng.as_deref_mut() {
            Some(r) => *ties.choose(r).expect("nonempty"),
            None => ties[0],
        };
        let bag = el.eliminate(v);
        if bag.len() > bound {
            return None;
        }
        // fill can only change within distance two of v
        let mut touched = Vec::new();
        for &u in &bag[1..] {
            if !mark[u] {
                mark[u] = true;
                touched.push(u);
            }
            for w in el.neighbors(u) {
                if !mark[w] {
                    mark[w] = true;
                    touched.push(w);
                }
            }
        }
        for u in touched {
            mark[u] = false;
            fill[u] = el.fill(u);
        }
        order.push(v);
        bags.push(bag);
    }
    Some((order, bags))
}

fn decomposition_from_order(order: &[usize], bags: Vec<Vec<usize>>, num_nodes: usize) -> TreeDecomposition {
    let mut pos = vec![usize::MAX; num_nodes];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let last = bags.len().saturating_sub(1);
    let parent = bags
        .iter()
        .enumerate()
        .map(|(i, bag)| {
            let p = bag[1..].iter().map(|&u| pos[u]).min();
            match p {
                Some(p) => Some(p),
                None if i == last => None,
                None => Some(last),
            }
        })
        .collect();
    let width = bags.iter().map(|b| b.len()).max().unwrap_or(0);
    TreeDecomposition { parent, bags, width }
}

/// Tree decomposition by min-fill elimination: one deterministic pass with
/// lowest-id tie-breaking, then seeded randomized restarts until the restart
/// count or the time budget runs out. Keeps the narrowest result, cheaper on
/// ties.
pub fn tree_decompose(graph: &Hypergraph, budget: &DecompositionBudget) -> Result<TreeDecomposition, TnError> {
    tree_decompose_scored(graph, budget, 0, |td| (td.width as f64, td.cost()))
}

/// Like [`tree_decompose`] but keeps the candidate with the smallest
/// `score`. Restarts give up once they exceed the narrowest width seen by
/// more than `slack`.
pub fn tree_decompose_scored(
    graph: &Hypergraph,
    budget: &DecompositionBudget,
    slack: usize,
    mut score: impl FnMut(&TreeDecomposition) -> (f64, f64),
) -> Result<TreeDecomposition, TnError> {
    if graph.num_nodes == 0 || graph.edges.iter().all(|e| e.is_empty()) {
        return Err(TnError::EmptyGraph);
    }
    let start = Instant::now();
    let limit = Duration::from_secs_f64(budget.max_time_secs.max(0.0));
    let (order, bags) = min_fill_order(graph, None, false, usize::MAX).expect("unbounded");
    let mut best = decomposition_from_order(&order, bags, graph.num_nodes);
    let mut best_score = score(&best);
    let mut narrowest = best.width;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for k in 0..budget.max_restarts {
        if start.elapsed() >= limit {
            break;
        }
        let mut sub = ChaCha8Rng::seed_from_u64(rng.gen());
        if let Some((order, bags)) = min_fill_order(graph, Some(&mut sub), k % 2 == 1, narrowest + slack) {
            let td = decomposition_from_order(&order, bags, graph.num_nodes);
            narrowest = narrowest.min(td.width);
            let sc = score(&td);
            if sc < best_score {
                best = td;
                best_score = sc;
            }
        }
    }
    Ok(best)
}

/// Checks coverage of every edge and connectivity of every node's bags.
pub fn validate_decomposition(graph: &Hypergraph, td: &TreeDecomposition) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let nb = td.bags.len();
    if td.parent.len() != nb {
        return Err(vec![Violation::NotATree]);
    }
    let roots = td.parent.iter().filter(|p| p.is_none()).count();
    let mut acyclic = roots == 1;
    for start in 0..nb {
        let mut cur = start;
        let mut steps = 0;
        while let Some(p) = td.parent[cur] {
            if p >= nb || steps > nb {
                acyclic = false;
                break;
            }
            cur = p;
            steps += 1;
        }
    }
    if !acyclic {
        v.push(Violation::NotATree);
    }
    let sets: Vec<std::collections::HashSet<usize>> = td.bags.iter().map(|b| b.iter().copied().collect()).collect();
    for (i, e) in graph.edges.iter().enumerate() {
        if !sets.iter().any(|s| e.iter().all(|x| s.contains(x))) {
            v.push(Violation::UncoveredEdge { edge: i, nodes: e.clone() });
        }
    }
    let active = graph.active();
    for node in 0..graph.num_nodes {
        let holders = sets.iter().filter(|s| s.contains(&node)).count();
        if holders == 0 {
            if active[node] {
                v.push(Violation::MissingNode { node });
            }
            continue;
        }
        let links = (0..nb)
            .filter(|&i| matches!(td.parent[i], Some(p) if p < nb && sets[i].contains(&node) && sets[p].contains(&node)))
            .count();
        if links + 1 != holders {
            v.push(Violation::Disconnected { node });
        }
    }
    let actual = td.bags.iter().map(|b| b.len()).max().unwrap_or(0);
    if actual != td.width {
        v.push(Violation::WidthMismatch { stated: td.width, actual });
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
