use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{line_graph, tree_decompose_scored, validate_decomposition, DecompositionBudget, TreeDecomposition};
use super::tensor::{contract_pair, pool, Tensor};
use super::{TensorNetwork, TnError};
use crate::scalar::{Real, C};

/// Elimination order of the closed indices plus the width it was planned for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionPlan {
    pub order: Vec<usize>,
    pub width: usize,
    pub estimated_cost: f64,
}

/// Indices fixed to every value combination; open ones are stacked into
/// the output, closed ones summed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub split_edges: Vec<usize>,
}

impl SplitPlan {
    pub fn none() -> Self {
        Self { split_edges: Vec::new() }
    }

    pub fn subtask_count(&self) -> usize {
        1 << self.split_edges.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Sum `sum` out of slot `a`.
    Reduce { a: usize, sum: Vec<usize>, out: usize },
    /// Multiply slots `a` and `b`, summing `sum`.
    Contract { a: usize, b: usize, sum: Vec<usize>, out: usize },
}

/// Symbolic execution of a plan on a network shape.
#[derive(Clone, Debug)]
pub struct Replay {
    pub steps: Vec<Step>,
    /// Largest rank of any input or intermediate tensor.
    pub max_rank: usize,
    /// Multiply-add count: Σ 2^|indices touched| over steps.
    pub cost: f64,
    /// Slot holding the result and its index set.
    pub result: usize,
    pub result_indices: Vec<usize>,
    /// Index lists of the intermediates, in step order.
    pub intermediates: Vec<Vec<usize>>,
}

/// Bucket elimination along `order`. Closed indices are summed as soon as
/// no other live tensor carries them.
pub fn replay(shape: &[Vec<usize>], open: &[usize], order: &[usize], num_indices: usize) -> Replay {
    let mut slots: Vec<Option<Vec<usize>>> = shape.iter().map(|s| Some(s.clone())).collect();
    let mut count = vec![0usize; num_indices];
    for s in shape {
        for &i in s {
            count[i] += 1;
        }
    }
    let is_open = {
        let mut v = vec![false; num_indices];
        for &o in open {
            v[o] = true;
        }
        v
    };
    let mut steps = Vec::new();
    let mut max_rank = shape.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut cost = 0.0;
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); num_indices];
    for (t, s) in shape.iter().enumerate() {
        for &i in s {
            holders[i].push(t);
        }
    }

    fn push_slot(
        slots: &mut Vec<Option<Vec<usize>>>,
        holders: &mut [Vec<usize>],
        idx: Vec<usize>,
        work: f64,
        max_rank: &mut usize,
        cost: &mut f64,
    ) -> usize {
        let id = slots.len();
        for &i in &idx {
            holders[i].push(id);
        }
        *max_rank = (*max_rank).max(idx.len());
        *cost += work;
        slots.push(Some(idx));
        id
    }

    // sum indices private to a single tensor right away
    for t in 0..shape.len() {
        let idx = slots[t].clone().unwrap();
        let sum: Vec<usize> = idx.iter().copied().filter(|&i| !is_open[i] && count[i] == 1).collect();
        if !sum.is_empty() {
            let keep: Vec<usize> = idx.iter().copied().filter(|i| !sum.contains(i)).collect();
            for &i in &sum {
                count[i] -= 1;
            }
            slots[t] = None;
            let out = push_slot(&mut slots, &mut holders, keep, 2f64.powi(idx.len() as i32), &mut max_rank, &mut cost);
            steps.push(Step::Reduce { a: t, sum, out });
        }
    }

    let live_with = |slots: &Vec<Option<Vec<usize>>>, holders: &[Vec<usize>], e: usize| -> Vec<usize> {
        holders[e].iter().copied().filter(|&s| slots[s].as_ref().is_some_and(|x| x.contains(&e))).collect()
    };

    let union = |a: &[usize], b: &[usize]| -> Vec<usize> {
        let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
        let mut u = big.to_vec();
        u.extend(small.iter().copied().filter(|i| !big.contains(i)));
        u
    };

    let contract_group = |group: Vec<usize>,
                              slots: &mut Vec<Option<Vec<usize>>>,
                              holders: &mut Vec<Vec<usize>>,
                              count: &mut Vec<usize>,
                              steps: &mut Vec<Step>,
                              max_rank: &mut usize,
                              cost: &mut f64|
     -> usize {
        let mut group = group;
        while group.len() > 1 {
            let mut best = (usize::MAX, 0, 1);
            for x in 0..group.len() {
                for y in x + 1..group.len() {
                    let u = union(slots[group[x]].as_ref().unwrap(), slots[group[y]].as_ref().unwrap()).len();
                    if u < best.0 {
                        best = (u, x, y);
                    }
                }
            }
            let (a, b) = (group[best.1], group[best.2]);
            let ia = slots[a].take().unwrap();
            let ib = slots[b].take().unwrap();
            let u = union(&ia, &ib);
            let sum: Vec<usize> = u
                .iter()
                .copied()
                .filter(|&i| {
                    let here = ia.contains(&i) as usize + ib.contains(&i) as usize;
                    !is_open[i] && count[i] == here
                })
                .collect();
            for &i in &ia {
                count[i] -= 1;
            }
            for &i in &ib {
                count[i] -= 1;
            }
            let (big, small) = if ia.len() >= ib.len() { (&ia, &ib) } else { (&ib, &ia) };
            let mut keep: Vec<usize> = big.iter().copied().filter(|i| !sum.contains(i)).collect();
            keep.extend(small.iter().copied().filter(|i| !sum.contains(i) && !big.contains(i)));
            for &i in &keep {
                count[i] += 1;
            }
            let out = push_slot(slots, holders, keep, 2f64.powi(u.len() as i32), max_rank, cost);
            steps.push(Step::Contract { a, b, sum, out });
            group.remove(best.2);
            group.remove(best.1);
            group.push(out);
        }
        group[0]
    };

    for &e in order {
        let bucket = live_with(&slots, &holders, e);
        if bucket.is_empty() {
            continue;
        }
        let last = contract_group(bucket, &mut slots, &mut holders, &mut count, &mut steps, &mut max_rank, &mut cost);
        let idx = slots[last].clone().unwrap();
        let sum: Vec<usize> = idx.iter().copied().filter(|&i| !is_open[i] && count[i] == 1).collect();
        if !sum.is_empty() {
            for &i in &sum {
                count[i] -= 1;
            }
            let keep: Vec<usize> = idx.iter().copied().filter(|i| !sum.contains(i)).collect();
            slots[last] = None;
            let out = push_slot(&mut slots, &mut holders, keep, 2f64.powi(idx.len() as i32), &mut max_rank, &mut cost);
            steps.push(Step::Reduce { a: last, sum, out });
        }
    }
    let rest: Vec<usize> = (0..slots.len()).filter(|&s| slots[s].is_some()).collect();
    let result = if rest.is_empty() {
        // empty network: value 1
        push_slot(&mut slots, &mut holders, Vec::new(), 1.0, &mut max_rank, &mut cost)
    } else {
        contract_group(rest, &mut slots, &mut holders, &mut count, &mut steps, &mut max_rank, &mut cost)
    };
    let result_indices = slots[result].clone().unwrap();
    let intermediates = slot_indices(shape, &steps).split_off(shape.len());
    Replay { steps, max_rank, cost, result, result_indices, intermediates }
}

/// Index list of every slot after running `steps` symbolically.
fn slot_indices(shape: &[Vec<usize>], steps: &[Step]) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = shape.to_vec();
    for st in steps {
        let (out, idx) = match st {
            Step::Reduce { a, sum, out } => (*out, all[*a].iter().copied().filter(|i| !sum.contains(i)).collect()),
            Step::Contract { a, b, sum, out } => {
                let (ia, ib) = (&all[*a], &all[*b]);
                let (big, small) = if ia.len() >= ib.len() { (ia, ib) } else { (ib, ia) };
                let mut k: Vec<usize> = big.iter().copied().filter(|i| !sum.contains(i)).collect();
                k.extend(small.iter().copied().filter(|i| !sum.contains(i) && !big.contains(i)));
                (*out, k)
            }
        };
        if all.len() <= out {
            all.resize(out + 1, Vec::new());
        }
        all[out] = idx;
    }
    all
}

/// Root at a bag holding every open index, then strip leaves; each removed
/// leaf contributes the indices it does not share with its parent.
pub fn plan_from_decomposition(td: &TreeDecomposition, open: &[usize]) -> Result<ContractionPlan, TnError> {
    let nb = td.bags.len();
    let root = (0..nb).find(|&b| open.iter().all(|o| td.bags[b].contains(o))).ok_or(TnError::OpenNotCovered)?;
    let mut adj = vec![Vec::new(); nb];
    for (c, p) in td.parent.iter().enumerate() {
        if let Some(p) = *p {
            adj[c].push(p);
            adj[p].push(c);
        }
    }
    let mut parent = vec![usize::MAX; nb];
    let mut seen = vec![false; nb];
    let mut bfs = vec![root];
    seen[root] = true;
    let mut k = 0;
    while k < bfs.len() {
        let u = bfs[k];
        k += 1;
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = u;
                bfs.push(w);
            }
        }
    }
    let mut order = Vec::new();
    let mut placed = std::collections::HashSet::new();
    for &b in bfs.iter().rev() {
        let up: &[usize] = if b == root { &[] } else { &td.bags[parent[b]] };
        for &i in &td.bags[b] {
            if !open.contains(&i) && !up.contains(&i) && placed.insert(i) {
                order.push(i);
            }
        }
    }
    Ok(ContractionPlan { order, width: td.width, estimated_cost: td.cost() })
}

/// Line graph, virtual tensor on the open legs, decomposition, plan.
/// Candidate decompositions are ranked by the replayed contraction cost;
/// the winner's order is then refined by annealing.
pub fn plan_network<R: Real>(network: &TensorNetwork<R>, budget: &DecompositionBudget) -> Result<(ContractionPlan, TreeDecomposition), TnError> {
    let start = Instant::now();
    let g = line_graph(network).with_edge(&network.open);
    let shape = network.shape().0;
    let td = tree_decompose_scored(&g, budget, 2, |td| match plan_from_decomposition(td, &network.open) {
        Ok(p) => {
            let r = replay(&shape, &network.open, &p.order, network.num_indices);
            (r.cost, r.max_rank as f64)
        }
        Err(_) => (f64::INFINITY, f64::INFINITY),
    })?;
    validate_decomposition(&g, &td).map_err(|v| TnError::Mismatch(format!("invalid decomposition: {v:?}")))?;
    let mut plan = plan_from_decomposition(&td, &network.open)?;
    let deadline = start + Duration::from_secs_f64(budget.max_time_secs.max(0.0));
    plan.order = refine_order(&shape, &network.open, &plan.order, network.num_indices, None, budget.refine_steps, budget.seed, deadline);
    let r = replay(&shape, &network.open, &plan.order, network.num_indices);
    plan.width = plan.width.min(r.max_rank);
    assert!(r.max_rank <= plan.width, "replay rank {} exceeds width {}", r.max_rank, plan.width);
    plan.estimated_cost = r.cost;
    Ok((plan, td))
}

/// Simulated annealing over an elimination order, scored by the log of the
/// replayed multiply-add count plus 2 per rank above `width_cap`. A move
/// shifts one index by up to 30% of the order length. Three chains share
/// `steps`; the best order seen wins.
#[allow(clippy::too_many_arguments)]
pub fn refine_order(
    shape: &[Vec<usize>],
    open: &[usize],
    order: &[usize],
    num_indices: usize,
    width_cap: Option<usize>,
    steps: usize,
    seed: u64,
    deadline: Instant,
) -> Vec<usize> {
    const CHAINS: usize = 3;
    const T_HI: f64 = 0.1;
    let n = order.len();
    let score = |o: &[usize]| {
        let r = replay(shape, open, o, num_indices);
        let over = width_cap.map_or(0, |c| r.max_rank.saturating_sub(c));
        r.cost.log2() + 2.0 * over as f64
    };
    let start = score(order);
    let mut best = (start, order.to_vec());
    if n < 2 || steps == 0 {
        return best.1;
    }
    let per_chain = steps.div_ceil(CHAINS);
    let window = (n * 3 / 10).max(1) as i64;
    for chain in 0..CHAINS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(chain as u64 + 1)));
        let mut cur = order.to_vec();
        let mut cs = start;
        for step in 0..per_chain {
            if step % 256 == 0 && Instant::now() >= deadline {
                break;
            }
            let temp = T_HI * (1.0 - step as f64 / per_chain as f64) + 0.005;
            let i = rng.gen_range(0..n);
            let j = (i as i64 + rng.gen_range(-window..=window)).clamp(0, n as i64 - 1) as usize;
            if i == j {
                continue;
            }
            let x = cur.remove(i);
            cur.insert(j, x);
            let s = score(&cur);
            if s <= cs || rng.gen::<f64>() < ((cs - s) / temp).exp() {
                cs = s;
                if cs < best.0 {
                    best = (cs, cur.clone());
                }
            } else {
                let x = cur.remove(j);
                cur.insert(i, x);
            }
        }
    }
    best.1
}

fn check_plan<R: Real>(network: &TensorNetwork<R>, plan: &ContractionPlan) -> Result<(), TnError> {
    let mut closed = network.closed_indices();
    let mut order: Vec<usize> = plan.order.iter().copied().filter(|i| closed.binary_search(i).is_ok()).collect();
    if order.len() != plan.order.iter().filter(|i| !network.open.contains(i)).count() {
        // plan names indices the network does not have; allowed only for
        // indices fixed away
        let h = network.hyperedges();
        if let Some(&i) = plan.order.iter().find(|&&i| i >= network.num_indices || (!h[i].is_empty() && network.open.contains(&i))) {
            return Err(TnError::Mismatch(format!("index {i} is open or unknown")));
        }
    }
    order.sort_unstable();
    order.dedup();
    closed.sort_unstable();
    if order != closed {
        return Err(TnError::Mismatch(format!("plan covers {} of {} closed indices", order.len(), closed.len())));
    }
    Ok(())
}

fn execute<R: Real>(tensors: Vec<Tensor<R>>, r: &Replay, open: &[usize]) -> Tensor<R> {
    let mut slots: Vec<Option<Tensor<R>>> = tensors.into_iter().map(Some).collect();
    for step in &r.steps {
        let (out, t) = match step {
            Step::Reduce { a, sum, out } => {
                let ta = slots[*a].take().expect("live slot");
                let t = ta.sum_over(sum);
                pool::recycle(ta.data);
                (*out, t)
            }
            Step::Contract { a, b, sum, out } => {
                let ta = slots[*a].take().expect("live slot");
                let tb = slots[*b].take().expect("live slot");
                let t = contract_pair(&ta, &tb, sum);
                pool::recycle(ta.data);
                pool::recycle(tb.data);
                (*out, t)
            }
        };
        if slots.len() <= out {
            slots.resize_with(out + 1, || None);
        }
        slots[out] = Some(t);
    }
    if slots.len() <= r.result {
        slots.resize_with(r.result + 1, || None);
    }
    let res = slots[r.result].take().unwrap_or_else(|| Tensor::scalar(C::new(R::one(), R::zero())));
    res.permuted(open).expect("result carries exactly the open indices")
}

/// Contracts the network along `plan`; the result lists the open indices
/// in `network.open` order.
pub fn contract<R: Real>(network: &TensorNetwork<R>, plan: &ContractionPlan) -> Result<Tensor<R>, TnError> {
    check_plan(network, plan)?;
    let r = replay(&network.shape().0, &network.open, &plan.order, network.num_indices);
    Ok(execute(network.tensors.clone(), &r, &network.open))
}

/// Greedy split selection: repeatedly fix the index, among those carried
/// by the widest intermediates, whose removal leaves the narrowest and then
/// cheapest replay, until the subtask width is at most `max_width` or
/// `max_splits` indices are fixed.
pub fn choose_split<R: Real>(network: &TensorNetwork<R>, plan: &ContractionPlan, max_width: usize, max_splits: usize) -> SplitPlan {
    let shape = network.shape().0;
    let replay_without = |chosen: &[usize]| {
        let reduced: Vec<Vec<usize>> = shape.iter().map(|s| s.iter().copied().filter(|i| !chosen.contains(i)).collect()).collect();
        let open: Vec<usize> = network.open.iter().copied().filter(|i| !chosen.contains(i)).collect();
        let order: Vec<usize> = plan.order.iter().copied().filter(|i| !chosen.contains(i)).collect();
        replay(&reduced, &open, &order, network.num_indices)
    };
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let r = replay_without(&chosen);
        if r.max_rank <= max_width || chosen.len() >= max_splits {
            break;
        }
        let mut candidates: Vec<usize> = r.intermediates.iter().filter(|s| s.len() == r.max_rank).flatten().copied().collect();
        candidates.sort_unstable();
        candidates.dedup();
        let best = candidates
            .into_iter()
            .map(|i| {
                let mut c = chosen.clone();
                c.push(i);
                let r = replay_without(&c);
                (r.max_rank, r.cost, i)
            })
            .min_by(|x, y| x.partial_cmp(y).unwrap());
        match best {
            Some((_, _, i)) => chosen.push(i),
            None => break,
        }
    }
    SplitPlan { split_edges: chosen }
}

/// Split selection for a memory cap followed by annealing of the order of
/// the sliced network, which is what each subtask executes. Returns the
/// refined plan (split indices keep their old positions) and the split.
pub fn plan_split<R: Real>(
    network: &TensorNetwork<R>,
    plan: &ContractionPlan,
    max_width: usize,
    max_splits: usize,
    budget: &DecompositionBudget,
) -> (ContractionPlan, SplitPlan) {
    let split = choose_split(network, plan, max_width, max_splits);
    let chosen = &split.split_edges;
    let shape: Vec<Vec<usize>> = network.shape().0.iter().map(|s| s.iter().copied().filter(|i| !chosen.contains(i)).collect()).collect();
    let open: Vec<usize> = network.open.iter().copied().filter(|i| !chosen.contains(i)).collect();
    let order: Vec<usize> = plan.order.iter().copied().filter(|i| !chosen.contains(i)).collect();
    let deadline = Instant::now() + Duration::from_secs_f64(budget.max_time_secs.max(0.0));
    let refined = refine_order(&shape, &open, &order, network.num_indices, Some(max_width), budget.refine_steps, budget.seed, deadline);
    let r = replay(&shape, &open, &refined, network.num_indices);
    let mut it = refined.into_iter();
    let full: Vec<usize> = plan.order.iter().map(|&i| if chosen.contains(&i) { i } else { it.next().expect("same length") }).collect();
    (ContractionPlan { order: full, width: r.max_rank, estimated_cost: r.cost * split.subtask_count() as f64 }, split)
}

/// Contracts every fixed copy of the network in parallel and combines them:
/// stacked along open split indices, summed over closed ones, in subtask
/// order. Fails when a subtask would exceed `max_rank`.
pub fn split_and_contract<R: Real>(
    network: &TensorNetwork<R>,
    plan: &ContractionPlan,
    split: &SplitPlan,
    workers: usize,
    max_rank: usize,
) -> Result<Tensor<R>, TnError> {
    check_plan(network, plan)?;
    let s = split.split_edges.len();
    let mut uniq = split.split_edges.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != s {
        return Err(TnError::Mismatch("split edges repeat".into()));
    }
    let h = network.hyperedges();
    if let Some(&e) = split.split_edges.iter().find(|&&e| e >= network.num_indices || h[e].is_empty()) {
        return Err(TnError::UnknownIndex(e));
    }
    let shape: Vec<Vec<usize>> =
        network.tensors.iter().map(|t| t.indices.iter().copied().filter(|i| !split.split_edges.contains(i)).collect()).collect();
    let sub_open: Vec<usize> = network.open.iter().copied().filter(|i| !split.split_edges.contains(i)).collect();
    let order: Vec<usize> = plan.order.iter().copied().filter(|i| !split.split_edges.contains(i)).collect();
    let r = replay(&shape, &sub_open, &order, network.num_indices);
    if r.max_rank > max_rank {
        return Err(TnError::TooWide { width: r.max_rank, cap: max_rank });
    }
    let out_rank = network.open.len();
    let zero = C::new(R::zero(), R::zero());
    let mut out = vec![zero; 1 << out_rank];
    // where each sub-result entry lands in the full output
    let sub_pos: Vec<usize> = sub_open.iter().map(|i| out_rank - 1 - network.open.iter().position(|o| o == i).unwrap()).collect();
    let fixed_open: Vec<(usize, usize)> = split
        .split_edges
        .iter()
        .enumerate()
        .filter_map(|(k, e)| network.open.iter().position(|o| o == e).map(|p| (k, out_rank - 1 - p)))
        .collect();
    let run = |task: usize| -> Tensor<R> {
        let tensors = network
            .tensors
            .iter()
            .map(|t| split.split_edges.iter().enumerate().fold(t.clone(), |t, (k, &e)| t.slice(e, task >> (s - 1 - k) & 1)))
            .collect();
        execute(tensors, &r, &sub_open)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| TnError::Mismatch(e.to_string()))?;
    let tasks = 1usize << s;
    let chunk = workers.max(1);
    let nsub = sub_open.len();
    let scatter = {
        let mut target = vec![None; nsub];
        for (q, &p) in sub_pos.iter().enumerate() {
            target[nsub - 1 - q] = Some(p);
        }
        super::tensor::BitMap::new(&target)
    };
    let mut start = 0;
    while start < tasks {
        let end = (start + chunk).min(tasks);
        let results: Vec<Tensor<R>> = pool.install(|| (start..end).into_par_iter().map(run).collect());
        for (k, res) in results.into_iter().enumerate() {
            let task = start + k;
            let base = fixed_open.iter().fold(0usize, |acc, &(j, bit)| acc | (task >> (s - 1 - j) & 1) << bit);
            for (o, &v) in res.data.iter().enumerate() {
                out[base | scatter.map(o)] += v;
            }
        }
        start = end;
    }
    Ok(Tensor { indices: network.open.clone(), data: out })
}
