use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zzsim::channel::{gate_unitary, GateKind};
use zzsim::circuit::{BitSpec, Boundary, ChannelCircuit, CircuitOp, Terminal};
use zzsim::noise::default_parameters;
use zzsim::oracle::random_circuit;
use zzsim::tn::*;

fn budget() -> DecompositionBudget {
    DecompositionBudget { max_time_secs: 5.0, max_restarts: 8, seed: 0, refine_steps: 500 }
}

fn random_tensor(rng: &mut impl Rng, indices: Vec<usize>) -> Tensor<f64> {
    let data = (0..1usize << indices.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    Tensor::new(indices, data).unwrap()
}

/// Σ over `sum` of a·b, by enumeration, in the index order `out`.
fn brute_pair(a: &Tensor<f64>, b: &Tensor<f64>, sum: &[usize], out: &[usize]) -> Vec<Complex64> {
    let mut all: Vec<usize> = a.indices.iter().chain(&b.indices).copied().collect();
    all.sort_unstable();
    all.dedup();
    let mut res = vec![Complex64::new(0.0, 0.0); 1 << out.len()];
    for x in 0..1usize << all.len() {
        let val = |i: usize| x >> all.iter().position(|&k| k == i).unwrap() & 1;
        let ab: Vec<usize> = a.indices.iter().map(|&i| val(i)).collect();
        let bb: Vec<usize> = b.indices.iter().map(|&i| val(i)).collect();
        let pos = out.iter().fold(0, |acc, &i| acc << 1 | val(i));
        res[pos] += a.at(&ab) * b.at(&bb);
    }
    assert!(sum.iter().all(|s| !out.contains(s)));
    res
}

#[test]
fn pair_contraction_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..60 {
        let universe: Vec<usize> = (0..14).collect();
        let ra = rng.gen_range(0..8);
        let rb = rng.gen_range(0..8);
        let mut pick = universe.clone();
        pick.shuffle(&mut rng);
        let a_idx: Vec<usize> = pick[..ra].to_vec();
        pick.shuffle(&mut rng);
        let b_idx: Vec<usize> = pick[..rb].to_vec();
        let shared: Vec<usize> = a_idx.iter().copied().filter(|i| b_idx.contains(i)).collect();
        let sum: Vec<usize> = shared.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        let a = random_tensor(&mut rng, a_idx);
        let b = random_tensor(&mut rng, b_idx);
        let c = contract_pair(&a, &b, &sum);
        let expect = brute_pair(&a, &b, &sum, &c.indices);
        let diff = c.data.iter().zip(&expect).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "trial {trial}: {diff}");
    }
}

#[test]
fn pair_contraction_large_uses_same_answer() {
    // big enough for the matrix-multiply kernel, both small and large inner sizes
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (ra, rb, nsum) in [(12, 10, 2), (13, 12, 5), (11, 11, 6)] {
        let a_idx: Vec<usize> = (0..ra).collect();
        let mut b_idx: Vec<usize> = (0..nsum).collect();
        b_idx.extend(100..100 + rb - nsum);
        b_idx.shuffle(&mut rng);
        let a = random_tensor(&mut rng, a_idx);
        let b = random_tensor(&mut rng, b_idx);
        let sum: Vec<usize> = (0..nsum).collect();
        let c = contract_pair(&a, &b, &sum);
        // reference: slice-and-sum on the shared indices
        let mut reference: Option<Tensor<f64>> = None;
        for x in 0..1usize << nsum {
            let (mut sa, mut sb) = (a.clone(), b.clone());
            for (k, &i) in sum.iter().enumerate() {
                sa = sa.slice(i, x >> k & 1);
                sb = sb.slice(i, x >> k & 1);
            }
            let p = contract_pair(&sa, &sb, &[]).permuted(&c.indices).unwrap();
            reference = Some(match reference {
                None => p,
                Some(r) => Tensor::new(r.indices.clone(), r.data.iter().zip(&p.data).map(|(u, v)| u + v).collect()).unwrap(),
            });
        }
        assert!(c.max_abs_diff(&reference.unwrap()) < 1e-10);
    }
}

fn one_qubit(ops: Vec<CircuitOp<f64>>, bits: Vec<BitSpec>, out: Terminal<f64>) -> ChannelCircuit<f64> {
    ChannelCircuit { num_qubits: 1, inputs: vec![Boundary::Zero(0)], ops, outputs: vec![out], bits }
}

fn contract_all(c: &ChannelCircuit<f64>) -> Tensor<f64> {
    let net = network_from_circuit(c).unwrap();
    let (plan, _) = plan_network(&net, &budget()).unwrap();
    contract(&net, &plan).unwrap()
}

#[test]
fn idle_then_trace_is_one() {
    let p = default_parameters();
    let c = one_qubit(vec![CircuitOp::Channel { qubits: vec![0], choi: p.idle(500.0).unwrap() }], vec![], Terminal::Trace(0));
    let net = network_from_circuit(&c).unwrap();
    // a closed network has nothing to plan; contract it directly
    let t = contract(&net, &ContractionPlan { order: net.closed_indices(), width: 1, estimated_cost: 0.0 }).unwrap();
    assert_eq!(t.rank(), 0);
    assert!((t.data[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn measuring_zero_gives_bit_zero() {
    let c = one_qubit(
        vec![CircuitOp::Measure { qubit: 0, bit: 0, eps: 0.0 }],
        vec![BitSpec { label: "m".into(), open: true }],
        Terminal::Trace(0),
    );
    let t = contract_all(&c);
    assert!((t.data[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(t.data[1].norm() < 1e-15);
}

#[test]
fn ghz_readout() {
    let h = gate_unitary::<f64>(GateKind::Hadamard);
    let cz = gate_unitary::<f64>(GateKind::Cz);
    let mut ops = vec![CircuitOp::Unitary { qubits: vec![0], matrix: h.clone() }];
    for t in 1..3 {
        ops.push(CircuitOp::Unitary { qubits: vec![t], matrix: h.clone() });
        ops.push(CircuitOp::Unitary { qubits: vec![0, t], matrix: cz.clone() });
        ops.push(CircuitOp::Unitary { qubits: vec![t], matrix: h.clone() });
    }
    for q in 0..3 {
        ops.push(CircuitOp::Measure { qubit: q, bit: q, eps: 0.0 });
    }
    let c = ChannelCircuit {
        num_qubits: 3,
        inputs: (0..3).map(Boundary::Zero).collect(),
        ops,
        outputs: (0..3).map(Terminal::Trace).collect(),
        bits: (0..3).map(|b| BitSpec { label: format!("m{b}"), open: true }).collect(),
    };
    let t = contract_all(&c);
    for (x, v) in t.data.iter().enumerate() {
        let expect = if x == 0 || x == 7 { 0.5 } else { 0.0 };
        assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-14, "outcome {x:03b}: {v}");
    }
}

#[test]
fn result_independent_of_elimination_order() {
    let circ = random_circuit::<f64>(7, 6);
    let net = network_from_circuit(&circ).unwrap();
    let (plan, _) = plan_network(&net, &budget()).unwrap();
    let reference = contract(&net, &plan).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let mut order = net.closed_indices();
        order.shuffle(&mut rng);
        let t = contract(&net, &ContractionPlan { order, width: 0, estimated_cost: 0.0 }).unwrap();
        assert!(t.max_abs_diff(&reference) < 1e-12);
    }
}

#[test]
fn split_contraction_matches_unsplit() {
    for seed in [3u64, 11, 21] {
        let circ = random_circuit::<f64>(seed, 8);
        let net = network_from_circuit(&circ).unwrap();
        let (plan, _) = plan_network(&net, &budget()).unwrap();
        let reference = contract(&net, &plan).unwrap();
        let mut candidates: Vec<usize> = net.closed_indices();
        candidates.extend(&net.open);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 1..=5 {
            candidates.shuffle(&mut rng);
            let split = SplitPlan { split_edges: candidates[..k.min(candidates.len())].to_vec() };
            for workers in [1, 3] {
                let t = split_and_contract(&net, &plan, &split, workers, 64).unwrap();
                assert!(t.max_abs_diff(&reference) < 1e-12, "seed {seed}, {k} splits");
            }
        }
        let chosen = choose_split(&net, &plan, plan.width.saturating_sub(2), 5);
        let t = split_and_contract(&net, &plan, &chosen, 2, 64).unwrap();
        assert!(t.max_abs_diff(&reference) < 1e-12);
    }
}

#[test]
fn fixing_a_closed_index_splits_the_sum() {
    let circ = random_circuit::<f64>(5, 5);
    let net = network_from_circuit(&circ).unwrap();
    let (plan, _) = plan_network(&net, &budget()).unwrap();
    let full = contract(&net, &plan).unwrap();
    let e = plan.order[0];
    let parts: Vec<Tensor<f64>> = (0..2)
        .map(|v| {
            let sub = net.fix_index(e, v).unwrap();
            let order = plan.order.iter().copied().filter(|&i| i != e).collect();
            contract(&sub, &ContractionPlan { order, width: 0, estimated_cost: 0.0 }).unwrap()
        })
        .collect();
    for (k, v) in full.data.iter().enumerate() {
        assert!((v - parts[0].data[k] - parts[1].data[k]).norm() < 1e-12);
    }
    assert!(matches!(net.fix_index(net.num_indices + 3, 0), Err(TnError::UnknownIndex(_))));
}

#[test]
fn too_wide_split_is_refused() {
    let circ = random_circuit::<f64>(21, 8);
    let net = network_from_circuit(&circ).unwrap();
    let (plan, _) = plan_network(&net, &budget()).unwrap();
    let r = split_and_contract(&net, &plan, &SplitPlan::none(), 1, 1);
    assert!(matches!(r, Err(TnError::TooWide { .. })));
}

#[test]
fn decomposition_validation() {
    // path 0-1-2-3: width 2
    let path = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
    let td = tree_decompose(&path, &budget()).unwrap();
    assert_eq!(td.width, 2);
    assert!(validate_decomposition(&path, &td).is_ok());
    // K5: one bag of all five
    let k5 = Hypergraph::new(5, (0..5).flat_map(|a| (a + 1..5).map(move |b| vec![a, b])).collect());
    let td = tree_decompose(&k5, &budget()).unwrap();
    assert_eq!(td.width, 5);
    assert!(validate_decomposition(&k5, &td).is_ok());
    // dropping a node from its only bag is reported
    let mut bad = tree_decompose(&path, &budget()).unwrap();
    let b = bad.bags.iter().position(|b| b.contains(&0)).unwrap();
    bad.bags[b].retain(|&v| v != 0);
    let errs = validate_decomposition(&path, &bad).unwrap_err();
    assert!(errs.iter().any(|e| matches!(e, Violation::UncoveredEdge { .. })));
    assert!(errs.iter().any(|e| matches!(e, Violation::MissingNode { node: 0 })));
    assert!(tree_decompose(&Hypergraph::new(0, vec![]), &budget()).is_err());
}

#[test]
fn planning_is_deterministic() {
    let circ = random_circuit::<f64>(9, 8);
    let net = network_from_circuit(&circ).unwrap();
    let b = DecompositionBudget { max_time_secs: 1e6, ..budget() };
    let (p1, t1) = plan_network(&net, &b).unwrap();
    let (p2, t2) = plan_network(&net, &b).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(t1, t2);
    assert!(validate_decomposition(&line_graph(&net).with_edge(&net.open), &t1).is_ok());
    let r = replay(&net.shape().0, &net.open, &p1.order, net.num_indices);
    assert!(r.max_rank <= p1.width);
}

#[test]
fn plan_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = PlanCache::new(dir.path());
    let circ = random_circuit::<f64>(4, 6);
    let net = network_from_circuit(&circ).unwrap();
    let (p1, hit1) = plan_cached(&net, &budget(), Some(&cache)).unwrap();
    let (p2, hit2) = plan_cached(&net, &budget(), Some(&cache)).unwrap();
    assert!(!hit1 && hit2);
    assert_eq!(p1, p2);
    // a different budget is a different key
    let other = DecompositionBudget { seed: 9, ..budget() };
    assert!(!plan_cached(&net, &other, Some(&cache)).unwrap().1);
}

#[test]
fn structural_hash_ignores_values() {
    let mut a = random_circuit::<f64>(12, 5);
    let net_a = network_from_circuit(&a).unwrap();
    if let Some(CircuitOp::Channel { choi, .. }) = a.ops.iter_mut().find(|o| matches!(o, CircuitOp::Channel { .. })) {
        *choi = choi.scale(0.5);
    }
    let net_b = network_from_circuit(&a).unwrap();
    assert_eq!(net_a.structural_hash(), net_b.structural_hash());
    assert!(net_a.dump().starts_with("# tensors"));
}
