use zzsim::channel::{amplitude_damping, gate_unitary, idle_channel, ChoiMatrix, ComplexMatrix, GateKind};
use zzsim::circuit::{BitSpec, Boundary, ChannelCircuit, CircuitOp, Terminal};
use zzsim::noise::{default_parameters, noisy_gate};
use zzsim::oracle::{branch_tensor, channel_tomography, random_circuit, simulate_density, DensityMatrix, OracleError};
use zzsim::scalar::c;
use zzsim::tn::{contract, network_from_circuit, plan_network, DecompositionBudget};

fn small_budget() -> DecompositionBudget {
    DecompositionBudget { max_time_secs: 5.0, max_restarts: 8, seed: 0, refine_steps: 500 }
}

fn bare(n: usize, ops: Vec<CircuitOp<f64>>, bits: usize) -> ChannelCircuit<f64> {
    ChannelCircuit {
        num_qubits: n,
        inputs: (0..n).map(Boundary::Zero).collect(),
        ops,
        outputs: (0..n).map(Terminal::Trace).collect(),
        bits: (0..bits).map(|b| BitSpec { label: format!("b{b}"), open: true }).collect(),
    }
}

#[test]
fn random_circuits_match_tensor_network() {
    for seed in 0..12 {
        let circ = random_circuit::<f64>(seed, 6);
        let net = network_from_circuit(&circ).unwrap();
        let (plan, _) = plan_network(&net, &small_budget()).unwrap();
        let tn = contract(&net, &plan).unwrap();
        let dense = branch_tensor(&circ).unwrap();
        assert_eq!(tn.data.len(), dense.data.len(), "seed {seed}");
        let diff = tn.max_abs_diff(&dense);
        assert!(diff < 1e-10, "seed {seed}: max-abs {diff:.3e}");
    }
}

#[test]
fn stabilizer_eigenstate_gives_one_branch() {
    // ZZ parity of |00⟩ read through an ancilla
    let ops = vec![
        CircuitOp::Unitary { qubits: vec![2], matrix: gate_unitary(GateKind::RyPlus) },
        CircuitOp::Unitary { qubits: vec![2, 0], matrix: gate_unitary(GateKind::Cz) },
        CircuitOp::Unitary { qubits: vec![2, 1], matrix: gate_unitary(GateKind::Cz) },
        CircuitOp::Unitary { qubits: vec![2], matrix: gate_unitary(GateKind::RyMinus) },
        CircuitOp::Measure { qubit: 2, bit: 0, eps: 0.0 },
    ];
    let circ = bare(3, ops, 1);
    let branches = simulate_density(&circ, &DensityMatrix::zero_state(3), true).unwrap();
    let live: Vec<_> = branches.iter().filter(|b| b.probability > 1e-14).collect();
    assert_eq!(live.len(), 1);
    assert!((live[0].probability - 1.0).abs() < 1e-12);
    assert_eq!(live[0].bits, vec![0]);
}

#[test]
fn half_life_damping() {
    let p = default_parameters();
    let t = p.t1 * std::f64::consts::LN_2;
    let circ = bare(1, vec![CircuitOp::Channel { qubits: vec![0], choi: idle_channel(t, p.t1, f64::INFINITY).unwrap() }], 0);
    let mut one = ComplexMatrix::zeros(2, 2);
    one[(1, 1)] = c(1.0, 0.0);
    let rho = DensityMatrix::new(1, one, 1e-12).unwrap();
    let out = simulate_density(&circ, &rho, false).unwrap();
    let m = &out[0].state;
    assert!((m[(0, 0)].re - 0.5).abs() < 1e-12 && (m[(1, 1)].re - 0.5).abs() < 1e-12);
}

#[test]
fn branch_probabilities_sum_to_one() {
    for seed in 100..110 {
        let mut circ = random_circuit::<f64>(seed, 5);
        circ.inputs = (0..circ.num_qubits).map(Boundary::Zero).collect();
        let branches = simulate_density(&circ, &DensityMatrix::zero_state(circ.num_qubits), true).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-10, "seed {seed}: {total}");
        assert_eq!(branches.len(), 1 << circ.bits.len());
    }
}

#[test]
fn too_many_qubits_rejected() {
    let circ = bare(11, vec![], 0);
    assert!(matches!(simulate_density(&circ, &DensityMatrix::zero_state(10), false), Err(OracleError::TooManyQubits(11))));
    assert!(matches!(DensityMatrix::<f64>::new(2, ComplexMatrix::identity(4), 1e-12), Err(OracleError::InvalidState(_))));
}

#[test]
fn tomography_reproduces_building_blocks() {
    let p = default_parameters();
    let circ = bare(2, vec![], 0);
    assert!(channel_tomography(&circ, &[0, 1]).unwrap().max_abs_diff(&ChoiMatrix::identity(2)) < 1e-15);

    let idle = idle_channel::<f64>(250.0, p.t1, p.t_phi).unwrap();
    let circ = bare(1, vec![CircuitOp::Channel { qubits: vec![0], choi: idle.clone() }], 0);
    assert!(channel_tomography(&circ, &[0]).unwrap().max_abs_diff(&idle) < 1e-12);

    // noisy RY on qubit 1 with a spectator that is damped and measured
    let ry = noisy_gate::<f64>(GateKind::RyPlus, p.t_g1q, &p).unwrap();
    let ops = vec![
        CircuitOp::Channel { qubits: vec![1], choi: ry.clone() },
        CircuitOp::Channel { qubits: vec![0], choi: amplitude_damping(0.3).unwrap() },
        CircuitOp::Measure { qubit: 0, bit: 0, eps: 0.01 },
    ];
    let circ = bare(2, ops, 1);
    assert!(channel_tomography(&circ, &[1]).unwrap().max_abs_diff(&ry) < 1e-12);
}
