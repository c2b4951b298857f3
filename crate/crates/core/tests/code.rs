use zzsim::channel::GateKind;
use zzsim::circuit::Pauli;
use zzsim::code::*;
use zzsim::noise::{default_parameters, NoiseParameters};

#[test]
fn layout_counts() {
    let l = surface17_layout();
    assert_eq!(l.data_qubits().len(), 9);
    assert_eq!(l.qubits.len(), 17);
    assert_eq!(l.edges.len(), 24);
    assert_eq!(l.stabilizers.iter().filter(|s| s.support.len() == 4).count(), 4);
    assert_eq!(l.stabilizers.iter().filter(|s| s.support.len() == 2).count(), 4);
}

#[test]
fn stabilizers_commute_and_logicals_anticommute() {
    let l = surface17_layout();
    let ps: Vec<DataPauli> = l.stabilizers.iter().map(|s| l.stabilizer_pauli(s)).collect();
    for a in &ps {
        for b in &ps {
            assert!(a.commutes_with(b));
        }
        assert!(a.commutes_with(&l.logical_x_pauli()));
        assert!(a.commutes_with(&l.logical_z_pauli()));
    }
    assert!(!l.logical_x_pauli().commutes_with(&l.logical_z_pauli()));
}

#[test]
fn pure_errors_flip_exactly_one_stabilizer() {
    let l = surface17_layout();
    let ps: Vec<DataPauli> = l.stabilizers.iter().map(|s| l.stabilizer_pauli(s)).collect();
    for (i, s) in l.stabilizers.iter().enumerate() {
        let (q, p) = s.pure_error;
        assert!(s.support.contains(&q));
        let expected = match s.pauli_type {
            StabilizerType::X => Pauli::Z,
            StabilizerType::Z => Pauli::X,
        };
        assert_eq!(p, expected);
        let e = l.single_pauli(q, p);
        for (j, sp) in ps.iter().enumerate() {
            assert_eq!(e.commutes_with(sp), i != j, "pure error of {i} vs stabilizer {j}");
        }
    }
}

#[test]
fn logical_states_are_stabilized() {
    let l = surface17_layout();
    let [zero, one] = l.logical_states();
    let n0: f64 = zero.iter().map(|a| a * a).sum();
    let n1: f64 = one.iter().map(|a| a * a).sum();
    assert!((n0 - 1.0).abs() < 1e-12 && (n1 - 1.0).abs() < 1e-12);
    let overlap: f64 = zero.iter().zip(&one).map(|(a, b)| a * b).sum();
    assert!(overlap.abs() < 1e-12);
    // Z-stabilizers: parity of the support must be even on every basis state
    for s in l.stabilizers.iter().filter(|s| s.pauli_type == StabilizerType::Z) {
        let m = basis_index(l.stabilizer_pauli(s).z);
        for (i, &a) in zero.iter().enumerate() {
            if a != 0.0 {
                assert_eq!((i & m).count_ones() % 2, 0);
            }
        }
    }
    // Z_L distinguishes the two
    let zl = basis_index(l.logical_z_pauli().z);
    for (i, &a) in one.iter().enumerate() {
        if a != 0.0 {
            assert_eq!((i & zl).count_ones() % 2, 1);
        }
    }
}

#[test]
fn single_round_op_counts() {
    let p = default_parameters();
    let s = syndrome_round_schedule(&p, &ScheduleOptions::default());
    s.validate().unwrap();
    let a = s.qubits.iter().position(|q| (q.x, q.y) == (1, 1)).unwrap();
    let on_a: Vec<&ScheduledOp> = s.ops.iter().filter(|o| o.qubits.contains(&a)).collect();
    let ry = on_a.iter().filter(|o| matches!(o.kind, OpKind::Gate(GateKind::RyPlus | GateKind::RyMinus))).count();
    let cz = on_a.iter().filter(|o| matches!(o.kind, OpKind::Gate(GateKind::Cz))).count();
    let m = on_a.iter().filter(|o| matches!(o.kind, OpKind::Measure { .. })).count();
    assert_eq!((ry, cz, m), (2, 4, 1));
    let cz_total = s.ops.iter().filter(|o| matches!(o.kind, OpKind::Gate(GateKind::Cz))).count();
    assert_eq!(cz_total, 24);
    for r in &s.cz_regions {
        assert!((r.end - r.start - 160.0).abs() < 1e-9);
    }
}

#[test]
fn sequential_layout_is_valid_and_longer() {
    let p = default_parameters();
    let seq = ScheduleOptions { layout: HalfLayout::Sequential, ..Default::default() };
    let a = syndrome_round_schedule(&p, &seq);
    let b = syndrome_round_schedule(&p, &ScheduleOptions::default());
    a.validate().unwrap();
    b.validate().unwrap();
    assert!(a.noisy_until > b.noisy_until);
}

#[test]
fn z_shape_dance_is_valid() {
    let p = default_parameters();
    let o = ScheduleOptions { dance: DanceOrder::ZShapeX, ..Default::default() };
    syndrome_round_schedule(&p, &o).validate().unwrap();
}

#[test]
fn damping_tiles_noisy_window() {
    let p = default_parameters();
    let m = memory_experiment_circuit(2, &p, &CrosstalkSpec::none(), &ScheduleOptions::default(), true).unwrap();
    for iv in m.schedule.damping_intervals() {
        let total: f64 = iv.iter().map(|(a, b)| b - a).sum();
        assert!((total - m.schedule.noisy_until).abs() < 1e-9);
    }
}

#[test]
fn crosstalk_insertion_counts() {
    let p = default_parameters();
    let spec = CrosstalkSpec { compensated: false, ..CrosstalkSpec::with_kt(0.03) };
    let m = memory_experiment_circuit(1, &p, &spec, &ScheduleOptions::default(), true).unwrap();
    let s = &m.schedule;
    for (ri, r) in s.cz_regions.iter().enumerate() {
        let n = s.ops.iter().filter(|o| o.region == Some(ri) && matches!(o.kind, OpKind::Crosstalk { .. })).count();
        assert_eq!(n, if r.noisy { 24 } else { 0 });
    }
    let angle = s.ops.iter().find_map(|o| if let OpKind::Crosstalk { angle } = o.kind { Some(angle) } else { None });
    assert!((angle.unwrap() + 0.12).abs() < 1e-15);
}

#[test]
fn compensation_replaces_gated_crosstalk() {
    let p = default_parameters();
    let spec = CrosstalkSpec { kt_region: 0.03, pairs: PairSelection::Gated, compensated: true, ..Default::default() };
    let m = memory_experiment_circuit(1, &p, &spec, &ScheduleOptions::default(), true).unwrap();
    let s = &m.schedule;
    assert_eq!(s.ops.iter().filter(|o| matches!(o.kind, OpKind::Crosstalk { .. })).count(), 0);
    let comp: Vec<_> = s.ops.iter().filter(|o| matches!(o.kind, OpKind::CompensatedCz { .. })).collect();
    assert_eq!(comp.len(), 24);
    assert!(s.dump().contains("cz-comp"));
}

#[test]
fn move_cphase_within_region_only() {
    let p = default_parameters();
    let spec = CrosstalkSpec { compensated: false, ..CrosstalkSpec::with_kt(0.03) };
    let m = memory_experiment_circuit(1, &p, &spec, &ScheduleOptions::default(), true).unwrap();
    let l = surface17_layout();
    let a = l.find(3, 3).unwrap();
    let d = l.find(2, 4).unwrap();
    let r = m.schedule.cz_regions[0];
    let moved = move_cphase(&m.schedule, (a, d), r.end, r.start).unwrap();
    moved.validate().unwrap();
    assert!(moved.ops.iter().any(|o| matches!(o.kind, OpKind::Crosstalk { .. }) && o.start == r.start));
    assert!(matches!(move_cphase(&m.schedule, (a, d), r.end, r.end + 1.0), Err(CodeError::OutsideRegion(_))));
    assert!(move_cphase(&m.schedule, (a, d), r.start + 3.0, r.start).is_err());
}

#[test]
fn rounds_zero_rejected_and_bits_exposed() {
    let p = default_parameters();
    assert!(memory_experiment_circuit(0, &p, &CrosstalkSpec::none(), &ScheduleOptions::default(), true).is_err());
    let all = memory_experiment_circuit(1, &p, &CrosstalkSpec::none(), &ScheduleOptions::default(), true).unwrap();
    assert_eq!(all.open_bits.len(), 16);
    let part = memory_experiment_circuit(1, &p, &CrosstalkSpec::none(), &ScheduleOptions::default(), false).unwrap();
    assert_eq!(part.open_bits.len(), 8);
}

#[test]
fn lowering_is_well_formed() {
    let p = default_parameters();
    let m = memory_experiment_circuit(1, &p, &CrosstalkSpec::with_kt(0.03), &ScheduleOptions::default(), true).unwrap();
    let c = memory_channel_circuit::<f64>(&m, &p).unwrap();
    c.validate().unwrap();
    assert_eq!(c.open_legs().len(), 16 + 4);
    let q = memory_channel_circuit::<f64>(&m, &NoiseParameters::noiseless()).unwrap();
    q.validate().unwrap();
    assert!(q.ops.iter().all(|o| !matches!(o, zzsim::circuit::CircuitOp::Channel { .. })));
}

#[test]
fn decoder_reads_every_syndrome() {
    let l = surface17_layout();
    let dec = syndrome_decoder(&l);
    let lbit = |idx: usize| idx >> (8 - dec.logical_qubit) & 1;
    for s in 0..256usize {
        let err = (0..8).filter(|j| s >> j & 1 == 1).fold(DataPauli { x: 0, z: 0 }, |e, j| {
            let (q, p) = l.stabilizers[j].pure_error;
            e.compose(&l.single_pauli(q, p))
        });
        let (i0, a0) = decode_basis(&l, &dec, err, 0);
        let (i1, a1) = decode_basis(&l, &dec, err, 1);
        assert!((a0.norm() - 1.0).abs() < 1e-12 && (a1.norm() - 1.0).abs() < 1e-12);
        for (j, &q) in dec.syndrome_qubit.iter().enumerate() {
            assert_eq!(i0 >> (8 - q) & 1, s >> j & 1, "syndrome {s:08b}, stabilizer {j}");
            assert_eq!(i1 >> (8 - q) & 1, s >> j & 1);
        }
        // the listed fix-ups undo the logical action
        let flip = dec.corrections.iter().filter(|(j, p)| *p == Pauli::X && s >> j & 1 == 1).count() % 2;
        let sign = dec.corrections.iter().filter(|(j, p)| *p == Pauli::Z && s >> j & 1 == 1).count() % 2;
        assert_eq!(lbit(i0) ^ flip, 0);
        assert_eq!(lbit(i1) ^ flip, 1);
        let ratio = a1 / a0 * if sign == 1 { -1.0 } else { 1.0 };
        assert!((ratio - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12, "syndrome {s:08b}: {ratio}");
    }
}

#[test]
fn decoder_final_round_matches_ancilla_round() {
    use rand::{Rng, SeedableRng};
    use zzsim::circuit::Boundary;
    use zzsim::tn::{contract, network_from_circuit, plan_network, DecompositionBudget};
    // the two final stages as maps on arbitrary data operators |ψ_a⟩⟨ψ_b|,
    // with the noisy round reduced to its readouts
    let p = NoiseParameters::noiseless();
    let mut m = memory_experiment_circuit(1, &p, &CrosstalkSpec::none(), &ScheduleOptions::default(), true).unwrap();
    m.schedule.ops.retain(|op| !op.noisy || matches!(op.kind, OpKind::Measure { .. }));
    let budget = DecompositionBudget { max_time_secs: 10.0, max_restarts: 16, seed: 0, refine_steps: 2000 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for _ in 0..3 {
        let mut state = || {
            let v: Vec<num_complex::Complex64> =
                (0..512).map(|_| num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let states = [state(), state()];
        let outs: Vec<_> = [FinalRound::Ancilla, FinalRound::Decoder]
            .into_iter()
            .map(|mode| {
                let mut c = memory_channel_circuit_with::<f64>(&m, &p, mode).unwrap();
                if let Boundary::Encoded { states: s, .. } = &mut c.inputs[0] {
                    *s = states.clone();
                }
                let net = network_from_circuit(&c).unwrap();
                let (plan, _) = plan_network(&net, &budget).unwrap();
                contract(&net, &plan).unwrap()
            })
            .collect();
        assert!(outs[0].max_abs_diff(&outs[1]) < 1e-12, "{}", outs[0].max_abs_diff(&outs[1]));
    }
}
