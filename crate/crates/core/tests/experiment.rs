use zzsim::channel::*;
use zzsim::experiment::*;
use zzsim::scalar::{c, C};

fn unitary_choi(which: usize) -> ChoiMatrix<f64> {
    ChoiMatrix::from_unitary(1, &pauli(which)).unwrap()
}

/// Open branch tensor for a list of unnormalized conditional Chois, one per
/// syndrome value.
fn branch_data(chois: &[ChoiMatrix<f64>]) -> Vec<C<f64>> {
    let mut out = vec![c(0.0, 0.0); 16 * chois.len()];
    for (s, ch) in chois.iter().enumerate() {
        for idx in 0..16 {
            let (a, b, a2, b2) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            out[s << 4 | idx] = ch.matrix()[(a * 2 + a2, b * 2 + b2)];
        }
    }
    out
}

#[test]
fn optimal_correction_examples() {
    assert_eq!(optimal_pauli_correction(&ChoiMatrix::identity(1)), LogicalPauli::I);
    for (k, p) in LogicalPauli::ALL.iter().enumerate() {
        assert_eq!(optimal_pauli_correction(&unitary_choi(k)), *p);
    }
    let mix = ChoiMatrix::identity(1).scale(0.9).add(&unitary_choi(1).scale(0.1)).unwrap();
    assert_eq!(optimal_pauli_correction(&mix), LogicalPauli::I);
    let flipped = ChoiMatrix::identity(1).scale(0.4).add(&unitary_choi(1).scale(0.6)).unwrap();
    assert_eq!(optimal_pauli_correction(&flipped), LogicalPauli::X);
    // an even mixture ties; the earlier Pauli wins
    let even = ChoiMatrix::identity(1).scale(0.5).add(&unitary_choi(3).scale(0.5)).unwrap();
    assert_eq!(optimal_pauli_correction(&even), LogicalPauli::I);
}

#[test]
fn correction_undoes_pauli() {
    for k in 0..4 {
        let ptm = PauliTransferMatrix::from_choi(&unitary_choi(k));
        let fixed = apply_correction(&ptm, LogicalPauli::ALL[k]);
        assert!(fixed.sub(&PauliTransferMatrix::identity(1)).norm_max() < 1e-14);
    }
}

#[test]
fn branch_tensor_analysis() {
    let data = branch_data(&[ChoiMatrix::identity(1).scale(0.7), unitary_choi(1).scale(0.3), unitary_choi(2).scale(0.0)]);
    let mut padded = data.clone();
    padded.extend(vec![c(0.0, 0.0); 16]);
    let (agg, triv, dec, total, skipped, recs) = analyze_branch_tensor(&padded, 2, 0b100, true);
    assert!(agg.sub(&PauliTransferMatrix::identity(1)).norm_max() < 1e-14);
    let expected = PauliTransferMatrix::identity(1).scale(0.7).add(&PauliTransferMatrix::from_choi(&unitary_choi(1)).scale(0.3));
    assert!(triv.sub(&expected).norm_max() < 1e-14);
    assert_eq!(serde_json::to_string(&dec).unwrap(), "\"IXII\"");
    assert!((total - 1.0).abs() < 1e-14);
    assert_eq!(skipped, 2);
    let recs = recs.unwrap();
    assert_eq!(recs.iter().map(|r| r.syndrome).collect::<Vec<_>>(), vec![4, 5]);
    assert!((recs[1].probability - 0.3).abs() < 1e-14);
    assert_eq!(recs[1].correction, LogicalPauli::X);
}

#[test]
fn decoder_choice_round_trip() {
    let d = DecoderChoice(vec![LogicalPauli::Z, LogicalPauli::I, LogicalPauli::Y]);
    let text = serde_json::to_string(&d).unwrap();
    assert_eq!(text, "\"ZIY\"");
    let back: DecoderChoice = serde_json::from_str(&text).unwrap();
    assert_eq!(back.0, d.0);
    assert!(serde_json::from_str::<DecoderChoice>("\"IQ\"").is_err());
}

#[test]
fn syndrome_dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    let recs = vec![
        SyndromeRecord { syndrome: 3, probability: 0.25, correction: LogicalPauli::Y, ptm: PauliTransferMatrix::from_choi(&unitary_choi(2)) },
        SyndromeRecord { syndrome: 9, probability: 1e-7, correction: LogicalPauli::I, ptm: PauliTransferMatrix::identity(1) },
    ];
    write_syndrome_dump(&path, &[4, 7, 11, 12], &recs).unwrap();
    let (bits, back) = read_syndrome_dump(&path).unwrap();
    assert_eq!(bits, vec![4, 7, 11, 12]);
    assert_eq!(back.len(), 2);
    for (a, b) in recs.iter().zip(&back) {
        assert_eq!((a.syndrome, a.probability, a.correction), (b.syndrome, b.probability, b.correction));
        assert_eq!(a.ptm.entries(), b.ptm.entries());
    }
    std::fs::write(&path, b"nope").unwrap();
    assert!(read_syndrome_dump(&path).is_err());
}

fn fake_report(ptm: PauliTransferMatrix<f64>) -> LogicalChannelReport {
    LogicalChannelReport {
        rates: ptm.error_rates().unwrap(),
        trivial_ptm: ptm.clone(),
        aggregated_ptm: ptm,
        probability_total: 1.0,
        skipped_syndromes: 0,
        decoder: DecoderChoice(vec![LogicalPauli::I]),
        per_syndrome: None,
        metadata: ReportMetadata {
            rounds: 1,
            kt_region: 0.0,
            syndrome_bits: 0,
            parameter_hash: "0".into(),
            runtime_secs: 0.0,
            plan: PlanSummary { width: 0, subtask_width: 0, estimated_cost: 0.0, split_edges: 0, subtasks: 1, cached: false, seconds: 0.0 },
        },
    }
}

#[test]
fn channel_comparison() {
    let a = fake_report(PauliTransferMatrix::from_choi(&phase_damping(0.01).unwrap()));
    let same = compare_channels(&a, &a);
    assert_eq!((same.norm1, same.norm_max), (0.0, 0.0));
    let b = fake_report(PauliTransferMatrix::identity(1));
    let d = compare_channels(&a, &b);
    let off = 1.0 - 0.99f64.sqrt();
    assert!((d.norm1 - 2.0 * off).abs() < 1e-15);
    assert!((d.norm_max - off).abs() < 1e-15);
    assert!(d.difference.get(1, 1) < 0.0);
}

#[test]
fn width_cap_follows_memory() {
    let e = EngineOptions::default();
    assert_eq!(e.width_cap(), 25);
    assert_eq!(EngineOptions { workers: 8, ..e.clone() }.width_cap(), 22);
    assert_eq!(EngineOptions { max_width: Some(18), ..e }.width_cap(), 18);
}
