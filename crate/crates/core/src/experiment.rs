//! Logical memory experiment: contraction of the open network, per-syndrome
//! conditional channels, optimal Pauli correction and aggregation.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelError, ChoiMatrix, ComplexMatrix, ErrorRateSummary, PauliTransferMatrix};
use crate::code::{memory_channel_circuit_with, memory_experiment_circuit, CodeError, CrosstalkSpec, FinalRound, Placement, QubitId, ScheduleOptions};
use crate::noise::NoiseParameters;
use crate::scalar::C;
use crate::tn::{network_from_circuit, plan_network, plan_split, split_and_contract, ContractionPlan, DecompositionBudget, PlanCache, SplitPlan, TensorNetwork, TnError};

/// Probabilities at or below this are treated as impossible syndromes.
pub const MIN_PROBABILITY: f64 = 1e-300;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Tn(#[from] TnError),
    #[error("no split of at most {splits} indices brings width {width} under {cap}")]
    NoViableSplit { width: usize, cap: usize, splits: usize },
    #[error("bit {0} is not an exposed syndrome bit")]
    UnknownBit(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalPauli {
    I,
    X,
    Y,
    Z,
}

impl LogicalPauli {
    pub const ALL: [LogicalPauli; 4] = [LogicalPauli::I, LogicalPauli::X, LogicalPauli::Y, LogicalPauli::Z];

    /// Diagonal of the PTM of conjugation by this Pauli.
    pub fn signs(self) -> [f64; 4] {
        match self {
            LogicalPauli::I => [1.0, 1.0, 1.0, 1.0],
            LogicalPauli::X => [1.0, 1.0, -1.0, -1.0],
            LogicalPauli::Y => [1.0, -1.0, 1.0, -1.0],
            LogicalPauli::Z => [1.0, -1.0, -1.0, 1.0],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            LogicalPauli::I => 'I',
            LogicalPauli::X => 'X',
            LogicalPauli::Y => 'Y',
            LogicalPauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.symbol() == c)
    }
}

/// Correction per syndrome index, serialized as one `IXYZ` character each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderChoice(pub Vec<LogicalPauli>);

impl Serialize for DecoderChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.iter().map(|p| p.symbol()).collect::<String>())
    }
}

impl<'de> Deserialize<'de> for DecoderChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| LogicalPauli::from_symbol(c).ok_or_else(|| serde::de::Error::custom(format!("bad correction {c:?}"))))
            .collect::<Result<_, _>>()
            .map(DecoderChoice)
    }
}

fn argmax_correction(diag: [f64; 4]) -> LogicalPauli {
    let mut best = (LogicalPauli::I, f64::NEG_INFINITY);
    for p in LogicalPauli::ALL {
        let f: f64 = p.signs().iter().zip(diag).map(|(s, d)| s * d).sum();
        if f > best.1 {
            best = (p, f);
        }
    }
    best.0
}

/// Pauli whose application after `choi` maximizes the process fidelity
/// with the identity. Ties go to the earlier of I, X, Y, Z.
pub fn optimal_pauli_correction(choi: &ChoiMatrix<f64>) -> LogicalPauli {
    let r = PauliTransferMatrix::from_choi(choi);
    argmax_correction([r.get(0, 0), r.get(1, 1), r.get(2, 2), r.get(3, 3)])
}

/// Rows of `ptm` multiplied by the correction's signs.
pub fn apply_correction(ptm: &PauliTransferMatrix<f64>, p: LogicalPauli) -> PauliTransferMatrix<f64> {
    let s = p.signs();
    let e = ptm.entries().iter().enumerate().map(|(k, &x)| s[k / 4] * x).collect();
    PauliTransferMatrix::new(1, e).expect("4x4")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineOptions {
    pub workers: usize,
    /// Memory available for intermediates, shared by all workers.
    pub memory_cap_gib: f64,
    /// Subtask width cap; derived from the memory cap when absent.
    pub max_width: Option<usize>,
    pub max_splits: usize,
    pub budget: DecompositionBudget,
    /// Plan cache directory; falls back to the environment variable.
    pub plan_cache: Option<PathBuf>,
    pub final_round: FinalRound,
    pub schedule: ScheduleOptions,
    /// Expose the ideal round's bits as well as the noisy ones.
    pub expose_final: bool,
    pub per_syndrome: bool,
    /// Exposed bits fixed to a value; only the matching syndromes are
    /// computed and aggregated.
    pub syndrome_slice: Vec<(usize, u8)>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            memory_cap_gib: 2.0,
            max_width: None,
            max_splits: 16,
            budget: DecompositionBudget::default(),
            plan_cache: None,
            final_round: FinalRound::Decoder,
            schedule: ScheduleOptions::default(),
            expose_final: true,
            per_syndrome: false,
            syndrome_slice: Vec::new(),
        }
    }
}

impl EngineOptions {
    /// Widest subtask such that every worker can hold three complex
    /// tensors of that rank.
    pub fn width_cap(&self) -> usize {
        self.max_width.unwrap_or_else(|| {
            let per = self.memory_cap_gib * (1u64 << 30) as f64 / (3.0 * 16.0 * self.workers.max(1) as f64);
            per.log2().floor().max(1.0) as usize
        })
    }

    fn cache(&self) -> Option<PlanCache> {
        self.plan_cache.as_ref().map(PlanCache::new).or_else(PlanCache::from_env)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanSummary {
    pub width: usize,
    pub subtask_width: usize,
    pub estimated_cost: f64,
    pub split_edges: usize,
    pub subtasks: usize,
    pub cached: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CachedPlan {
    full_width: usize,
    plan: ContractionPlan,
    split: SplitPlan,
}

static MEMO: Mutex<Option<HashMap<String, CachedPlan>>> = Mutex::new(None);

/// Plans `network` for the engine's width cap: a full plan, then a split
/// and refined order when the full plan is too wide. Results are kept in
/// memory and in the plan cache. The subtask width may still exceed the
/// cap when `max_splits` indices are not enough.
pub fn plan_for_engine(network: &TensorNetwork<f64>, engine: &EngineOptions) -> Result<(ContractionPlan, SplitPlan, PlanSummary), ExperimentError> {
    let start = Instant::now();
    let cap = engine.width_cap();
    let key = format!("{}:cap{}:splits{}", PlanCache::key(network, &engine.budget), cap, engine.max_splits);
    let cache = engine.cache();
    let memo = MEMO.lock().expect("memo").as_ref().and_then(|m| m.get(&key).cloned());
    let (entry, cached) = match memo.or_else(|| cache.as_ref().and_then(|c| c.load::<CachedPlan>(&key))) {
        Some(e) => (e, true),
        None => {
            let (plan, _) = plan_network(network, &engine.budget)?;
            let full_width = plan.width;
            let (plan, split) = if plan.width <= cap {
                (plan, SplitPlan::none())
            } else {
                plan_split(network, &plan, cap, engine.max_splits, &engine.budget)
            };
            (CachedPlan { full_width, plan, split }, false)
        }
    };
    if !cached {
        if let Some(c) = &cache {
            c.store(&key, &entry)?;
        }
    }
    MEMO.lock().expect("memo").get_or_insert_with(HashMap::new).insert(key, entry.clone());
    let summary = PlanSummary {
        width: entry.full_width,
        subtask_width: entry.plan.width,
        estimated_cost: entry.plan.estimated_cost,
        split_edges: entry.split.split_edges.len(),
        subtasks: entry.split.subtask_count(),
        cached,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((entry.plan, entry.split, summary))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyndromeRecord {
    pub syndrome: u64,
    pub probability: f64,
    pub correction: LogicalPauli,
    /// Conditional channel, normalized, before correction.
    pub ptm: PauliTransferMatrix<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub rounds: usize,
    pub kt_region: f64,
    pub syndrome_bits: usize,
    pub parameter_hash: String,
    pub runtime_secs: f64,
    pub plan: PlanSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogicalChannelReport {
    /// Optimally corrected channel summed over syndromes.
    pub aggregated_ptm: PauliTransferMatrix<f64>,
    /// The same sum with the identity correction everywhere.
    pub trivial_ptm: PauliTransferMatrix<f64>,
    pub rates: ErrorRateSummary,
    pub probability_total: f64,
    pub skipped_syndromes: usize,
    pub decoder: DecoderChoice,
    #[serde(skip)]
    pub per_syndrome: Option<Vec<SyndromeRecord>>,
    pub metadata: ReportMetadata,
}

/// Per-syndrome analysis of an open branch tensor whose legs are `nbits`
/// syndrome bits (first bit most significant) followed by input ket,
/// input bra, output ket, output bra of the logical qubit. `base` is
/// or-ed into every syndrome index.
pub fn analyze_branch_tensor(
    data: &[C<f64>],
    nbits: usize,
    base: u64,
    keep: bool,
) -> (PauliTransferMatrix<f64>, PauliTransferMatrix<f64>, DecoderChoice, f64, usize, Option<Vec<SyndromeRecord>>) {
    assert_eq!(data.len(), 16 << nbits);
    let mut agg = [0.0; 16];
    let mut triv = [0.0; 16];
    let mut choice = Vec::with_capacity(1 << nbits);
    let mut total = 0.0;
    let mut skipped = 0;
    let mut records = keep.then(Vec::new);
    for s in 0..1usize << nbits {
        let t = &data[s << 4..(s + 1) << 4];
        // T[a,b,a',b'] = C[(a,a'),(b,b')]
        let m = ComplexMatrix::from_fn(4, 4, |r, c| t[(r >> 1) << 3 | (c >> 1) << 2 | (r & 1) << 1 | (c & 1)]);
        let p = 0.5 * (0..4).map(|i| m[(i, i)].re).sum::<f64>();
        total += p;
        let r = PauliTransferMatrix::from_choi(&ChoiMatrix::new(1, m).expect("4x4"));
        for (k, &x) in r.entries().iter().enumerate() {
            triv[k] += x;
        }
        if p <= MIN_PROBABILITY {
            skipped += 1;
            choice.push(LogicalPauli::I);
            continue;
        }
        let diag = [r.get(0, 0) / p, r.get(1, 1) / p, r.get(2, 2) / p, r.get(3, 3) / p];
        let corr = argmax_correction(diag);
        let signs = corr.signs();
        for (k, &x) in r.entries().iter().enumerate() {
            agg[k] += signs[k / 4] * x;
        }
        choice.push(corr);
        if let Some(rec) = records.as_mut() {
            rec.push(SyndromeRecord { syndrome: base | s as u64, probability: p, correction: corr, ptm: r.scale(1.0 / p) });
        }
    }
    let mk = |e: [f64; 16]| PauliTransferMatrix::new(1, e.to_vec()).expect("4x4");
    (mk(agg), mk(triv), DecoderChoice(choice), total, skipped, records)
}

/// Exact logical channel of `rounds` noisy rounds plus one ideal round.
pub fn run_memory_experiment(
    rounds: usize,
    params: &NoiseParameters,
    xtalk: &CrosstalkSpec,
    engine: &EngineOptions,
) -> Result<LogicalChannelReport, ExperimentError> {
    let start = Instant::now();
    params.validate()?;
    let mem = memory_experiment_circuit(rounds, params, xtalk, &engine.schedule, engine.expose_final)?;
    let circuit = memory_channel_circuit_with::<f64>(&mem, params, engine.final_round)?;
    let mut network = network_from_circuit(&circuit)?;
    let nbits = mem.open_bits.len();
    let mut base = 0u64;
    let mut fixed = Vec::new();
    for &(bit, v) in &engine.syndrome_slice {
        let pos = mem.open_bits.iter().position(|&b| b == bit).ok_or(ExperimentError::UnknownBit(bit))?;
        base |= ((v & 1) as u64) << (nbits - 1 - pos);
        fixed.push(network.open[pos]);
        network = network.fix_index(network.open[pos], v as usize)?;
    }
    let free_bits = nbits - fixed.len();
    let (plan, split, summary) = plan_for_engine(&network, engine)?;
    if summary.subtask_width > engine.width_cap() {
        return Err(ExperimentError::NoViableSplit { width: summary.width, cap: engine.width_cap(), splits: engine.max_splits });
    }
    let tensor = split_and_contract(&network, &plan, &split, engine.workers, engine.width_cap())?;
    // free syndrome legs keep their relative order, so slice results only
    // need their bit positions spread back into the full index
    let free_pos: Vec<usize> = (0..nbits).filter(|&i| !engine.syndrome_slice.iter().any(|&(b, _)| mem.open_bits[i] == b)).collect();
    let (agg, triv, decoder, total, skipped, mut records) = analyze_branch_tensor(&tensor.data, free_bits, 0, engine.per_syndrome);
    let spread = |s: usize| -> u64 {
        let mut full = base;
        for (k, &p) in free_pos.iter().enumerate() {
            full |= ((s >> (free_bits - 1 - k)) as u64 & 1) << (nbits - 1 - p);
        }
        full
    };
    if let Some(rec) = records.as_mut() {
        for r in rec.iter_mut() {
            r.syndrome = spread(r.syndrome as usize);
        }
    }
    let rates = agg.error_rates()?;
    Ok(LogicalChannelReport {
        aggregated_ptm: agg,
        trivial_ptm: triv,
        rates,
        probability_total: total,
        skipped_syndromes: skipped,
        decoder,
        per_syndrome: records,
        metadata: ReportMetadata {
            rounds,
            kt_region: xtalk.kt_region,
            syndrome_bits: nbits,
            parameter_hash: run_hash(params, xtalk, rounds),
            runtime_secs: start.elapsed().as_secs_f64(),
            plan: summary,
        },
    })
}

/// Digest of everything that determines a run's numbers.
pub fn run_hash(params: &NoiseParameters, xtalk: &CrosstalkSpec, rounds: usize) -> String {
    use sha2::{Digest, Sha256};
    let text = serde_json::to_string(&(params, xtalk, rounds)).expect("serializes");
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelComparison {
    pub difference: PauliTransferMatrix<f64>,
    pub norm1: f64,
    pub norm_max: f64,
}

/// Entry-wise `a − b` of the aggregated PTMs.
pub fn compare_channels(a: &LogicalChannelReport, b: &LogicalChannelReport) -> ChannelComparison {
    let difference = a.aggregated_ptm.sub(&b.aggregated_ptm);
    ChannelComparison { norm1: difference.norm1(), norm_max: difference.norm_max(), difference }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MovingReport {
    pub pair: (QubitId, QubitId),
    pub base: LogicalChannelReport,
    pub moved: LogicalChannelReport,
    pub comparison: ChannelComparison,
}

/// Crosstalk of strength `params.k_xtalk` on every pair, once at the end of
/// each CZ-region and once with `pair`'s CPHASE moved to the region start.
pub fn moving_inaccuracy(
    params: &NoiseParameters,
    pair: ((i32, i32), (i32, i32)),
    rounds: usize,
    engine: &EngineOptions,
) -> Result<MovingReport, ExperimentError> {
    let layout = crate::code::surface17_layout();
    let find = |p: (i32, i32)| layout.find(p.0, p.1).ok_or(CodeError::UnknownQubit(p));
    let ids = (find(pair.0)?, find(pair.1)?);
    if !layout.has_edge(ids.0, ids.1) {
        return Err(CodeError::NotAnEdge(ids.0, ids.1).into());
    }
    let base_spec = CrosstalkSpec::with_kt(params.k_xtalk);
    let moved_spec = CrosstalkSpec { placement: Placement::Custom(vec![(pair, 0.0)]), ..base_spec.clone() };
    let base = run_memory_experiment(rounds, params, &base_spec, engine)?;
    let moved = run_memory_experiment(rounds, params, &moved_spec, engine)?;
    let comparison = compare_channels(&moved, &base);
    Ok(MovingReport { pair: ids, base, moved, comparison })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub kt_region: f64,
    pub p_bit: f64,
    pub p_phase: f64,
    pub p_y: f64,
    pub rotations: [f64; 3],
    pub parameter_hash: String,
    pub report: LogicalChannelReport,
}

/// One run per crosstalk strength, all pairs, default placement.
pub fn sensitivity_sweep(
    k_values: &[f64],
    rounds: usize,
    params: &NoiseParameters,
    engine: &EngineOptions,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    k_values
        .iter()
        .map(|&k| {
            let p = NoiseParameters { k_xtalk: k, ..params.clone() };
            let report = run_memory_experiment(rounds, &p, &CrosstalkSpec::with_kt(k), engine)?;
            let r = report.rates;
            Ok(SweepPoint {
                kt_region: k,
                p_bit: r.p_bit,
                p_phase: r.p_phase,
                p_y: r.p_y,
                rotations: r.rotations,
                parameter_hash: report.metadata.parameter_hash.clone(),
                report,
            })
        })
        .collect()
}

/// Magic line opening a per-syndrome dump.
pub const DUMP_MAGIC: &[u8] = b"ZZSIM-SYNDROMES 1\n";

/// Binary per-syndrome dump. After [`DUMP_MAGIC`] comes one line of JSON
/// with `bits` (exposed bit labels, round-major, stabilizers in layout
/// order; the first is the most significant bit of the syndrome index),
/// `records` and `record_bytes`. Each record is little endian: syndrome
/// index (u64), probability (f64), correction (u8, 0..4 for I, X, Y, Z)
/// and the 16 entries of the normalized conditional PTM (f64, row-major).
pub fn write_syndrome_dump(path: &Path, bits: &[usize], records: &[SyndromeRecord]) -> Result<(), ExperimentError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    let header = serde_json::json!({ "bits": bits, "records": records.len(), "record_bytes": 8 + 8 + 1 + 16 * 8 });
    writeln!(w, "{header}")?;
    for r in records {
        w.write_all(&r.syndrome.to_le_bytes())?;
        w.write_all(&r.probability.to_le_bytes())?;
        w.write_all(&[LogicalPauli::ALL.iter().position(|&p| p == r.correction).expect("listed") as u8])?;
        for &x in r.ptm.entries() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_syndrome_dump`].
pub fn read_syndrome_dump(path: &Path) -> Result<(Vec<usize>, Vec<SyndromeRecord>), ExperimentError> {
    let bad = |m: &str| ExperimentError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string()));
    let bytes = std::fs::read(path)?;
    let rest = bytes.strip_prefix(DUMP_MAGIC).ok_or_else(|| bad("missing magic"))?;
    let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header: serde_json::Value = serde_json::from_slice(&rest[..nl]).map_err(|e| bad(&e.to_string()))?;
    let bits: Vec<usize> = serde_json::from_value(header["bits"].clone()).map_err(|e| bad(&e.to_string()))?;
    let n = header["records"].as_u64().ok_or_else(|| bad("missing record count"))? as usize;
    let body = &rest[nl + 1..];
    const REC: usize = 8 + 8 + 1 + 16 * 8;
    if body.len() != n * REC {
        return Err(bad("truncated body"));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
    let records = body
        .chunks_exact(REC)
        .map(|c| SyndromeRecord {
            syndrome: u64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
            probability: f(&c[8..16]),
            correction: LogicalPauli::ALL[c[16] as usize & 3],
            ptm: PauliTransferMatrix::new(1, c[17..].chunks_exact(8).map(f).collect()).expect("16 entries"),
        })
        .collect();
    Ok((bits, records))
}
