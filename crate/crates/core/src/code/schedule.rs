use serde::{Deserialize, Serialize};

use crate::channel::GateKind;
use crate::circuit::Pauli;
use crate::noise::NoiseParameters;

use super::layout::{QubitId, Role, StabilizerType, Surface17};
use super::CodeError;

/// How the X- and Z-halves of a round share time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfLayout {
    /// Z-half starts after the X-half's depletion ends.
    Sequential,
    /// Z-half coherent step starts while the X-ancillas are still being
    /// read out; one round takes `tau_c + tau_m + tau_d`.
    Interleaved,
}

/// Order in which an ancilla visits its diagonal neighbors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DanceOrder {
    /// X: NW, NE, SW, SE. Z: NW, SW, NE, SE.
    ZShapeX,
    /// X: NW, SW, NE, SE. Z: NW, NE, SW, SE. Hook errors end up
    /// perpendicular to the logical operator of the same type.
    NShapeX,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleOptions {
    pub layout: HalfLayout,
    pub dance: DanceOrder,
    pub fast_measurement: bool,
    pub fast_depletion: bool,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self { layout: HalfLayout::Interleaved, dance: DanceOrder::NShapeX, fast_measurement: true, fast_depletion: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OpKind {
    Gate(GateKind),
    /// CZ whose programmed angle `π − crosstalk` cancels the stray phase of
    /// the pair, so the net unitary is an exact CZ.
    CompensatedCz { crosstalk: f64 },
    /// Discretized ZZ crosstalk: CPHASE(angle).
    Crosstalk { angle: f64 },
    Measure { bit: usize },
    /// Leftover-photon dephasing over `[t1, t2]` after the readout starting
    /// at `t_m`; `t_g` opens the coherent step.
    PhotonDephasing { t1: f64, t2: f64, t_m: f64, t_g: f64 },
    Reset,
    ConditionalPauli { pauli: Pauli, bit: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledOp {
    pub kind: OpKind,
    /// Indices into [`CircuitSchedule::qubits`].
    pub qubits: Vec<usize>,
    pub start: f64,
    pub duration: f64,
    pub noisy: bool,
    pub region: Option<usize>,
}

impl ScheduledOp {
    /// Point at which the op acts.
    pub fn instant(&self) -> f64 {
        self.start + self.duration / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzRegion {
    pub start: f64,
    pub end: f64,
    pub round: usize,
    pub stabilizer_type: StabilizerType,
    pub noisy: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitLabel {
    pub round: usize,
    pub stabilizer: usize,
    pub exposed: bool,
}

#[derive(Clone, Debug)]
pub struct CircuitSchedule {
    pub qubits: Vec<QubitId>,
    pub ops: Vec<ScheduledOp>,
    pub cz_regions: Vec<CzRegion>,
    pub round_boundaries: Vec<f64>,
    /// Idle damping stops here; everything after is ideal.
    pub noisy_until: f64,
    pub bits: Vec<BitLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSelection {
    All,
    /// Only ancilla–data pairs of the stabilizer type measured in the region.
    Gated,
    List(Vec<((i32, i32), (i32, i32))>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    EndOfRegion,
    StartOfRegion,
    /// Offset from region start, per pair; pairs not listed go to the end.
    Custom(Vec<(((i32, i32), (i32, i32)), f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrosstalkSpec {
    /// Dimensionless k·t per CZ-region; the CPHASE applies `exp(-4i·kt)` to |11⟩.
    pub kt_region: f64,
    pub pairs: PairSelection,
    pub placement: Placement,
    /// Fold each CPHASE on a pair that has a CZ in the same region into
    /// that CZ.
    pub compensated: bool,
    /// Restrict insertion to these CZ-region indices (all when `None`).
    pub regions: Option<Vec<usize>>,
}

impl Default for CrosstalkSpec {
    fn default() -> Self {
        Self { kt_region: 0.03, pairs: PairSelection::All, placement: Placement::EndOfRegion, compensated: true, regions: None }
    }
}

impl CrosstalkSpec {
    pub fn none() -> Self {
        Self { kt_region: 0.0, ..Self::default() }
    }

    pub fn with_kt(kt_region: f64) -> Self {
        Self { kt_region, ..Self::default() }
    }

    pub fn angle(&self) -> f64 {
        -4.0 * self.kt_region
    }
}

fn neighbor_order(a: QubitId, dance: DanceOrder) -> [(i32, i32); 4] {
    let (nw, ne, sw, se) = ((-1, 1), (1, 1), (-1, -1), (1, -1));
    let z_shape = [nw, ne, sw, se];
    let n_shape = [nw, sw, ne, se];
    let x_type = a.role == Role::XAncilla;
    match (dance, x_type) {
        (DanceOrder::ZShapeX, true) | (DanceOrder::NShapeX, false) => z_shape,
        _ => n_shape,
    }
}

pub(crate) struct RoundTimes {
    pub meas: f64,
    pub period: f64,
    pub z_offset: f64,
}

pub(crate) fn round_times(params: &NoiseParameters, opts: &ScheduleOptions) -> RoundTimes {
    let meas = if opts.fast_measurement { params.tau_m_fast } else { params.tau_m };
    let depl = if opts.fast_depletion { params.tau_d_fast } else { params.tau_d };
    let coherent = 2.0 * params.t_g1q + 4.0 * params.t_g2q;
    let half = coherent + meas + depl;
    match opts.layout {
        HalfLayout::Sequential => RoundTimes { meas, period: 2.0 * half, z_offset: half },
        // the Z-half trails by half a period, so each readout overlaps the
        // other half's coherent step
        HalfLayout::Interleaved => RoundTimes { meas, period: half, z_offset: (half / 2.0).max(coherent) },
    }
}

impl CircuitSchedule {
    fn empty(layout: &Surface17) -> Self {
        Self {
            qubits: layout.qubits.clone(),
            ops: Vec::new(),
            cz_regions: Vec::new(),
            round_boundaries: vec![0.0],
            noisy_until: 0.0,
            bits: Vec::new(),
        }
    }

    fn push(&mut self, kind: OpKind, qubits: Vec<usize>, start: f64, duration: f64, noisy: bool, region: Option<usize>) {
        self.ops.push(ScheduledOp { kind, qubits, start, duration, noisy, region });
    }

    /// One stabilizer half: rotations, four CZ layers, rotations, readout.
    #[allow(clippy::too_many_arguments)]
    fn push_half(
        &mut self,
        layout: &Surface17,
        kind: StabilizerType,
        t0: f64,
        round: usize,
        noisy: bool,
        params: &NoiseParameters,
        opts: &ScheduleOptions,
        meas: f64,
    ) {
        let g1 = params.t_g1q;
        let g2 = params.t_g2q;
        let stabs: Vec<(usize, &super::layout::StabilizerSpec)> =
            layout.stabilizers.iter().enumerate().filter(|(_, s)| s.pauli_type == kind).collect();
        let ancillas: Vec<usize> = stabs.iter().map(|(_, s)| layout.index_of(s.ancilla)).collect();
        let data: Vec<usize> = (0..9).collect();
        let x_half = kind == StabilizerType::X;

        if !noisy {
            for &a in &ancillas {
                self.push(OpKind::Reset, vec![a], t0, 0.0, false, None);
            }
        }
        for &a in &ancillas {
            self.push(OpKind::Gate(GateKind::RyPlus), vec![a], t0, g1, noisy, None);
        }
        if x_half {
            for &d in &data {
                self.push(OpKind::Gate(GateKind::RyMinus), vec![d], t0, g1, noisy, None);
            }
        }
        let region = self.cz_regions.len();
        let rstart = t0 + g1;
        self.cz_regions.push(CzRegion { start: rstart, end: rstart + 4.0 * g2, round, stabilizer_type: kind, noisy });
        for layer in 0..4 {
            for (_, s) in &stabs {
                let (dx, dy) = neighbor_order(s.ancilla, opts.dance)[layer];
                if let Some(d) = layout.find(s.ancilla.x + dx, s.ancilla.y + dy) {
                    let a = layout.index_of(s.ancilla);
                    let d = layout.index_of(d);
                    self.push(OpKind::Gate(GateKind::Cz), vec![a, d], rstart + layer as f64 * g2, g2, noisy, Some(region));
                }
            }
        }
        let rend = rstart + 4.0 * g2;
        for &a in &ancillas {
            self.push(OpKind::Gate(GateKind::RyMinus), vec![a], rend, g1, noisy, None);
        }
        if x_half {
            for &d in &data {
                self.push(OpKind::Gate(GateKind::RyPlus), vec![d], rend, g1, noisy, None);
            }
        }
        let tm = rend + g1;
        for (j, s) in &stabs {
            let a = layout.index_of(s.ancilla);
            let bit = self.bits.len() - 8 + j;
            self.push(OpKind::Measure { bit }, vec![a], tm, meas, noisy, None);
        }
    }

    fn push_round(&mut self, layout: &Surface17, t0: f64, round: usize, noisy: bool, params: &NoiseParameters, opts: &ScheduleOptions) {
        let times = round_times(params, opts);
        for j in 0..8 {
            self.bits.push(BitLabel { round, stabilizer: j, exposed: true });
        }
        let (meas, z_offset) = if noisy {
            (times.meas, times.z_offset)
        } else {
            // the ideal round runs its halves back to back without waiting
            let coherent = 2.0 * params.t_g1q + 4.0 * params.t_g2q;
            (0.0, coherent)
        };
        self.push_half(layout, StabilizerType::X, t0, round, noisy, params, opts, meas);
        self.push_half(layout, StabilizerType::Z, t0 + z_offset, round, noisy, params, opts, meas);
    }

    /// Readout photons dephase an ancilla during its next noisy coherent step.
    fn attach_photon_dephasing(&mut self) {
        let mut extra = Vec::new();
        for (i, m) in self.ops.iter().enumerate() {
            if !m.noisy || !matches!(m.kind, OpKind::Measure { .. }) {
                continue;
            }
            let q = m.qubits[0];
            let mut next = self.ops[i + 1..]
                .iter()
                .filter(|o| o.qubits == vec![q] && matches!(o.kind, OpKind::Gate(GateKind::RyPlus | GateKind::RyMinus)));
            let (Some(open), Some(close)) = (next.next(), next.next()) else { continue };
            if !open.noisy || !close.noisy {
                continue;
            }
            let t_g = open.instant();
            extra.push(ScheduledOp {
                kind: OpKind::PhotonDephasing { t1: t_g, t2: close.instant(), t_m: m.start, t_g },
                qubits: vec![q],
                start: close.start,
                duration: 0.0,
                noisy: true,
                region: None,
            });
        }
        self.ops.extend(extra);
    }

    /// Ops in application order: by instant, insertion order on ties.
    pub fn ordered_ops(&self) -> Vec<&ScheduledOp> {
        let mut v: Vec<&ScheduledOp> = self.ops.iter().collect();
        v.sort_by(|a, b| a.instant().partial_cmp(&b.instant()).expect("finite times"));
        v
    }

    pub fn total_duration(&self) -> f64 {
        self.ops.iter().map(|o| o.start + o.duration).fold(self.noisy_until, f64::max)
    }

    /// Idle intervals of every qubit over `[0, noisy_until]`: the gaps
    /// between consecutive noisy op instants.
    pub fn damping_intervals(&self) -> Vec<Vec<(f64, f64)>> {
        let mut out = vec![Vec::new(); self.qubits.len()];
        let mut last = vec![0.0f64; self.qubits.len()];
        for op in self.ordered_ops() {
            let t = op.instant().min(self.noisy_until);
            for &q in &op.qubits {
                if t > last[q] {
                    out[q].push((last[q], t));
                    last[q] = t;
                }
            }
        }
        for q in 0..self.qubits.len() {
            if self.noisy_until > last[q] {
                out[q].push((last[q], self.noisy_until));
            }
        }
        out
    }

    /// Checks op overlap, CZ placement and damping tiling.
    pub fn validate(&self) -> Result<(), CodeError> {
        for q in 0..self.qubits.len() {
            let mut spans: Vec<(f64, f64, usize)> = self
                .ops
                .iter()
                .enumerate()
                .filter(|(_, o)| o.qubits.contains(&q))
                .map(|(i, o)| (o.start, o.start + o.duration, i))
                .collect();
            spans.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 - 1e-9 && w[1].1 > w[1].0 && w[0].1 > w[0].0 {
                    return Err(CodeError::Overlap { qubit: self.qubits[q], first: w[0].2, second: w[1].2 });
                }
            }
        }
        for (i, op) in self.ops.iter().enumerate() {
            let is_cz = matches!(op.kind, OpKind::Gate(GateKind::Cz) | OpKind::CompensatedCz { .. });
            if is_cz {
                let inside = self
                    .cz_regions
                    .iter()
                    .any(|r| op.start >= r.start - 1e-9 && op.start + op.duration <= r.end + 1e-9);
                if !inside {
                    return Err(CodeError::CzOutsideRegion(i));
                }
            }
        }
        for (q, iv) in self.damping_intervals().iter().enumerate() {
            let mut t = 0.0;
            for &(a, b) in iv {
                if a < t - 1e-9 {
                    return Err(CodeError::Tiling(self.qubits[q]));
                }
                t = b;
            }
            let covered: f64 = iv.iter().map(|(a, b)| b - a).sum();
            if (covered - self.noisy_until).abs() > 1e-6 {
                return Err(CodeError::Tiling(self.qubits[q]));
            }
        }
        Ok(())
    }

    /// Text dump, one op per line: start, duration, kind, qubits, noise flag.
    pub fn dump(&self) -> String {
        let mut s = String::from("# start_ns duration_ns kind qubits noisy region\n");
        for op in self.ordered_ops() {
            let kind = match &op.kind {
                OpKind::Gate(g) => g.name(),
                OpKind::CompensatedCz { crosstalk } => format!("cz-comp(programmed={:.6},xtalk={crosstalk:.6})", std::f64::consts::PI - crosstalk),
                OpKind::Crosstalk { angle } => format!("xtalk({angle:.6})"),
                OpKind::Measure { bit } => format!("measure(bit={bit})"),
                OpKind::PhotonDephasing { t1, t2, t_m, t_g } => format!("photon({t1},{t2},tm={t_m},tg={t_g})"),
                OpKind::Reset => "reset".into(),
                OpKind::ConditionalPauli { pauli, bit } => format!("if(bit={bit}){pauli:?}"),
            };
            let qs: Vec<String> = op.qubits.iter().map(|&q| self.qubits[q].to_string()).collect();
            let region = op.region.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
            s.push_str(&format!("{:10.1} {:7.1} {kind} {} {} {region}\n", op.start, op.duration, qs.join(","), op.noisy as u8));
        }
        s
    }
}

/// A single noisy syndrome round starting at t = 0.
pub fn syndrome_round_schedule(params: &NoiseParameters, opts: &ScheduleOptions) -> CircuitSchedule {
    let layout = super::layout::surface17_layout();
    let mut s = CircuitSchedule::empty(&layout);
    s.push_round(&layout, 0.0, 0, true, params, opts);
    let period = round_times(params, opts).period;
    s.noisy_until = period;
    s.round_boundaries.push(period);
    s.attach_photon_dephasing();
    s
}

fn resolve_pair(layout: &Surface17, p: ((i32, i32), (i32, i32))) -> Result<(QubitId, QubitId), CodeError> {
    let a = layout.find(p.0 .0, p.0 .1).ok_or(CodeError::UnknownQubit(p.0))?;
    let b = layout.find(p.1 .0, p.1 .1).ok_or(CodeError::UnknownQubit(p.1))?;
    if !layout.has_edge(a, b) {
        return Err(CodeError::NotAnEdge(a, b));
    }
    Ok(if a.role == Role::Data { (b, a) } else { (a, b) })
}

/// Adds one CPHASE(−4·kt) per selected neighbor pair in each noisy CZ-region.
pub fn insert_crosstalk(schedule: &CircuitSchedule, spec: &CrosstalkSpec) -> Result<CircuitSchedule, CodeError> {
    let layout = super::layout::surface17_layout();
    let mut out = schedule.clone();
    let explicit: Option<Vec<(QubitId, QubitId)>> = match &spec.pairs {
        PairSelection::List(l) => Some(l.iter().map(|&p| resolve_pair(&layout, p)).collect::<Result<_, _>>()?),
        _ => None,
    };
    let custom: Vec<((QubitId, QubitId), f64)> = match &spec.placement {
        Placement::Custom(l) => l.iter().map(|&(p, t)| Ok((resolve_pair(&layout, p)?, t))).collect::<Result<_, CodeError>>()?,
        _ => Vec::new(),
    };
    let angle = spec.angle();
    if angle == 0.0 {
        return Ok(out);
    }
    for (ri, region) in schedule.cz_regions.iter().enumerate() {
        if !region.noisy || spec.regions.as_ref().is_some_and(|r| !r.contains(&ri)) {
            continue;
        }
        let pairs: Vec<(QubitId, QubitId)> = match &spec.pairs {
            PairSelection::All => layout.edges.clone(),
            PairSelection::Gated => layout
                .edges
                .iter()
                .copied()
                .filter(|(a, _)| (a.role == Role::XAncilla) == (region.stabilizer_type == StabilizerType::X))
                .collect(),
            PairSelection::List(_) => explicit.clone().unwrap_or_default(),
        };
        for (a, d) in pairs {
            let t = match &spec.placement {
                Placement::EndOfRegion => region.end,
                Placement::StartOfRegion => region.start,
                Placement::Custom(_) => custom
                    .iter()
                    .find(|(p, _)| *p == (a, d))
                    .map(|(_, off)| region.start + off)
                    .unwrap_or(region.end),
            };
            if t < region.start - 1e-9 || t > region.end + 1e-9 {
                return Err(CodeError::OutsideRegion(t));
            }
            out.push(OpKind::Crosstalk { angle }, vec![layout.index_of(a), layout.index_of(d)], t, 0.0, true, Some(ri));
        }
    }
    if spec.compensated {
        out = compensate_cz(&out, spec);
    }
    Ok(out)
}

fn same_pair(a: &[usize], b: &[usize]) -> bool {
    a.len() == 2 && b.len() == 2 && ((a[0] == b[0] && a[1] == b[1]) || (a[0] == b[1] && a[1] == b[0]))
}

/// Folds each crosstalk CPHASE on a CZ-gated pair into that CZ. The CZ is
/// re-programmed to CPHASE(π − θ) so the pair's net phase is exactly π.
pub fn compensate_cz(schedule: &CircuitSchedule, _spec: &CrosstalkSpec) -> CircuitSchedule {
    let mut out = schedule.clone();
    let mut remove = Vec::new();
    for i in 0..out.ops.len() {
        let OpKind::Crosstalk { angle } = out.ops[i].kind else { continue };
        let region = out.ops[i].region;
        let host = (0..out.ops.len()).find(|&j| {
            out.ops[j].region == region
                && matches!(out.ops[j].kind, OpKind::Gate(GateKind::Cz))
                && same_pair(&out.ops[j].qubits, &out.ops[i].qubits)
        });
        if let Some(j) = host {
            out.ops[j].kind = OpKind::CompensatedCz { crosstalk: angle };
            remove.push(i);
        }
    }
    let mut k = 0;
    out.ops.retain(|_| {
        let keep = !remove.contains(&k);
        k += 1;
        keep
    });
    out
}

/// Relocates the crosstalk CPHASE of `pair` that sits at `from_time`.
pub fn move_cphase(
    schedule: &CircuitSchedule,
    pair: (QubitId, QubitId),
    from_time: f64,
    to_time: f64,
) -> Result<CircuitSchedule, CodeError> {
    let mut out = schedule.clone();
    let a = out.qubits.iter().position(|&q| q == pair.0).ok_or(CodeError::UnknownQubit((pair.0.x, pair.0.y)))?;
    let b = out.qubits.iter().position(|&q| q == pair.1).ok_or(CodeError::UnknownQubit((pair.1.x, pair.1.y)))?;
    let idx = out
        .ops
        .iter()
        .position(|o| matches!(o.kind, OpKind::Crosstalk { .. }) && same_pair(&o.qubits, &[a, b]) && (o.start - from_time).abs() < 1e-9)
        .ok_or(CodeError::NoSuchGate(pair.0, pair.1, from_time))?;
    let region = out.cz_regions[out.ops[idx].region.expect("crosstalk lives in a region")];
    if to_time < region.start - 1e-9 || to_time > region.end + 1e-9 {
        return Err(CodeError::OutsideRegion(to_time));
    }
    out.ops[idx].start = to_time;
    Ok(out)
}

/// Memory experiment schedule and the syndrome bits it exposes.
#[derive(Clone, Debug)]
pub struct MemoryExperimentCircuit {
    pub schedule: CircuitSchedule,
    pub open_bits: Vec<usize>,
    pub layout: Surface17,
}

/// `rounds` noisy rounds followed by one ideal round whose outcomes drive
/// the pure-error corrections. With `expose_final` the ideal round's bits
/// are exposed as well.
pub fn memory_experiment_circuit(
    rounds: usize,
    params: &NoiseParameters,
    xtalk: &CrosstalkSpec,
    opts: &ScheduleOptions,
    expose_final: bool,
) -> Result<MemoryExperimentCircuit, CodeError> {
    if rounds < 1 {
        return Err(CodeError::Rounds(rounds));
    }
    let layout = super::layout::surface17_layout();
    let mut s = CircuitSchedule::empty(&layout);
    let period = round_times(params, opts).period;
    for r in 0..rounds {
        s.push_round(&layout, r as f64 * period, r, true, params, opts);
        s.round_boundaries.push((r + 1) as f64 * period);
    }
    s.noisy_until = rounds as f64 * period;
    s.attach_photon_dephasing();
    let t_ideal = s.noisy_until;
    s.push_round(&layout, t_ideal, rounds, false, params, opts);
    let t_fix = s.total_duration();
    for (j, st) in layout.stabilizers.iter().enumerate() {
        let (q, p) = st.pure_error;
        let bit = rounds * 8 + j;
        s.push(OpKind::ConditionalPauli { pauli: p, bit }, vec![layout.index_of(q)], t_fix, 0.0, false, None);
    }
    s.round_boundaries.push(s.total_duration());
    for b in &mut s.bits {
        b.exposed = b.round < rounds || expose_final;
    }
    let s = insert_crosstalk(&s, xtalk)?;
    s.validate()?;
    let open_bits = s.bits.iter().enumerate().filter(|(_, b)| b.exposed).map(|(i, _)| i).collect();
    Ok(MemoryExperimentCircuit { schedule: s, open_bits, layout })
}
