//! Surface-17: layout, stabilizers, timed syndrome-extraction schedules,
//! crosstalk insertion and lowering to channel circuits.

mod decoder;
mod layout;
mod lower;
mod schedule;

pub use layout::{basis_index, surface17_layout, DataPauli, QubitId, Role, StabilizerSpec, StabilizerType, Surface17};
pub use decoder::{apply_data_pauli, apply_decoder_gates, decode_basis, syndrome_decoder, DecoderGate, SyndromeDecoder};
pub use lower::{lower_schedule, memory_channel_circuit, memory_channel_circuit_with, FinalRound};
pub use schedule::{
    compensate_cz, insert_crosstalk, memory_experiment_circuit, move_cphase, syndrome_round_schedule, BitLabel,
    CircuitSchedule, CrosstalkSpec, CzRegion, DanceOrder, HalfLayout, MemoryExperimentCircuit, OpKind, PairSelection,
    Placement, ScheduleOptions, ScheduledOp,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("rounds must be at least 1, got {0}")]
    Rounds(usize),
    #[error("no qubit at {0:?}")]
    UnknownQubit((i32, i32)),
    #[error("{0} and {1} are not neighbors")]
    NotAnEdge(QubitId, QubitId),
    #[error("no crosstalk gate on {0}-{1} at t = {2}")]
    NoSuchGate(QubitId, QubitId, f64),
    #[error("time {0} lies outside the CZ-region")]
    OutsideRegion(f64),
    #[error("ops {first} and {second} overlap on {qubit}")]
    Overlap { qubit: QubitId, first: usize, second: usize },
    #[error("CZ op {0} outside every CZ-region")]
    CzOutsideRegion(usize),
    #[error("damping intervals of {0} do not tile the noisy window")]
    Tiling(QubitId),
}
