//! Exact logical channels of a distance-3 surface-code memory under a
//! circuit-level noise model with ZZ crosstalk, computed by contracting an
//! open tensor network over all syndrome outcomes.
//!
//! Numeric containers are generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar.

pub mod channel;
pub mod circuit;
pub mod code;
pub mod config;
pub mod experiment;
pub mod noise;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod tn;

pub type Choi64 = channel::ChoiMatrix<f64>;
pub type Choi32 = channel::ChoiMatrix<f32>;
pub type Ptm64 = channel::PauliTransferMatrix<f64>;
pub type Ptm32 = channel::PauliTransferMatrix<f32>;
pub type Matrix64 = channel::ComplexMatrix<f64>;
pub type Matrix32 = channel::ComplexMatrix<f32>;
pub type Circuit64 = circuit::ChannelCircuit<f64>;
pub type Circuit32 = circuit::ChannelCircuit<f32>;
pub type Tensor64 = tn::Tensor<f64>;
pub type Tensor32 = tn::Tensor<f32>;
pub type Network64 = tn::TensorNetwork<f64>;
pub type Network32 = tn::TensorNetwork<f32>;
pub type Density64 = oracle::DensityMatrix<f64>;
pub type Density32 = oracle::DensityMatrix<f32>;
