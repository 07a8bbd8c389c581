//! Compiler, cycle-level simulator, golden reference and activity/energy
//! models for a fully unrolled ternary CNN accelerator.
//!
//! Real-valued code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64` or `f32`. Trit and integer
//! datapaths are scalar-free.

pub mod activity;
pub mod compiler;
pub mod error;
pub mod golden;
pub mod network;
pub mod quantizer;
pub mod scalar;
pub mod sim;
pub mod tensor;
pub mod trit;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tensor::{Tensor, TritTensor};
pub use trit::{PackedTritTensor, ProductCode, Trit, TritPlanes};

pub type NetworkDescF64 = network::NetworkDesc<f64>;
pub type NetworkDescF32 = network::NetworkDesc<f32>;
pub type LayerDescF64 = network::LayerDesc<f64>;
pub type LayerDescF32 = network::LayerDesc<f32>;
pub type CostModelF64 = activity::CostModel<f64>;
pub type CostModelF32 = activity::CostModel<f32>;
pub type EnergyReportF64 = activity::EnergyReport<f64>;
