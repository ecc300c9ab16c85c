//! Reversible pseudorandom numbers and memory-free discrete adjoint Monte Carlo.
//!
//! The generator can step backwards as cheaply as forwards, so a particle
//! simulation can be replayed in reverse from its final state. The adjoint
//! sweep of the heat-control problem uses this to compute exact gradients
//! without storing particle histories.

pub mod bench;
pub mod heat;
pub mod optimize;
pub mod output;
pub mod rng;
pub mod roundtrip;
pub mod sampling;
pub mod scalar;

pub use scalar::Real;

pub type SimConfig64 = heat::SimConfig<f64>;
pub type SimConfig32 = heat::SimConfig<f32>;
pub type Control64 = heat::Control<f64>;
pub type Control32 = heat::Control<f32>;
pub type TemperatureField64 = heat::TemperatureField<f64>;
pub type TemperatureField32 = heat::TemperatureField<f32>;
pub type GradientReport64 = heat::GradientReport<f64>;
pub type GradientReport32 = heat::GradientReport<f32>;
pub type OptimizerConfig64 = optimize::OptimizerConfig<f64>;
pub type OptimizerConfig32 = optimize::OptimizerConfig<f32>;
