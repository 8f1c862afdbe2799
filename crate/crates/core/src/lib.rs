//! Numerical laboratory for wave maps on hyperbolic space in the caloric
//! gauge.
//!
//! The crate works on radially symmetric (and 1-equivariant) fields over
//! H^d. [`geometry`] supplies the radial grid and its operators,
//! [`targets`] the sphere and polar targets with their harmonic profiles,
//! [`heat_flow`] the harmonic map heat flow over a geometric ladder in heat
//! time, [`caloric_gauge`] the transported frames and the gauge-variable
//! identities, [`wave_dynamics`] the wave-map evolution and the coupled
//! pipeline, and [`linear_dispersion`] the linear wave and heat machinery.
//!
//! Every solver is generic over the scalar type through [`Real`]; the `*64`
//! and `*32` aliases below fix the common choices.

pub mod caloric_gauge;
pub mod error;
pub mod geometry;
pub mod heat_flow;
pub mod linalg;
pub mod linear_dispersion;
pub mod scalar;
pub mod targets;
pub mod wave_dynamics;

pub use error::{CaloricError, Result};
pub use geometry::{NormReport, OuterBoundary, Parity, RadialGrid, ScalarField};
pub use scalar::Real;

pub type RadialGrid64 = geometry::RadialGrid<f64>;
pub type RadialGrid32 = geometry::RadialGrid<f32>;
pub type ScalarField64 = geometry::ScalarField<f64>;
pub type ScalarField32 = geometry::ScalarField<f32>;
pub type ExtrinsicMap64 = heat_flow::ExtrinsicMapState<f64>;
pub type ExtrinsicMap32 = heat_flow::ExtrinsicMapState<f32>;
pub type EquivariantProfile64 = heat_flow::EquivariantProfile<f64>;
pub type EquivariantProfile32 = heat_flow::EquivariantProfile<f32>;
pub type GaugeData64 = caloric_gauge::GaugeData<f64>;
pub type GaugeData32 = caloric_gauge::GaugeData<f32>;
pub type WaveState64 = wave_dynamics::WaveState<f64>;
pub type WaveState32 = wave_dynamics::WaveState<f32>;
