//! Design optimization of cantilevered bimorph piezoelectric harvesters for
//! bridge decks.

pub mod cluster;
pub mod error;
pub mod excitation;
pub mod femodel;
pub mod geometry;
pub mod modal;
pub mod optimizer;
pub mod pipeline;
pub mod response;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Float;

pub type KnotVector64 = geometry::KnotVector<f64>;
pub type NurbsPatch64 = geometry::NurbsPatch<f64>;
pub type NurbsPatch32 = geometry::NurbsPatch<f32>;
pub type DeviceDimensions64 = geometry::DeviceDimensions<f64>;
pub type DeviceModel64 = femodel::DeviceModel<f64>;
pub type DeviceModel32 = femodel::DeviceModel<f32>;
pub type ReducedModel64 = modal::ReducedModel<f64>;
pub type ReducedModel32 = modal::ReducedModel<f32>;
pub type FrfCurve64 = response::FrfCurve<f64>;
