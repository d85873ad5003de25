//! Positivity-preserving integrators for finite-dimensional Lindblad master
//! equations, with an exact reference propagator, stability analysis for the
//! dephasing test model and a quantum-jump unraveling of the Kraus schemes.

pub mod bench;
pub mod density;
pub mod eigen;
pub mod error;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod schemes;
pub mod stability;
pub mod unraveling;

pub use error::{Error, Result};
pub use schemes::SchemeId;

pub type Complex = scalar::Cx<f64>;
pub type Matrix = matrix::CMatrix<f64>;
pub type Density = density::DensityMatrix<f64>;
pub type Model = model::LindbladModel<f64>;
