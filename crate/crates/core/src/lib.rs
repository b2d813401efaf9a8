//! Integral points near nondegenerate polynomial space curves.

pub mod bounds;
pub mod cli;
pub mod counting;
pub mod curve;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod linalg;
pub mod poly;
pub mod quad;
pub mod series;
pub mod weights;

pub use curve::{Curve, CurveSpec, FrenetFrame, Interval};
pub use error::{Error, Result};
pub use weights::{Kind, SmoothWeights};
