//! Deterministic data pipeline for terrain-aware lunar radio maps.
//!
//! The crate covers the full path from synthetic terrain to packaged
//! training samples: cratered heightmap synthesis, radio-map rendering with
//! diffraction and ground reflection, curvature-based wave-number extraction,
//! noise-schedule and loss kernels, evaluation metrics, and a binary sample
//! container.

pub mod dataset;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod model_math;
pub mod png_export;
pub mod propagation;
pub mod surface;
pub mod terrain;

pub use error::{Error, Result};
pub use grid::{ByteGrid, Grid};
