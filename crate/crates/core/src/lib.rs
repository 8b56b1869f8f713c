//! Semiclassical dynamics of two Josephson junctions in series under a voltage
//! bias, which reduce to a zero-gravity parametrically driven rotor.
//!
//! - [`dynamics`]: parameter mapping, equations of motion, RK4 integration.
//! - [`classifier`]: attractor labels, period estimation, crossing/turning/winding numbers.
//! - [`sweep`]: stability diagrams and basins over parameter lattices, bisection refinement.
//! - [`fractal`]: border extraction and box-counting dimension.
//! - [`gridfile`], [`render`]: on-disk grid format and indexed-color images.

pub mod classifier;
pub mod dynamics;
pub mod error;
pub mod fractal;
pub mod gridfile;
pub mod render;
pub mod sweep;

pub use classifier::{classify, AttractorLabel, Thresholds};
pub use dynamics::{integrate, CircuitParams, DynParams, PhaseState, Trajectory};
pub use error::{Error, Result};
pub use sweep::{GridSpec, StabilityGrid};

/// Version string recorded in grid files and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
