//! Construction and numerical verification of the compressible
//! Tollmien-Schlichting eigenmode of a subsonic boundary layer.
//!
//! Coordinates are the rescaled wall-normal variable `Y >= 0`. A mode is
//! sought as `(ρ, u, v)(Y) e^{iα(X - cτ)}` with phase speed `c`, `Im c > 0`.

pub mod airy;
pub mod approx_mode;
pub mod banded;
pub mod dd;
pub mod dispersion;
pub mod error;
pub mod fast_mode;
pub mod fit;
pub mod grid;
pub mod jet;
pub mod mode;
pub mod params;
pub mod profile;
pub mod quad;
pub mod resolvent;
pub mod slow_mode;
pub mod sparse;
pub mod stencil;

pub use error::{Result, TsError};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
