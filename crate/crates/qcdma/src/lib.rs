//! Discrete-time Monte Carlo simulator of a direct-sequence spread-spectrum
//! (CDMA) multiple-access network for single-photon channels sharing one
//! optical fiber.
//!
//! Each user spreads its photon's wavefunction with a cyclic shift of one
//! maximum-length sequence and joins the fiber through an add-drop
//! multiplexer built from a fiber Bragg grating and ideal circulators. The
//! simulator tracks every photon's complex amplitude through the add and
//! drop chains and reports photon loss, crosstalk between channels, and
//! time-bin state fidelity.

pub mod codes;
mod error;
pub mod metrics;
pub mod network;
pub mod optics;
pub mod signal;

pub use error::{Error, Result};
