//! Steady-state modeling of magnon-mediated microwave-to-optics photon
//! conversion.
//!
//! The model is a linear chain of three driven modes: a microwave cavity
//! mode `a`, one (or several) standing magnon modes `m`, and one optical
//! sideband `b` selected by a strong pump on the optical resonator. The
//! crate covers:
//!
//! * [`coupled_mode`]: closed-form conversion efficiencies, the
//!   frequency-domain steady state solved as a small linear system,
//!   reflection, and derived cavity figures;
//! * [`magnetostatics`]: standing spin-wave dispersion in a rectangular
//!   in-plane magnetized ferrite flake and the bias-field inversion;
//! * [`sweep`]: dense 2-D spectra, triple-resonance scans, and the small
//!   deterministic optimizers used to place operating points;
//! * [`fit`]: reflection-dip and avoided-crossing parameter extraction.
//!
//! Every frequency, linewidth, and coupling inside the crate is angular
//! (rad/s). Conversion from cycles-per-second happens once, at the
//! configuration boundary; [`units`] has the helpers and the pinned
//! physical constants.

pub mod coupled_mode;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod magnetostatics;
pub mod minimize;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
