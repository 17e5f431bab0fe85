//! Sideband photon-flux measurement by homodyne detection, with a gated
//! single-photon counter for comparison.
//!
//! The crate covers the closed-form state algebra ([`quantum_states`]), the
//! frequency-shifted detection topology ([`sideband_scheme`]), Monte Carlo
//! models of both detectors ([`homodyne_sim`], [`spdm_sim`]), the flux
//! estimators ([`estimation`]) and the sweep/report harness behind the CLI
//! ([`harness`]).
//!
//! All stochastic work draws from seeded, counter-addressed ChaCha8 streams.
//! With the default `parallel` feature the inner loops run on rayon; results
//! are identical with the feature off or under any thread count.

// `!(x > 0.0)` is used on purpose in validation: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod harness;
pub mod homodyne_sim;
mod par;
pub mod quantum_states;
pub mod rng;
pub mod sideband_scheme;
pub mod spdm_sim;

pub use error::{Error, Result};
pub use estimation::{FluxEstimate, Method, OpticalPath};
pub use homodyne_sim::{HomodyneConfig, VarianceEstimate};
pub use par::with_threads;
pub use quantum_states::{Complex64, QuadratureVariance, SidebandField};
pub use sideband_scheme::{SchemeConfig, ShiftDirection};
pub use spdm_sim::{CountRecord, EstimatorMode, SpdmConfig};
