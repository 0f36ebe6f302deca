//! Adaptive loop-based single-photon subtraction in a truncated Fock basis.
//!
//! States are density matrices over `cutoff` Fock levels per mode. The
//! [`channels`] module models a weakly reflecting tap followed by a click
//! detector, repeated in a loop until the detector fires or the step budget
//! runs out; [`distillation`] runs that loop on both arms of a two-mode
//! state.

pub mod channels;
pub mod distillation;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod states;
pub mod sweep;

pub use channels::{
    adaptive_subtraction, approx_adaptive_subtraction, ideal_subtraction, max_success_probability,
    single_step_subtraction, tap_kraus, DetectorModel, SubtractionResult,
};
pub use distillation::{distill, frontier, DistillationResult};
pub use error::{Error, Result};
pub use fock::{DensityOperator, FockVector, Truncation};
pub use states::StateSpec;
