//! Finite-element simulator for thermoviscoelastic adhesive contact with
//! entropy-based temperature equations.

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod monotone;
pub mod output;
pub mod presets;
pub mod scenario;
pub mod stepper;
pub mod study;

pub use error::{Error, Result};
