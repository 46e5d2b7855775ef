//! Simulator and verification library for finite-dimensional quantum clocks.
//!
//! The library builds constrained "Universe" states over a clock ⊗ system
//! bipartition, recovers relational Schrödinger dynamics by conditioning on
//! clock time states, and implements the time-dilated Schrödinger equation
//! together with the TiDIT (Time-Dilation induced Interaction Transfer)
//! effective-Hamiltonian construction for gravitational-like clock couplings.
//!
//! Internal units use ħ = 1 and frequencies in radians per time unit.
//!
//! Module map:
//! - [`tensor`]: dense complex operators, states, eigendecompositions,
//!   Schmidt data, partial traces.
//! - [`clock`]: clock models, time states, spectrum classification and
//!   resolutions of the identity.
//! - [`universe`]: constraint solving, history states and conditioning.
//! - [`tidit`]: redshift operators, geometric-series inverses, effective
//!   Hamiltonians, time-dilated propagation and degenerate splits.
//! - [`config`], [`runner`], [`presets`], [`verify`]: the config-driven
//!   batch experiment layer behind the CLI.

pub mod clock;
pub mod config;
pub mod error;
pub mod grid;
pub mod presets;
pub mod runner;
pub mod tensor;
pub mod tidit;
pub mod universe;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
