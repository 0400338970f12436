//! Simulator and pulse-design toolkit for ultrafast quantum state transfer
//! between two three-level (lambda) atoms coupled through a common cavity
//! mode, using invariant-based shortcut-to-adiabaticity pulse engineering.
//!
//! The crate is organized around the physical pipeline:
//!
//! - [`hilbert`]: product basis for M atoms + a Fock-truncated cavity mode,
//!   Hamiltonians, excitation operator, projectors, collapse operators.
//! - [`pulses`]: every time-dependent control family (sinusoidal STA pair,
//!   Gaussian-refit couplings, STIRAP baseline) plus fluctuation
//!   perturbations.
//! - [`invariant`]: the dynamical invariant, its eigenstructure, the
//!   inverse-engineering map from auxiliary angles to controls, and phase
//!   quadrature.
//! - [`dynamics`]: Schr\u{f6}dinger and Lindblad propagation with strict
//!   norm/trace/positivity accounting, plus population/fidelity extraction.
//! - [`experiments`]: scenario runners (fidelity scans, population
//!   trajectories, least-squares pulse refit, robustness and decoherence
//!   grids) with pinned pass/fail thresholds.
//! - [`config`] and [`cli`]: plain-text run configuration and the
//!   command-line dispatcher writing CSV/JSON artifacts.
//!
//! Units: all couplings and rates are angular frequencies in rad/us, all
//! times are in us. A value quoted as "X * 2pi MHz" enters as 2pi*X rad/us.
//! The core contains no randomness; identical inputs produce byte-identical
//! outputs.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod experiments;
pub mod hilbert;
pub mod invariant;
pub mod linalg;
pub mod ode;
pub mod pulses;
pub mod report;
pub mod units;

pub use linalg::C64;
