//! Simulation of STIRAP-based deceleration and acceleration of Gaussian
//! atomic wave packets, with analytic bounds on non-adiabatic loss.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`] — atoms, pulses, steps, plans, packets and momentum grids;
//! * [`hamiltonian`] — slice Hamiltonians, adiabatic eigensystems and the
//!   coefficients of the adiabatic-frame coupling;
//! * [`propagator`] — brute-force integration of single momentum slices;
//! * [`wavepacket`] — closed-form packet transport and pulse-train compression;
//! * [`bounds`] — Dyson-series and equivalent-transformation error bounds;
//! * [`config`], [`design`], [`io`], [`verify`] — scenario files, pulse-train
//!   design, table output and named self-checks used by the CLI.

pub mod bounds;
pub mod config;
pub mod design;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod model;
pub mod numerics;
pub mod propagator;
pub mod units;
pub mod verify;
pub mod wavepacket;

pub use error::{Error, ErrorCategory, Result};
