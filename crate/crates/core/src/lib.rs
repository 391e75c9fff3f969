//! Numerical laboratory for experience-centric quantum dynamics.
//!
//! Closed quantum systems are evolved under Hamiltonians that depend on the
//! system's own state history (past density operators at fixed memory
//! distances).  The crate is organised bottom-up:
//!
//! * [`qstate`] — density operators, pure-state histories, n-point overlaps,
//!   partial traces.
//! * [`echam`] — declarative history-dependent Hamiltonians and their per-step
//!   assembly.
//! * [`integrator`] — delay-aware unitary time stepping and trajectories.
//! * [`reform`] — rewriting ordinary Hamiltonians as history-dependent ones
//!   (one-qubit closed forms and the general trace-identity solver).
//! * [`deform`] — closed-form oracles for derivative-coupled deformations
//!   (localization laws, landing times, Lyapunov functions).
//! * [`phases`] — feature extraction and behavioural-phase classification.
//! * [`circuit`] — gate-level simulation of the controlled-SWAP protocol.
//! * [`cli`] — run configuration, sweeps and result persistence.
//!
//! Units: ħ = 1 and times are measured in inverse energy.

pub mod circuit;
pub mod cli;
pub mod deform;
pub mod echam;
mod error;
pub mod integrator;
pub mod linalg;
pub mod phases;
pub mod qstate;
pub mod reform;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
