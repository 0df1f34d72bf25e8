//! Device-independent entanglement witnesses for GHZ-class tripartite states
//! and their enhancement through a multiple entanglement swapping network.
//!
//! The crate is organized bottom-up:
//!
//! - [`qlin`]: dense complex matrices over qubits
//! - [`states`]: the noisy GHZ-class inputs and the closed-form swapped state
//! - [`network`]: the nine-qubit swapping protocol and its post-selection
//! - [`witnesses`]: Born-rule statistics and the five witness expressions
//! - [`optimize`]: multi-start simplex maximization, thresholds, closed forms
//! - [`scan`]: parameter sweeps, region classification and CSV output
//! - [`cli`]: the `diew` command-line front end
//!
//! Data-parallel loops (optimizer restarts, outcome patterns, grid points) go
//! through [`par`], which uses rayon when the `parallel` feature is enabled.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod network;
pub mod optimize;
pub mod par;
pub mod qlin;
pub mod scan;
pub mod states;
pub mod witnesses;

pub use error::{Error, Result};
pub use qlin::{CMatrix, Complex};
