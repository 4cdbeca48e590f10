//! Simulation of anonymous conference key agreement over GHZ states.
//!
//! [`qsim`] holds the state-vector and density-matrix kernel, [`netmodel`] the
//! round-based network with a recorded transcript, [`protocols`] the five
//! protocols, [`adversary`] injected deviations, [`analysis`] the statistics,
//! and [`cli`] the batch runner used by the `anon-cka` binary.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod netmodel;
pub mod protocols;
pub mod qsim;
pub mod rng;
