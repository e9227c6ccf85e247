#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Simulation and estimation toolkit for photon-number-resolving SNSPD
//! readout by optical sampling, and for the photon-subtracted states it
//! heralds.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: truncated Fock-space states, the tap beamsplitter and loss.
//! * [`stategen`]: heralded photon subtraction from squeezed vacuum.
//! * [`sampling`]: SNSPD waveform synthesis, optical sampling through a
//!   dual-output modulator, photon-class discrimination and calibration.
//! * [`tomo`]: homodyne sampling, maximum-likelihood reconstruction,
//!   Wigner functions and bootstrap errors.
//! * [`pipeline`]: configuration presets, experiment orchestration and
//!   report files.

pub mod fock;
pub mod pipeline;
pub mod sampling;
pub mod seed;
pub mod special;
pub mod stategen;
pub mod tomo;
