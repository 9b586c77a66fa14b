//! Trace-driven simulator for multi-user, edge-assisted 360° video streaming.
//!
//! The crate models tiled multi-layer video ([`video`]), decode/render
//! placement between headsets and a shared edge computing unit
//! ([`compute`]), trace-driven wireless transmission ([`network`]), per-user
//! playback buffers ([`playback`]) and constrained QoE accounting with
//! self-tuning Lagrange multipliers ([`qoe`]). [`env`] wraps all of it into a
//! reinforcement-learning environment reachable over a line-delimited JSON
//! protocol, and [`baselines`] holds deterministic reference policies plus
//! the evaluation harness.

// `!(x >= 0.0)` guards are deliberate: they reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod compute;
pub mod env;
mod error;
pub mod network;
pub mod playback;
pub mod qoe;
pub mod rng;
pub mod synth;
pub mod video;

pub use error::{Error, Result};
