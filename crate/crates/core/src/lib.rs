//! Reinforcement learning on top of the Active Learning Method.
//!
//! Data are spread as ink drops on input-vs-output planes ([`grid`]), the
//! planes are condensed into fuzzy rule bases ([`alm`], [`fuzzy`]), a
//! Reward-Penalty-Plane critic scores states ([`critic`]), and a stochastic
//! action modifier explores around the rule base's recommendation
//! ([`actor`]). [`learner`] ties these together on the plants in [`envs`].
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod actor;
pub mod alm;
pub mod critic;
pub mod envs;
pub mod error;
pub mod fuzzy;
pub mod grid;
pub mod learner;
pub mod presets;

pub use error::{Error, Result};
