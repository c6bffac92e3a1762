//! Full-connectivity probability of dense wireless networks confined in
//! convex right prisms.
//!
//! The crate is split the same way the computation is:
//!
//! * [`geometry`] builds domains (right prisms, the "house" prism, the
//!   half-cylinder), enumerates their boundary features and samples points.
//! * [`channel`] holds the pair connectedness functions `H(r)`.
//! * [`analytic`] evaluates the closed-form boundary contributions and
//!   assembles the outage probability `P_out = 1 - P_fc`.
//! * [`quadrature`] is an independent numeric oracle for every closed form,
//!   and the fallback pipeline for link models without one.
//! * [`simulator`] estimates `P_fc` by Monte Carlo.

pub mod analytic;
pub mod channel;
mod error;
pub mod geometry;
pub mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
