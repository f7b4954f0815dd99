//! Performance analysis of N-hop amplify-and-forward / decode-and-forward
//! relay links whose transceivers suffer aggregate hardware impairments,
//! over a unified H-function fading model.
//!
//! The crate is organized bottom-up:
//!
//! * [`special_functions`] — complex log-gamma, polygamma, incomplete gamma,
//!   univariate and bivariate Fox H evaluation (contour quadrature and
//!   residue series) over gamma-factor kernels.
//! * [`fading_catalog`] — per-hop SNR distributions (generalized fading
//!   families with optional pointing error), each reduced to a mixture of
//!   H-function kernels, with exact Mellin moments and generative samplers.
//! * [`sndr_core`] — end-to-end signal-to-noise-and-distortion ratio algebra
//!   for impaired relay chains: chain coefficients, ceilings, feasibility
//!   bounds.
//! * [`metrics_af`] / [`metrics_df`] — outage, bit-error probability and
//!   ergodic capacity for fixed-gain AF and DF chains (exact, approximate
//!   and asymptotic engines).
//! * [`hi_optimizer`] — distortion-budget allocation across hops (closed
//!   forms for Nakagami chains, projected numeric search in general).
//! * [`monte_carlo`] — reproducible parallel simulation of the same chain
//!   metrics for cross-validation.

pub mod error;
pub mod fading_catalog;
pub mod hi_optimizer;
pub mod metrics_af;
pub mod metrics_df;
pub mod monte_carlo;
pub mod sndr_core;
pub mod special_functions;

pub use error::{Error, Result};
