//! Knothe-Rosenblatt triangular transport and PAC-Bayesian risk certificates
//! for structured prediction.
//!
//! The crate is organised bottom-up:
//!
//! - [`transport`]: reference measures, monotone triangular maps, inversion,
//!   composition, restriction of the reference to a good set, sampling.
//! - [`dependency`]: local oscillations, couplings from transport, Lipschitz
//!   profiles `L_ij` and the dependency matrices `D` and `Γ`.
//! - [`concentration`]: empirical MGF harness and the sub-Gaussian MGF/tail bounds.
//! - [`bad_set`]: bad-input membership, Hoeffding mass estimates and candidate
//!   selection under a union bound.
//! - [`certificate`]: the risk certificate itself plus its temperature schedule.
//! - [`toy`]: the two-dimensional Bernstein example, its `L_12` landscape and the
//!   bad-set trade-off curve.
//!
//! Every Monte Carlo routine takes an explicit seed and splits work into chunks
//! seeded `seed + chunk_index`, so results do not depend on the thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bad_set;
pub mod certificate;
pub mod concentration;
pub mod dependency;
mod error;
pub mod mc;
pub mod stats;
pub mod toy;
pub mod transport;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
