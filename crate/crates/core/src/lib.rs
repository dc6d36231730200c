//! Truncated Fock-space simulation of Hong-Ou-Mandel interference of
//! two-mode squeezed vacuum, together with the detector-chain model
//! (binomial loss, time-multiplexed click detection, deconvolution) and the
//! photon-number correlation measures used to judge separability.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod combinatorics;

pub mod detection;
pub mod distribution;
pub mod error;
pub mod fock;
pub mod interference;
pub mod io;
pub mod measures;
pub mod pipeline;

pub use distribution::{JointDistribution, Provenance};
pub use error::{Error, Result};
