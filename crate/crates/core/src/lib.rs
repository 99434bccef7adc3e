//! Analog compression of subshifts of `[0,1]^Z` at dyadic resolution.
//!
//! The crate estimates metric mean dimension, mean box dimension and
//! rate-distortion functions of admissible signal sets, builds
//! compressor/decompressor pairs with Hölder decoders, and checks the
//! inequalities that tie those quantities together.
//!
//! Everything lives on a dyadic grid ([`model::DyadicGrid`]) so that
//! roundtrips and covering counts are exact integers rather than
//! floating point guesses.

// Negated comparisons are how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod config;
pub mod dimension;
pub mod error;
pub mod harness;
pub mod model;
pub mod ratedist;
pub mod rng;
pub mod spacefill;

pub use error::{Error, Result};
