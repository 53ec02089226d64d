//! Wideband near-field localization with uniform linear arrays.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the pipeline:
//!
//! * [`geometry`]: array layout, exact and Fresnel distances, steering vectors.
//! * [`signal`]: per-subcarrier OFDM uplink synthesis with path loss and AWGN.
//! * [`subspace`]: sample covariance and Hermitian eigendecomposition.
//! * [`estimator_sf`]: subspace-fitting wideband 2D MUSIC over (range, angle).
//! * [`estimator_fresnel`]: low-complexity MUSIC that estimates angles from the
//!   covariance anti-diagonal and then runs a 1D range search per angle.
//! * [`experiment`]: Monte Carlo trials, estimate matching and NMSE.
//!
//! File formats, the parallel sweep driver and the CLI live in the `nearfield`
//! crate.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

mod error;
pub mod estimator_fresnel;
pub mod estimator_sf;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod search;
pub mod signal;
pub mod subspace;

pub use error::{Error, Result};
pub use geometry::{ArrayConfig, FrequencyGrid, Target, SPEED_OF_LIGHT};
pub use linalg::{CMatrix, C64};
