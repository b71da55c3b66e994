//! Phase-oscillator networks with distance-dependent conduction delays.
//!
//! The crate integrates the delayed Kuramoto model and its phase-lag and
//! complex-valued counterparts, builds the complex delay operator
//! `W = epsilon * exp(-i omega tau) ∘ A`, and uses the arguments of its
//! eigenvectors to predict which spatiotemporal pattern the nonlinear
//! network settles into.
//!
//! Modules:
//! - [`netgen`]: ring and geometric networks, delays, file loader
//! - [`spectral`]: delay operator, circulant and dense eigenspectra
//! - [`dynamics`]: Euler integrators and the renormalized complex flow
//! - [`analysis`]: order parameters, mode projections, pattern matching
//! - [`batch`]: parallel or sequential evaluation of independent cells
//! - [`export`]: CSV writers

use std::f64::consts::{PI, TAU};

pub mod analysis;
pub mod batch;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod netgen;
pub mod spectral;

pub use error::{Error, Result};

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let r = theta - TAU * ((theta + PI) / TAU).floor();
    if r >= PI {
        r - TAU
    } else if r < -PI {
        r + TAU
    } else {
        r
    }
}

/// Shortest angular separation, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}
