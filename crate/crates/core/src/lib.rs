//! Simulation of stochastic differential inclusions
//! `dX ∈ -A(X) dt - ε(t) X dt + σ(t, X) dB` for maximal monotone `A`,
//! including operators whose domain has empty interior.
//!
//! ```
//! use monotone_sdi::fixtures;
//! use monotone_sdi::integrator::{Grid, Integrator};
//! use monotone_sdi::linalg::Vector;
//! use monotone_sdi::noise::{NoiseModel, Schedule, TikhonovSchedule};
//!
//! // x + N_C(x) with C = {x1 + x2 = 1}
//! let op = fixtures::affine_cone();
//! let noise = NoiseModel::isotropic(2, Schedule::PowerDecay { sigma0: 0.5, p: 1.0 })?;
//! let grid = Grid::new(1.0 / 128.0, 10.0)?;
//! let integ = Integrator::new(op, noise, TikhonovSchedule::Off, grid)?;
//! let path = integ.simulate_path(&Vector::from_vec(vec![1.0, 0.0]), 7, 0)?;
//! let x = path.x.last().unwrap();
//! assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
//! assert!(path.decomposition_residual() < 1e-9);
//! # Ok::<(), monotone_sdi::Error>(())
//! ```

// `!(a <= b)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod integrator;
pub mod linalg;
pub mod noise;
pub mod operator;
pub mod rng;
pub mod report;
pub mod scenario;
pub mod subspace;

pub use error::{Error, Result};
