//! Robust multivariate location and scatter under flexible contamination models.
//!
//! The crate covers four layers:
//!
//! - [`numerics`]: the Tukey bisquare loss, Mahalanobis geometry, the Gaussian
//!   elliptical model, radial quadrature and tuning-constant calibration.
//! - [`contamination`]: indicator laws and generators for rowwise (FDCM),
//!   cellwise (FICM) and the two intermediate (PSICM, PCICM) models.
//! - [`estimators`]: sample mean, coordinatewise median and S, M-location,
//!   S-estimator, MCD and MVE.
//! - [`influence`]: generalized influence functions, their finite-ε oracle and
//!   gross-error sensitivities.
//!
//! [`experiments`] wires these together into reproducible, seeded studies that
//! write CSV/JSON reports.

pub mod contamination;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod influence;
pub mod io;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
