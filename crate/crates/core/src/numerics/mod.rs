//! Shared numerical machinery: the bisquare loss, Mahalanobis geometry, the
//! Gaussian elliptical model, radial quadrature and tuning-constant calibration.

mod calibrate;
mod geometry;
mod model;
mod quadrature;
mod rho;
mod root;

pub use calibrate::{calibrate_c, BRACKET_CAP};
pub use geometry::{mahalanobis_sq, Metric};
pub use model::{EllipticalModel, Radial};
pub use quadrature::{radial_expectation, RadialQuadrature, DEFAULT_NODES};
pub use rho::{ArgConvention, RhoFamily, RhoSpec, RhoValue};
pub use root::bisect_decreasing;
