//! Numerical substrate: special functions, quadrature, the SVD Schmidt
//! oracle and Gaussian peak fitting. Everything here is pure.

pub mod bessel;
pub mod fit;
pub mod quadrature;
pub mod schmidt;

pub use bessel::{bessel_jn, bessel_jn_orders};
pub use fit::{fit_gaussian, fit_gaussian_free_center, GaussianFitResult};
pub use quadrature::{quad2d, QuadratureResult, QuadratureSpec, Scheme};
pub use schmidt::{schmidt_via_svd, KernelGrid};
