//! Numerical special functions: complex log-gamma, polygamma, incomplete
//! gamma, and univariate / bivariate Fox H-function evaluation built on
//! gamma-factor kernels.

pub mod bivariate;
pub mod contour;
pub mod foxh;
pub mod gamma;
pub mod kernel;
pub mod series;

pub use bivariate::{
    fox_h_bivariate, fox_h_bivariate_with_error, BivBlock, BivFactor, BivariateHParams,
};
pub use contour::{Abscissa, ContourPolicy};
pub use foxh::{fox_h, fox_h_series, fox_h_series_with_error, fox_h_with_error, HParams};
pub use gamma::{
    digamma, erfc, gamma_p, gamma_q, gamma_signed, ln_abs_gamma_signed, ln_gamma_real,
    log_gamma_complex, polygamma,
};
pub use kernel::{GammaFactor, GammaKernel};
