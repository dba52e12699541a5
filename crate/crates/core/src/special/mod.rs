//! Special functions: J-Bessel, log-Gamma and Gamma ratios, zeta, and Mellin
//! transforms of smooth weights.

pub mod bessel;
pub mod gamma;
pub mod mellin;
pub mod zeta;

pub use bessel::bessel_j;
pub use gamma::{gamma_ratio, gamma_ratio_power, ln_gamma, ln_gamma_complex};
pub use mellin::{contour_integral, mellin, ContourSettings, ContourValue, SmoothWeight};
pub use zeta::{zeta, zeta_continued};
