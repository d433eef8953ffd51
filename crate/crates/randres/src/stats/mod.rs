//! Shared numerical infrastructure: reproducible RNG streams, integrators
//! with error estimates, confidence intervals, and rate fitting.

pub mod estimate;
pub mod fit;
pub mod integrate;
pub mod rng;

pub use estimate::{median_ci, EstimateCI, MedianCI, Welford, Z95};
pub use fit::{fit_rate, RateFit};
pub use integrate::{
    gamma_half, mc_integrate, quad_0_inf, quad_1d, quad_real_line, radial_integral,
    radial_integral_over, unit_sphere_area,
};
pub use rng::RngStream;
