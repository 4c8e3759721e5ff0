//! Symmetric pure-jump Lévy processes: α-stable and radial-density models,
//! kernel quadrature and truncated compound-Poisson sampling.

mod cache;
mod model;
mod quad;
mod sampler;
mod testfn;

pub use cache::GridCache;
pub use model::{sphere_area, stable_constant, LevyModel, LevySpec, RadialDensity, TruncationPolicy};
pub use quad::{char_exponent, char_exponent_quadrature, kernel_integral, radial_integral, sphere_integral, KERNEL_RTOL};
pub use sampler::{sample_levy_path, write_event_log, LevySampler, MonotoneCubic, DEFAULT_KNOTS};
pub use testfn::{Profile, TestFunction};

/// A point of `R^N`.
pub type Point = Vec<f64>;
