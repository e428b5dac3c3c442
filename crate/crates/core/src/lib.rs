//! Delayed stochastic integrals against fractional Brownian motion.
//!
//! Every fBm B_H, H ∈ [1/2, 1), is synthesized from one driving Brownian
//! path through the Mandelbrot-Van Ness moving average, so quantities at
//! different H share their noise. Integrals of segment-predictable
//! integrands split into an Itô integral of the transformed integrand G_H
//! and a Lebesgue integral against 𝒟R_H, the time derivative of the
//! history part of the fBm increment; general integrands are reached by
//! dyadic conditional projections.

pub mod conv;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hurst;
pub mod integrand;
pub mod integrator;
pub mod kernel;
pub mod noise;
pub mod process;
pub mod rng;
pub mod scheme;
pub mod stats;

pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use grid::{SegmentGrid, SimulationGrid};
pub use hurst::{hurst_constant, HurstParameter};
pub use integrand::{
    dyadic_projection, parse_integrand, x_norm, y_norm, Deterministic, InformationSchedule, Integrand,
    IntegrandSpec, PathContext, PiecewisePredictable, QuadraticBrownian, WienerKernel, XNorm, YNorm,
};
pub use integrator::{
    delayed_integral_xd, delayed_segment, extended_integral, ito_integral, riemann_fbm_integral,
    DelayedIntegralResult, ExtensionTrace,
};
pub use kernel::{gh_transform, mvn_kernel, truncation_horizon, PowerKernelCell, SampledFunction};
pub use noise::NoisePath;
pub use process::{
    dr_energy_closed_form, dr_second_moment_closed_form, synthesize_dr, synthesize_fbm, synthesize_w,
    ProcessKind, ProcessPath,
};
pub use scheme::MvnScheme;
pub use stats::MCResult;
