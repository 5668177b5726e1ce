//! Trajectory generation toolkit for 6-DoF powered descent guidance.
//!
//! The crate pairs a successive-convexification trajectory optimizer with a
//! denoising diffusion model trained on its solutions. At inference time the
//! learned model is composed with differentiable constraint energies
//! (glideslope cones, landing-risk maps) and inpainting masks to produce
//! constraint-aware trajectories that warm-start the optimizer.

pub mod dataset;
pub mod dynamics;
pub mod foh;
pub mod parallel;
pub mod plan;
pub mod quat;
pub mod scaling;
pub mod scenario;
pub mod scvx;
pub mod socp;
