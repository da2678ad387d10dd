//! Analytics engine and Monte Carlo simulator for data harvesting through a
//! randomly oriented shell of circular low-Earth orbits.
//!
//! The constellation is modeled as a Cox point process: orbital planes form a
//! Poisson process on a longitude/inclination rectangle (mean `lambda` orbits,
//! inclination density sin(phi)/2), and each orbit independently carries a
//! Poisson number of satellites (mean `mu`) with uniform argument angles. A
//! ground user at the north pole of the reference sphere can reach any
//! satellite within a fixed slant range `gamma`.
//!
//! Modules:
//! - [`geometry`]: pure spherical geometry (visibility cap, arc lengths,
//!   slant distances).
//! - [`channel`]: link budget, Nakagami-m fading (closed-form CCDF and a
//!   seeded sampler), instantaneous SNR.
//! - [`constellation`]: Cox and polar constellation sampling, rigid motion,
//!   Cartesian positions, JSON serialization.
//! - [`analytics`]: closed-form metrics (visible counts, coverage time
//!   fraction, data per pass, harvesting capacity, delay distribution,
//!   moment matching) evaluated by adaptive quadrature.
//! - [`simulator`]: independent Monte Carlo estimators with confidence
//!   intervals; every analytic metric has a simulation counterpart.
//!
//! Conventions: all angles are radians and all lengths are meters internally;
//! decibel and kilometer conversions belong to configuration boundaries, not
//! to this crate's core types.

pub mod analytics;
pub mod channel;
pub mod constellation;
pub mod geometry;
pub mod simulator;
