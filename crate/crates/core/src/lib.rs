//! Distance majorization for constrained smooth minimization.
//!
//! The toolkit minimizes a smooth loss over an intersection of closed convex
//! sets by replacing each indicator with a squared-distance penalty and
//! majorizing `dist(x, C)^2` by `||x - P_C(x_n)||^2`. Each MM step needs only
//! the projections onto the individual sets, never onto their intersection.
//!
//! Module map:
//!
//! - [`projections`]: projection oracles for the elementary convex sets.
//! - [`penalty`]: the MM engine, penalty schedules and solve traces.
//! - [`acceleration`]: secant quasi-Newton extrapolation with a descent safeguard.
//! - [`dual`]: dual proximal-gradient and FISTA solvers for strongly convex losses.
//! - [`bregman`]: Bregman divergences, projections and the feasibility step.
//! - [`applications`]: isotone and convex regression, SVMs, the fire-station
//!   problem, doubly nonnegative projection, and the cosine SUMMA demo.
//! - [`robust`]: Tukey biweight regression with its curvature bound.
//! - [`io`] and [`synthetic`]: CSV ingestion, summaries and seeded generators.

pub mod acceleration;
pub mod applications;
pub mod bregman;
pub mod dual;
pub mod error;
pub mod io;
pub mod linalg;
pub mod penalty;
pub mod projections;
pub mod robust;
pub mod synthetic;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
