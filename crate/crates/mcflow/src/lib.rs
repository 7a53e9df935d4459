//! Numerics for Gaussian entropy, mean curvature flow, and self-shrinking
//! solitons of plane curves (closed polygons) and rotationally symmetric
//! surfaces in 3-space (profile polylines in the (r, z) half-plane).
//!
//! The crate is organized around:
//! - [`geometry`]: discrete hypersurface representations and pointwise
//!   differential-geometric quantities (normal, mean curvature, |A|²,
//!   shrinker residual, containment tests);
//! - [`entropy`]: the Gaussian area functional at a center and scale, its
//!   supremum over centers and scales, and closed forms for spheres,
//!   generalized cylinders, and minimal cones;
//! - [`shrinkers`]: exact model shrinkers plus discovery of the closed
//!   Abresch–Langer curves and the rotationally symmetric shrinking torus
//!   by ODE shooting;
//! - [`flow`]: explicit and semi-implicit time stepping of mean curvature
//!   flow and its rescaled variant, the correspondence between the two,
//!   singularity detection, parabolic tangent rescalings, and the closed
//!   blow-up time bound;
//! - [`stability`]: the discrete second-variation operator on a shrinker,
//!   its lowest eigenpair, and the entropy-decreasing inward perturbation;
//! - [`properties`]: a verification harness turning evolution identities and
//!   monotonicity laws into numerical pass/fail reports;
//! - [`pipeline`]: the end-to-end experiment (shoot, perturb, flow to a
//!   singularity, rescale, fit) producing a structured report;
//! - [`io`]: the shared line-oriented surface file format and trace CSV.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN, which the
// suggested `x <= 0.0` would accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod flow;
pub mod shrinkers;
pub mod stability;
pub mod table;
pub mod error;
pub mod fmt;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod properties;

pub use error::{Error, Result};
pub use geometry::{DiscreteCurve, GeomQuantities, ProfileSurface, Shape};
