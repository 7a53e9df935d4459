//! Region containment tests between discrete hypersurfaces of the same kind.

use nalgebra::Vector2;

use super::{point_polyline_distance, DiscreteCurve, ProfileSurface, Shape};
use crate::error::{Error, Result};

/// Outcome of a containment query. `Indeterminate` is returned when some
/// tested vertex lies within tolerance of the boundary, so strict inclusion
/// cannot be certified either way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContainsResult {
    Contains,
    DoesNotContain,
    Indeterminate,
}

impl ContainsResult {
    pub fn is_contains(self) -> bool {
        self == ContainsResult::Contains
    }
}

/// Relative boundary tolerance (scaled by the outer surface's diameter).
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

/// True iff every vertex of `inner` lies in the open region bounded by
/// `outer`. Curves use ray casting (even-odd for simple curves, positive
/// winding for immersed ones); surfaces of revolution test profile vertices
/// against the profile region in the (r, z) half-plane.
pub fn contains(outer: &Shape, inner: &Shape) -> Result<ContainsResult> {
    contains_with_tol(outer, inner, DEFAULT_BOUNDARY_TOL)
}

pub fn contains_with_tol(outer: &Shape, inner: &Shape, rel_tol: f64) -> Result<ContainsResult> {
    match (outer, inner) {
        (Shape::Curve(o), Shape::Curve(i)) => curve_contains(o, i, rel_tol),
        (Shape::Revolution(o), Shape::Revolution(i)) => profile_contains(o, i, rel_tol),
        _ => Err(Error::ShapeMismatch(
            "containment requires two curves or two surfaces of revolution".into(),
        )),
    }
}

fn classify(
    points: &[Vector2<f64>],
    boundary: &[Vector2<f64>],
    boundary_closed: bool,
    tol: f64,
    is_inside: impl Fn(Vector2<f64>) -> bool,
) -> ContainsResult {
    let mut any_indeterminate = false;
    let mut all_in = true;
    for &p in points {
        if point_polyline_distance(p, boundary, boundary_closed) <= tol {
            any_indeterminate = true;
            continue;
        }
        if !is_inside(p) {
            all_in = false;
        }
    }
    if !all_in {
        ContainsResult::DoesNotContain
    } else if any_indeterminate {
        ContainsResult::Indeterminate
    } else {
        ContainsResult::Contains
    }
}

fn curve_contains(
    outer: &DiscreteCurve,
    inner: &DiscreteCurve,
    rel_tol: f64,
) -> Result<ContainsResult> {
    let tol = rel_tol * outer.diameter();
    // Even-odd ray casting coincides with winding > 0 for simple
    // counterclockwise curves; the winding form extends to the immersed
    // locally convex inputs, whose interior is covered positively.
    Ok(classify(
        inner.vertices(),
        outer.vertices(),
        true,
        tol,
        |p| outer.winding_number(p) > 0,
    ))
}

fn profile_contains(
    outer: &ProfileSurface,
    inner: &ProfileSurface,
    rel_tol: f64,
) -> Result<ContainsResult> {
    let tol = rel_tol * outer.diameter();
    // The bounded solid corresponds to a region in the half-plane: for
    // closed profiles the profile polygon itself, for axis-terminated ones
    // the polygon closed through the axis segment (the wrap edge already is
    // that segment since both endpoints sit on r = 0). The axis segment is
    // not part of the surface, so the tolerance band is measured against the
    // profile alone, and points on the axis are nudged off it before the
    // winding test (the region is symmetric across the axis).
    let boundary = outer.profile().to_vec();
    let profile_closed = outer.is_closed_profile();
    let nudge = 10.0 * tol.max(1e-12 * outer.diameter());
    let mut any_indeterminate = false;
    let mut all_in = true;
    for &p in inner.profile() {
        if point_polyline_distance(p, &boundary, profile_closed) <= tol {
            any_indeterminate = true;
            continue;
        }
        let probe = Vector2::new(p.x.max(nudge), p.y);
        if winding(&boundary, probe) == 0 {
            all_in = false;
        }
    }
    Ok(if !all_in {
        ContainsResult::DoesNotContain
    } else if any_indeterminate {
        ContainsResult::Indeterminate
    } else {
        ContainsResult::Contains
    })
}

fn winding(poly: &[Vector2<f64>], p: Vector2<f64>) -> i32 {
    let n = poly.len();
    let mut w = 0i32;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            w -= 1;
        }
    }
    w
}
