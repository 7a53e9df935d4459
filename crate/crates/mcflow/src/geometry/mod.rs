//! Discrete hypersurface representations and their pointwise
//! differential-geometric quantities.
//!
//! Two representations are supported: a closed oriented polygon in the plane
//! (a hypersurface for ambient dimension 2) and a profile polyline in the
//! (r, z) half-plane generating a rotationally symmetric surface in 3-space.
//! All curvature conventions are fixed so that the outward unit normal `n`
//! gives positive mean curvature on convex bodies: `H` is the sum of the
//! principal curvatures toward the outward side, so the round circle of
//! radius `R` has `H = 1/R` and the round sphere `H = 2/R`.

mod contains;
mod curve;
mod resample;
mod revolution;

pub use contains::{contains, ContainsResult};
pub use curve::DiscreteCurve;
pub use resample::{
    cumulative_lengths, hausdorff_distance, point_polyline_distance, polyline_length,
    resample_closed, resample_open,
};
pub use revolution::{ProfileSurface, ProfileTopology};

use nalgebra::Vector2;

/// Per-vertex differential-geometric quantities of a discrete hypersurface.
///
/// `mean_curvature` is the sum of principal curvatures with respect to the
/// outward normal; `shrinker_residual` is `phi = H - <x, n>/2`, which
/// vanishes exactly on a self-shrinker.
#[derive(Clone, Debug)]
pub struct GeomQuantities {
    /// Outward unit normal (in the profile plane for surfaces of revolution).
    pub normal: Vec<Vector2<f64>>,
    /// Mean curvature H.
    pub mean_curvature: Vec<f64>,
    /// Squared norm of the second fundamental form.
    pub second_fundamental_sq: Vec<f64>,
    /// Pairing <x, n> of position with the outward normal (3-d pairing for
    /// surfaces of revolution).
    pub position_normal: Vec<f64>,
    /// phi = H - <x, n>/2.
    pub shrinker_residual: Vec<f64>,
    /// Dual-cell measure: arclength weight for curves, ring area 2*pi*r*ds
    /// for revolution profiles.
    pub measure: Vec<f64>,
    /// Principal curvature pairs (profile, ring) for surfaces of revolution.
    pub principal: Option<Vec<(f64, f64)>>,
    pub quality: MeshQuality,
}

impl GeomQuantities {
    pub fn len(&self) -> usize {
        self.mean_curvature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_curvature.is_empty()
    }

    pub fn min_phi(&self) -> f64 {
        self.shrinker_residual
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_phi(&self) -> f64 {
        self.shrinker_residual
            .iter()
            .fold(0.0f64, |m, p| m.max(p.abs()))
    }

    /// max over vertices of |A| = sqrt(|A|^2).
    pub fn max_abs_a(&self) -> f64 {
        self.second_fundamental_sq
            .iter()
            .fold(0.0f64, |m, a| m.max(a.abs()))
            .sqrt()
    }

    /// max over vertices of |A|^2 / phi^2, or None if phi vanishes somewhere.
    pub fn max_ratio_sq(&self) -> Option<f64> {
        let mut worst = 0.0f64;
        for (a2, phi) in self
            .second_fundamental_sq
            .iter()
            .zip(&self.shrinker_residual)
        {
            if *phi <= 0.0 {
                return None;
            }
            worst = worst.max(a2 / (phi * phi));
        }
        Some(worst)
    }
}

/// Mesh-quality report consumed by flow steps for re-meshing triggers.
#[derive(Clone, Debug)]
pub struct MeshQuality {
    pub min_edge: f64,
    pub max_edge: f64,
    /// Indices whose curvature stencil was collinear to machine tolerance
    /// (curvature set to zero there).
    pub degenerate: Vec<usize>,
}

impl MeshQuality {
    pub fn edge_ratio(&self) -> f64 {
        if self.min_edge > 0.0 {
            self.max_edge / self.min_edge
        } else {
            f64::INFINITY
        }
    }
}

/// A discrete hypersurface in either supported representation.
#[derive(Clone, Debug)]
pub enum Shape {
    Curve(DiscreteCurve),
    Revolution(ProfileSurface),
}

impl Shape {
    /// Intrinsic dimension: 1 for curves, 2 for surfaces of revolution.
    pub fn dimension(&self) -> usize {
        match self {
            Shape::Curve(_) => 1,
            Shape::Revolution(_) => 2,
        }
    }

    /// Ambient dimension n + 1.
    pub fn ambient_dim(&self) -> usize {
        self.dimension() + 1
    }

    pub fn quantities(&self) -> GeomQuantities {
        match self {
            Shape::Curve(c) => c.quantities(),
            Shape::Revolution(p) => p.quantities(),
        }
    }

    /// The defining point list: polygon vertices, or profile points in (r, z).
    pub fn points(&self) -> &[Vector2<f64>] {
        match self {
            Shape::Curve(c) => c.vertices(),
            Shape::Revolution(p) => p.profile(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.points().len()
    }

    /// Extent of the surface in ambient space (bounding-box diagonal).
    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Curve(c) => c.diameter(),
            Shape::Revolution(p) => p.diameter(),
        }
    }

    /// Measure-weighted centroid, given in ambient coordinates. For surfaces
    /// of revolution this lies on the symmetry axis, reported as (0, z).
    pub fn weighted_centroid(&self) -> Vector2<f64> {
        let q = self.quantities();
        let pts = self.points();
        let total: f64 = q.measure.iter().sum();
        match self {
            Shape::Curve(_) => {
                let mut c = Vector2::zeros();
                for (p, w) in pts.iter().zip(&q.measure) {
                    c += p * *w;
                }
                if total > 0.0 {
                    c / total
                } else {
                    Vector2::zeros()
                }
            }
            Shape::Revolution(_) => {
                let mut z = 0.0;
                for (p, w) in pts.iter().zip(&q.measure) {
                    z += p.y * *w;
                }
                Vector2::new(0.0, if total > 0.0 { z / total } else { 0.0 })
            }
        }
    }

    pub fn min_edge(&self) -> f64 {
        self.quantities().quality.min_edge
    }

    pub fn max_edge(&self) -> f64 {
        self.quantities().quality.max_edge
    }
}

/// Signed circumscribed-circle curvature of a plane vertex triple: the
/// inverse circumradius, positive for a counterclockwise turn. None when the
/// triple is collinear to machine tolerance.
pub fn plane_menger(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> Option<f64> {
    menger_curvature(a, b, c)
}

/// Signed Menger curvature of the vertex triple (a, b, c): the inverse
/// circumradius, positive when the triple turns counterclockwise. Returns
/// None when the triple is collinear to machine tolerance.
pub(crate) fn menger_curvature(
    a: Vector2<f64>,
    b: Vector2<f64>,
    c: Vector2<f64>,
) -> Option<f64> {
    let ab = b - a;
    let ac = c - a;
    let bc = c - b;
    let denom = ab.norm() * ac.norm() * bc.norm();
    if denom == 0.0 {
        return None;
    }
    let cross = ab.x * ac.y - ab.y * ac.x;
    // Collinear to machine tolerance: |cross| is twice the triangle area.
    if cross.abs() < 1e-14 * ab.norm() * ac.norm() {
        return None;
    }
    Some(2.0 * cross / denom)
}

/// Unit tangent at b from the chord through its neighbors, rotated clockwise
/// to give the outward normal of a counterclockwise curve.
pub(crate) fn chord_normal(a: Vector2<f64>, c: Vector2<f64>) -> Option<Vector2<f64>> {
    let chord = c - a;
    let len = chord.norm();
    if len == 0.0 {
        return None;
    }
    let t = chord / len;
    Some(Vector2::new(t.y, -t.x))
}

/// Strict segment-crossing test used by simplicity checks. Shared endpoints
/// do not count; near-degenerate configurations are treated conservatively
/// as crossings.
pub(crate) fn segments_cross(
    p1: Vector2<f64>,
    p2: Vector2<f64>,
    q1: Vector2<f64>,
    q2: Vector2<f64>,
) -> bool {
    let orient = |a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>| -> f64 {
        (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    };
    let scale = (p2 - p1).norm().max((q2 - q1).norm());
    let eps = 1e-13 * scale * scale;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    // On-segment touching counts as a crossing for simplicity purposes.
    let on_segment = |a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>, d: f64| -> bool {
        d.abs() <= eps
            && c.x >= a.x.min(b.x) - eps
            && c.x <= a.x.max(b.x) + eps
            && c.y >= a.y.min(b.y) - eps
            && c.y <= a.y.max(b.y) + eps
    };
    on_segment(q1, q2, p1, d1)
        || on_segment(q1, q2, p2, d2)
        || on_segment(p1, p2, q1, d3)
        || on_segment(p1, p2, q2, d4)
}

/// True when the closed polygon has no improper self-crossings. Adjacent
/// edges (sharing a vertex) are skipped.
pub(crate) fn polygon_is_simple(vertices: &[Vector2<f64>]) -> bool {
    !polyline_self_intersects(vertices, true)
}

/// Grid-accelerated self-intersection test for a polyline; adjacent edges
/// are skipped. Used by ingestion checks and by flow-step safety checks.
pub(crate) fn polyline_self_intersects(points: &[Vector2<f64>], closed: bool) -> bool {
    use std::collections::HashMap;
    let n = points.len();
    let n_seg = if closed { n } else { n - 1 };
    if n_seg < 2 {
        return false;
    }
    let seg = |i: usize| (points[i], points[(i + 1) % n]);
    let mut cell = 0.0f64;
    for i in 0..n_seg {
        let (a, b) = seg(i);
        cell = cell.max((b - a).norm());
    }
    if cell <= 0.0 {
        return false;
    }
    let key = |p: Vector2<f64>| -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..n_seg {
        let (a, b) = seg(i);
        let (kx0, ky0) = key(Vector2::new(a.x.min(b.x), a.y.min(b.y)));
        let (kx1, ky1) = key(Vector2::new(a.x.max(b.x), a.y.max(b.y)));
        for kx in kx0..=kx1 {
            for ky in ky0..=ky1 {
                grid.entry((kx, ky)).or_default().push(i);
            }
        }
    }
    let adjacent = |i: usize, j: usize| -> bool {
        let d = i.abs_diff(j);
        d <= 1 || (closed && d == n_seg - 1)
    };
    for bucket in grid.values() {
        for (ii, &i) in bucket.iter().enumerate() {
            for &j in &bucket[ii + 1..] {
                if adjacent(i, j) {
                    continue;
                }
                let (a1, a2) = seg(i);
                let (b1, b2) = seg(j);
                if segments_cross(a1, a2, b1, b2) {
                    return true;
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn menger_of_circle_points_is_exact() {
        let r = 3.0;
        let p = |t: f64| Vector2::new(r * t.cos(), r * t.sin());
        let k = menger_curvature(p(0.1), p(0.2), p(0.35)).unwrap();
        assert!((k - 1.0 / r).abs() < 1e-12);
        // Clockwise order flips the sign.
        let k = menger_curvature(p(0.35), p(0.2), p(0.1)).unwrap();
        assert!((k + 1.0 / r).abs() < 1e-12);
    }

    #[test]
    fn menger_collinear_is_none() {
        let a = Vector2::new(0.0, 0.0);
        let b = Vector2::new(1.0, 0.0);
        let c = Vector2::new(2.5, 0.0);
        assert!(menger_curvature(a, b, c).is_none());
    }

    #[test]
    fn simple_polygon_detects_bowtie() {
        let square = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        assert!(polygon_is_simple(&square));
        let bowtie = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
        ];
        assert!(!polygon_is_simple(&bowtie));
    }
}
