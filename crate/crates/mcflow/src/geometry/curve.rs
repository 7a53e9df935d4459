use nalgebra::Vector2;

use super::{
    chord_normal, menger_curvature, polygon_is_simple, resample, GeomQuantities, MeshQuality,
};
use crate::error::{Error, Result};

/// Minimum vertex count accepted for a closed discrete curve.
pub const MIN_VERTICES: usize = 8;

/// A closed oriented polygon in the plane, stored counterclockwise so the
/// derived normal points outward. Edges are implicit (wrap-around).
#[derive(Clone, Debug)]
pub struct DiscreteCurve {
    vertices: Vec<Vector2<f64>>,
    simple: bool,
}

impl DiscreteCurve {
    /// Validating constructor: at least [`MIN_VERTICES`] vertices, distinct
    /// consecutive vertices, counterclockwise orientation, and no
    /// self-crossings.
    pub fn new(vertices: Vec<Vector2<f64>>) -> Result<Self> {
        let c = Self::new_allow_self_intersections(vertices)?;
        if !c.simple {
            return Err(Error::InvalidCurve(
                "polygon has self-intersections".into(),
            ));
        }
        Ok(c)
    }

    /// Like [`DiscreteCurve::new`] but accepts self-intersecting (immersed)
    /// polygons such as the closed locally convex shrinking curves with
    /// rotation index above one. The simplicity flag is still computed and
    /// consulted by containment tests and flow safety checks.
    pub fn new_allow_self_intersections(vertices: Vec<Vector2<f64>>) -> Result<Self> {
        Self::validate_basic(&vertices)?;
        if signed_area(&vertices) <= 0.0 {
            return Err(Error::InvalidCurve(
                "polygon must be oriented counterclockwise".into(),
            ));
        }
        let simple = polygon_is_simple(&vertices);
        Ok(Self { vertices, simple })
    }

    /// Cheap constructor for flow-internal steps: skips the quadratic
    /// simplicity test and reuses the caller's knowledge of it.
    pub(crate) fn from_flow_step(vertices: Vec<Vector2<f64>>, simple: bool) -> Result<Self> {
        Self::validate_basic(&vertices)?;
        Ok(Self { vertices, simple })
    }

    fn validate_basic(vertices: &[Vector2<f64>]) -> Result<()> {
        if vertices.len() < MIN_VERTICES {
            return Err(Error::InvalidCurve(format!(
                "need at least {MIN_VERTICES} vertices, got {}",
                vertices.len()
            )));
        }
        let scale = bbox_diag(vertices).max(1e-300);
        let n = vertices.len();
        for i in 0..n {
            let d = (vertices[(i + 1) % n] - vertices[i]).norm();
            if d <= 1e-12 * scale {
                return Err(Error::InvalidCurve(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidCurve("non-finite vertex coordinate".into()));
        }
        Ok(())
    }

    /// Regular polygon on the circle of the given radius, counterclockwise.
    pub fn circle(radius: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Vector2::new(radius * t.cos(), radius * t.sin())
            })
            .collect();
        Self {
            vertices,
            simple: true,
        }
    }

    /// Ellipse with semi-axes (a, b), uniform in the angular parameter.
    pub fn ellipse(a: f64, b: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Vector2::new(a * t.cos(), b * t.sin())
            })
            .collect();
        Self {
            vertices,
            simple: true,
        }
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        self.simple
    }

    /// Re-runs the quadratic self-crossing test and updates the flag.
    pub fn recheck_simplicity(&mut self) -> bool {
        self.simple = polygon_is_simple(&self.vertices);
        self.simple
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn total_length(&self) -> f64 {
        resample::polyline_length(&self.vertices, true)
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        bbox_diag(&self.vertices)
    }

    pub fn translated(&self, v: Vector2<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p + v).collect(),
            simple: self.simple,
        }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|p| Vector2::new(c * p.x - s * p.y, s * p.x + c * p.y))
                .collect(),
            simple: self.simple,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p * factor).collect(),
            simple: self.simple,
        }
    }

    /// Resample to `count` near-uniform arclength vertices with a local cubic
    /// through the existing polygon.
    pub fn resampled(&self, count: usize) -> Result<Self> {
        if count < MIN_VERTICES {
            return Err(Error::InvalidParameter(format!(
                "resample count {count} below minimum {MIN_VERTICES}"
            )));
        }
        let pts = resample::resample_closed(&self.vertices, count);
        Self::from_flow_step(pts, self.simple)
    }

    /// Winding number of the polygon around `p` (counterclockwise positive).
    pub fn winding_number(&self, p: Vector2<f64>) -> i32 {
        let mut winding = 0i32;
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if a.y <= p.y {
                if b.y > p.y && cross(b - a, p - a) > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && cross(b - a, p - a) < 0.0 {
                winding -= 1;
            }
        }
        winding
    }

    /// Per-vertex geometric quantities. Curvature comes from the
    /// circumscribed circle of each vertex triple, normals from the averaged
    /// edge tangent, arclength weights from the half-sum of adjacent edges.
    pub fn quantities(&self) -> GeomQuantities {
        let n = self.vertices.len();
        let mut normal = Vec::with_capacity(n);
        let mut mean = Vec::with_capacity(n);
        let mut a2 = Vec::with_capacity(n);
        let mut pn = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        let mut measure = Vec::with_capacity(n);
        let mut degenerate = Vec::new();
        let mut min_edge = f64::INFINITY;
        let mut max_edge = 0.0f64;

        let edge = |i: usize| -> f64 { (self.vertices[(i + 1) % n] - self.vertices[i]).norm() };
        for i in 0..n {
            let prev = self.vertices[(i + n - 1) % n];
            let here = self.vertices[i];
            let next = self.vertices[(i + 1) % n];
            let a = edge((i + n - 1) % n);
            let b = edge(i);
            min_edge = min_edge.min(b);
            max_edge = max_edge.max(b);

            let k = match menger_curvature(prev, here, next) {
                Some(k) => k,
                None => {
                    degenerate.push(i);
                    0.0
                }
            };
            // Normal from the chord through the neighbors; consecutive
            // vertices are distinct so this cannot fail for a valid curve.
            let nrm = chord_normal(prev, next).unwrap_or_else(|| Vector2::new(0.0, 0.0));
            let x_dot_n = here.dot(&nrm);

            normal.push(nrm);
            mean.push(k);
            a2.push(k * k);
            pn.push(x_dot_n);
            phi.push(k - 0.5 * x_dot_n);
            measure.push(0.5 * (a + b));
        }

        GeomQuantities {
            normal,
            mean_curvature: mean,
            second_fundamental_sq: a2,
            position_normal: pn,
            shrinker_residual: phi,
            measure,
            principal: None,
            quality: MeshQuality {
                min_edge,
                max_edge,
                degenerate,
            },
        }
    }
}

fn signed_area(vertices: &[Vector2<f64>]) -> f64 {
    let n = vertices.len();
    let mut area = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        area += a.x * b.y - b.x * a.y;
    }
    0.5 * area
}

fn bbox_diag(vertices: &[Vector2<f64>]) -> f64 {
    let mut lo = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    (hi - lo).norm()
}

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}
