//! Arclength resampling of polylines with a local cubic, plus small polyline
//! utilities shared by the flow and verification modules.

use nalgebra::Vector2;

pub fn polyline_length(points: &[Vector2<f64>], closed: bool) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut len = 0.0;
    for i in 0..n - 1 {
        len += (points[i + 1] - points[i]).norm();
    }
    if closed {
        len += (points[0] - points[n - 1]).norm();
    }
    len
}

/// Cumulative chord lengths, starting at 0. For closed polylines the final
/// entry is the total length including the wrap edge (length n + 1).
pub fn cumulative_lengths(points: &[Vector2<f64>], closed: bool) -> Vec<f64> {
    let n = points.len();
    let mut s = Vec::with_capacity(n + 1);
    s.push(0.0);
    for i in 0..n - 1 {
        s.push(s[i] + (points[i + 1] - points[i]).norm());
    }
    if closed {
        s.push(s[n - 1] + (points[0] - points[n - 1]).norm());
    }
    s
}

fn catmull_rom(
    p0: Vector2<f64>,
    p1: Vector2<f64>,
    p2: Vector2<f64>,
    p3: Vector2<f64>,
    u: f64,
) -> Vector2<f64> {
    let u2 = u * u;
    let u3 = u2 * u;
    0.5 * ((2.0 * p1)
        + (p2 - p0) * u
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * u3)
}

/// Resample a closed polyline to `count` points at near-uniform arclength.
/// Point 0 of the output stays anchored at point 0 of the input, which keeps
/// vertex correspondence stable across repeated redistribution.
pub fn resample_closed(points: &[Vector2<f64>], count: usize) -> Vec<Vector2<f64>> {
    let n = points.len();
    let s = cumulative_lengths(points, true);
    let total = s[n];
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for j in 0..count {
        let target = total * j as f64 / count as f64;
        while seg + 1 < n && s[seg + 1] <= target {
            seg += 1;
        }
        // target lies in [s[seg], s[seg+1]) on edge seg -> seg+1 (mod n).
        let seg_len = s[seg + 1] - s[seg];
        let u = if seg_len > 0.0 {
            (target - s[seg]) / seg_len
        } else {
            0.0
        };
        let p0 = points[(seg + n - 1) % n];
        let p1 = points[seg];
        let p2 = points[(seg + 1) % n];
        let p3 = points[(seg + 2) % n];
        out.push(catmull_rom(p0, p1, p2, p3, u));
    }
    out
}

/// Resample an open polyline to `count` points at near-uniform arclength,
/// keeping both endpoints. With `mirror_ghosts` the stencil is extended by
/// reflection across the axis r = 0 (profiles of axis-terminated surfaces);
/// otherwise by linear extrapolation.
pub fn resample_open(
    points: &[Vector2<f64>],
    count: usize,
    mirror_ghosts: bool,
) -> Vec<Vector2<f64>> {
    let n = points.len();
    let s = cumulative_lengths(points, false);
    let total = s[n - 1];
    let ghost_front = if mirror_ghosts {
        Vector2::new(-points[1].x, points[1].y)
    } else {
        2.0 * points[0] - points[1]
    };
    let ghost_back = if mirror_ghosts {
        Vector2::new(-points[n - 2].x, points[n - 2].y)
    } else {
        2.0 * points[n - 1] - points[n - 2]
    };
    let pt = |i: isize| -> Vector2<f64> {
        if i < 0 {
            ghost_front
        } else if i as usize >= n {
            ghost_back
        } else {
            points[i as usize]
        }
    };
    let mut out = Vec::with_capacity(count);
    out.push(points[0]);
    let mut seg = 0usize;
    for j in 1..count - 1 {
        let target = total * j as f64 / (count - 1) as f64;
        while seg + 2 < n && s[seg + 1] <= target {
            seg += 1;
        }
        let seg_len = s[seg + 1] - s[seg];
        let u = if seg_len > 0.0 {
            (target - s[seg]) / seg_len
        } else {
            0.0
        };
        let i = seg as isize;
        out.push(catmull_rom(pt(i - 1), pt(i), pt(i + 1), pt(i + 2), u));
    }
    out.push(points[n - 1]);
    out
}

pub fn point_segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from a point to a polyline (closed or open).
pub fn point_polyline_distance(p: Vector2<f64>, poly: &[Vector2<f64>], closed: bool) -> f64 {
    let n = poly.len();
    let mut best = f64::INFINITY;
    let last = if closed { n } else { n - 1 };
    for i in 0..last {
        best = best.min(point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    best
}

/// Symmetric Hausdorff distance between two polylines, measured vertex to
/// polyline in both directions.
pub fn hausdorff_distance(
    a: &[Vector2<f64>],
    a_closed: bool,
    b: &[Vector2<f64>],
    b_closed: bool,
) -> f64 {
    let d_ab = a
        .iter()
        .map(|p| point_polyline_distance(*p, b, b_closed))
        .fold(0.0f64, f64::max);
    let d_ba = b
        .iter()
        .map(|p| point_polyline_distance(*p, a, a_closed))
        .fold(0.0f64, f64::max);
    d_ab.max(d_ba)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_points(r: f64, n: usize) -> Vec<Vector2<f64>> {
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Vector2::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }

    #[test]
    fn closed_resampling_stays_on_circle() {
        let pts = circle_points(2.0, 100);
        let out = resample_closed(&pts, 173);
        for p in &out {
            assert!((p.norm() - 2.0).abs() < 2e-4, "radius {}", p.norm());
        }
        // Near-uniform spacing.
        let s = cumulative_lengths(&out, true);
        let mean = s[out.len()] / out.len() as f64;
        for i in 0..out.len() {
            let e = s[i + 1] - s[i];
            assert!((e - mean).abs() < 0.05 * mean);
        }
    }

    #[test]
    fn open_resampling_keeps_endpoints() {
        let pts: Vec<_> = (0..50)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 49.0;
                Vector2::new(t.sin(), -t.cos())
            })
            .collect();
        let out = resample_open(&pts, 81, true);
        assert_eq!(out.len(), 81);
        assert!((out[0] - pts[0]).norm() < 1e-15);
        assert!((out[80] - pts[49]).norm() < 1e-15);
        for p in &out {
            assert!((p.norm() - 1.0).abs() < 2e-4);
        }
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let a = circle_points(1.0, 200);
        let b = circle_points(1.1, 173);
        let d = hausdorff_distance(&a, true, &b, true);
        assert!((d - 0.1).abs() < 1e-3, "distance {d}");
    }
}
