use nalgebra::Vector2;

use super::{
    chord_normal, menger_curvature, polygon_is_simple, resample, GeomQuantities, MeshQuality,
};
use crate::error::{Error, Result};

pub const MIN_PROFILE_POINTS: usize = 8;

/// Slope tolerance for the pole tangent of an axis-terminated profile: the
/// generated surface is smooth at the poles only if the profile meets the
/// axis horizontally, enforced within discretization tolerance.
const POLE_SLOPE_TOL: f64 = 0.15;

/// Topology of the generating profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileTopology {
    /// Closed profile curve away from the axis (torus-like surface).
    ClosedProfile,
    /// Profile starting and ending on the axis r = 0 (sphere-like surface).
    AxisTerminated,
}

/// A polyline profile in the (r, z) half-plane generating a rotationally
/// symmetric surface in 3-space. Points store r in `x` and z in `y`.
///
/// Orientation: closed profiles run counterclockwise in the half-plane;
/// axis-terminated profiles run from the south pole (lowest z) to the north
/// pole, so that in both cases the in-plane normal obtained by rotating the
/// tangent clockwise points out of the enclosed solid.
#[derive(Clone, Debug)]
pub struct ProfileSurface {
    profile: Vec<Vector2<f64>>,
    topology: ProfileTopology,
}

impl ProfileSurface {
    pub fn new_closed(profile: Vec<Vector2<f64>>) -> Result<Self> {
        Self::validate_basic(&profile, ProfileTopology::ClosedProfile)?;
        let scale = diameter_of(&profile);
        if let Some(i) = profile.iter().position(|p| p.x <= 1e-9 * scale) {
            return Err(Error::InvalidProfile(format!(
                "closed profile touches the axis at point {i} (r = {})",
                profile[i].x
            )));
        }
        if signed_area(&profile) <= 0.0 {
            return Err(Error::InvalidProfile(
                "closed profile must be oriented counterclockwise in the (r, z) half-plane"
                    .into(),
            ));
        }
        if !polygon_is_simple(&profile) {
            return Err(Error::InvalidProfile(
                "closed profile has self-intersections".into(),
            ));
        }
        Ok(Self {
            profile,
            topology: ProfileTopology::ClosedProfile,
        })
    }

    pub fn new_axis_terminated(mut profile: Vec<Vector2<f64>>) -> Result<Self> {
        Self::validate_basic(&profile, ProfileTopology::AxisTerminated)?;
        let scale = diameter_of(&profile);
        let n = profile.len();
        for (label, idx) in [("first", 0usize), ("last", n - 1)] {
            if profile[idx].x.abs() > 1e-7 * scale {
                return Err(Error::InvalidProfile(format!(
                    "{label} profile point must lie on the axis r = 0, got r = {}",
                    profile[idx].x
                )));
            }
            profile[idx].x = 0.0;
        }
        if let Some(i) = (1..n - 1).find(|&i| profile[i].x <= 1e-9 * scale) {
            return Err(Error::InvalidProfile(format!(
                "interior profile point {i} lies on the axis (r = {})",
                profile[i].x
            )));
        }
        // Pole tangent must be horizontal in (r, z) within tolerance.
        for (label, pole, nbr) in [("south", profile[0], profile[1]), ("north", profile[n - 1], profile[n - 2])] {
            let dr = (nbr.x - pole.x).abs();
            let dz = (nbr.y - pole.y).abs();
            if dz > POLE_SLOPE_TOL * dr {
                return Err(Error::InvalidProfile(format!(
                    "{label} pole tangent is not horizontal: |dz/dr| = {:.3} exceeds {POLE_SLOPE_TOL}",
                    dz / dr.max(1e-300)
                )));
            }
        }
        if profile[0].y >= profile[n - 1].y {
            return Err(Error::InvalidProfile(
                "axis-terminated profile must run from the south pole (lowest z) to the north pole"
                    .into(),
            ));
        }
        Ok(Self {
            profile,
            topology: ProfileTopology::AxisTerminated,
        })
    }

    pub(crate) fn from_flow_step(
        profile: Vec<Vector2<f64>>,
        topology: ProfileTopology,
    ) -> Result<Self> {
        Self::validate_basic(&profile, topology)?;
        Ok(Self { profile, topology })
    }

    fn validate_basic(profile: &[Vector2<f64>], _topology: ProfileTopology) -> Result<()> {
        if profile.len() < MIN_PROFILE_POINTS {
            return Err(Error::InvalidProfile(format!(
                "need at least {MIN_PROFILE_POINTS} profile points, got {}",
                profile.len()
            )));
        }
        if profile
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::InvalidProfile("non-finite profile coordinate".into()));
        }
        let scale = diameter_of(profile).max(1e-300);
        for i in 0..profile.len() - 1 {
            if (profile[i + 1] - profile[i]).norm() <= 1e-12 * scale {
                return Err(Error::InvalidProfile(format!(
                    "consecutive profile points {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Semicircular profile of the round sphere, pole to pole.
    pub fn sphere(radius: f64, n: usize) -> Self {
        let profile = (0..n)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / (n - 1) as f64;
                Vector2::new(radius * t.sin(), -radius * t.cos())
            })
            .collect();
        Self {
            profile,
            topology: ProfileTopology::AxisTerminated,
        }
    }

    /// Circular tube profile of the round torus: circle of radius `minor`
    /// centered at (major, 0), counterclockwise.
    pub fn torus(major: f64, minor: f64, n: usize) -> Self {
        let profile = (0..n)
            .map(|i| {
                let u = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Vector2::new(major + minor * u.cos(), minor * u.sin())
            })
            .collect();
        Self {
            profile,
            topology: ProfileTopology::ClosedProfile,
        }
    }

    pub fn profile(&self) -> &[Vector2<f64>] {
        &self.profile
    }

    pub fn topology(&self) -> ProfileTopology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn is_closed_profile(&self) -> bool {
        self.topology == ProfileTopology::ClosedProfile
    }

    /// Extent of the generated surface in 3-space.
    pub fn diameter(&self) -> f64 {
        let r_max = self.profile.iter().fold(0.0f64, |m, p| m.max(p.x));
        let (z_lo, z_hi) = self
            .profile
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.y), hi.max(p.y))
            });
        (2.0 * r_max).hypot(z_hi - z_lo)
    }

    /// Largest |x| over the generated surface (distance from the origin).
    pub fn max_norm(&self) -> f64 {
        self.profile
            .iter()
            .fold(0.0f64, |m, p| m.max(p.norm()))
    }

    pub fn total_length(&self) -> f64 {
        resample::polyline_length(&self.profile, self.is_closed_profile())
    }

    pub fn translated_z(&self, dz: f64) -> Self {
        Self {
            profile: self
                .profile
                .iter()
                .map(|p| Vector2::new(p.x, p.y + dz))
                .collect(),
            topology: self.topology,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            profile: self.profile.iter().map(|p| p * factor).collect(),
            topology: self.topology,
        }
    }

    pub fn resampled(&self, count: usize) -> Result<Self> {
        if count < MIN_PROFILE_POINTS {
            return Err(Error::InvalidParameter(format!(
                "resample count {count} below minimum {MIN_PROFILE_POINTS}"
            )));
        }
        let pts = match self.topology {
            ProfileTopology::ClosedProfile => resample::resample_closed(&self.profile, count),
            ProfileTopology::AxisTerminated => {
                let mut pts = resample::resample_open(&self.profile, count, true);
                pts[0].x = 0.0;
                pts[count - 1].x = 0.0;
                pts
            }
        };
        Self::from_flow_step(pts, self.topology)
    }

    /// Per-point quantities of the generated surface. The principal
    /// curvatures are the plane curvature of the profile and the normal
    /// component divided by r; at axis endpoints the ring curvature is filled
    /// by the profile curvature (umbilic pole), using a mirror extension of
    /// the profile across the axis for the stencil.
    pub fn quantities(&self) -> GeomQuantities {
        let n = self.profile.len();
        let closed = self.is_closed_profile();
        let mut normal = Vec::with_capacity(n);
        let mut mean = Vec::with_capacity(n);
        let mut a2 = Vec::with_capacity(n);
        let mut pn = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        let mut measure = Vec::with_capacity(n);
        let mut principal = Vec::with_capacity(n);
        let mut degenerate = Vec::new();
        let mut min_edge = f64::INFINITY;
        let mut max_edge = 0.0f64;

        let mirror = |p: Vector2<f64>| Vector2::new(-p.x, p.y);
        for i in 0..n - if closed { 0 } else { 1 } {
            let e = (self.profile[(i + 1) % n] - self.profile[i]).norm();
            min_edge = min_edge.min(e);
            max_edge = max_edge.max(e);
        }

        for i in 0..n {
            let here = self.profile[i];
            let is_pole = !closed && (i == 0 || i == n - 1);
            let (prev, next) = if closed {
                (self.profile[(i + n - 1) % n], self.profile[(i + 1) % n])
            } else if i == 0 {
                (mirror(self.profile[1]), self.profile[1])
            } else if i == n - 1 {
                (self.profile[n - 2], mirror(self.profile[n - 2]))
            } else {
                (self.profile[i - 1], self.profile[i + 1])
            };

            let k_m = match menger_curvature(prev, here, next) {
                Some(k) => k,
                None => {
                    degenerate.push(i);
                    0.0
                }
            };
            let nrm = chord_normal(prev, next).unwrap_or_else(|| Vector2::new(0.0, 0.0));
            let k_ring = if is_pole {
                k_m
            } else {
                nrm.x / here.x
            };
            let h = k_m + k_ring;
            let x_dot_n = here.x * nrm.x + here.y * nrm.y;

            let dual = if closed {
                let a = (here - self.profile[(i + n - 1) % n]).norm();
                let b = (self.profile[(i + 1) % n] - here).norm();
                0.5 * (a + b)
            } else if i == 0 {
                0.5 * (self.profile[1] - here).norm()
            } else if i == n - 1 {
                0.5 * (here - self.profile[n - 2]).norm()
            } else {
                let a = (here - self.profile[i - 1]).norm();
                let b = (self.profile[i + 1] - here).norm();
                0.5 * (a + b)
            };

            normal.push(nrm);
            mean.push(h);
            a2.push(k_m * k_m + k_ring * k_ring);
            pn.push(x_dot_n);
            phi.push(h - 0.5 * x_dot_n);
            measure.push(2.0 * std::f64::consts::PI * here.x * dual);
            principal.push((k_m, k_ring));
        }

        GeomQuantities {
            normal,
            mean_curvature: mean,
            second_fundamental_sq: a2,
            position_normal: pn,
            shrinker_residual: phi,
            measure,
            principal: Some(principal),
            quality: MeshQuality {
                min_edge,
                max_edge,
                degenerate,
            },
        }
    }
}

fn signed_area(points: &[Vector2<f64>]) -> f64 {
    let n = points.len();
    let mut area = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        area += a.x * b.y - b.x * a.y;
    }
    0.5 * area
}

fn diameter_of(points: &[Vector2<f64>]) -> f64 {
    let mut lo = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in points {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    (hi - lo).norm()
}
