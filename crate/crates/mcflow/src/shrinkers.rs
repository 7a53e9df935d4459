//! Exact model shrinkers and shooting-based discovery of the non-trivial
//! ones: the closed Abresch–Langer curves in the plane and the rotationally
//! symmetric shrinking torus.
//!
//! Both families solve `H = <x, n>/2` as an ODE in arclength. For plane
//! curves the system is `x' = cos(theta)`, `y' = sin(theta)`,
//! `theta' = (x sin(theta) - y cos(theta))/2`; for profiles in the (r, z)
//! half-plane the ring curvature joins the turning rate:
//! `psi' = (r sin(psi) - z cos(psi))/2 - sin(psi)/r`.

use nalgebra::Vector2;

use crate::entropy::{lambda_cylinder, lambda_hyperplane, lambda_sphere, simons_cone_entropy};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteCurve, ProfileSurface, Shape};

const PI: f64 = std::f64::consts::PI;

/// Exact analytic shrinkers and cones, kept as descriptors with exact
/// parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticShape {
    /// Round n-sphere of the given radius; the shrinker radius is sqrt(2n).
    Sphere { n: u32, radius: f64 },
    /// Generalized cylinder S^k x R^m with the S^k factor at radius sqrt(2k).
    Cylinder { k: u32, m: u32 },
    /// Minimal cone over S^k x S^k in R^{2k+2}.
    SimonsCone { k: u32 },
    /// Flat hyperplane R^n through the origin.
    Hyperplane { n: u32 },
}

impl AnalyticShape {
    /// The round shrinker sphere of dimension n (radius sqrt(2n)).
    pub fn shrinker_sphere(n: u32) -> Self {
        AnalyticShape::Sphere {
            n,
            radius: (2.0 * n as f64).sqrt(),
        }
    }

    /// True when the descriptor satisfies the shrinker equation exactly.
    pub fn is_shrinker(&self) -> bool {
        match self {
            AnalyticShape::Sphere { n, radius } => {
                (radius - (2.0 * *n as f64).sqrt()).abs() < 1e-12
            }
            // Cylinder and cone tags carry their shrinker/minimal parameters
            // implicitly; the hyperplane is the flat shrinker.
            _ => true,
        }
    }

    /// Entropy of the descriptor in closed form.
    pub fn entropy(&self) -> f64 {
        match self {
            AnalyticShape::Sphere { n, .. } => lambda_sphere(*n),
            AnalyticShape::Cylinder { k, m } => lambda_cylinder(*k, *m),
            AnalyticShape::SimonsCone { k } => simons_cone_entropy(*k),
            AnalyticShape::Hyperplane { .. } => lambda_hyperplane(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AnalyticShape::Sphere { n, radius } => format!("S^{n}(r={radius})"),
            AnalyticShape::Cylinder { k, m } => format!("S^{k}xR^{m}"),
            AnalyticShape::SimonsCone { k } => format!("cone(S^{k}xS^{k})"),
            AnalyticShape::Hyperplane { n } => format!("R^{n}"),
        }
    }
}

/// Output of [`make_standard`]: spheres of dimension 1 and 2 discretize into
/// surfaces; everything else stays an exact descriptor consumed only by
/// closed-form entropy operations.
#[derive(Clone, Debug)]
pub enum StandardShrinker {
    Discrete(Shape),
    Exact(AnalyticShape),
}

pub const MIN_RESOLUTION: usize = 64;

/// Construct a standard shape at the given resolution. Circles and 2-sphere
/// profiles are emitted as discretized surfaces; cylinders, cones,
/// hyperplanes, and higher spheres as exact descriptors.
pub fn make_standard(shape: &AnalyticShape, resolution: usize) -> Result<StandardShrinker> {
    match shape {
        AnalyticShape::Sphere { n, radius } => {
            if *radius <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "sphere radius must be positive, got {radius}"
                )));
            }
            match n {
                0 => Err(Error::InvalidParameter("sphere dimension must be >= 1".into())),
                1 | 2 => {
                    if resolution < MIN_RESOLUTION {
                        return Err(Error::InvalidParameter(format!(
                            "resolution {resolution} below minimum {MIN_RESOLUTION}"
                        )));
                    }
                    Ok(StandardShrinker::Discrete(if *n == 1 {
                        Shape::Curve(DiscreteCurve::circle(*radius, resolution))
                    } else {
                        Shape::Revolution(ProfileSurface::sphere(*radius, resolution))
                    }))
                }
                _ => Ok(StandardShrinker::Exact(*shape)),
            }
        }
        AnalyticShape::Cylinder { k, m } => {
            if *k == 0 || *m == 0 {
                return Err(Error::InvalidParameter(format!(
                    "cylinder S^{k} x R^{m} needs k >= 1 and m >= 1"
                )));
            }
            Ok(StandardShrinker::Exact(*shape))
        }
        AnalyticShape::SimonsCone { k } => {
            if *k == 0 {
                return Err(Error::InvalidParameter("cone index must be >= 1".into()));
            }
            // Non-compact; never discretized.
            Ok(StandardShrinker::Exact(*shape))
        }
        AnalyticShape::Hyperplane { n } => {
            if *n == 0 {
                return Err(Error::InvalidParameter("hyperplane dimension must be >= 1".into()));
            }
            Ok(StandardShrinker::Exact(*shape))
        }
    }
}

/// A shrinker found by shooting, with the residual measured along the dense
/// shooting trajectory: curvature is recovered by finite differences of the
/// tangent angle across the assembled closed polyline (including the closure
/// and mirror seams), so closure defects show up in the residual.
#[derive(Clone, Debug)]
pub struct ShootingResult {
    pub shape: Shape,
    /// max over dense samples of |H - <x,n>/2|.
    pub residual: f64,
    /// Shooting parameter at convergence (starting radius).
    pub parameter: f64,
    /// Bisection iterations used.
    pub iterations: usize,
}

pub const ACCEPT_RESIDUAL: f64 = 1e-5;

/// Shooting controls. The integrator is classical fixed-step fourth order
/// with arclength step `step`; the shooting parameter is bisected to
/// `bisection_tol`.
#[derive(Clone, Debug)]
pub struct ShootingOptions {
    pub resolution: usize,
    pub step: f64,
    /// Keep every k-th integrator sample for the dense residual check.
    pub keep_every: usize,
    /// Rotate the starting symmetry axis by this angle (curves only).
    pub axis_angle: f64,
    pub bisection_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            resolution: 1024,
            step: 1e-4,
            keep_every: 5,
            axis_angle: 0.0,
            bisection_tol: 1e-12,
        }
    }
}

// ---------------------------------------------------------------------------
// Abresch-Langer curves
// ---------------------------------------------------------------------------

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Closed self-shrinking plane curve with rotation index `p` and `q`
/// curvature maxima. Existence requires coprime (p, q) with q/p strictly
/// between sqrt(2) and 2; p = 1 recovers the round circle of radius sqrt(2).
pub fn abresch_langer(p: u32, q: u32) -> Result<ShootingResult> {
    abresch_langer_with(p, q, &ShootingOptions::default())
}

pub fn abresch_langer_with(p: u32, q: u32, opts: &ShootingOptions) -> Result<ShootingResult> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidParameter("p and q must be positive".into()));
    }
    if gcd(p, q) != 1 {
        return Err(Error::InvalidParameter(format!(
            "(p, q) = ({p}, {q}) must be coprime"
        )));
    }
    if p == 1 {
        // The only closed solution with rotation index one is the circle.
        return circle_as_shooting_result(opts);
    }
    let ratio = q as f64 / p as f64;
    if ratio <= 2.0f64.sqrt() || ratio >= 2.0 {
        return Err(Error::InvalidParameter(format!(
            "(p, q) = ({p}, {q}) inadmissible: q/p = {ratio:.4} must lie strictly \
             between sqrt(2) and 2 for a closed solution"
        )));
    }

    // Half-period polar angle between consecutive radial extrema must be
    // pi p / q. It increases from pi/2 toward pi/sqrt(2) as the starting
    // (minimal) radius approaches sqrt(2).
    let target = PI * p as f64 / q as f64;
    let theta_of = |r0: f64| half_period_angle(r0, opts.step);

    let mut lo = 0.05;
    let mut hi = 0.0;
    let mut f_lo = theta_of(lo)? - target;
    let mut scanned = lo;
    let mut found = false;
    while scanned < 1.40 {
        let next = scanned + 0.05;
        let f_next = theta_of(next)? - target;
        if f_lo * f_next <= 0.0 {
            lo = scanned;
            hi = next;
            found = true;
            break;
        }
        scanned = next;
        f_lo = f_next;
    }
    if !found {
        return Err(Error::Shooting(format!(
            "failed to bracket closure for (p, q) = ({p}, {q}); scanned starting radii \
             in [0.05, 1.40] for half-period angle {target:.6}"
        )));
    }

    let mut iterations = 0usize;
    let mut f_lo = theta_of(lo)? - target;
    while hi - lo > opts.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = theta_of(mid)? - target;
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        iterations += 1;
        if iterations > 200 {
            break;
        }
    }
    let r0 = 0.5 * (lo + hi);

    // Assemble the full closed curve: 2q half-periods.
    let samples = integrate_curve_closed(r0, p, q, opts)?;
    let residual = curve_dense_residual(&samples, p);
    if residual > ACCEPT_RESIDUAL {
        return Err(Error::Shooting(format!(
            "closed curve residual {residual:.3e} exceeds acceptance threshold {ACCEPT_RESIDUAL:e}"
        )));
    }

    let dense: Vec<Vector2<f64>> = samples.iter().map(|s| s.pos).collect();
    let vertices = resample_dense_closed(&dense, opts.resolution);
    let curve = if p == 1 {
        DiscreteCurve::new(vertices)?
    } else {
        DiscreteCurve::new_allow_self_intersections(vertices)?
    };
    Ok(ShootingResult {
        shape: Shape::Curve(curve),
        residual,
        parameter: r0,
        iterations,
    })
}

fn circle_as_shooting_result(opts: &ShootingOptions) -> Result<ShootingResult> {
    let r = 2.0f64.sqrt();
    // Dense samples of the exact circle, run through the same residual
    // checker as a genuine shooting output.
    let n_dense = ((2.0 * PI * r) / (opts.step * opts.keep_every as f64)).ceil() as usize;
    let samples: Vec<CurveSample> = (0..n_dense)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n_dense as f64;
            CurveSample {
                pos: Vector2::new(r * t.cos(), r * t.sin()),
                theta: t + PI / 2.0,
            }
        })
        .collect();
    let residual = curve_dense_residual(&samples, 1);
    Ok(ShootingResult {
        shape: Shape::Curve(DiscreteCurve::circle(r, opts.resolution)),
        residual,
        parameter: r,
        iterations: 0,
    })
}

#[derive(Clone, Copy, Debug)]
struct CurveSample {
    pos: Vector2<f64>,
    theta: f64,
}

/// State (x, y, theta, alpha): position, tangent angle, accumulated polar
/// angle of the position vector.
fn curve_rhs(s: &[f64; 4]) -> [f64; 4] {
    let (x, y, th) = (s[0], s[1], s[2]);
    let (sin_t, cos_t) = th.sin_cos();
    let xn = x * sin_t - y * cos_t; // <x, n> with n the outward normal
    let rho2 = x * x + y * y;
    [cos_t, sin_t, 0.5 * xn, xn / rho2]
}

fn rk4_step<const N: usize>(state: &[f64; N], h: f64, rhs: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let k1 = rhs(state);
    let mut s2 = *state;
    for i in 0..N {
        s2[i] = state[i] + 0.5 * h * k1[i];
    }
    let k2 = rhs(&s2);
    let mut s3 = *state;
    for i in 0..N {
        s3[i] = state[i] + 0.5 * h * k2[i];
    }
    let k3 = rhs(&s3);
    let mut s4 = *state;
    for i in 0..N {
        s4[i] = state[i] + h * k3[i];
    }
    let k4 = rhs(&s4);
    let mut out = *state;
    for i in 0..N {
        out[i] = state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Locate a sign change of `g` within one step of size `h` from `state` by
/// bisection on the step size.
fn refine_crossing<const N: usize>(
    state: &[f64; N],
    h: f64,
    rhs: impl Fn(&[f64; N]) -> [f64; N] + Copy,
    g: impl Fn(&[f64; N]) -> f64,
) -> [f64; N] {
    let mut lo = 0.0;
    let mut hi = h;
    let g0 = g(state);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let trial = rk4_step(state, mid, rhs);
        if g0 * g(&trial) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    rk4_step(state, 0.5 * (lo + hi), rhs)
}

/// Polar-angle advance from the starting radial extremum at (r0, 0) to the
/// next zero of d|x|/ds.
fn half_period_angle(r0: f64, step: f64) -> Result<f64> {
    let state = [r0, 0.0, PI / 2.0, 0.0];
    let g = |s: &[f64; 4]| s[0] * s[2].cos() + s[1] * s[2].sin(); // x . T
    let mut s_total = 0.0;
    // Move off the initial zero of g before looking for the next one.
    let mut prev = state;
    loop {
        let next = rk4_step(&prev, step, curve_rhs);
        s_total += step;
        if s_total > 1e-2 && g(&prev) * g(&next) <= 0.0 {
            let refined = refine_crossing(&prev, step, curve_rhs, g);
            return Ok(refined[3]);
        }
        prev = next;
        if s_total > 100.0 {
            return Err(Error::Shooting(format!(
                "no radial extremum found within arclength 100 from r0 = {r0}"
            )));
        }
    }
}

/// Integrate the closed curve through 2q radial extrema, keeping dense
/// samples, ending exactly at the refined 2q-th crossing.
fn integrate_curve_closed(
    r0: f64,
    p: u32,
    q: u32,
    opts: &ShootingOptions,
) -> Result<Vec<CurveSample>> {
    let (sin_a, cos_a) = opts.axis_angle.sin_cos();
    let mut state = [r0 * cos_a, r0 * sin_a, opts.axis_angle + PI / 2.0, 0.0];
    let g = |s: &[f64; 4]| s[0] * s[2].cos() + s[1] * s[2].sin();
    let mut samples = vec![CurveSample {
        pos: Vector2::new(state[0], state[1]),
        theta: state[2],
    }];
    let mut crossings = 0usize;
    let needed = 2 * q as usize;
    let mut since_crossing = 0.0;
    let mut step_count = 0usize;
    loop {
        let next = rk4_step(&state, opts.step, curve_rhs);
        since_crossing += opts.step;
        step_count += 1;
        if since_crossing > 1e-2 && g(&state) * g(&next) <= 0.0 {
            crossings += 1;
            since_crossing = 0.0;
            if crossings == needed {
                let end = refine_crossing(&state, opts.step, curve_rhs, g);
                let last = samples.last().unwrap().pos;
                if (Vector2::new(end[0], end[1]) - last).norm() > 1e-12 {
                    samples.push(CurveSample {
                        pos: Vector2::new(end[0], end[1]),
                        theta: end[2],
                    });
                }
                // Closure criterion: position and angle mismatch at the
                // candidate period.
                let start = samples[0];
                let pos_err = (samples.last().unwrap().pos - start.pos).norm();
                let ang_err =
                    (samples.last().unwrap().theta - start.theta - 2.0 * PI * p as f64).abs();
                if pos_err > 1e-8 || ang_err > 1e-8 {
                    return Err(Error::Shooting(format!(
                        "curve failed to close: position mismatch {pos_err:.3e}, \
                         angle mismatch {ang_err:.3e}"
                    )));
                }
                samples.pop(); // endpoint duplicates the start
                return Ok(samples);
            }
        }
        state = next;
        if step_count.is_multiple_of(opts.keep_every) {
            samples.push(CurveSample {
                pos: Vector2::new(state[0], state[1]),
                theta: state[2],
            });
        }
        if step_count as f64 * opts.step > 500.0 {
            return Err(Error::Shooting(
                "curve did not close within arclength 500".into(),
            ));
        }
    }
}

/// Residual of the assembled closed curve against the shrinker equation:
/// curvature by centered differences of the tangent angle on the dense
/// cyclic samples (theta unwrapped by the total turning 2 pi p).
fn curve_dense_residual(samples: &[CurveSample], p: u32) -> f64 {
    let n = samples.len();
    let total_turn = 2.0 * PI * p as f64;
    let mut worst = 0.0f64;
    for i in 0..n {
        let prev = &samples[(i + n - 1) % n];
        let here = &samples[i];
        let next = &samples[(i + 1) % n];
        let mut th_prev = prev.theta;
        let mut th_next = next.theta;
        if i == 0 {
            th_prev -= total_turn;
        }
        if i == n - 1 {
            th_next += total_turn;
        }
        let a = (here.pos - prev.pos).norm();
        let b = (next.pos - here.pos).norm();
        // Non-uniform centered first derivative of theta in arclength.
        let dtheta = (a * a * th_next + (b * b - a * a) * here.theta - b * b * th_prev)
            / (a * b * (a + b));
        let (sin_t, cos_t) = here.theta.sin_cos();
        let xn = here.pos.x * sin_t - here.pos.y * cos_t;
        worst = worst.max((dtheta - 0.5 * xn).abs());
    }
    worst
}

fn resample_dense_closed(dense: &[Vector2<f64>], count: usize) -> Vec<Vector2<f64>> {
    // Linear interpolation is enough at the dense sample spacing.
    let n = dense.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let d = (dense[(i + 1) % n] - dense[i]).norm();
        cum.push(cum[i] + d);
    }
    let total = cum[n];
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for j in 0..count {
        let target = total * j as f64 / count as f64;
        while seg + 1 < n && cum[seg + 1] <= target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let u = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        out.push(dense[seg] * (1.0 - u) + dense[(seg + 1) % n] * u);
    }
    out
}

// ---------------------------------------------------------------------------
// Rotationally symmetric shrinking torus
// ---------------------------------------------------------------------------

/// State (r, z, psi): profile position and tangent angle in the (r, z)
/// half-plane.
fn profile_rhs(s: &[f64; 3]) -> [f64; 3] {
    let (r, z, psi) = (s[0], s[1], s[2]);
    let (sin_p, cos_p) = psi.sin_cos();
    let xn = r * sin_p - z * cos_p;
    [cos_p, sin_p, 0.5 * xn - sin_p / r]
}

/// Rotationally symmetric embedded shrinking torus by shooting the profile
/// ODE from the z = 0 line with vertical tangent; the starting radius is
/// bisected until the profile returns to z = 0 with vertical tangent, then
/// the half-profile is mirrored to close the tube.
pub fn angenent_torus() -> Result<ShootingResult> {
    angenent_torus_with(&ShootingOptions::default())
}

pub fn angenent_torus_with(opts: &ShootingOptions) -> Result<ShootingResult> {
    // Defect: tangent-angle error against +pi/2 when the profile first
    // returns to z = 0. Starting at the inner equator with the tangent
    // pointing down (outward normal toward the axis), the lower half of the
    // tube should end at the outer equator pointing up.
    let defect = |r0: f64| half_profile_defect(r0, opts.step);

    let mut lo = 0.10;
    let mut hi = 0.0;
    let mut f_lo = defect(lo)?;
    let mut scanned = lo;
    let mut found = false;
    while scanned < 1.40 {
        let next = scanned + 0.05;
        let f_next = defect(next)?;
        if f_lo * f_next <= 0.0 && f_lo.abs() < PI && f_next.abs() < PI {
            lo = scanned;
            hi = next;
            found = true;
            break;
        }
        scanned = next;
        f_lo = f_next;
    }
    if !found {
        return Err(Error::Shooting(
            "failed to bracket the closed torus profile over starting radii [0.10, 1.40]".into(),
        ));
    }

    let mut iterations = 0usize;
    let mut f_lo = defect(lo)?;
    while hi - lo > opts.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = defect(mid)?;
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        iterations += 1;
        if iterations > 200 {
            break;
        }
    }
    let r0 = 0.5 * (lo + hi);

    let samples = integrate_torus_profile(r0, opts)?;
    let residual = profile_dense_residual(&samples);
    if residual > ACCEPT_RESIDUAL {
        return Err(Error::Shooting(format!(
            "torus profile residual {residual:.3e} exceeds acceptance threshold {ACCEPT_RESIDUAL:e}"
        )));
    }

    let dense: Vec<Vector2<f64>> = samples.iter().map(|s| s.pos).collect();
    let points = resample_dense_closed(&dense, opts.resolution);
    let profile = ProfileSurface::new_closed(points)?;
    Ok(ShootingResult {
        shape: Shape::Revolution(profile),
        residual,
        parameter: r0,
        iterations,
    })
}

#[derive(Clone, Copy, Debug)]
struct ProfileSample {
    pos: Vector2<f64>,
    psi: f64,
}

/// Integrate the lower half of the tube from (r0, 0) with psi = -pi/2 until
/// z returns to 0; the defect is the tangent-angle mismatch against +pi/2
/// there. Trajectories that hit the axis or run away report saturated
/// defects of the corresponding sign.
fn half_profile_defect(r0: f64, step: f64) -> Result<f64> {
    match integrate_half_profile(r0, step, usize::MAX) {
        HalfProfile::Closed { end_psi, .. } => Ok(end_psi - PI / 2.0),
        // Curls into the axis before returning: over-turned.
        HalfProfile::HitAxis => Ok(PI),
        // Escapes downward along the cylinder direction: under-turned.
        HalfProfile::Escaped => Ok(-PI),
    }
}

enum HalfProfile {
    Closed {
        end_psi: f64,
        samples: Vec<ProfileSample>,
    },
    HitAxis,
    Escaped,
}

fn integrate_half_profile(r0: f64, step: f64, keep_every: usize) -> HalfProfile {
    let mut state = [r0, 0.0, -PI / 2.0];
    let mut samples = vec![ProfileSample {
        pos: Vector2::new(r0, 0.0),
        psi: -PI / 2.0,
    }];
    let mut s_total = 0.0;
    let mut step_count = 0usize;
    loop {
        let next = rk4_step(&state, step, profile_rhs);
        s_total += step;
        step_count += 1;
        if next[0] < 1e-3 {
            return HalfProfile::HitAxis;
        }
        if s_total > 0.01 && state[1] < 0.0 && next[1] >= 0.0 {
            let end = refine_crossing(&state, step, profile_rhs, |s| s[1]);
            samples.push(ProfileSample {
                pos: Vector2::new(end[0], end[1]),
                psi: end[2],
            });
            return HalfProfile::Closed {
                end_psi: end[2],
                samples,
            };
        }
        state = next;
        if keep_every != usize::MAX && step_count.is_multiple_of(keep_every) {
            samples.push(ProfileSample {
                pos: Vector2::new(state[0], state[1]),
                psi: state[2],
            });
        }
        if s_total > 60.0 || state[1] < -30.0 || state[0] > 30.0 {
            return HalfProfile::Escaped;
        }
    }
}

/// Assemble the closed tube profile: lower half by integration, upper half
/// by mirror symmetry across z = 0, oriented counterclockwise in (r, z).
fn integrate_torus_profile(r0: f64, opts: &ShootingOptions) -> Result<Vec<ProfileSample>> {
    let half = match integrate_half_profile(r0, opts.step, opts.keep_every) {
        HalfProfile::Closed { samples, .. } => samples,
        _ => {
            return Err(Error::Shooting(format!(
                "half profile from r0 = {r0} did not return to the equator plane"
            )))
        }
    };
    let mut closed = half.clone();
    // Mirror, reversed, skipping both equator points; the mirrored tangent
    // angle is pi - psi, keeping the angle continuous along the profile.
    for s in half.iter().rev().skip(1) {
        if (s.pos.y).abs() < 1e-14 && closed.len() > 1 {
            continue;
        }
        closed.push(ProfileSample {
            pos: Vector2::new(s.pos.x, -s.pos.y),
            psi: PI - s.psi,
        });
    }
    // Drop the duplicated starting point at the end if present.
    if let Some(last) = closed.last() {
        if (last.pos - closed[0].pos).norm() < 1e-12 {
            closed.pop();
        }
    }
    Ok(closed)
}

/// Residual of the assembled closed profile: profile curvature by centered
/// differences of the tangent angle plus the ring curvature, against
/// <x, n>/2. The tangent angle increases by 2 pi around the tube.
fn profile_dense_residual(samples: &[ProfileSample]) -> f64 {
    let n = samples.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let prev = &samples[(i + n - 1) % n];
        let here = &samples[i];
        let next = &samples[(i + 1) % n];
        let mut psi_prev = prev.psi;
        let mut psi_next = next.psi;
        if i == 0 {
            psi_prev -= 2.0 * PI;
        }
        if i == n - 1 {
            psi_next += 2.0 * PI;
        }
        let a = (here.pos - prev.pos).norm();
        let b = (next.pos - here.pos).norm();
        let dpsi =
            (a * a * psi_next + (b * b - a * a) * here.psi - b * b * psi_prev) / (a * b * (a + b));
        let (sin_p, cos_p) = here.psi.sin_cos();
        let r = here.pos.x;
        let z = here.pos.y;
        let h = dpsi + sin_p / r;
        let xn = r * sin_p - z * cos_p;
        worst = worst.max((h - 0.5 * xn).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{entropy_sup, f_functional, CenterScale};
    use crate::geometry::{contains, ContainsResult};

    #[test]
    fn make_standard_dispatch() {
        let circle = make_standard(&AnalyticShape::shrinker_sphere(1), 256).unwrap();
        match circle {
            StandardShrinker::Discrete(Shape::Curve(c)) => {
                assert!(c.quantities().max_abs_phi() < 1e-3);
            }
            _ => panic!("expected a discrete curve"),
        }
        let sphere = make_standard(&AnalyticShape::shrinker_sphere(2), 256).unwrap();
        match sphere {
            StandardShrinker::Discrete(Shape::Revolution(p)) => {
                assert!(p.quantities().max_abs_phi() < 1e-3);
            }
            _ => panic!("expected a discrete profile"),
        }
        assert!(matches!(
            make_standard(&AnalyticShape::SimonsCone { k: 2 }, 64).unwrap(),
            StandardShrinker::Exact(_)
        ));
        assert!(make_standard(&AnalyticShape::shrinker_sphere(1), 32).is_err());
        assert!(make_standard(&AnalyticShape::Cylinder { k: 0, m: 3 }, 64).is_err());
    }

    #[test]
    fn circle_recovered_for_rotation_index_one() {
        let res = abresch_langer(1, 5).unwrap();
        assert!(res.residual < ACCEPT_RESIDUAL, "residual {}", res.residual);
        assert!((res.parameter - 2.0f64.sqrt()).abs() < 1e-12);
        let q = res.shape.quantities();
        assert!(q.max_abs_phi() < 1e-3);
    }

    #[test]
    fn admissibility_checks() {
        assert!(abresch_langer(2, 4).is_err()); // not coprime
        assert!(abresch_langer(3, 4).is_err()); // q/p < sqrt(2)
        assert!(abresch_langer(2, 5).is_err()); // q/p > 2... 2.5
        assert!(abresch_langer(0, 3).is_err());
    }

    #[test]
    fn abresch_langer_2_3_closes_with_three_lobes() {
        let res = abresch_langer(2, 3).unwrap();
        assert!(res.residual < ACCEPT_RESIDUAL, "residual {}", res.residual);
        let curve = match &res.shape {
            Shape::Curve(c) => c,
            _ => panic!(),
        };
        assert!(!curve.is_simple(), "rotation index 2 must self-intersect");

        // Lobe count: number of local maxima of curvature around the polygon.
        let q = curve.quantities();
        let k = &q.mean_curvature;
        let n = k.len();
        let mut maxima = 0;
        for i in 0..n {
            let prev = k[(i + n - 1) % n];
            let next = k[(i + 1) % n];
            if k[i] > prev && k[i] >= next && k[i] > 0.9 {
                maxima += 1;
            }
        }
        assert_eq!(maxima, 3, "expected 3 curvature maxima");

        // Entropy strictly above the circle's, attained at center 0, scale 1.
        let ent = entropy_sup(&res.shape).unwrap();
        let lambda_s1 = lambda_sphere(1);
        assert!(
            ent.value > lambda_s1 + 0.01,
            "entropy {} vs circle {}",
            ent.value,
            lambda_s1
        );
        let f01 = f_functional(&res.shape, &CenterScale::base(2)).unwrap();
        assert!(
            (ent.value - f01).abs() < 1e-3,
            "sup {} vs F(0,1) {f01}",
            ent.value
        );
    }

    #[test]
    fn shooting_is_deterministic() {
        let a = abresch_langer(2, 3).unwrap();
        let b = abresch_langer(2, 3).unwrap();
        assert_eq!(a.parameter.to_bits(), b.parameter.to_bits());
        let (va, vb) = match (&a.shape, &b.shape) {
            (Shape::Curve(x), Shape::Curve(y)) => (x.vertices(), y.vertices()),
            _ => panic!(),
        };
        for (p, q) in va.iter().zip(vb) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.y.to_bits(), q.y.to_bits());
        }
    }

    #[test]
    fn rotating_the_axis_rotates_the_curve() {
        let base = abresch_langer(2, 3).unwrap();
        let angle = 0.7;
        let rotated = abresch_langer_with(
            2,
            3,
            &ShootingOptions {
                axis_angle: angle,
                ..Default::default()
            },
        )
        .unwrap();
        let (vb, vr) = match (&base.shape, &rotated.shape) {
            (Shape::Curve(x), Shape::Curve(y)) => (x.clone(), y.clone()),
            _ => panic!(),
        };
        let vb_rot = vb.rotated(angle);
        let d = crate::geometry::hausdorff_distance(
            vb_rot.vertices(),
            true,
            vr.vertices(),
            true,
        );
        assert!(d < 1e-6, "rotated output differs by {d}");

        let ea = entropy_sup(&base.shape).unwrap().value;
        let eb = entropy_sup(&rotated.shape).unwrap().value;
        assert!((ea - eb).abs() < 1e-6);
    }

    #[test]
    fn angenent_torus_shoots_and_crosses_the_shrinker_sphere() {
        let res = angenent_torus().unwrap();
        assert!(res.residual < ACCEPT_RESIDUAL, "residual {}", res.residual);
        let profile = match &res.shape {
            Shape::Revolution(p) => p,
            _ => panic!(),
        };
        assert!(profile.is_closed_profile());

        // Entropy strictly above the 2-sphere's with a visible gap.
        let ent = entropy_sup(&res.shape).unwrap();
        assert!(
            ent.value > 4.0 / std::f64::consts::E + 0.01,
            "entropy {}",
            ent.value
        );

        // Shrinker fixed point: the supremum sits at center 0, scale 1.
        let f01 = f_functional(&res.shape, &CenterScale::base(3)).unwrap();
        assert!((ent.value - f01).abs() < 1e-3, "sup {} vs F(0,1) {f01}", ent.value);

        // The tube crosses the sphere of radius 2: neither contains the other.
        let sphere = Shape::Revolution(ProfileSurface::sphere(2.0, 256));
        assert!(profile.profile().iter().any(|p| p.norm() < 2.0));
        assert!(profile.profile().iter().any(|p| p.norm() > 2.0));
        assert_eq!(
            contains(&sphere, &res.shape).unwrap(),
            ContainsResult::DoesNotContain
        );
        assert_eq!(
            contains(&res.shape, &sphere).unwrap(),
            ContainsResult::DoesNotContain
        );
    }
}
