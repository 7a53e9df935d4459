//! Time stepping for mean curvature flow and its rescaled variant, the
//! correspondence between the two, singularity detection, parabolic tangent
//! rescalings at a singular point, and the closed-form blow-up time bound.
//!
//! Mean curvature flow moves every point with normal speed -H; the rescaled
//! flow with normal speed -(H - <x, n>/2), whose fixed points are the
//! self-shrinkers and along which the Gaussian area at center 0, scale 1 is
//! non-increasing. A mean curvature flow and a rescaled flow correspond via
//! `t -> Sigma(-e^{-t}) / sqrt(e^{-t})` once the singular time is shifted
//! to zero.

use nalgebra::Vector2;

use crate::entropy::{entropy_sup, f_functional, CenterScale};
use crate::error::{Error, Result};
use crate::geometry::{
    polyline_self_intersects, DiscreteCurve, GeomQuantities, ProfileSurface, ProfileTopology,
    Shape,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Forward Euler on the normal speed; stable only for dt of order h².
    Explicit,
    /// Curvature term implicit via the current-mesh Laplacian, position term
    /// explicit. Default.
    SemiImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    Mcf,
    Rescaled,
}

/// Flow controls. `a_max` is the curvature cap that declares a singularity;
/// when unset it defaults to 20x the initial max |A|.
#[derive(Clone, Debug)]
pub struct FlowParams {
    pub dt: f64,
    pub scheme: Scheme,
    /// Resample to uniform arclength when max/min edge ratio exceeds this.
    pub remesh_edge_ratio: f64,
    pub a_max: Option<f64>,
    pub dt_min: f64,
    pub t_max: f64,
    /// Tangential redistribution to near-uniform arclength after every step.
    pub redistribute: bool,
    /// Double the vertex count when curvature outruns the mesh
    /// (max |A| * h > 0.2), up to `max_vertices`.
    pub refine_under_resolved: bool,
    pub max_vertices: usize,
    /// Keep every k-th snapshot (diagnostics are kept every step; the last
    /// 64 steps are always kept densely).
    pub store_every: usize,
    /// Curves only: compute the full entropy supremum every k-th step.
    pub entropy_every: Option<usize>,
    /// Reject steps that introduce self-crossings (skipped automatically for
    /// inputs that are already immersed).
    pub check_self_intersection: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::SemiImplicit,
            remesh_edge_ratio: 2.0,
            a_max: None,
            dt_min: 1e-9,
            t_max: 10.0,
            redistribute: true,
            refine_under_resolved: true,
            max_vertices: 8192,
            store_every: 10,
            entropy_every: None,
            check_self_intersection: true,
        }
    }
}

/// Why a flow run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    ReachedTMax,
    /// max |A| exceeded the cap: singularity declared.
    CurvatureCap,
    /// The adaptive step collapsed below dt_min: singularity declared.
    DtCollapsed,
    /// The mesh can no longer resolve the curvature (max |A| * h > 0.5).
    UnderResolved,
    /// Produced by trace conversions, not by a run.
    Converted,
    StepFailed(String),
}

impl StopReason {
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            StopReason::CurvatureCap | StopReason::DtCollapsed | StopReason::UnderResolved
        )
    }
}

/// Per-step diagnostics row.
#[derive(Clone, Debug)]
pub struct DiagRow {
    pub t: f64,
    pub f01: f64,
    pub entropy_lb: Option<f64>,
    pub min_phi: f64,
    pub max_abs_a: f64,
    pub max_b2: Option<f64>,
    pub n_vertices: usize,
    pub mesh_quality: f64,
    /// Position of the vertex attaining max |A| (singular-point tracking).
    pub max_a_pos: Vector2<f64>,
    /// Mesh no longer resolves the curvature; excluded from fits.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub shape: Shape,
    pub diag: DiagRow,
}

/// Time-ordered flow history: dense per-step diagnostics plus a thinned
/// sequence of surface snapshots (dense near the end of the run).
#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub kind: FlowKind,
    pub initial_time: f64,
    pub diagnostics: Vec<DiagRow>,
    pub snapshots: Vec<Snapshot>,
    pub stop: StopReason,
    /// Set by conversions whose requested grid exceeded the available data.
    pub truncated: bool,
    pub scheme: Scheme,
    pub dt: f64,
    pub redistributed: bool,
}

impl FlowTrace {
    pub fn last_valid_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.iter().rev().find(|s| !s.diag.degenerate)
    }

    pub fn final_time(&self) -> f64 {
        self.diagnostics.last().map(|d| d.t).unwrap_or(self.initial_time)
    }
}

#[derive(Clone, Debug)]
pub struct SingularityEvent {
    /// Estimated singular time from the linear fit of 1/max|A|² against t.
    pub tau: f64,
    /// Estimated singular point: limit of the max-|A| vertex positions
    /// (profile coordinates (r, z) for surfaces of revolution).
    pub point: Vector2<f64>,
    /// R² of the inverse-square curvature-growth fit.
    pub fit_r2: f64,
    /// Number of rows used in the fit.
    pub window: usize,
}

/// Parabolic rescalings (M(tau - h²) - y)/h around a singular spacetime
/// point.
#[derive(Clone, Debug)]
pub struct TangentSequence {
    pub entries: Vec<TangentEntry>,
    /// Surface dimension n (1 for curves, 2 for surfaces of revolution).
    pub dimension: usize,
    /// The singular point used for recentering.
    pub center: Vector2<f64>,
}

#[derive(Clone, Debug)]
pub struct TangentEntry {
    pub scale: f64,
    /// Rescaled point set in the plane (curve polygon, or profile polyline).
    pub points: Vec<Vector2<f64>>,
    pub closed: bool,
    pub under_resolved: bool,
    pub note: Option<String>,
}

/// Geometric scale sequence h_i = h1 * (1/2)^{i-1}.
pub fn default_scales(h1: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| h1 * 0.5f64.powi(i as i32)).collect()
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

/// Advance a surface one step of the rescaled flow (normal speed
/// -(H - <x,n>/2)), including tangential redistribution.
pub fn step_rescaled(shape: &Shape, params: &FlowParams) -> Result<Shape> {
    let (next, _) = step_once(shape, FlowKind::Rescaled, params, params.dt)?;
    Ok(next)
}

/// Advance a surface one step of mean curvature flow (normal speed -H).
pub fn step_mcf(shape: &Shape, params: &FlowParams) -> Result<Shape> {
    let (next, _) = step_once(shape, FlowKind::Mcf, params, params.dt)?;
    Ok(next)
}

/// One step at an explicit dt, with redistribution and refinement applied
/// per `params`. Returns the new shape and the dt actually used (equal to
/// the requested dt; retries are the caller's loop).
fn step_once(shape: &Shape, kind: FlowKind, params: &FlowParams, dt: f64) -> Result<(Shape, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let q = shape.quantities();
    if params.scheme == Scheme::Explicit {
        // Parabolic stability bound for forward Euler.
        let h_min = q.quality.min_edge;
        let bound = EXPLICIT_CFL * h_min * h_min;
        if dt > bound * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "explicit step dt = {dt:.3e} exceeds the stability bound 0.4 h_min^2 = {bound:.3e}"
            )));
        }
    }
    let moved = match params.scheme {
        Scheme::Explicit => explicit_step(shape, &q, kind, dt)?,
        Scheme::SemiImplicit => semi_implicit_step(shape, &q, kind, dt)?,
    };
    let out = if params.redistribute {
        resample_to(&moved, moved.n_points())?
    } else {
        moved
    };
    Ok((out, dt))
}

fn explicit_step(shape: &Shape, q: &GeomQuantities, kind: FlowKind, dt: f64) -> Result<Shape> {
    let speed = |i: usize| match kind {
        FlowKind::Mcf => q.mean_curvature[i],
        FlowKind::Rescaled => q.shrinker_residual[i],
    };
    match shape {
        Shape::Curve(c) => {
            let pts: Vec<Vector2<f64>> = c
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, p)| p - dt * speed(i) * q.normal[i])
                .collect();
            Ok(Shape::Curve(DiscreteCurve::from_flow_step(
                pts,
                c.is_simple(),
            )?))
        }
        Shape::Revolution(p) => {
            let mut pts: Vec<Vector2<f64>> = p
                .profile()
                .iter()
                .enumerate()
                .map(|(i, x)| x - dt * speed(i) * q.normal[i])
                .collect();
            if p.topology() == ProfileTopology::AxisTerminated {
                let n = pts.len();
                pts[0].x = 0.0;
                pts[n - 1].x = 0.0;
            }
            check_profile_positive(&pts, p.topology())?;
            Ok(Shape::Revolution(ProfileSurface::from_flow_step(
                pts,
                p.topology(),
            )?))
        }
    }
}

/// Semi-implicit step: the Laplace-Beltrami part of the velocity is taken at
/// the new time level on the current mesh; the position term (rescaled flow)
/// stays explicit. Solves small (cyclic) tridiagonal systems per component.
fn semi_implicit_step(shape: &Shape, q: &GeomQuantities, kind: FlowKind, dt: f64) -> Result<Shape> {
    match shape {
        Shape::Curve(c) => {
            let pts = c.vertices();
            let n = pts.len();
            let mut sub = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut sup = vec![0.0; n];
            for i in 0..n {
                let a = (pts[i] - pts[(i + n - 1) % n]).norm();
                let b = (pts[(i + 1) % n] - pts[i]).norm();
                // Nonuniform 3-point Laplacian row (c_prev, c_diag, c_next).
                let c_prev = 2.0 / (a * (a + b));
                let c_next = 2.0 / (b * (a + b));
                sub[i] = -dt * c_prev;
                sup[i] = -dt * c_next;
                diag[i] = 1.0 + dt * (c_prev + c_next);
            }
            let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
            let mut ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
            if kind == FlowKind::Rescaled {
                for i in 0..n {
                    let g = 0.5 * q.position_normal[i] * q.normal[i];
                    xs[i] += dt * g.x;
                    ys[i] += dt * g.y;
                }
            }
            let xs = solve_cyclic_tridiag(&sub, &diag, &sup, &xs)?;
            let ys = solve_cyclic_tridiag(&sub, &diag, &sup, &ys)?;
            let new_pts: Vec<Vector2<f64>> = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| Vector2::new(*x, *y))
                .collect();
            Ok(Shape::Curve(DiscreteCurve::from_flow_step(
                new_pts,
                c.is_simple(),
            )?))
        }
        Shape::Revolution(p) => semi_implicit_profile_step(p, q, kind, dt),
    }
}

fn semi_implicit_profile_step(
    p: &ProfileSurface,
    q: &GeomQuantities,
    kind: FlowKind,
    dt: f64,
) -> Result<Shape> {
    let pts = p.profile();
    let n = pts.len();
    let closed = p.topology() == ProfileTopology::ClosedProfile;

    // Metric gaps and the tangential coefficient r_s / r at each point.
    let gap = |i: usize, j: usize| (pts[j] - pts[i]).norm();
    let mut rs_over_r = vec![0.0; n];
    for i in 0..n {
        if closed {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let a = gap(im, i);
            let b = gap(i, ip);
            let rs = (a * a * pts[ip].x + (b * b - a * a) * pts[i].x - b * b * pts[im].x)
                / (a * b * (a + b));
            rs_over_r[i] = rs / pts[i].x;
        } else if i > 0 && i < n - 1 {
            let a = gap(i - 1, i);
            let b = gap(i, i + 1);
            let rs = (a * a * pts[i + 1].x + (b * b - a * a) * pts[i].x - b * b * pts[i - 1].x)
                / (a * b * (a + b));
            rs_over_r[i] = rs / pts[i].x;
        }
    }

    // Component matrices: rows of I - dt * L with
    //   L_z = z_ss + (r_s/r) z_s          (poles: 2 z_ss, drift vanishes)
    //   L_r = r_ss + (r_s/r) r_s - r/r²   (poles: Dirichlet r = 0)
    let mut sub_z = vec![0.0; n];
    let mut diag_z = vec![0.0; n];
    let mut sup_z = vec![0.0; n];
    let mut sub_r = vec![0.0; n];
    let mut diag_r = vec![0.0; n];
    let mut sup_r = vec![0.0; n];

    for i in 0..n {
        let interior = closed || (i > 0 && i < n - 1);
        if interior {
            let im = if closed { (i + n - 1) % n } else { i - 1 };
            let ip = if closed { (i + 1) % n } else { i + 1 };
            let a = gap(im, i);
            let b = gap(i, ip);
            let lap_prev = 2.0 / (a * (a + b));
            let lap_next = 2.0 / (b * (a + b));
            let d1_prev = -b / (a * (a + b));
            let d1_next = a / (b * (a + b));
            let d1_diag = (b * b - a * a) / (a * b * (a + b));
            let w = rs_over_r[i];

            sub_z[i] = -dt * (lap_prev + w * d1_prev);
            sup_z[i] = -dt * (lap_next + w * d1_next);
            diag_z[i] = 1.0 + dt * (lap_prev + lap_next) - dt * w * d1_diag;

            sub_r[i] = -dt * (lap_prev + w * d1_prev);
            sup_r[i] = -dt * (lap_next + w * d1_next);
            diag_r[i] =
                1.0 + dt * (lap_prev + lap_next) - dt * w * d1_diag + dt / (pts[i].x * pts[i].x);
        } else if i == 0 {
            // South pole: even symmetry across the axis.
            let a = gap(0, 1);
            sub_z[i] = 0.0;
            sup_z[i] = -dt * 4.0 / (a * a);
            diag_z[i] = 1.0 + dt * 4.0 / (a * a);
            sub_r[i] = 0.0;
            sup_r[i] = 0.0;
            diag_r[i] = 1.0;
        } else {
            let a = gap(n - 2, n - 1);
            sub_z[i] = -dt * 4.0 / (a * a);
            sup_z[i] = 0.0;
            diag_z[i] = 1.0 + dt * 4.0 / (a * a);
            sub_r[i] = 0.0;
            sup_r[i] = 0.0;
            diag_r[i] = 1.0;
        }
    }

    let mut rhs_r: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let mut rhs_z: Vec<f64> = pts.iter().map(|p| p.y).collect();
    if kind == FlowKind::Rescaled {
        for i in 0..n {
            let interior = closed || (i > 0 && i < n - 1);
            let g = 0.5 * q.position_normal[i] * q.normal[i];
            if interior {
                rhs_r[i] += dt * g.x;
            }
            rhs_z[i] += dt * g.y;
        }
    }
    if !closed {
        rhs_r[0] = 0.0;
        rhs_r[n - 1] = 0.0;
    }

    let (new_r, new_z) = if closed {
        (
            solve_cyclic_tridiag(&sub_r, &diag_r, &sup_r, &rhs_r)?,
            solve_cyclic_tridiag(&sub_z, &diag_z, &sup_z, &rhs_z)?,
        )
    } else {
        (
            solve_tridiag(&sub_r, &diag_r, &sup_r, &rhs_r)?,
            solve_tridiag(&sub_z, &diag_z, &sup_z, &rhs_z)?,
        )
    };
    let new_pts: Vec<Vector2<f64>> = new_r
        .iter()
        .zip(&new_z)
        .map(|(r, z)| Vector2::new(*r, *z))
        .collect();
    check_profile_positive(&new_pts, p.topology())?;
    Ok(Shape::Revolution(ProfileSurface::from_flow_step(
        new_pts,
        p.topology(),
    )?))
}

fn check_profile_positive(pts: &[Vector2<f64>], topology: ProfileTopology) -> Result<()> {
    let interior = match topology {
        ProfileTopology::ClosedProfile => pts,
        ProfileTopology::AxisTerminated => &pts[1..pts.len() - 1],
    };
    if interior.iter().any(|p| p.x <= 0.0) {
        return Err(Error::Flow(
            "profile crossed the symmetry axis during the step".into(),
        ));
    }
    Ok(())
}

fn resample_to(shape: &Shape, count: usize) -> Result<Shape> {
    match shape {
        Shape::Curve(c) => Ok(Shape::Curve(c.resampled(count)?)),
        Shape::Revolution(p) => Ok(Shape::Revolution(p.resampled(count)?)),
    }
}

fn shape_is_embedded(shape: &Shape) -> bool {
    match shape {
        Shape::Curve(c) => c.is_simple(),
        Shape::Revolution(_) => true,
    }
}

fn shape_self_intersects(shape: &Shape) -> bool {
    match shape {
        Shape::Curve(c) => polyline_self_intersects(c.vertices(), true),
        Shape::Revolution(p) => {
            polyline_self_intersects(p.profile(), p.topology() == ProfileTopology::ClosedProfile)
        }
    }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

/// Curvature-based step control: resolve the 1/|A|² blow-up time scale.
/// Near a singularity the first-order time error tilts the inverse-square
/// curvature law by about 3x this factor, so it is kept small.
const CURVATURE_CFL: f64 = 0.005;
/// Explicit-scheme parabolic stability bound dt <= 0.4 h_min².
const EXPLICIT_CFL: f64 = 0.4;
/// Dense snapshot tail length.
const TAIL: usize = 64;

fn diag_row(shape: &Shape, q: &GeomQuantities, t: f64, kind: FlowKind, entropy: Option<f64>) -> DiagRow {
    let max_abs_a = q.max_abs_a();
    let f01 = f_functional(shape, &CenterScale::base(shape.ambient_dim())).unwrap_or(f64::NAN);
    let max_b2 = if kind == FlowKind::Rescaled {
        q.max_ratio_sq().map(|r| r * (2.0 * t).exp())
    } else {
        None
    };
    let idx = q
        .second_fundamental_sq
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    DiagRow {
        t,
        f01,
        entropy_lb: entropy,
        min_phi: q.min_phi(),
        max_abs_a,
        max_b2,
        n_vertices: q.len(),
        mesh_quality: q.quality.edge_ratio(),
        max_a_pos: shape.points()[idx],
        degenerate: max_abs_a * q.quality.max_edge > 0.5,
    }
}

/// Diagnostics row for an externally stored snapshot (trace reloading).
pub fn diag_row_public(shape: &Shape, q: &GeomQuantities, t: f64, kind: FlowKind) -> DiagRow {
    diag_row(shape, q, t, kind, None)
}

/// Run a flow from `initial_time` until `t_max`, a declared singularity, or
/// an unrecoverable step failure. Diagnostics are recorded every accepted
/// step; snapshots every `store_every` steps plus a dense tail.
pub fn run_flow(
    shape: &Shape,
    kind: FlowKind,
    params: &FlowParams,
    initial_time: f64,
) -> Result<FlowTrace> {
    let mut current = shape.clone();
    let mut t = initial_time;
    let q0 = current.quantities();
    let a_cap = params.a_max.unwrap_or(20.0 * q0.max_abs_a().max(1e-6));
    if let Some(a) = params.a_max {
        // The cap must sit well above the starting curvature or the type-I
        // fit window would overlap the smooth regime.
        if a <= 10.0 * q0.max_abs_a() {
            return Err(Error::InvalidParameter(format!(
                "curvature cap {a} must exceed 10x the initial max |A| = {}",
                q0.max_abs_a()
            )));
        }
    }
    let check_si = params.check_self_intersection && shape_is_embedded(&current);

    let mut diagnostics: Vec<DiagRow> = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut tail: std::collections::VecDeque<Snapshot> = std::collections::VecDeque::new();
    let stop;
    let mut step_index = 0usize;

    loop {
        let q = current.quantities();
        let entropy = match (params.entropy_every, &current) {
            (Some(k), Shape::Curve(_)) if step_index.is_multiple_of(k) => {
                entropy_sup(&current).ok().map(|r| r.value)
            }
            _ => None,
        };
        let row = diag_row(&current, &q, t, kind, entropy);
        let degenerate = row.degenerate;
        let max_abs_a = row.max_abs_a;
        diagnostics.push(row.clone());

        let snap = Snapshot {
            t,
            shape: current.clone(),
            diag: row,
        };
        if step_index.is_multiple_of(params.store_every) {
            snapshots.push(snap.clone());
        }
        tail.push_back(snap);
        if tail.len() > TAIL {
            tail.pop_front();
        }

        // Stopping conditions, checked on the recorded state.
        if max_abs_a >= a_cap {
            stop = StopReason::CurvatureCap;
            break;
        }
        if degenerate {
            stop = StopReason::UnderResolved;
            break;
        }
        let remaining = initial_time + params.t_max - t;
        if remaining <= params.dt_min {
            stop = StopReason::ReachedTMax;
            break;
        }

        // Adaptive step: resolve the curvature time scale; explicit scheme
        // additionally obeys the parabolic bound.
        let mut dt = params.dt.min(CURVATURE_CFL / (max_abs_a * max_abs_a).max(1e-12));
        if params.scheme == Scheme::Explicit {
            let h_min = q.quality.min_edge;
            dt = dt.min(EXPLICIT_CFL * h_min * h_min);
        }
        if dt <= params.dt_min {
            stop = StopReason::DtCollapsed;
            break;
        }
        dt = dt.min(remaining);

        // Step with halving retries on self-intersection or geometric failure.
        let mut attempt_dt = dt;
        let mut next = None;
        loop {
            match step_once(&current, kind, params, attempt_dt) {
                Ok((cand, _)) => {
                    if check_si && shape_self_intersects(&cand) {
                        attempt_dt *= 0.5;
                    } else {
                        next = Some(cand);
                        break;
                    }
                }
                Err(_) => {
                    attempt_dt *= 0.5;
                }
            }
            if attempt_dt <= params.dt_min {
                break;
            }
        }
        let Some(mut cand) = next else {
            stop = StopReason::DtCollapsed;
            break;
        };

        // Re-meshing triggers consumed from the step's quality report.
        if params.redistribute {
            let qc = cand.quantities();
            if qc.quality.edge_ratio() > params.remesh_edge_ratio {
                cand = resample_to(&cand, cand.n_points())?;
            }
            if params.refine_under_resolved {
                let qa = cand.quantities();
                if qa.max_abs_a() * qa.quality.max_edge > 0.2
                    && 2 * cand.n_points() <= params.max_vertices
                {
                    cand = resample_to(&cand, 2 * cand.n_points())?;
                }
            }
        }

        current = cand;
        t += attempt_dt;
        step_index += 1;
    }

    // Promote the dense tail into the snapshot list.
    for snap in tail {
        if snapshots
            .iter()
            .all(|s| (s.t - snap.t).abs() > 1e-15)
        {
            snapshots.push(snap);
        }
    }
    snapshots.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));

    Ok(FlowTrace {
        kind,
        initial_time,
        diagnostics,
        snapshots,
        stop,
        truncated: false,
        scheme: params.scheme,
        dt: params.dt,
        redistributed: params.redistribute,
    })
}

// ---------------------------------------------------------------------------
// Correspondence between the flows
// ---------------------------------------------------------------------------

fn interpolate_snapshots(a: &Snapshot, b: &Snapshot, t: f64) -> Shape {
    let wa = if (b.t - a.t).abs() > 0.0 {
        (b.t - t) / (b.t - a.t)
    } else {
        1.0
    };
    let pa = a.shape.points();
    let pb = b.shape.points();
    if pa.len() != pb.len() {
        // Counts differ across a re-mesh: fall back to the nearer snapshot.
        return if (t - a.t).abs() <= (b.t - t).abs() {
            a.shape.clone()
        } else {
            b.shape.clone()
        };
    }
    let pts: Vec<Vector2<f64>> = pa
        .iter()
        .zip(pb)
        .map(|(x, y)| x * wa + y * (1.0 - wa))
        .collect();
    rebuild_like(&a.shape, pts)
}

fn rebuild_like(template: &Shape, pts: Vec<Vector2<f64>>) -> Shape {
    match template {
        Shape::Curve(c) => Shape::Curve(
            DiscreteCurve::from_flow_step(pts, c.is_simple())
                .expect("interpolated curve from valid snapshots"),
        ),
        Shape::Revolution(p) => Shape::Revolution(
            ProfileSurface::from_flow_step(pts, p.topology())
                .expect("interpolated profile from valid snapshots"),
        ),
    }
}

fn scale_shape(shape: &Shape, factor: f64) -> Shape {
    match shape {
        Shape::Curve(c) => Shape::Curve(c.scaled(factor)),
        Shape::Revolution(p) => Shape::Revolution(p.scaled(factor)),
    }
}

/// Convert a mean-curvature-flow trace into the corresponding rescaled-flow
/// trace on a uniform grid of `n_out` rescaled times: the snapshot at
/// mcf time `tau_est - e^{-t}` is scaled by `e^{t/2}`. Requested times
/// beyond the stored range truncate the output and set the flag.
pub fn mcf_to_rescaled(trace: &FlowTrace, tau_est: f64, n_out: usize) -> Result<FlowTrace> {
    if trace.kind != FlowKind::Mcf {
        return Err(Error::Trace("expected a mean-curvature-flow trace".into()));
    }
    if trace.snapshots.is_empty() {
        return Err(Error::Trace("empty trace".into()));
    }
    if n_out < 2 {
        return Err(Error::InvalidParameter("need at least 2 output times".into()));
    }
    let t_first = trace.snapshots.first().unwrap().t;
    let t_last = trace.snapshots.last().unwrap().t;
    if tau_est <= t_first {
        return Err(Error::Trace(format!(
            "estimated singular time {tau_est} precedes the trace start {t_first}"
        )));
    }
    // Rescaled times available from the stored mcf range.
    let s_first = -(tau_est - t_first).ln();
    let mut s_last = if t_last < tau_est {
        -(tau_est - t_last).ln()
    } else {
        f64::INFINITY
    };
    let mut truncated = false;
    if !s_last.is_finite() {
        s_last = s_first + 20.0;
        truncated = true;
    }

    let mut snapshots = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let s = s_first + (s_last - s_first) * j as f64 / (n_out - 1) as f64;
        let t_mcf = tau_est - (-s).exp();
        if t_mcf > t_last + 1e-15 {
            truncated = true;
            break;
        }
        // Bracketing snapshots.
        let hi = trace
            .snapshots
            .partition_point(|snap| snap.t < t_mcf)
            .min(trace.snapshots.len() - 1);
        let lo = hi.saturating_sub(1);
        let shape = if trace.snapshots[hi].t <= t_mcf || hi == 0 {
            trace.snapshots[hi].shape.clone()
        } else {
            interpolate_snapshots(&trace.snapshots[lo], &trace.snapshots[hi], t_mcf)
        };
        let scaled = scale_shape(&shape, (0.5 * s).exp());
        let q = scaled.quantities();
        let diag = diag_row(&scaled, &q, s, FlowKind::Rescaled, None);
        snapshots.push(Snapshot {
            t: s,
            shape: scaled,
            diag,
        });
    }
    if snapshots.is_empty() {
        return Err(Error::Trace(
            "no rescaled times could be produced from the trace".into(),
        ));
    }

    Ok(FlowTrace {
        kind: FlowKind::Rescaled,
        initial_time: snapshots.first().unwrap().t,
        diagnostics: snapshots.iter().map(|s| s.diag.clone()).collect(),
        snapshots,
        stop: StopReason::Converted,
        truncated,
        scheme: trace.scheme,
        dt: trace.dt,
        redistributed: trace.redistributed,
    })
}

/// Convert a rescaled-flow trace into the corresponding mean-curvature-flow
/// trace: snapshot at rescaled time t maps to mcf time `-e^{-t}` scaled by
/// `e^{-t/2}` (singular time at 0).
pub fn rescaled_to_mcf(trace: &FlowTrace) -> Result<FlowTrace> {
    if trace.kind != FlowKind::Rescaled {
        return Err(Error::Trace("expected a rescaled-flow trace".into()));
    }
    if trace.snapshots.is_empty() {
        return Err(Error::Trace("empty trace".into()));
    }
    let mut snapshots = Vec::with_capacity(trace.snapshots.len());
    for s in &trace.snapshots {
        let t_mcf = -(-s.t).exp();
        let scaled = scale_shape(&s.shape, (-0.5 * s.t).exp());
        let q = scaled.quantities();
        let diag = diag_row(&scaled, &q, t_mcf, FlowKind::Mcf, None);
        snapshots.push(Snapshot {
            t: t_mcf,
            shape: scaled,
            diag,
        });
    }
    Ok(FlowTrace {
        kind: FlowKind::Mcf,
        initial_time: snapshots.first().unwrap().t,
        diagnostics: snapshots.iter().map(|s| s.diag.clone()).collect(),
        snapshots,
        stop: StopReason::Converted,
        truncated: trace.truncated,
        scheme: trace.scheme,
        dt: trace.dt,
        redistributed: trace.redistributed,
    })
}

/// Map a singularity event found in rescaled time onto the corresponding
/// mean-curvature-flow coordinates.
pub fn map_event_to_mcf(ev: &SingularityEvent) -> SingularityEvent {
    SingularityEvent {
        tau: -(-ev.tau).exp(),
        point: ev.point * (-0.5 * ev.tau).exp(),
        fit_r2: ev.fit_r2,
        window: ev.window,
    }
}

// ---------------------------------------------------------------------------
// Singularity detection and tangent rescalings
// ---------------------------------------------------------------------------

const FIT_WINDOW: usize = 20;

/// Detect a singularity from a finished trace: declared when the run stopped
/// at the curvature cap (or the step collapsed), with the singular time from
/// a linear fit of 1/max|A|² against t and the singular point from the
/// tracked max-|A| vertex positions extrapolated in sqrt(tau - t).
pub fn detect_singularity(trace: &FlowTrace) -> Result<Option<SingularityEvent>> {
    if trace.diagnostics.len() < 10 {
        return Err(Error::Trace(format!(
            "need at least 10 recorded steps, got {}",
            trace.diagnostics.len()
        )));
    }
    if !trace.stop.is_singular() {
        return Ok(None);
    }
    let valid: Vec<&DiagRow> = trace
        .diagnostics
        .iter()
        .filter(|d| !d.degenerate && d.max_abs_a > 0.0)
        .collect();
    if valid.len() < 3 {
        return Err(Error::Trace("too few usable rows for the blow-up fit".into()));
    }
    let rows = &valid[valid.len().saturating_sub(FIT_WINDOW)..];

    // Linear least squares of y = 1/max|A|² against t.
    let m = rows.len() as f64;
    let mut st = 0.0;
    let mut sy = 0.0;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for r in rows {
        let y = 1.0 / (r.max_abs_a * r.max_abs_a);
        st += r.t;
        sy += y;
        stt += r.t * r.t;
        sty += r.t * y;
    }
    let denom = m * stt - st * st;
    if denom.abs() < 1e-300 {
        return Err(Error::Trace("degenerate time window for the blow-up fit".into()));
    }
    let slope = (m * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / m;
    if slope >= 0.0 {
        return Err(Error::Trace(
            "curvature is not blowing up across the fit window".into(),
        ));
    }
    let tau = -intercept / slope;

    // Fit quality: R² of the linear model.
    let mean_y = sy / m;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for r in rows {
        let y = 1.0 / (r.max_abs_a * r.max_abs_a);
        let pred = slope * r.t + intercept;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let fit_r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    // Singular point: the max-|A| vertex positions approach it like the
    // shrinking feature size, p(t) = y + O(sqrt(tau - t)). Regress the
    // positions on w = sqrt(tau - t) over a wide curvature window (final
    // factor of four in max |A|, i.e. a factor of four in w) so the
    // intercept has leverage; the narrow tail alone is ill-conditioned.
    let a_last = valid.last().unwrap().max_abs_a;
    let wide: Vec<&&DiagRow> = valid
        .iter()
        .filter(|d| d.max_abs_a >= 0.25 * a_last)
        .collect();
    let point = if wide.len() >= 6 {
        let stride = (wide.len() / 400).max(1);
        let mw = wide.iter().step_by(stride).count() as f64;
        let (mut sw, mut sww) = (0.0, 0.0);
        let mut sx = Vector2::zeros();
        let mut swx = Vector2::zeros();
        for d in wide.iter().step_by(stride) {
            let w = (tau - d.t).max(0.0).sqrt();
            sw += w;
            sww += w * w;
            sx += d.max_a_pos;
            swx += w * d.max_a_pos;
        }
        let denom_p = mw * sww - sw * sw;
        if denom_p.abs() > 1e-300 {
            let bx = (mw * swx.x - sw * sx.x) / denom_p;
            let by = (mw * swx.y - sw * sx.y) / denom_p;
            Vector2::new((sx.x - bx * sw) / mw, (sx.y - by * sw) / mw)
        } else {
            valid.last().unwrap().max_a_pos
        }
    } else {
        valid.last().unwrap().max_a_pos
    };

    let last_t = trace.diagnostics.last().unwrap().t;
    Ok(Some(SingularityEvent {
        tau: tau.max(last_t),
        point,
        fit_r2,
        window: rows.len(),
    }))
}

/// Singular time consistent with the curvature scale h: refit the inverse
/// square law on the rows whose 1/max|A|² lies in [h², 9h²]. A first-order
/// scheme drifts slowly against the exact law, so the globally fitted time
/// misplaces the smallest scales; the window-matched fit samples each scale
/// at its own curvature level.
fn local_singular_time(diagnostics: &[DiagRow], h: f64, fallback: f64) -> f64 {
    let lo = h * h;
    let hi = 9.0 * h * h;
    let rows: Vec<(f64, f64)> = diagnostics
        .iter()
        .filter(|d| !d.degenerate && d.max_abs_a > 0.0)
        .map(|d| (d.t, 1.0 / (d.max_abs_a * d.max_abs_a)))
        .filter(|(_, y)| *y >= lo && *y <= hi)
        .collect();
    if rows.len() < 6 {
        return fallback;
    }
    let stride = (rows.len() / 200).max(1);
    let rows: Vec<(f64, f64)> = rows.into_iter().step_by(stride).collect();
    let m = rows.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (t, y) in &rows {
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = m * stt - st * st;
    if denom.abs() < 1e-300 {
        return fallback;
    }
    let slope = (m * sty - st * sy) / denom;
    if slope >= 0.0 {
        return fallback;
    }
    let intercept = (sy - slope * st) / m;
    let tau = -intercept / slope;
    // Sanity: stay near the global estimate.
    if (tau - fallback).abs() > 0.5 * fallback.abs().max(1.0) {
        fallback
    } else {
        tau
    }
}

/// Recentered, rescaled snapshots (M(tau - h²) - y)/h for the given scales.
/// Snapshots are interpolated linearly in time; scales whose time falls
/// outside the stored range, or whose mesh is too coarse after rescaling,
/// are flagged under-resolved. The singular time is refit per scale in a
/// curvature window matched to that scale.
pub fn tangent_rescalings(
    trace: &FlowTrace,
    ev: &SingularityEvent,
    scales: &[f64],
) -> Result<TangentSequence> {
    if trace.kind != FlowKind::Mcf {
        return Err(Error::Trace(
            "tangent rescalings expect a mean-curvature-flow trace".into(),
        ));
    }
    if trace.snapshots.is_empty() {
        return Err(Error::Trace("empty trace".into()));
    }
    let dimension = trace.snapshots[0].shape.dimension();
    let t_first = trace.snapshots.first().unwrap().t;
    // Last snapshot that still resolves its curvature.
    let t_last_valid = trace
        .last_valid_snapshot()
        .map(|s| s.t)
        .unwrap_or(t_first);

    let mut entries = Vec::with_capacity(scales.len());
    for &h in scales {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("scales must be positive".into()));
        }
        let t_star = local_singular_time(&trace.diagnostics, h, ev.tau) - h * h;
        if t_star < t_first {
            entries.push(TangentEntry {
                scale: h,
                points: Vec::new(),
                closed: false,
                under_resolved: true,
                note: Some(format!(
                    "requested time {t_star:.6} precedes the trace start {t_first:.6}"
                )),
            });
            continue;
        }
        if t_star > t_last_valid {
            entries.push(TangentEntry {
                scale: h,
                points: Vec::new(),
                closed: false,
                under_resolved: true,
                note: Some(format!(
                    "requested time {t_star:.6} is beyond the last resolved snapshot {t_last_valid:.6}"
                )),
            });
            continue;
        }
        let hi = trace
            .snapshots
            .partition_point(|snap| snap.t < t_star)
            .min(trace.snapshots.len() - 1);
        let lo = hi.saturating_sub(1);
        let shape = if hi == 0 || (trace.snapshots[hi].t - t_star).abs() < 1e-15 {
            trace.snapshots[hi].shape.clone()
        } else {
            interpolate_snapshots(&trace.snapshots[lo], &trace.snapshots[hi], t_star)
        };
        let closed = match &shape {
            Shape::Curve(_) => true,
            Shape::Revolution(p) => p.is_closed_profile(),
        };
        let points: Vec<Vector2<f64>> = shape
            .points()
            .iter()
            .map(|p| (p - ev.point) / h)
            .collect();
        // Rescaled mesh spacing must stay fine against the unit-scale limit.
        let mean_edge = crate::geometry::polyline_length(&points, closed) / points.len() as f64;
        let under_resolved = mean_edge > 0.3;
        entries.push(TangentEntry {
            scale: h,
            points,
            closed,
            under_resolved,
            note: if under_resolved {
                Some(format!(
                    "rescaled mean edge {mean_edge:.3} too coarse at this scale"
                ))
            } else {
                None
            },
        });
    }
    Ok(TangentSequence {
        entries,
        dimension,
        center: ev.point,
    })
}

// ---------------------------------------------------------------------------
// Blow-up time bound
// ---------------------------------------------------------------------------

/// Upper bound for the singular time of a rescaled flow whose initial
/// surface has `H - <x,n>/2 >= c > 0` and max |x| = 2*C1: the minimum of the
/// residual grows like e^{t/2}, so after T1 = max(0, 2 ln(2 C1 / c)) the
/// mean curvature dominates half the residual and the cubic comparison ODE
/// m' = m³/(4n) blows up within 2n / (c e^{T1/2})².
pub fn blowup_time_bound(c: f64, c1: f64, n: u32) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a strictly positive lower bound c, got {c}"
        )));
    }
    if !(c1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a positive position bound C1, got {c1}"
        )));
    }
    let t1 = (2.0 * (2.0 * c1 / c).ln()).max(0.0);
    let m_t1 = c * (0.5 * t1).exp();
    Ok(t1 + 2.0 * n as f64 / (m_t1 * m_t1))
}

// ---------------------------------------------------------------------------
// Tridiagonal solvers
// ---------------------------------------------------------------------------

/// Thomas algorithm; `sub[i]` multiplies x[i-1], `sup[i]` multiplies x[i+1].
pub(crate) fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(Error::Flow("singular tridiagonal system".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::Flow("singular tridiagonal system".into()));
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Cyclic tridiagonal solve by the Sherman-Morrison correction; `sub[0]`
/// multiplies x[n-1] and `sup[n-1]` multiplies x[0].
pub(crate) fn solve_cyclic_tridiag(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::Flow("cyclic system needs at least 3 unknowns".into()));
    }
    let alpha = sub[0];
    let beta = sup[n - 1];
    let gamma = -diag[0];
    let mut diag_mod = diag.to_vec();
    diag_mod[0] = diag[0] - gamma;
    diag_mod[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let y = solve_tridiag(sub, &diag_mod, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = beta;
    let z = solve_tridiag(sub, &diag_mod, sup, &u)?;
    let factor = (y[0] + alpha * y[n - 1] / gamma) / (1.0 + z[0] + alpha * z[n - 1] / gamma);
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff_distance;

    fn mean_radius(shape: &Shape) -> f64 {
        let pts = shape.points();
        pts.iter().map(|p| p.norm()).sum::<f64>() / pts.len() as f64
    }

    #[test]
    fn tridiagonal_solvers_roundtrip() {
        let n = 12;
        let sub = vec![-1.0; n];
        let diag = vec![4.0; n];
        let sup = vec![-1.5; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        // Plain system.
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += sub[i] * x_true[i - 1];
            }
            if i < n - 1 {
                rhs[i] += sup[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiag(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
        // Cyclic system.
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] =
                diag[i] * x_true[i] + sub[i] * x_true[(i + n - 1) % n] + sup[i] * x_true[(i + 1) % n];
        }
        let x = solve_cyclic_tridiag(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12, "i={i}: {} vs {}", x[i], x_true[i]);
        }
    }

    #[test]
    fn shrinker_circle_is_a_fixed_point() {
        let c = Shape::Curve(DiscreteCurve::circle(2.0f64.sqrt(), 512));
        let params = FlowParams::default();
        let next = step_rescaled(&c, &params).unwrap();
        let moved: f64 = c
            .points()
            .iter()
            .zip(next.points())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(moved < 1e-6, "fixed point moved by {moved}");
    }

    #[test]
    fn rescaled_circle_follows_the_radial_solution() {
        // r(t)² = 2 + (r0² - 2) e^t for the rescaled flow.
        let params = FlowParams {
            dt: 2e-4,
            t_max: 0.5,
            store_every: 50,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 256));
        let trace = run_flow(&c, FlowKind::Rescaled, &params, 0.0).unwrap();
        assert_eq!(trace.stop, StopReason::ReachedTMax);
        let last = trace.snapshots.last().unwrap();
        let expected = (2.0 + (1.0 - 2.0) * last.t.exp()).sqrt();
        let got = mean_radius(&last.shape);
        assert!(
            (got - expected).abs() < 1e-3,
            "radius {got} vs {expected} at t = {}",
            last.t
        );
    }

    #[test]
    fn rescaled_sphere_follows_the_radial_solution() {
        // r(t)² = 4 + (r0² - 4) e^t for surfaces of revolution (n = 2);
        // extinction at ln(4/3), so stop well before.
        let params = FlowParams {
            dt: 2e-4,
            t_max: 0.2,
            store_every: 50,
            ..Default::default()
        };
        let s = Shape::Revolution(ProfileSurface::sphere(1.0, 256));
        let trace = run_flow(&s, FlowKind::Rescaled, &params, 0.0).unwrap();
        assert_eq!(trace.stop, StopReason::ReachedTMax);
        let last = trace.snapshots.last().unwrap();
        let expected = (4.0 + (1.0 - 4.0) * last.t.exp()).sqrt();
        let got = mean_radius(&last.shape);
        assert!(
            (got - expected).abs() < 1e-3,
            "radius {got} vs {expected} at t = {}",
            last.t
        );
    }

    #[test]
    fn mcf_circle_and_sphere_extinction() {
        // Circle: r(t) = sqrt(R² - 2t); sphere: r(t) = sqrt(R² - 4t).
        let params = FlowParams {
            dt: 2e-4,
            t_max: 0.3,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 256));
        let trace = run_flow(&c, FlowKind::Mcf, &params, 0.0).unwrap();
        let last = trace.snapshots.last().unwrap();
        let expected = (1.0 - 2.0 * last.t).sqrt();
        assert!((mean_radius(&last.shape) - expected).abs() < 2e-3);

        let s = Shape::Revolution(ProfileSurface::sphere(1.0, 256));
        let params = FlowParams {
            dt: 2e-4,
            t_max: 0.18,
            ..Default::default()
        };
        let trace = run_flow(&s, FlowKind::Mcf, &params, 0.0).unwrap();
        let last = trace.snapshots.last().unwrap();
        let expected = (1.0 - 4.0 * last.t).sqrt();
        assert!((mean_radius(&last.shape) - expected).abs() < 2e-3);
    }

    #[test]
    fn convex_curves_stay_convex_under_mcf() {
        let params = FlowParams {
            dt: 5e-4,
            t_max: 0.3,
            store_every: 100,
            ..Default::default()
        };
        let e = Shape::Curve(DiscreteCurve::ellipse(2.0, 1.0, 256));
        let trace = run_flow(&e, FlowKind::Mcf, &params, 0.0).unwrap();
        for snap in &trace.snapshots {
            let q = snap.shape.quantities();
            let min_h = q.mean_curvature.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min_h > 0.0, "lost convexity at t = {}", snap.t);
        }
    }

    #[test]
    fn detects_rescaled_circle_singularity_near_ln2() {
        let params = FlowParams {
            dt: 1e-3,
            t_max: 2.0,
            a_max: Some(60.0),
            store_every: 20,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 256));
        let trace = run_flow(&c, FlowKind::Rescaled, &params, 0.0).unwrap();
        assert!(trace.stop.is_singular(), "stop = {:?}", trace.stop);
        let ev = detect_singularity(&trace).unwrap().unwrap();
        let exact = 2.0f64.ln();
        assert!(
            (ev.tau - exact).abs() < 0.05 * exact,
            "tau = {} vs ln 2 = {exact}",
            ev.tau
        );
        // And the bound from the initial data: c = 1/2, C1 = 1/2.
        let bound = blowup_time_bound(0.5, 0.5, 1).unwrap();
        assert!((bound - (2.0 * 2.0f64.ln() + 2.0)).abs() < 1e-12);
        assert!(ev.tau <= bound);
    }

    #[test]
    fn no_singularity_on_the_fixed_point() {
        let params = FlowParams {
            t_max: 0.3,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(2.0f64.sqrt(), 256));
        let trace = run_flow(&c, FlowKind::Rescaled, &params, 0.0).unwrap();
        assert_eq!(trace.stop, StopReason::ReachedTMax);
        assert!(detect_singularity(&trace).unwrap().is_none());
    }

    #[test]
    fn detects_mcf_circle_singularity_near_half() {
        let params = FlowParams {
            dt: 1e-3,
            t_max: 2.0,
            a_max: Some(120.0),
            store_every: 20,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 256));
        let trace = run_flow(&c, FlowKind::Mcf, &params, 0.0).unwrap();
        let ev = detect_singularity(&trace).unwrap().unwrap();
        assert!((ev.tau - 0.5).abs() < 0.01, "tau = {}", ev.tau);
        assert!(ev.point.norm() < 0.05, "singular point {:?}", ev.point);
    }

    #[test]
    fn blowup_bound_shape() {
        // Phase 1 empty when c >= 2 C1.
        let b = blowup_time_bound(2.0, 0.5, 1).unwrap();
        assert!((b - 2.0 / 4.0).abs() < 1e-14);
        // Doubling c never increases the bound.
        let mut prev = f64::INFINITY;
        for i in 0..12 {
            let c = 0.01 * 2.0f64.powi(i);
            let b = blowup_time_bound(c, 1.0, 2).unwrap();
            assert!(b <= prev + 1e-12, "bound increased at c = {c}");
            prev = b;
        }
        assert!(blowup_time_bound(0.0, 1.0, 1).is_err());
        assert!(blowup_time_bound(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn mcf_to_rescaled_fixed_point_circle() {
        // Shrinking circle with R = sqrt(2) at t = -1 becomes the constant
        // sqrt(2) circle in rescaled time.
        let params = FlowParams {
            dt: 2e-4,
            t_max: 0.8,
            store_every: 20,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(2.0f64.sqrt(), 256));
        let trace = run_flow(&c, FlowKind::Mcf, &params, -1.0).unwrap();
        let rescaled = mcf_to_rescaled(&trace, 0.0, 60).unwrap();
        let reference = DiscreteCurve::circle(2.0f64.sqrt(), 256);
        for snap in &rescaled.snapshots {
            let d = hausdorff_distance(
                snap.shape.points(),
                true,
                reference.vertices(),
                true,
            );
            assert!(d < 1e-3, "distance {d} at rescaled t = {}", snap.t);
        }
    }

    #[test]
    fn mcf_to_rescaled_matches_direct_rescaled_run() {
        let params = FlowParams {
            dt: 2e-4,
            t_max: 0.85,
            store_every: 20,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 256));
        let mcf = run_flow(&c, FlowKind::Mcf, &params, -1.0).unwrap();
        // Correspondence centered at time 0: the t = -1 slice maps to
        // rescaled time 0, where the rescaled run starts from radius 1.
        let rescaled = mcf_to_rescaled(&mcf, 0.0, 40).unwrap();

        // On the rescaled clock the unit circle sits at time 0, so the
        // direct integration starts there; compare snapshots with t >= 0.
        let direct_params = FlowParams {
            dt: 2e-4,
            t_max: rescaled.snapshots.last().unwrap().t,
            store_every: 5,
            ..Default::default()
        };
        let direct = run_flow(&c, FlowKind::Rescaled, &direct_params, 0.0).unwrap();
        for snap in rescaled
            .snapshots
            .iter()
            .filter(|s| s.t >= 0.0)
            .step_by(7)
        {
            // Nearest direct snapshot in time.
            let near = direct
                .snapshots
                .iter()
                .min_by(|a, b| {
                    (a.t - snap.t)
                        .abs()
                        .partial_cmp(&(b.t - snap.t).abs())
                        .unwrap()
                })
                .unwrap();
            let d = hausdorff_distance(snap.shape.points(), true, near.shape.points(), true);
            assert!(d < 1e-2, "distance {d} at t = {}", snap.t);
        }
    }

    #[test]
    fn conversion_past_the_data_sets_the_truncation_flag() {
        let params = FlowParams {
            dt: 1e-3,
            t_max: 0.3,
            store_every: 10,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 64));
        let trace = run_flow(&c, FlowKind::Mcf, &params, 0.0).unwrap();
        // Singular-time estimate inside the stored range: the rescaled times
        // requested past it cannot be produced.
        let rescaled = mcf_to_rescaled(&trace, 0.2, 30).unwrap();
        assert!(rescaled.truncated);
        // Estimate beyond the stored range: nothing to truncate.
        let rescaled = mcf_to_rescaled(&trace, 0.5, 30).unwrap();
        assert!(!rescaled.truncated);
    }

    #[test]
    fn empty_trace_conversion_is_an_error() {
        let trace = FlowTrace {
            kind: FlowKind::Mcf,
            initial_time: 0.0,
            diagnostics: Vec::new(),
            snapshots: Vec::new(),
            stop: StopReason::ReachedTMax,
            truncated: false,
            scheme: Scheme::SemiImplicit,
            dt: 1e-3,
            redistributed: true,
        };
        assert!(mcf_to_rescaled(&trace, 0.0, 10).is_err());
    }

    #[test]
    fn tangent_rescalings_of_shrinking_circle() {
        let params = FlowParams {
            dt: 2e-4,
            t_max: 1.0,
            a_max: Some(250.0),
            store_every: 10,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 512));
        let trace = run_flow(&c, FlowKind::Mcf, &params, 0.0).unwrap();
        let ev = detect_singularity(&trace).unwrap().unwrap();
        let scales = default_scales(0.5, 5);
        let ts = tangent_rescalings(&trace, &ev, &scales).unwrap();
        for entry in ts.entries.iter().filter(|e| !e.under_resolved) {
            // Best-fit center (the singular-point estimate is only accurate
            // to the final feature size), then compare against the sqrt(2)
            // circle around it.
            let centroid = entry.points.iter().sum::<Vector2<f64>>() / entry.points.len() as f64;
            let reference: Vec<Vector2<f64>> = (0..256)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / 256.0;
                    centroid + 2.0f64.sqrt() * Vector2::new(a.cos(), a.sin())
                })
                .collect();
            let d = hausdorff_distance(&entry.points, true, &reference, true);
            assert!(
                d < 1e-2,
                "scale {}: distance {d} from the sqrt(2) circle",
                entry.scale
            );
        }
        assert!(
            ts.entries.iter().filter(|e| !e.under_resolved).count() >= 4,
            "too few resolved scales"
        );

        // A scale whose time precedes the trace start is flagged.
        let bad = tangent_rescalings(&trace, &ev, &[2.0]).unwrap();
        assert!(bad.entries[0].under_resolved);
    }
}
