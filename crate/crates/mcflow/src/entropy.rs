//! The Gaussian area functional, its supremum over centers and scales, and
//! closed forms for round spheres, generalized cylinders, and the minimal
//! cones over products of spheres.
//!
//! For an n-dimensional surface the functional at center `x0` and scale
//! `t0 > 0` is `(4 pi t0)^{-n/2} * integral exp(-|x - x0|^2 / (4 t0))`; its
//! supremum over all centers and scales is invariant under rigid motions and
//! dilations and is attained at (0, 1) on a self-shrinker.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::Shape;

const PI: f64 = std::f64::consts::PI;

/// A Gaussian center and scale; the argument of the area functional.
/// `x0` has the ambient dimension of the surface (2 for curves, 3 for
/// surfaces of revolution) and `t0` is positive with units of length².
#[derive(Clone, Debug, PartialEq)]
pub struct CenterScale {
    pub x0: Vec<f64>,
    pub t0: f64,
}

impl CenterScale {
    pub fn new(x0: Vec<f64>, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale t0 must be positive, got {t0}"
            )));
        }
        Ok(Self { x0, t0 })
    }

    /// Center at the origin, unit scale.
    pub fn base(ambient_dim: usize) -> Self {
        Self {
            x0: vec![0.0; ambient_dim],
            t0: 1.0,
        }
    }
}

/// Gamma(half/2) for positive integer `half`, by the exact half-integer
/// recursion (no series approximation).
pub(crate) fn gamma_half(half: u32) -> f64 {
    assert!(half > 0, "gamma argument must be positive");
    let mut value = if half.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut twice = if half.is_multiple_of(2) { 2 } else { 1 };
    while twice + 2 <= half {
        value *= twice as f64 / 2.0;
        twice += 2;
    }
    value
}

/// Surface area of the unit n-sphere in R^{n+1}.
pub fn unit_sphere_area(n: u32) -> f64 {
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half(n + 1)
}

/// Entropy of the round n-sphere: the Gaussian area of the radius-sqrt(2n)
/// sphere at center 0 and scale 1, in closed form. Strictly decreasing in n
/// and larger than 1 for every n.
pub fn lambda_sphere(n: u32) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    unit_sphere_area(n) * (2.0 * nf / (4.0 * PI)).powf(nf / 2.0) * (-nf / 2.0).exp()
}

/// Entropy of the generalized cylinder S^k x R^m: products with lines do not
/// change the entropy, so this equals `lambda_sphere(k)`.
pub fn lambda_cylinder(k: u32, _m: u32) -> f64 {
    lambda_sphere(k)
}

/// Entropy of a hyperplane (and of R^n generally): exactly 1.
pub fn lambda_hyperplane() -> f64 {
    1.0
}

/// Gaussian area of a hyperplane at distance `dist` from the center, any
/// scale: the transverse Gaussian integral is exact.
pub fn hyperplane_f(dist: f64, t0: f64) -> f64 {
    (-dist * dist / (4.0 * t0)).exp()
}

/// Entropy of the minimal cone over S^k x S^k in R^{2k+2}, i.e. the Gaussian
/// area of {|x| = |y|} at center 0 and scale 1, in closed Gamma form:
/// (4 pi)^{-(2k+1)/2} * omega_k^2 * 2^{-k} * 4^k * Gamma(k + 1/2).
///
/// The value is 3/2 exactly at k = 2 and decreases toward sqrt(2).
pub fn simons_cone_entropy(k: u32) -> f64 {
    assert!(k >= 1);
    let omega = unit_sphere_area(k);
    let radial = 4.0f64.powi(k as i32) * gamma_half(2 * k + 1);
    (4.0 * PI).powf(-(2.0 * k as f64 + 1.0) / 2.0)
        * omega
        * omega
        * 2.0f64.powi(-(k as i32))
        * radial
}

/// Independent quadrature cross-check of [`simons_cone_entropy`]: the radial
/// integral of rho^{2k} exp(-rho^2/4) evaluated by composite Simpson on a
/// truncated interval instead of the Gamma closed form.
pub fn simons_cone_entropy_quadrature(k: u32) -> f64 {
    assert!(k >= 1);
    let omega = unit_sphere_area(k);
    // Integrand decays like exp(-rho^2/4); at rho = 60 it is below 1e-390.
    let radial = simpson(
        |rho| rho.powi(2 * k as i32) * (-rho * rho / 4.0).exp(),
        0.0,
        60.0,
        8192,
    );
    (4.0 * PI).powf(-(2.0 * k as f64 + 1.0) / 2.0)
        * omega
        * omega
        * 2.0f64.powi(-(k as i32))
        * radial
}

/// Composite Simpson quadrature (n must be even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Gaussian area of a discrete surface at the given center and scale by
/// vertex-lumped quadrature. For surfaces of revolution the center must lie
/// on the symmetry axis, where the ring weights reduce the sum to one
/// dimension.
pub fn f_functional(shape: &Shape, cs: &CenterScale) -> Result<f64> {
    let (value, _, _) = f_with_gradient(shape, cs)?;
    Ok(value)
}

/// F together with its gradient in the center and in log(t0). The center
/// gradient for a surface of revolution has a single component (along the
/// axis).
pub(crate) fn f_with_gradient(shape: &Shape, cs: &CenterScale) -> Result<(f64, Vec<f64>, f64)> {
    if !(cs.t0 > 0.0) || !cs.t0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale t0 must be positive and finite, got {}",
            cs.t0
        )));
    }
    let q = shape.quantities();
    match shape {
        Shape::Curve(c) => {
            if cs.x0.len() != 2 {
                return Err(Error::InvalidParameter(format!(
                    "curve center must have 2 components, got {}",
                    cs.x0.len()
                )));
            }
            let x0 = Vector2::new(cs.x0[0], cs.x0[1]);
            let pref = (4.0 * PI * cs.t0).powf(-0.5);
            let mut f = 0.0;
            let mut gx = Vector2::zeros();
            let mut gt = 0.0;
            for (p, w) in c.vertices().iter().zip(&q.measure) {
                let d = p - x0;
                let d2 = d.norm_squared();
                let term = w * (-d2 / (4.0 * cs.t0)).exp();
                f += term;
                gx += term * d / (2.0 * cs.t0);
                gt += term * (-0.5 + d2 / (4.0 * cs.t0));
            }
            Ok((pref * f, vec![pref * gx.x, pref * gx.y], pref * gt))
        }
        Shape::Revolution(p) => {
            if cs.x0.len() != 3 {
                return Err(Error::InvalidParameter(format!(
                    "revolution center must have 3 components, got {}",
                    cs.x0.len()
                )));
            }
            let off_axis = cs.x0[0].hypot(cs.x0[1]);
            if off_axis > 1e-12 * shape.diameter().max(1.0) {
                return Err(Error::OffAxisCenter(format!(
                    "center ({}, {}, {}) is {:.3e} away from the axis; the ring-reduced \
                     quadrature is only valid for centers on the symmetry axis",
                    cs.x0[0], cs.x0[1], cs.x0[2], off_axis
                )));
            }
            let z0 = cs.x0[2];
            let pref = 1.0 / (4.0 * PI * cs.t0);
            let mut f = 0.0;
            let mut gz = 0.0;
            let mut gt = 0.0;
            for (pt, w) in p.profile().iter().zip(&q.measure) {
                let dz = pt.y - z0;
                let d2 = pt.x * pt.x + dz * dz;
                let term = w * (-d2 / (4.0 * cs.t0)).exp();
                f += term;
                gz += term * dz / (2.0 * cs.t0);
                gt += term * (-1.0 + d2 / (4.0 * cs.t0));
            }
            Ok((pref * f, vec![pref * gz], pref * gt))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyStatus {
    Converged,
    /// Every ascent start stalled without line-search progress; the reported
    /// value is the best seen but may sit on the search boundary.
    BoundarySuspect,
}

/// Result of the entropy supremum search.
#[derive(Clone, Debug)]
pub struct EntropyResult {
    pub value: f64,
    pub argmax: CenterScale,
    pub status: EntropyStatus,
    pub n_starts: usize,
    pub per_start: Vec<f64>,
    /// True when the center search was restricted to the symmetry axis
    /// (surfaces of revolution); the value is then a certified lower bound
    /// for the unrestricted supremum.
    pub axis_restricted: bool,
}

const MAX_ASCENT_ITERS: usize = 200;

/// Entropy of a closed discrete surface: the maximum of the Gaussian area
/// over centers and log-scales by deterministic multi-start gradient ascent
/// with backtracking line search.
///
/// Starts are the measure-weighted centroid and eight symmetric probes at
/// half the diameter, each crossed with a logarithmic scale grid over
/// [diam²/400, 4·diam²]. Ties within 1e-12 resolve to the lexicographically
/// smallest argmax.
pub fn entropy_sup(shape: &Shape) -> Result<EntropyResult> {
    let diam = shape.diameter();
    if !(diam > 0.0) {
        return Err(Error::InvalidParameter("degenerate surface".into()));
    }
    let centroid = shape.weighted_centroid();
    let axis_restricted = matches!(shape, Shape::Revolution(_));

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(9);
    match shape {
        Shape::Curve(_) => {
            centers.push(vec![centroid.x, centroid.y]);
            for j in 0..8 {
                let ang = 2.0 * PI * j as f64 / 8.0;
                centers.push(vec![
                    centroid.x + 0.5 * diam * ang.cos(),
                    centroid.y + 0.5 * diam * ang.sin(),
                ]);
            }
        }
        Shape::Revolution(_) => {
            centers.push(vec![0.0, 0.0, centroid.y]);
            for j in 1..=4 {
                let off = 0.5 * diam * j as f64 / 4.0;
                centers.push(vec![0.0, 0.0, centroid.y + off]);
                centers.push(vec![0.0, 0.0, centroid.y - off]);
            }
        }
    }
    let (lo, hi) = (diam * diam / 400.0, 4.0 * diam * diam);
    let scale_grid: Vec<f64> = (0..7)
        .map(|j| (lo.ln() + (hi.ln() - lo.ln()) * j as f64 / 6.0).exp())
        .collect();

    let mut per_start = Vec::new();
    let mut candidates: Vec<(f64, CenterScale, AscentOutcome)> = Vec::new();
    for center in &centers {
        for &t0 in &scale_grid {
            let start = CenterScale {
                x0: center.clone(),
                t0,
            };
            let (value, argmax, outcome) = ascend(shape, start)?;
            per_start.push(value);
            candidates.push((value, argmax, outcome));
        }
    }

    let best_value = candidates
        .iter()
        .map(|(v, _, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<&(f64, CenterScale, AscentOutcome)> = candidates
        .iter()
        .filter(|(v, _, _)| *v >= best_value - 1e-12)
        .collect();
    tied.sort_by(|a, b| {
        let ka: Vec<f64> = a.1.x0.iter().copied().chain([a.1.t0]).collect();
        let kb: Vec<f64> = b.1.x0.iter().copied().chain([b.1.t0]).collect();
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let chosen = tied[0];

    let all_stalled = candidates
        .iter()
        .all(|(_, _, o)| *o == AscentOutcome::NoProgress);
    Ok(EntropyResult {
        value: best_value,
        argmax: chosen.1.clone(),
        status: if all_stalled {
            EntropyStatus::BoundarySuspect
        } else {
            EntropyStatus::Converged
        },
        n_starts: centers.len() * scale_grid.len(),
        per_start,
        axis_restricted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AscentOutcome {
    GradientSmall,
    IterationCap,
    NoProgress,
}

/// Gradient ascent in (center, log t0) with backtracking line search. The
/// center direction is preconditioned by t0, the natural curvature scale of
/// the Gaussian in its center argument. For surfaces of revolution the
/// center variable reduces to the axis coordinate, matching the reduced
/// gradient of [`f_with_gradient`].
fn ascend(shape: &Shape, start: CenterScale) -> Result<(f64, CenterScale, AscentOutcome)> {
    let reduce = |x0: &[f64]| -> Vec<f64> {
        match shape {
            Shape::Curve(_) => x0.to_vec(),
            Shape::Revolution(_) => vec![x0[2]],
        }
    };
    let expand = |vars: &[f64]| -> Vec<f64> {
        match shape {
            Shape::Curve(_) => vars.to_vec(),
            Shape::Revolution(_) => vec![0.0, 0.0, vars[0]],
        }
    };

    let mut vars = reduce(&start.x0);
    let mut tau = start.t0.ln();
    let (mut f, mut gv, mut gt) = f_with_gradient(shape, &start)?;
    let mut outcome = AscentOutcome::IterationCap;
    let f_scale = f.abs().max(1e-12);
    let mut made_progress = false;

    for _ in 0..MAX_ASCENT_ITERS {
        let t0 = tau.exp();
        let dir_v: Vec<f64> = gv.iter().map(|g| g * t0).collect();
        let dir_t = gt;
        let slope: f64 = gv.iter().zip(&dir_v).map(|(g, d)| g * d).sum::<f64>() + gt * dir_t;
        if slope.sqrt() < 1e-10 * f_scale {
            outcome = AscentOutcome::GradientSmall;
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial_v: Vec<f64> =
                vars.iter().zip(&dir_v).map(|(x, d)| x + alpha * d).collect();
            let trial_tau = tau + alpha * dir_t;
            if trial_tau.is_finite() {
                if let Ok((tf, tgv, tgt)) = f_with_gradient(
                    shape,
                    &CenterScale {
                        x0: expand(&trial_v),
                        t0: trial_tau.exp(),
                    },
                ) {
                    if tf >= f + 1e-4 * alpha * slope {
                        vars = trial_v;
                        tau = trial_tau;
                        f = tf;
                        gv = tgv;
                        gt = tgt;
                        accepted = true;
                        made_progress = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            outcome = if made_progress {
                AscentOutcome::GradientSmall
            } else {
                AscentOutcome::NoProgress
            };
            break;
        }
    }

    Ok((
        f,
        CenterScale {
            x0: expand(&vars),
            t0: tau.exp(),
        },
        outcome,
    ))
}
