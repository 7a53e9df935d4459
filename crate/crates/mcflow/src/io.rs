//! The shared line-oriented surface file format and the trace CSV.
//!
//! See FORMAT.md at the repository root for the format definition. All
//! modules read and write surfaces through this one implementation; floats
//! are written with Rust's shortest round-trip representation so files
//! re-read bit-identically.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::flow::{FlowKind, FlowTrace, Scheme, Snapshot, StopReason};
use crate::fmt::f12;
use crate::geometry::{DiscreteCurve, ProfileSurface, ProfileTopology, Shape};
use crate::shrinkers::AnalyticShape;

/// A surface document: a discretized shape or an exact analytic descriptor,
/// with an optional name and free-form provenance metadata.
#[derive(Clone, Debug)]
pub struct SurfaceFile {
    pub content: SurfaceContent,
    pub name: Option<String>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub enum SurfaceContent {
    Shape(Shape),
    Analytic(AnalyticShape),
}

impl SurfaceFile {
    pub fn from_shape(shape: Shape) -> Self {
        Self {
            content: SurfaceContent::Shape(shape),
            name: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_analytic(shape: AnalyticShape) -> Self {
        Self {
            content: SurfaceContent::Analytic(shape),
            name: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn shape(&self) -> Result<&Shape> {
        match &self.content {
            SurfaceContent::Shape(s) => Ok(s),
            SurfaceContent::Analytic(a) => Err(Error::ShapeMismatch(format!(
                "expected a discretized surface, found the analytic descriptor {}",
                a.label()
            ))),
        }
    }
}

pub fn write_surface(file: &SurfaceFile) -> String {
    let mut out = String::from("# mcflow surface v1\n");
    match &file.content {
        SurfaceContent::Shape(Shape::Curve(c)) => {
            out.push_str("kind curve\n");
            out.push_str("topology closed\n");
            if !c.is_simple() {
                out.push_str("immersed true\n");
            }
            push_common(&mut out, file);
            for v in c.vertices() {
                out.push_str(&format!("vertex {} {}\n", v.x, v.y));
            }
        }
        SurfaceContent::Shape(Shape::Revolution(p)) => {
            out.push_str("kind revolution\n");
            out.push_str(match p.topology() {
                ProfileTopology::ClosedProfile => "topology closed-profile\n",
                ProfileTopology::AxisTerminated => "topology axis-terminated\n",
            });
            push_common(&mut out, file);
            for v in p.profile() {
                out.push_str(&format!("vertex {} {}\n", v.x, v.y));
            }
        }
        SurfaceContent::Analytic(a) => {
            out.push_str("kind analytic\n");
            push_common(&mut out, file);
            let line = match a {
                AnalyticShape::Sphere { n, radius } => format!("shape sphere {n} {radius}\n"),
                AnalyticShape::Cylinder { k, m } => format!("shape cylinder {k} {m}\n"),
                AnalyticShape::SimonsCone { k } => format!("shape simons-cone {k}\n"),
                AnalyticShape::Hyperplane { n } => format!("shape hyperplane {n}\n"),
            };
            out.push_str(&line);
        }
    }
    out
}

fn push_common(out: &mut String, file: &SurfaceFile) {
    if let Some(name) = &file.name {
        out.push_str(&format!("name {name}\n"));
    }
    for (k, v) in &file.metadata {
        out.push_str(&format!("meta {k} {v}\n"));
    }
}

pub fn read_surface(text: &str) -> Result<SurfaceFile> {
    let mut kind: Option<&str> = None;
    let mut topology: Option<&str> = None;
    let mut name: Option<String> = None;
    let mut immersed = false;
    let mut metadata = BTreeMap::new();
    let mut vertices: Vec<Vector2<f64>> = Vec::new();
    let mut shape_line: Option<(usize, Vec<&str>)> = None;

    let parse_f = |tok: &str, line_no: usize| -> Result<f64> {
        tok.parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("expected a number, found '{tok}'"),
        })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        match key {
            "kind" => kind = rest.first().copied(),
            "topology" => topology = rest.first().copied(),
            "name" => name = Some(rest.join(" ")),
            "immersed" => immersed = rest.first() == Some(&"true"),
            "meta" => {
                if rest.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "meta needs a key".into(),
                    });
                }
                metadata.insert(rest[0].to_string(), rest[1..].join(" "));
            }
            "vertex" => {
                if rest.len() != 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("vertex needs 2 coordinates, got {}", rest.len()),
                    });
                }
                vertices.push(Vector2::new(
                    parse_f(rest[0], line_no)?,
                    parse_f(rest[1], line_no)?,
                ));
            }
            "shape" => shape_line = Some((line_no, rest.to_vec())),
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown field '{other}'"),
                })
            }
        }
    }

    let kind = kind.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing 'kind' field".into(),
    })?;
    let content = match kind {
        "curve" => {
            let curve = if immersed {
                DiscreteCurve::new_allow_self_intersections(vertices)?
            } else {
                DiscreteCurve::new(vertices)?
            };
            SurfaceContent::Shape(Shape::Curve(curve))
        }
        "revolution" => {
            let topology = topology.ok_or_else(|| Error::Parse {
                line: 0,
                message: "revolution surface needs a 'topology' field".into(),
            })?;
            let profile = match topology {
                "closed-profile" => ProfileSurface::new_closed(vertices)?,
                "axis-terminated" => ProfileSurface::new_axis_terminated(vertices)?,
                other => {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("unknown topology '{other}'"),
                    })
                }
            };
            SurfaceContent::Shape(Shape::Revolution(profile))
        }
        "analytic" => {
            let (line_no, parts) = shape_line.ok_or_else(|| Error::Parse {
                line: 0,
                message: "analytic surface needs a 'shape' field".into(),
            })?;
            let parse_u = |tok: &str| -> Result<u32> {
                tok.parse::<u32>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("expected an integer, found '{tok}'"),
                })
            };
            let shape = match parts.as_slice() {
                ["sphere", n, r] => AnalyticShape::Sphere {
                    n: parse_u(n)?,
                    radius: parse_f(r, line_no)?,
                },
                ["cylinder", k, m] => AnalyticShape::Cylinder {
                    k: parse_u(k)?,
                    m: parse_u(m)?,
                },
                ["simons-cone", k] => AnalyticShape::SimonsCone { k: parse_u(k)? },
                ["hyperplane", n] => AnalyticShape::Hyperplane { n: parse_u(n)? },
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown analytic shape '{}'", parts.join(" ")),
                    })
                }
            };
            SurfaceContent::Analytic(shape)
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown kind '{other}'"),
            })
        }
    };

    Ok(SurfaceFile {
        content,
        name,
        metadata,
    })
}

pub fn save_surface(path: &Path, file: &SurfaceFile) -> Result<()> {
    std::fs::write(path, write_surface(file))?;
    Ok(())
}

pub fn load_surface(path: &Path) -> Result<SurfaceFile> {
    let text = std::fs::read_to_string(path)?;
    read_surface(&text)
}

// ---------------------------------------------------------------------------
// Trace CSV and snapshot directories
// ---------------------------------------------------------------------------

pub const TRACE_CSV_HEADER: &str = "t,F01,entropy_lb,min_phi,max_A,max_B2,n_vertices,mesh_quality";

/// Render the per-step diagnostics as CSV, floats at 12 significant digits.
pub fn trace_csv(trace: &FlowTrace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for d in &trace.diagnostics {
        let entropy = d.entropy_lb.map(f12).unwrap_or_default();
        let max_b2 = d.max_b2.map(f12).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f12(d.t),
            f12(d.f01),
            entropy,
            f12(d.min_phi),
            f12(d.max_abs_a),
            max_b2,
            d.n_vertices,
            f12(d.mesh_quality),
        ));
    }
    out
}

/// Save a trace as a directory: `trace.csv` with the diagnostics,
/// `trace.meta` with the run parameters, and numbered snapshot files.
pub fn save_trace(dir: &Path, trace: &FlowTrace) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trace.csv"), trace_csv(trace))?;
    let kind = match trace.kind {
        FlowKind::Mcf => "mcf",
        FlowKind::Rescaled => "rescaled",
    };
    let scheme = match trace.scheme {
        Scheme::Explicit => "explicit",
        Scheme::SemiImplicit => "semi-implicit",
    };
    let meta = format!(
        "kind {kind}\nscheme {scheme}\ndt {}\nredistributed {}\ninitial_time {}\nstop {:?}\n",
        trace.dt, trace.redistributed, trace.initial_time, trace.stop
    );
    std::fs::write(dir.join("trace.meta"), meta)?;
    for (i, snap) in trace.snapshots.iter().enumerate() {
        let file = SurfaceFile::from_shape(snap.shape.clone())
            .with_meta("t", format!("{}", snap.t))
            .with_meta("index", format!("{i}"));
        save_surface(&dir.join(format!("snapshot_{i:06}.surface")), &file)?;
    }
    Ok(())
}

/// Load a trace directory written by [`save_trace`]. Diagnostics are
/// recomputed from the stored snapshots (snapshot cadence, not the original
/// per-step cadence).
pub fn load_trace(dir: &Path) -> Result<FlowTrace> {
    let meta_text = std::fs::read_to_string(dir.join("trace.meta"))?;
    let mut kind = FlowKind::Rescaled;
    let mut scheme = Scheme::SemiImplicit;
    let mut dt = 1e-3;
    let mut redistributed = true;
    let mut initial_time = 0.0;
    for line in meta_text.lines() {
        let mut tok = line.split_whitespace();
        match (tok.next(), tok.next()) {
            (Some("kind"), Some("mcf")) => kind = FlowKind::Mcf,
            (Some("kind"), Some("rescaled")) => kind = FlowKind::Rescaled,
            (Some("scheme"), Some("explicit")) => scheme = Scheme::Explicit,
            (Some("scheme"), Some("semi-implicit")) => scheme = Scheme::SemiImplicit,
            (Some("dt"), Some(v)) => dt = v.parse().unwrap_or(dt),
            (Some("redistributed"), Some(v)) => redistributed = v == "true",
            (Some("initial_time"), Some(v)) => initial_time = v.parse().unwrap_or(0.0),
            _ => {}
        }
    }

    let mut entries: Vec<(usize, std::path::PathBuf)> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let path = e.path();
            let name = path.file_name()?.to_str()?.to_string();
            let idx: usize = name
                .strip_prefix("snapshot_")?
                .strip_suffix(".surface")?
                .parse()
                .ok()?;
            Some((idx, path))
        })
        .collect();
    entries.sort_by_key(|(i, _)| *i);
    if entries.is_empty() {
        return Err(Error::Trace(format!(
            "no snapshot files in {}",
            dir.display()
        )));
    }

    let mut snapshots = Vec::with_capacity(entries.len());
    for (_, path) in entries {
        let file = load_surface(&path)?;
        let t: f64 = file
            .metadata
            .get("t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Trace(format!("snapshot {} lacks a time", path.display())))?;
        let shape = file.shape()?.clone();
        let q = shape.quantities();
        let diag = crate::flow::diag_row_public(&shape, &q, t, kind);
        snapshots.push(Snapshot { t, shape, diag });
    }
    snapshots.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));

    Ok(FlowTrace {
        kind,
        initial_time,
        diagnostics: snapshots.iter().map(|s| s.diag.clone()).collect(),
        snapshots,
        stop: StopReason::Converted,
        truncated: false,
        scheme,
        dt,
        redistributed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_roundtrip_curve() {
        let c = DiscreteCurve::ellipse(2.0, 1.0, 64);
        let file = SurfaceFile::from_shape(Shape::Curve(c.clone()))
            .with_name("ellipse-2-1")
            .with_meta("provenance", "constructed for tests");
        let text = write_surface(&file);
        let back = read_surface(&text).unwrap();
        assert_eq!(back.name.as_deref(), Some("ellipse-2-1"));
        assert_eq!(
            back.metadata.get("provenance").map(|s| s.as_str()),
            Some("constructed for tests")
        );
        match &back.content {
            SurfaceContent::Shape(Shape::Curve(c2)) => {
                assert_eq!(c2.len(), c.len());
                for (a, b) in c.vertices().iter().zip(c2.vertices()) {
                    assert_eq!(a.x.to_bits(), b.x.to_bits());
                    assert_eq!(a.y.to_bits(), b.y.to_bits());
                }
            }
            _ => panic!("wrong content"),
        }
        // Writing again gives identical bytes.
        assert_eq!(text, write_surface(&back));
    }

    #[test]
    fn surface_roundtrip_profile_and_analytic() {
        let p = ProfileSurface::sphere(2.0, 64);
        let text = write_surface(&SurfaceFile::from_shape(Shape::Revolution(p)));
        let back = read_surface(&text).unwrap();
        assert!(matches!(
            back.content,
            SurfaceContent::Shape(Shape::Revolution(_))
        ));

        let cone = SurfaceFile::from_analytic(AnalyticShape::SimonsCone { k: 2 });
        let text = write_surface(&cone);
        let back = read_surface(&text).unwrap();
        match back.content {
            SurfaceContent::Analytic(AnalyticShape::SimonsCone { k }) => assert_eq!(k, 2),
            other => panic!("wrong content {other:?}"),
        }
    }

    #[test]
    fn immersed_flag_roundtrip() {
        let mut pts = Vec::new();
        for i in 0..48 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 48.0;
            let r = 0.5 + t.cos();
            pts.push(Vector2::new(r * t.cos(), r * t.sin()));
        }
        let c = DiscreteCurve::new_allow_self_intersections(pts).unwrap();
        assert!(!c.is_simple());
        let text = write_surface(&SurfaceFile::from_shape(Shape::Curve(c)));
        assert!(text.contains("immersed true"));
        let back = read_surface(&text).unwrap();
        match back.content {
            SurfaceContent::Shape(Shape::Curve(c)) => assert!(!c.is_simple()),
            _ => panic!(),
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_surface("vertex 1 2\n").is_err());
        assert!(read_surface("kind curve\nvertex 1\n").is_err());
        assert!(read_surface("kind analytic\nshape dodecahedron 3\n").is_err());
        assert!(read_surface("kind revolution\nvertex 1 2\n").is_err());
    }

    #[test]
    fn trace_csv_has_the_declared_columns() {
        use crate::flow::{run_flow, FlowParams};
        let params = FlowParams {
            dt: 1e-3,
            t_max: 0.01,
            store_every: 2,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 64));
        let trace = run_flow(&c, FlowKind::Rescaled, &params, 0.0).unwrap();
        let csv = trace_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRACE_CSV_HEADER);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 8);
    }

    #[test]
    fn trace_directory_roundtrip() {
        use crate::flow::{run_flow, FlowParams};
        let dir = std::env::temp_dir().join("mcflow-io-test-trace");
        let _ = std::fs::remove_dir_all(&dir);
        let params = FlowParams {
            dt: 1e-3,
            t_max: 0.02,
            store_every: 5,
            ..Default::default()
        };
        let c = Shape::Curve(DiscreteCurve::circle(1.0, 64));
        let trace = run_flow(&c, FlowKind::Rescaled, &params, 0.0).unwrap();
        save_trace(&dir, &trace).unwrap();
        let back = load_trace(&dir).unwrap();
        assert_eq!(back.kind, FlowKind::Rescaled);
        assert_eq!(back.snapshots.len(), trace.snapshots.len());
        let d = crate::geometry::hausdorff_distance(
            back.snapshots.last().unwrap().shape.points(),
            true,
            trace.snapshots.last().unwrap().shape.points(),
            true,
        );
        assert!(d < 1e-14);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
