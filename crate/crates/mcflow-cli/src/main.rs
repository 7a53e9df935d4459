//! Command-line driver: reproducible experiments over the shared surface
//! format. Every command is deterministic given its flags; there is no
//! randomness anywhere in the library or in this binary. Floating-point
//! output uses 12 significant digits so regression diffs are meaningful.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 numerical
//! non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use mcflow::entropy::{entropy_sup, f_functional, CenterScale, EntropyStatus};
use mcflow::error::Error;
use mcflow::flow::{
    default_scales, detect_singularity, run_flow, FlowKind, FlowParams, Scheme,
};
use mcflow::fmt::f12;
use mcflow::geometry::Shape;
use mcflow::io::{
    load_surface, load_trace, save_surface, save_trace, trace_csv, SurfaceContent, SurfaceFile,
};
use mcflow::pipeline::{run_pipeline, PipelineInput, PipelineParams};
use mcflow::properties::{
    check_monotonicity_suite, check_ratio_bound, check_simons_identities,
    run_identity_ladder, tangent_roundness_summary,
};
use mcflow::shrinkers::{abresch_langer_with, angenent_torus_with, ShootingOptions};
use mcflow::stability::{
    lowest_eigenpair_with, mesh_shrinker_tol, perturb_inward, EigenOptions, PerturbOptions,
};
use mcflow::table::make_table;

#[derive(Parser)]
#[command(
    name = "mcflow",
    about = "Gaussian entropy, mean curvature flow, and self-shrinker numerics",
    long_about = "Deterministic numerical experiments on closed plane curves and surfaces of \
                  revolution: entropy tables and suprema, mean curvature flow and its rescaled \
                  variant, shrinker discovery by shooting, stability eigenpairs, inward \
                  perturbations, verification suites, and the end-to-end evidence pipeline. \
                  No command uses randomness; identical flags give identical output."
)]
struct Cli {
    /// key = value file supplying defaults for any long flag of the
    /// subcommand; explicit flags override the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the closed-form entropy table as CSV.
    Table(TableArgs),
    /// Entropy of a surface: supremum search for discretized surfaces,
    /// closed forms for analytic descriptors.
    Entropy(EntropyArgs),
    /// Run a flow from a surface file.
    Flow(FlowArgs),
    /// Discover a shrinker by ODE shooting.
    Shoot(ShootArgs),
    /// Perturb a shrinker inward along its lowest eigenmode.
    Perturb(PerturbArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Run the full evidence pipeline for one shrinker.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 8)]
    max_n: u32,
    #[arg(long, default_value_t = 12)]
    max_k: u32,
    /// Write to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyArgs {
    input: PathBuf,
}

#[derive(Args)]
struct FlowArgs {
    input: PathBuf,
    /// Flow kind: mcf or rescaled.
    #[arg(long, default_value = "rescaled")]
    kind: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Scheme: semi-implicit or explicit.
    #[arg(long, default_value = "semi-implicit")]
    scheme: String,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    /// Run until a singularity is declared (sets a curvature cap).
    #[arg(long)]
    until_singularity: bool,
    /// Curvature cap; default 20x the initial max |A| when running until a
    /// singularity.
    #[arg(long)]
    a_max: Option<f64>,
    /// Write the per-step diagnostics CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write a snapshot directory here.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Keep every k-th snapshot.
    #[arg(long, default_value_t = 10)]
    snapshots_every: usize,
    /// Curves: sample the entropy supremum every k steps into the trace.
    #[arg(long)]
    entropy_every: Option<usize>,
}

#[derive(Args)]
struct ShootArgs {
    /// Shoot the rotationally symmetric shrinking torus.
    #[arg(long, conflicts_with = "al")]
    torus: bool,
    /// Shoot the closed shrinking curve with rotation index p and q lobes,
    /// written "p,q".
    #[arg(long)]
    al: Option<String>,
    #[arg(long, default_value_t = 1024)]
    resolution: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    input: PathBuf,
    /// Write the perturbed surface here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Proceed when the lowest eigenvalue is 1 within tolerance, verifying
    /// entropy non-increase instead of strict decrease.
    #[arg(long)]
    allow_marginal: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: simons, monotone, ratio, tangent, or all.
    #[arg(long)]
    suite: String,
    /// Surface file, or a trace directory for monotone/ratio.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "rescaled")]
    kind: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long)]
    a_max: Option<f64>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Shrinker: torus, al:p,q, or sphere:n.
    #[arg(long)]
    shrinker: String,
    #[arg(long, default_value_t = 512)]
    resolution: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Write report.txt and the check reports into this directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let config = match cli.config.as_deref().map(read_config).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m);

    let result = match cli.command {
        Command::Table(mut a) => {
            apply_config_u32(&config, sub, "max_n", &mut a.max_n);
            apply_config_u32(&config, sub, "max_k", &mut a.max_k);
            cmd_table(&a)
        }
        Command::Entropy(a) => cmd_entropy(&a),
        Command::Flow(mut a) => {
            apply_config_f64(&config, sub, "dt", &mut a.dt);
            apply_config_f64(&config, sub, "t_max", &mut a.t_max);
            apply_config_string(&config, sub, "kind", &mut a.kind);
            apply_config_string(&config, sub, "scheme", &mut a.scheme);
            apply_config_usize(&config, sub, "snapshots_every", &mut a.snapshots_every);
            cmd_flow(&a)
        }
        Command::Shoot(mut a) => {
            apply_config_usize(&config, sub, "resolution", &mut a.resolution);
            cmd_shoot(&a)
        }
        Command::Perturb(a) => cmd_perturb(&a),
        Command::Verify(mut a) => {
            apply_config_f64(&config, sub, "dt", &mut a.dt);
            apply_config_f64(&config, sub, "t_max", &mut a.t_max);
            apply_config_string(&config, sub, "kind", &mut a.kind);
            cmd_verify(&a)
        }
        Command::Pipeline(mut a) => {
            apply_config_usize(&config, sub, "resolution", &mut a.resolution);
            apply_config_f64(&config, sub, "dt", &mut a.dt);
            cmd_pipeline(&a)
        }
    };

    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_nonconvergence() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Config file: key = value lines, '#' comments. Explicit flags win.
// ---------------------------------------------------------------------------

fn read_config(path: &Path) -> Result<Vec<(String, String)>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 'key = value', found '{line}'"),
            });
        };
        out.push((key.trim().replace('-', "_"), value.trim().to_string()));
    }
    Ok(out)
}

fn config_get<'a>(config: &'a [(String, String)], key: &str) -> Option<&'a str> {
    config
        .iter()
        .rev()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

fn flag_defaulted(sub: Option<&ArgMatches>, key: &str) -> bool {
    match sub {
        Some(m) => !matches!(
            m.value_source(key),
            Some(clap::parser::ValueSource::CommandLine)
        ),
        None => true,
    }
}

fn apply_config_f64(
    config: &[(String, String)],
    sub: Option<&ArgMatches>,
    key: &str,
    slot: &mut f64,
) {
    if let Some(v) = config_get(config, key) {
        if flag_defaulted(sub, key) {
            if let Ok(x) = v.parse() {
                *slot = x;
            }
        }
    }
}

fn apply_config_u32(
    config: &[(String, String)],
    sub: Option<&ArgMatches>,
    key: &str,
    slot: &mut u32,
) {
    if let Some(v) = config_get(config, key) {
        if flag_defaulted(sub, key) {
            if let Ok(x) = v.parse() {
                *slot = x;
            }
        }
    }
}

fn apply_config_usize(
    config: &[(String, String)],
    sub: Option<&ArgMatches>,
    key: &str,
    slot: &mut usize,
) {
    if let Some(v) = config_get(config, key) {
        if flag_defaulted(sub, key) {
            if let Ok(x) = v.parse() {
                *slot = x;
            }
        }
    }
}

fn apply_config_string(
    config: &[(String, String)],
    sub: Option<&ArgMatches>,
    key: &str,
    slot: &mut String,
) {
    if let Some(v) = config_get(config, key) {
        if flag_defaulted(sub, key) {
            *slot = v.to_string();
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_table(a: &TableArgs) -> Result<ExitCode, Error> {
    let csv = make_table(a.max_n, a.max_k)?;
    match &a.output {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_entropy(a: &EntropyArgs) -> Result<ExitCode, Error> {
    let file = load_surface(&a.input)?;
    match &file.content {
        SurfaceContent::Analytic(shape) => {
            println!("object        {}", shape.label());
            println!("entropy       {}", f12(shape.entropy()));
            println!("method        closed-form");
        }
        SurfaceContent::Shape(shape) => {
            let res = entropy_sup(shape)?;
            let f01 = f_functional(shape, &CenterScale::base(shape.ambient_dim()))?;
            println!("entropy       {}", f12(res.value));
            println!("f(0,1)        {}", f12(f01));
            let center = res
                .argmax
                .x0
                .iter()
                .map(|x| f12(*x))
                .collect::<Vec<_>>()
                .join(" ");
            println!("argmax_center {center}");
            println!("argmax_scale  {}", f12(res.argmax.t0));
            println!("starts        {}", res.n_starts);
            println!(
                "status        {}",
                match res.status {
                    EntropyStatus::Converged => "converged",
                    EntropyStatus::BoundarySuspect => "boundary-suspect",
                }
            );
            if res.axis_restricted {
                println!("note          axis-restricted search: value is a certified lower bound");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_kind(s: &str) -> Result<FlowKind, Error> {
    match s {
        "mcf" => Ok(FlowKind::Mcf),
        "rescaled" => Ok(FlowKind::Rescaled),
        other => Err(Error::InvalidParameter(format!(
            "unknown flow kind '{other}' (expected mcf or rescaled)"
        ))),
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, Error> {
    match s {
        "explicit" => Ok(Scheme::Explicit),
        "semi-implicit" => Ok(Scheme::SemiImplicit),
        other => Err(Error::InvalidParameter(format!(
            "unknown scheme '{other}' (expected explicit or semi-implicit)"
        ))),
    }
}

fn cmd_flow(a: &FlowArgs) -> Result<ExitCode, Error> {
    let file = load_surface(&a.input)?;
    let shape = file.shape()?.clone();
    let kind = parse_kind(&a.kind)?;
    let scheme = parse_scheme(&a.scheme)?;
    let q0 = shape.quantities();
    let params = FlowParams {
        dt: a.dt,
        scheme,
        t_max: if a.until_singularity { 1e3 } else { a.t_max },
        a_max: a
            .a_max
            .or_else(|| a.until_singularity.then(|| 20.0 * q0.max_abs_a().max(1e-6))),
        store_every: a.snapshots_every,
        entropy_every: a.entropy_every,
        ..Default::default()
    };
    let trace = run_flow(&shape, kind, &params, 0.0)?;
    println!("steps         {}", trace.diagnostics.len());
    println!("final_time    {}", f12(trace.final_time()));
    println!("stop          {:?}", trace.stop);
    if trace.stop.is_singular() {
        if let Some(ev) = detect_singularity(&trace)? {
            println!("singular_time {}", f12(ev.tau));
            println!("singular_point {} {}", f12(ev.point.x), f12(ev.point.y));
            println!("fit_r2        {}", f12(ev.fit_r2));
        }
    }
    if let Some(path) = &a.trace {
        std::fs::write(path, trace_csv(&trace))?;
        println!("trace         {}", path.display());
    }
    if let Some(dir) = &a.snapshots {
        save_trace(dir, &trace)?;
        println!("snapshots     {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_shoot(a: &ShootArgs) -> Result<ExitCode, Error> {
    let opts = ShootingOptions {
        resolution: a.resolution,
        ..Default::default()
    };
    let (result, name, extra): (_, String, Vec<(String, String)>) = if a.torus {
        (
            angenent_torus_with(&opts)?,
            "angenent-torus".to_string(),
            Vec::new(),
        )
    } else if let Some(pq) = &a.al {
        let Some((p, q)) = pq.split_once(',') else {
            return Err(Error::InvalidParameter(format!(
                "--al expects 'p,q', got '{pq}'"
            )));
        };
        let p: u32 = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad rotation index '{p}'")))?;
        let q: u32 = q
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad lobe count '{q}'")))?;
        (
            abresch_langer_with(p, q, &opts)?,
            format!("abresch-langer-{p}-{q}"),
            vec![("p".into(), p.to_string()), ("q".into(), q.to_string())],
        )
    } else {
        return Err(Error::InvalidParameter("choose --torus or --al p,q".into()));
    };

    println!("shrinker      {name}");
    println!("parameter     {}", f12(result.parameter));
    println!("iterations    {}", result.iterations);
    println!("residual      {}", f12(result.residual));
    if let Some(path) = &a.output {
        let mut file = SurfaceFile::from_shape(result.shape.clone())
            .with_name(&name)
            .with_meta("residual", format!("{}", result.residual))
            .with_meta("shooting-parameter", format!("{}", result.parameter));
        for (k, v) in extra {
            file = file.with_meta(k, v);
        }
        save_surface(path, &file)?;
        println!("output        {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_perturb(a: &PerturbArgs) -> Result<ExitCode, Error> {
    let file = load_surface(&a.input)?;
    let shape = file.shape()?.clone();
    let q = shape.quantities();
    let ep = lowest_eigenpair_with(
        &shape,
        &EigenOptions {
            shrinker_tol: mesh_shrinker_tol(&q),
            ..Default::default()
        },
    )?;
    println!("mu            {}", f12(ep.eigenvalue));
    println!("eigen_residual {}", f12(ep.residual));
    let out = perturb_inward(
        &shape,
        &ep,
        &PerturbOptions {
            allow_marginal_mu: a.allow_marginal,
            marginal_entropy_nonincrease: a.allow_marginal,
            ..Default::default()
        },
    )?;
    println!("s             {}", f12(out.s));
    println!("lambda_sigma  {}", f12(out.entropy_sigma));
    println!("lambda_gamma  {}", f12(out.entropy_gamma));
    println!(
        "property_1    entropy {}: {} -> {}",
        if out.marginal_mode {
            "non-increasing within 1e-6 [marginal mode]"
        } else {
            "strictly decreased"
        },
        f12(out.entropy_sigma),
        f12(out.entropy_gamma)
    );
    println!("property_2    contained strictly inside the input");
    println!("property_3    min phi = {} > 0", f12(out.min_phi));
    if let Some(path) = &a.output {
        let file = SurfaceFile::from_shape(out.shape.clone())
            .with_name("perturbed")
            .with_meta("s", format!("{}", out.s))
            .with_meta("mu", format!("{}", out.mu));
        save_surface(path, &file)?;
        println!("output        {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: &VerifyArgs) -> Result<ExitCode, Error> {
    let mut reports = Vec::new();
    let suite = a.suite.as_str();
    let known = ["simons", "monotone", "ratio", "tangent", "all"];
    if !known.contains(&suite) {
        return Err(Error::InvalidParameter(format!(
            "unknown suite '{suite}' (expected one of {known:?})"
        )));
    }

    let trace_input = a.input.is_dir();
    let load_shape = || -> Result<Shape, Error> { Ok(load_surface(&a.input)?.shape()?.clone()) };

    if suite == "simons" || suite == "all" {
        let shape = load_shape()?;
        let make = |n: usize| -> Result<Shape, Error> {
            match &shape {
                Shape::Curve(c) => Ok(Shape::Curve(c.resampled(n)?)),
                Shape::Revolution(p) => Ok(Shape::Revolution(p.resampled(n)?)),
            }
        };
        let coarsest = make(128)?;
        let h0 = coarsest.quantities().quality.max_edge;
        let traces = run_identity_ladder(&make, &[128, 256, 512], 0.3 * h0 * h0, 8)?;
        reports.push(check_simons_identities(&traces)?);
    }

    if suite == "monotone" || suite == "ratio" || suite == "all" {
        let trace = if trace_input {
            load_trace(&a.input)?
        } else {
            let shape = load_shape()?;
            let params = FlowParams {
                dt: a.dt,
                t_max: a.t_max,
                a_max: a.a_max,
                store_every: 10,
                ..Default::default()
            };
            run_flow(&shape, parse_kind(&a.kind)?, &params, 0.0)?
        };
        if suite == "monotone" || suite == "all" {
            reports.push(check_monotonicity_suite(&trace)?);
        }
        if suite == "ratio" || suite == "all" {
            match check_ratio_bound(&trace) {
                Ok(r) => reports.push(r),
                Err(e) if suite == "all" => {
                    println!("check ratio-bound: skipped ({e})");
                }
                Err(e) => return Err(e),
            }
        }
    }

    if suite == "tangent" || suite == "all" {
        let shape = load_shape()?;
        let q0 = shape.quantities();
        let params = FlowParams {
            dt: a.dt,
            t_max: 1e3,
            a_max: Some(a.a_max.unwrap_or(100.0 * q0.max_abs_a().max(1e-6))),
            store_every: 10,
            ..Default::default()
        };
        let trace = run_flow(&shape, FlowKind::Mcf, &params, 0.0)?;
        match detect_singularity(&trace)? {
            Some(ev) => {
                let span = (ev.tau - trace.snapshots[0].t).max(1e-9);
                let ts = mcflow::flow::tangent_rescalings(
                    &trace,
                    &ev,
                    &default_scales(0.35 * span.sqrt(), 5),
                )?;
                let n = shape.dimension() as u32;
                reports.push(tangent_roundness_summary(&ts, n, None, None)?.report);
            }
            None => {
                println!(
                    "check tangent-roundness: skipped (flow reached t_max without a singularity)"
                );
            }
        }
    }

    let mut all_pass = true;
    for r in &reports {
        print!("{}", r.render());
        all_pass &= r.passed;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<ExitCode, Error> {
    let input = parse_pipeline_input(&a.shrinker)?;
    let params = PipelineParams {
        resolution: a.resolution,
        flow_dt: a.dt,
        ..Default::default()
    };
    let report = run_pipeline(&input, &params);
    print!("{}", report.render());
    if let Some(dir) = &a.output {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), report.render())?;
        if let Some(m) = &report.monotonicity {
            std::fs::write(dir.join("monotonicity.txt"), m.render())?;
        }
        if let Some(r) = &report.ratio_bound {
            std::fs::write(dir.join("ratio_bound.txt"), r.render())?;
        }
        if let Some(t) = &report.tangent_report {
            std::fs::write(dir.join("tangent.txt"), t.render())?;
        }
        println!("output        {}", dir.display());
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else if report.failed_stage.is_some() {
        ExitCode::from(3)
    } else {
        ExitCode::from(1)
    })
}

fn parse_pipeline_input(s: &str) -> Result<PipelineInput, Error> {
    if s == "torus" {
        return Ok(PipelineInput::AngenentTorus);
    }
    if let Some(rest) = s.strip_prefix("al:") {
        let Some((p, q)) = rest.split_once(',') else {
            return Err(Error::InvalidParameter(format!("expected al:p,q, got '{s}'")));
        };
        let p = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad rotation index in '{s}'")))?;
        let q = q
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad lobe count in '{s}'")))?;
        return Ok(PipelineInput::AbreschLanger { p, q });
    }
    if let Some(n) = s.strip_prefix("sphere:") {
        let n = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad dimension in '{s}'")))?;
        return Ok(PipelineInput::Sphere { n });
    }
    Err(Error::InvalidParameter(format!(
        "unknown shrinker '{s}' (expected torus, al:p,q, or sphere:n)"
    )))
}
