use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stokeslab::blowup::{self, Mode};
use stokeslab::diagnostics::{self, Case, Extrapolated, Quantity, Violation};
use stokeslab::solver::{self, FbStats, Scheme, SolverParams};
use stokeslab::tolerances::DENSITY_TOL;
use stokeslab::{io, DomainSpec, Error, Point, Profile, ScalarField};

mod config;

#[derive(Parser)]
#[command(name = "stokeslab", version, about = "Experiments on the gravity free-boundary problem")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Grid spacing, decimal or `p/q`
    #[arg(long, global = true, value_parser = parse_h, default_value = "1/256")]
    h: f64,
    /// Sampling box `xmin,xmax,ymin,ymax`
    #[arg(long = "box", global = true, value_parser = parse_box, default_value = "-1,1,-1,1", allow_hyphen_values = true)]
    bbox: [f64; 4],
    /// Output file; stdout when omitted and the command allows it
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` file whose keys mirror the long flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Relative energy decrease required to accept a solver step
    #[arg(long = "tol-solver", global = true)]
    tol_solver: Option<f64>,
    /// Allowed drop between adjacent radii in monotonicity checks
    #[arg(long = "tol-monotone", global = true, default_value_t = 1e-3)]
    tol_monotone: f64,
    /// Tolerance of the small-radius extrapolation
    #[arg(long = "tol-extrapolate", global = true, default_value_t = 5e-3)]
    tol_extrapolate: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a closed-form profile, e.g. `stokes@0,0` or `sine:N=3@0,0`
    Profile { spec: String },
    /// Solve the free-boundary problem with profile trace data
    Solve(SolveArgs),
    /// Radial scan of the monotonicity and frequency functionals
    Scan(ScanArgs),
    /// Rescale a field about a point of the line
    Blowup(BlowupArgs),
    /// Detect and classify stagnation points
    Classify(ClassifyArgs),
    /// Scans, limits and classification of every stagnation point
    Report(ReportArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Boundary data as a profile spec
    #[arg(long)]
    data: String,
    #[arg(long, default_value = "bernoulli", value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long = "max-outer")]
    max_outer: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Auto,
    Interior,
    Boundary,
}

#[derive(Args)]
struct ScanArgs {
    /// FBF-1 file or profile spec
    #[arg(long)]
    field: String,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    center: Point,
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long = "case", value_enum, default_value_t = CaseArg::Auto)]
    case: CaseArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Power32,
    Sphere,
}

#[derive(Args)]
struct BlowupArgs {
    #[arg(long)]
    field: String,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    center: Point,
    #[arg(long)]
    scale: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Power32)]
    mode: ModeArg,
    /// Profile to compare the frame with
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_parser = parse_pair, default_value = "0.1,0.9")]
    annulus: (f64, f64),
    /// Half-width of the excluded band around the rays in the Laplacian mass
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    field: String,
    /// Decreasing blow-up scales, comma separated
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    field: String,
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    count: usize,
}

enum Fail {
    Usage(String),
    Numeric(String),
    Io(String),
    Internal(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => 2,
            Fail::Numeric(_) => 3,
            Fail::Io(_) => 4,
            Fail::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Usage(m) | Fail::Numeric(m) | Fail::Io(m) | Fail::Internal(m) => m,
        }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::NoConvergence { .. } => Fail::Numeric(m),
            Error::Io(_) | Error::Format(_) => Fail::Io(m),
            Error::Internal(_) => Fail::Internal(m),
            _ => Fail::Usage(m),
        }
    }
}

fn parse_h(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad spacing '{s}'"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad spacing '{s}'"))?;
            p / q
        }
        None => s.trim().parse().map_err(|_| format!("bad spacing '{s}'"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("spacing '{s}' must be positive"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"))).collect()
}

fn parse_box(s: &str) -> Result<[f64; 4], String> {
    let v = parse_list(s)?;
    v.try_into().map_err(|_| format!("box '{s}' needs four numbers"))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("'{s}' needs two numbers")),
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    parse_pair(s).map(|(x, y)| Point::new(x, y))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

fn domain(g: &Global) -> Result<DomainSpec, Fail> {
    let [x0, x1, y0, y1] = g.bbox;
    Ok(DomainSpec::new(x0, x1, y0, y1, g.h)?)
}

fn load_field(src: &str, g: &Global) -> Result<ScalarField, Fail> {
    if Path::new(src).is_file() {
        return Ok(io::read_fbf(src)?);
    }
    if src.ends_with(".fbf") {
        return Err(Fail::Io(format!("cannot open {src}")));
    }
    let p: Profile = src.parse()?;
    Ok(p.sample(domain(g)?)?)
}

/// Files produced by one invocation; written together at the end.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, String)>,
    stdout: Option<String>,
}

impl Outputs {
    fn primary(&mut self, out: Option<&Path>, text: String) {
        match out {
            Some(p) => self.files.push((p.to_path_buf(), text)),
            None => self.stdout = Some(text),
        }
    }

    fn write(self) -> Result<(), Fail> {
        for (p, t) in &self.files {
            std::fs::write(p, t).map_err(|e| Fail::Io(format!("cannot write {}: {e}", p.display())))?;
        }
        if let Some(t) = self.stdout {
            print!("{t}");
        }
        Ok(())
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn require_out<'a>(g: &'a Global, what: &str) -> Result<&'a Path, Fail> {
    g.out.as_deref().ok_or_else(|| Fail::Usage(format!("{what} needs --out")))
}

fn cmd_profile(spec: &str, g: &Global, o: &mut Outputs) -> Result<(), Fail> {
    let p: Profile = spec.parse()?;
    let f = p.sample(domain(g)?)?;
    o.primary(g.out.as_deref(), io::to_fbf_string(&f));
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    scheme: Scheme,
    params: SolverParams,
    converged: bool,
    iterations: usize,
    energy: Option<f64>,
    fb_residual: FbStats,
    gradient_bound: Option<f64>,
}

/// Returns whether the solve converged; outputs are written either way.
fn cmd_solve(a: &SolveArgs, g: &Global, o: &mut Outputs) -> Result<bool, Fail> {
    let out = require_out(g, "solve")?;
    let spec = domain(g)?;
    let data: Profile = a.data.parse()?;
    let mut params = SolverParams::for_spec(&spec);
    if let Some(v) = a.max_outer {
        params.max_outer = v;
    }
    if let Some(v) = a.epsilon {
        params.epsilon = v;
    }
    if let Some(v) = a.omega {
        params.relax_omega = v;
    }
    if let Some(v) = g.tol_solver {
        params.tol = v;
    }
    let boundary = move |p: Point| data.eval(p);
    let r = solver::solve(spec, &boundary, &params, a.scheme)?;
    let energy_csv = r.energy_csv();
    let summary = SolveSummary {
        scheme: a.scheme,
        params,
        converged: r.converged,
        iterations: r.iterations,
        energy: r.energy_history.last().copied(),
        fb_residual: r.fb_residual_stats,
        gradient_bound: solver::gradient_bound(&r.field, 0.25),
    };
    o.files.push((out.to_path_buf(), io::to_fbf_string(&r.field)));
    o.files.push((with_suffix(out, ".energy.csv"), energy_csv));
    o.files.push((with_suffix(out, ".summary.json"), json(&summary)));
    Ok(r.converged)
}

fn radii_for(f: &ScalarField, x0: Point, rmin: Option<f64>, rmax: Option<f64>, count: usize) -> Result<Vec<f64>, Fail> {
    let delta = diagnostics::admissible_radius(f, x0);
    let rmax = rmax.unwrap_or(0.5f64.min(0.95 * delta));
    let rmin = rmin.unwrap_or((rmax / 16.0).max(8.0 * f.spec().h));
    if !(rmin > 0.0 && rmin < rmax && count >= 2) {
        return Err(Fail::Usage(format!("radii ladder {rmin}..{rmax} with {count} radii is not strictly increasing")));
    }
    if rmax >= delta {
        return Err(Fail::Usage(format!("rmax {rmax} must be below {delta}")));
    }
    Ok(diagnostics::geometric_radii(rmin, rmax, count))
}

fn cmd_scan(a: &ScanArgs, g: &Global, o: &mut Outputs) -> Result<(), Fail> {
    match (a.case, Case::of(a.center)) {
        (CaseArg::Boundary, Case::Interior) => return Err(Fail::Usage("boundary case needs a centre on x2 = 0".into())),
        (CaseArg::Interior, Case::Boundary) => return Err(Fail::Usage("interior case needs a centre off x2 = 0".into())),
        _ => {}
    }
    let f = load_field(&a.field, g)?;
    let radii = radii_for(&f, a.center, a.rmin, a.rmax, a.count)?;
    let s = diagnostics::scan(&f, a.center, &radii)?;
    o.primary(g.out.as_deref(), s.to_csv());
    Ok(())
}

#[derive(Serialize)]
struct BlowupSummary {
    center: Point,
    scale: f64,
    mode: Mode,
    norm: f64,
    target: Option<String>,
    w12: Option<f64>,
    symmetric_difference: Option<f64>,
    laplacian_mass: f64,
}

fn cmd_blowup(a: &BlowupArgs, g: &Global, o: &mut Outputs) -> Result<(), Fail> {
    let out = require_out(g, "blowup")?;
    let f = load_field(&a.field, g)?;
    let mode = match a.mode {
        ModeArg::Power32 => Mode::Power32,
        ModeArg::Sphere => Mode::SphereL2,
    };
    let fr = blowup::rescale(&f, a.center, a.scale, mode)?;
    let target = a.target.as_deref().map(str::parse::<Profile>).transpose()?;
    let (w12, sd) = match &target {
        Some(t) => (Some(blowup::w12_distance(&fr, t, a.annulus)?), Some(blowup::symmetric_difference(&fr, t))),
        None => (None, None),
    };
    let summary = BlowupSummary {
        center: a.center,
        scale: a.scale,
        mode,
        norm: fr.norm,
        target: a.target.clone(),
        w12,
        symmetric_difference: sd,
        laplacian_mass: blowup::laplacian_mass(&fr, a.delta)?,
    };
    o.files.push((out.to_path_buf(), io::to_fbf_string(&fr.frame)));
    o.files.push((with_suffix(out, ".summary.json"), json(&summary)));
    Ok(())
}

fn check_scales(s: &Option<Vec<f64>>) -> Result<Option<&[f64]>, Fail> {
    match s {
        Some(v) if v.len() < 3 || v.windows(2).any(|w| w[1] >= w[0]) => {
            Err(Fail::Usage("scales must be >= 3 strictly decreasing values".into()))
        }
        Some(v) => Ok(Some(v.as_slice())),
        None => Ok(None),
    }
}

fn cmd_classify(a: &ClassifyArgs, g: &Global, o: &mut Outputs) -> Result<(), Fail> {
    let scales = check_scales(&a.scales)?;
    let f = load_field(&a.field, g)?;
    let report = blowup::stagnation_report(&f, scales)?;
    o.primary(g.out.as_deref(), json(&report));
    Ok(())
}

#[derive(Serialize)]
struct PointScan {
    location: Point,
    scan: diagnostics::RadialScan,
    phi_limit: Extrapolated,
    frequency_limit: Extrapolated,
    phi_violations: Vec<Violation>,
    frequency_violations: Vec<Violation>,
    /// Stokes points only
    semicontinuity: Vec<blowup::Semicontinuity>,
}

#[derive(Serialize)]
struct FullReport {
    domain: DomainSpec,
    stagnation: blowup::StagnationReport,
    scans: Vec<PointScan>,
    perimeter_constant: Option<f64>,
    fb_residual: FbStats,
    gradient_bound: Option<f64>,
}

fn cmd_report(a: &ReportArgs, g: &Global, o: &mut Outputs) -> Result<(), Fail> {
    let scales = check_scales(&a.scales)?;
    let f = load_field(&a.field, g)?;
    let stagnation = blowup::stagnation_report(&f, scales)?;
    let mut scans = Vec::new();
    let mut centers = Vec::new();
    let mut rmax_all = f64::INFINITY;
    for p in &stagnation.points {
        let x0 = p.location;
        let radii = radii_for(&f, x0, None, None, a.count)?;
        rmax_all = rmax_all.min(radii[radii.len() - 1]);
        let scan = diagnostics::scan(&f, x0, &radii)?;
        let mut semicontinuity = Vec::new();
        if p.class == blowup::Class::Stokes {
            for case in [Case::Boundary, Case::Interior] {
                let probes = blowup::semicontinuity_probes(&f, x0, case);
                semicontinuity.push(blowup::semicontinuity_check(&f, x0, &probes, case, DENSITY_TOL)?);
            }
        }
        scans.push(PointScan {
            semicontinuity,
            location: x0,
            phi_limit: diagnostics::extrapolate_limit(&scan, Quantity::Phi, g.tol_extrapolate)?,
            frequency_limit: diagnostics::extrapolate_limit(&scan, Quantity::F, g.tol_extrapolate)?,
            phi_violations: diagnostics::monotonicity_check(&scan, Quantity::Phi, g.tol_monotone)?,
            frequency_violations: diagnostics::monotonicity_check(&scan, Quantity::F, g.tol_monotone)?,
            scan,
        });
        centers.push(x0);
    }
    let perimeter_constant = if centers.is_empty() {
        None
    } else {
        Some(diagnostics::perimeter_constant(&f, &centers, &diagnostics::geometric_radii(rmax_all / 8.0, rmax_all, 4))?)
    };
    let report = FullReport {
        domain: *f.spec(),
        stagnation,
        scans,
        perimeter_constant,
        fb_residual: solver::residual_report(&f),
        gradient_bound: solver::gradient_bound(&f, 0.25),
    };
    o.primary(g.out.as_deref(), json(&report));
    Ok(())
}

#[derive(Serialize)]
struct Meta {
    program: &'static str,
    version: &'static str,
    args: Vec<String>,
    threads: usize,
    started_unix: u64,
    elapsed_seconds: f64,
    exit_code: u8,
}

fn long_flags(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect()
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let globals = long_flags(&cmd);
    let subs: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    let mut all = globals.clone();
    for c in cmd.get_subcommands() {
        all.extend(long_flags(c));
    }
    let known = |name: &str| {
        let mut k = globals.clone();
        if let Some(c) = cmd.find_subcommand(name) {
            k.extend(long_flags(c));
        }
        k
    };
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::merge(raw, &subs, known, &all) {
        Ok(a) => a,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot use {n} threads");
            return ExitCode::from(2);
        }
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut outputs = Outputs::default();
    let result = match &cli.cmd {
        Cmd::Profile { spec } => cmd_profile(spec, g, &mut outputs).map(|_| true),
        Cmd::Solve(a) => cmd_solve(a, g, &mut outputs),
        Cmd::Scan(a) => cmd_scan(a, g, &mut outputs).map(|_| true),
        Cmd::Blowup(a) => cmd_blowup(a, g, &mut outputs).map(|_| true),
        Cmd::Classify(a) => cmd_classify(a, g, &mut outputs).map(|_| true),
        Cmd::Report(a) => cmd_report(a, g, &mut outputs).map(|_| true),
    };
    let code = match &result {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(f) => f.code(),
    };
    if let Some(out) = &g.out {
        if result.is_ok() {
            let meta = Meta {
                program: "stokeslab",
                version: env!("CARGO_PKG_VERSION"),
                args: args.clone(),
                threads: rayon::current_num_threads(),
                started_unix: started,
                elapsed_seconds: clock.elapsed().as_secs_f64(),
                exit_code: code,
            };
            outputs.files.push((with_suffix(out, ".meta"), json(&meta)));
        }
    }
    let written = match result {
        Ok(ok) => {
            if !ok {
                eprintln!("warning: solver did not converge; partial outputs written");
            }
            outputs.write()
        }
        Err(f) => Err(f),
    };
    match written {
        Ok(()) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
