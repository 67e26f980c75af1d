//! Blow-up rescalings about stagnation points and their classification.

use serde::Serialize;

use crate::diagnostics::{self, extrapolate_limit, Case, Extrapolated, Quantity, SPHERE_FLOOR};
use crate::error::{Error, Result};
use crate::field::{disk_integral, make_field, DomainSpec, ScalarField};
use crate::geom::{square_coverage, Point};
use crate::profiles::Profile;
use crate::recon::windowed_disk_energy;
use crate::tolerances::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `u(x0 + r x) / r^{3/2}`
    Power32,
    /// `u(x0 + r x) / sqrt(r^-1 int_{dB_r} u^2)`
    SphereL2,
}

/// A field rescaled onto `[-1, 1]^2` about a point of the line.
#[derive(Clone, Debug)]
pub struct BlowupFrame {
    pub center: Point,
    pub scale: f64,
    pub mode: Mode,
    pub norm: f64,
    pub frame: ScalarField,
    source: Option<ScalarField>,
}

impl BlowupFrame {
    /// Source point of a frame point.
    pub fn source_point(&self, x: Point) -> Point {
        self.center + x * self.scale
    }

    pub fn source(&self) -> Option<&ScalarField> {
        self.source.as_ref()
    }
}

fn frame_spec() -> DomainSpec {
    DomainSpec::square(1.0, 2.0 / FRAME_RESOLUTION as f64).expect("valid frame grid")
}

fn check_line(x0: Point) -> Result<()> {
    if x0.y != 0.0 {
        return Err(Error::Contract(format!("blow-up centre ({}, {}) is not on x2 = 0", x0.x, x0.y)));
    }
    Ok(())
}

pub fn rescale(f: &ScalarField, x0: Point, r: f64, mode: Mode) -> Result<BlowupFrame> {
    check_line(x0)?;
    let s = f.spec();
    s.check_disk(x0, r)?;
    if r < MIN_SCALE_CELLS * s.h * (1.0 - 1e-12) {
        return Err(Error::Contract(format!("scale {r} is below {MIN_SCALE_CELLS} source cells")));
    }
    let norm = match mode {
        Mode::Power32 => r.powf(1.5),
        Mode::SphereL2 => {
            let l2 = f.sphere_l2(x0, r)?;
            if l2 < SPHERE_FLOOR {
                return Err(Error::DegenerateNormalization(format!("int u^2 over the circle of radius {r} vanishes")));
            }
            (l2 / r).sqrt()
        }
    };
    let frame = make_field(frame_spec(), |x| f.interp(x0 + x * r) / norm)?.with_threshold(f.threshold() / norm)?;
    Ok(BlowupFrame { center: x0, scale: r, mode, norm, frame, source: Some(f.clone()) })
}

/// `(int_A |a - b|^2 + |grad a - grad b|^2)^{1/2}` over the annulus
/// `rin < |x| < rout` of the frame.
///
/// The difference is formed on the source grid, where the energy quadrature
/// resolves the kinks of both functions.
pub fn w12_distance(a: &BlowupFrame, b: &Profile, (rin, rout): (f64, f64)) -> Result<f64> {
    if !(0.0 < rin && rin < rout && rout <= 1.0) {
        return Err(Error::Contract(format!("annulus ({rin}, {rout}) must satisfy 0 < rin < rout <= 1")));
    }
    let (r, x0, norm) = (a.scale, a.center, a.norm);
    let (field, scale, centre, nrm) = match &a.source {
        Some(src) => (src, r, x0, norm),
        None => (&a.frame, 1.0, Point::ORIGIN, 1.0),
    };
    let s = *field.spec();
    let diff = |p: Point| field.interp(p) / nrm - b.eval((p - centre) * (1.0 / scale));
    let node = |i: usize, j: usize| diff(s.node(i, j));
    let grad2 = windowed_disk_energy(&s, node, centre, rout * scale) - windowed_disk_energy(&s, node, centre, rin * scale);
    let l2 = disk_integral(&s, |p| diff(p).powi(2), centre, rout * scale)? - disk_integral(&s, |p| diff(p).powi(2), centre, rin * scale)?;
    Ok((l2 / (scale * scale) + grad2).max(0.0).sqrt())
}

/// Area of `B_1 cap ({a > 0} sym-diff {b > 0})` in frame units.
pub fn symmetric_difference(a: &BlowupFrame, b: &Profile) -> f64 {
    let fs = a.frame.spec();
    let h = fs.h;
    let mut area = 0.0;
    for j in 0..fs.ny() {
        let yc = 0.5 * (fs.y(j) + fs.y(j + 1));
        for i in 0..fs.nx() {
            let c = Point::new(0.5 * (fs.x(i) + fs.x(i + 1)), yc);
            let w = square_coverage(c, 0.5 * h, Point::ORIGIN, 1.0);
            if w <= 0.0 {
                continue;
            }
            let pa = match &a.source {
                Some(src) => src.positive_at(a.source_point(c)),
                None => a.frame.positive_at(c),
            };
            if pa != (b.eval(c) > 0.0) {
                area += w;
            }
        }
    }
    area * h * h
}

/// Positive part of the discrete Laplacian of the frame, summed over
/// `B_1 cap {|cos(3(theta - pi/2)/2)| > delta}`, in frame units.
///
/// The five-point Laplacian is taken on the source grid and carried to the
/// frame by the normalization: `int Delta a dx = norm^-1 int Delta u dy`.
pub fn laplacian_mass(a: &BlowupFrame, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Contract(format!("delta {delta} must lie in (0, 1)")));
    }
    let outside_band = |x: Point| {
        let th = x.y.atan2(x.x);
        (1.5 * (th - std::f64::consts::FRAC_PI_2)).cos().abs() > delta
    };
    let (field, scale, centre, nrm) = match &a.source {
        Some(src) => (src, a.scale, a.center, a.norm),
        None => (&a.frame, 1.0, Point::ORIGIN, 1.0),
    };
    let s = field.spec();
    let (i0, i1) = s.i_range(centre.x - scale, centre.x + scale);
    let (j0, j1) = s.j_range(centre.y - scale, centre.y + scale);
    let mut mass = 0.0;
    for j in j0.max(1)..=j1.min(s.ny() - 1) {
        for i in i0.max(1)..=i1.min(s.nx() - 1) {
            let p = s.node(i, j);
            let x = (p - centre) * (1.0 / scale);
            if x.norm() >= 1.0 || !outside_band(x) {
                continue;
            }
            let lap = field.value(i + 1, j) + field.value(i - 1, j) + field.value(i, j + 1) + field.value(i, j - 1) - 4.0 * field.value(i, j);
            mass += lap.max(0.0);
        }
    }
    Ok(mass / nrm)
}

/// Scans behind properties (N) and (D).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Nondegeneracy {
    pub radii: Vec<f64>,
    /// `r^-5 int_{B_r} u^2`
    pub n_scan: Vec<f64>,
    pub n_lower: f64,
    /// Log-log slope of `n_scan` against `r`.
    pub n_slope: f64,
    pub n_pass: bool,
    /// `r^-3 int_{B_r} x2^+ chi`
    pub d_volume: Vec<f64>,
    pub d_pass: bool,
}

/// (N) passes when `r^-5 int u^2` stays above `kappa` and does not decay
/// like a positive power of `r`; (D) passes when the volume density keeps a
/// margin from 0 and from 2/3.
pub fn nondegeneracy_indicators(f: &ScalarField, x0: Point, radii: &[f64], kappa: f64) -> Result<Nondegeneracy> {
    check_line(x0)?;
    let mut n_scan = Vec::with_capacity(radii.len());
    let mut d_volume = Vec::with_capacity(radii.len());
    for &r in radii {
        let l2 = disk_integral(f.spec(), |p| f.interp(p).powi(2), x0, r)?;
        n_scan.push(l2 / r.powi(5));
        d_volume.push(f.disk_sums(x0, r)?.x2_chi / r.powi(3));
    }
    let n_lower = n_scan.iter().copied().fold(f64::INFINITY, f64::min);
    let n_slope = loglog_slope(radii, &n_scan);
    let n_pass = n_lower >= kappa && n_slope < 0.5;
    let d_pass = d_volume.iter().all(|v| *v > VOLUME_MARGIN && *v < FULL_DENSITY - VOLUME_MARGIN);
    Ok(Nondegeneracy { radii: radii.to_vec(), n_scan, n_lower, n_slope, n_pass, d_volume, d_pass })
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx).powi(2)));
    num / den
}

/// A point of the line on the boundary of the positive phase.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub location: Point,
    /// Extent along the line when the fluid rests on a segment.
    pub segment: Option<(f64, f64)>,
}

/// Stagnation candidates: line nodes with a positive node within two
/// columns in either of the first two rows above the line, clustered.
///
/// Clusters wider than 16 cells are contact segments; their isolated points
/// are the strict local minima of the first row above the line. A segment
/// without such minima is returned whole.
pub fn detect_stagnation(f: &ScalarField) -> Vec<Candidate> {
    let s = f.spec();
    let Some(j0) = s.zero_row() else { return Vec::new() };
    if j0 + 2 > s.ny() {
        return Vec::new();
    }
    let nx = s.nx();
    let wet = |i: usize, j: usize| f.is_positive_node(i, j);
    let near: Vec<bool> = (0..=nx)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(nx);
            (lo..=hi).any(|k| wet(k, j0 + 1) || wet(k, j0 + 2))
        })
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i <= nx {
        if !near[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i <= nx && near[i] {
            i += 1;
        }
        let end = i - 1;
        if ((end - start) as f64) <= 16.0 {
            let mid = 0.5 * (s.x(start) + s.x(end));
            out.push(Candidate { location: Point::new(mid, 0.0), segment: None });
            continue;
        }
        let row: Vec<f64> = (0..=nx).map(|k| f.value(k, j0 + 1)).collect();
        let mut minima: Vec<usize> = Vec::new();
        for k in start.max(4)..=end.min(nx - 4) {
            let v = row[k];
            if v <= row[k - 1] && v <= row[k + 1] && v < row[k - 4] && v < row[k + 4] {
                minima.push(k);
            }
        }
        if minima.is_empty() {
            let mid = 0.5 * (s.x(start) + s.x(end));
            out.push(Candidate { location: Point::new(mid, 0.0), segment: Some((s.x(start), s.x(end))) });
            continue;
        }
        let mut group = vec![minima[0]];
        for &k in &minima[1..] {
            if k - group[group.len() - 1] <= 4 {
                group.push(k);
            } else {
                out.push(Candidate { location: Point::new(group_centre(s, &group), 0.0), segment: None });
                group = vec![k];
            }
        }
        out.push(Candidate { location: Point::new(group_centre(s, &group), 0.0), segment: None });
    }
    out
}

fn group_centre(s: &DomainSpec, g: &[usize]) -> f64 {
    0.5 * (s.x(g[0]) + s.x(g[g.len() - 1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Class {
    Stokes,
    Degenerate(u32),
    Zero,
    Unresolved,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    /// Scales in decreasing order.
    pub scales: Vec<f64>,
    pub w12: Vec<f64>,
    pub symmetric_difference: Vec<f64>,
    pub angle: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointReport {
    pub location: Point,
    pub class: Class,
    pub phi0: Option<f64>,
    pub f0: Option<f64>,
    pub metrics: Metrics,
    /// Why a point was left unresolved without a blow-up study.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StagnationReport {
    pub points: Vec<PointReport>,
}

fn converging(d: &[f64]) -> bool {
    d.iter().all(|v| v.is_finite())
        && (d.iter().all(|v| *v < DISTANCE_FLOOR) || d.windows(2).all(|w| w[1] <= w[0] * (1.0 + CONVERGENCE_SLACK)))
}

fn check_scales(scales: &[f64]) -> Result<()> {
    let ok = scales.len() >= 3
        && scales.windows(2).all(|w| w[1] < w[0])
        && scales[0] >= 4.0 * scales[scales.len() - 1] * (1.0 - 1e-12);
    if !ok {
        return Err(Error::Contract("need >= 3 decreasing scales spanning a factor >= 4".into()));
    }
    Ok(())
}

/// Classifies `x0` from blow-ups at the given decreasing scales.
pub fn classify(f: &ScalarField, x0: Point, scales: &[f64]) -> Result<PointReport> {
    check_line(x0)?;
    check_scales(scales)?;
    let s = f.spec();
    let mut metrics = Metrics { scales: scales.to_vec(), ..Default::default() };
    let r0 = scales[0];
    let (i0, i1) = s.i_range(x0.x - r0, x0.x + r0);
    let (j0, j1) = s.j_range(x0.y, x0.y + r0);
    let wet = (j0..=j1).any(|j| (i0..=i1).any(|i| f.is_positive_node(i, j) && s.node(i, j).dist(x0) < r0));
    if !wet {
        return Ok(PointReport { location: x0, class: Class::Zero, phi0: Some(0.0), f0: None, metrics, note: None });
    }
    let mut radii = scales.to_vec();
    radii.reverse();
    let scan = diagnostics::scan(f, x0, &radii)?;
    let phi0 = extrapolate_limit(&scan, Quantity::Phi, 5e-3)?.value();
    let f0 = extrapolate_limit(&scan, Quantity::F, 5e-3)?.value();
    let nd = nondegeneracy_indicators(f, x0, &radii, KAPPA)?;

    let stokes_at0 = Profile::stokes(Point::ORIGIN)?;
    let near = |v: Option<f64>, target: f64, tol: f64| v.is_some_and(|v| (v - target).abs() < tol);

    if near(phi0, STOKES_DENSITY, DENSITY_TOL) && nd.n_pass && nd.d_pass {
        for &r in scales {
            let fr = rescale(f, x0, r, Mode::Power32)?;
            metrics.w12.push(w12_distance(&fr, &stokes_at0, W12_ANNULUS)?);
            metrics.symmetric_difference.push(symmetric_difference(&fr, &stokes_at0));
        }
        metrics.angle = measure_tangents(f, x0).ok().map(|t| t.angle_degrees);
        let class = if converging(&metrics.w12) { Class::Stokes } else { Class::Unresolved };
        return Ok(PointReport { location: x0, class, phi0, f0, metrics, note: None });
    }
    if let (true, Some(fv)) = (near(phi0, FULL_DENSITY, DENSITY_TOL), f0) {
        let n = fv.round();
        if n >= 2.0 && (fv - n).abs() < FREQUENCY_ROUND_TOL {
            let target = Profile::sine_normalized(n as u32, Point::ORIGIN)?;
            for &r in scales {
                let fr = rescale(f, x0, r, Mode::SphereL2)?;
                metrics.w12.push(w12_distance(&fr, &target, W12_ANNULUS)?);
                metrics.symmetric_difference.push(symmetric_difference(&fr, &target));
            }
            let class = if converging(&metrics.w12) { Class::Degenerate(n as u32) } else { Class::Unresolved };
            return Ok(PointReport { location: x0, class, phi0, f0, metrics, note: None });
        }
    }
    Ok(PointReport { location: x0, class: Class::Unresolved, phi0, f0, metrics, note: None })
}

/// Default blow-up scales for a point: `rmax, rmax/2, rmax/4` with `rmax`
/// capped by the admissible radius.
pub fn default_scales(f: &ScalarField, x0: Point) -> Vec<f64> {
    let delta = diagnostics::admissible_radius(f, x0);
    let rmax = 0.4f64.min(0.95 * delta);
    vec![rmax, 0.5 * rmax, 0.25 * rmax]
}

/// Detects and classifies every stagnation point of `f`. Contact segments
/// without an isolated point are reported unresolved.
pub fn stagnation_report(f: &ScalarField, scales: Option<&[f64]>) -> Result<StagnationReport> {
    let mut points = Vec::new();
    for c in detect_stagnation(f) {
        if c.segment.is_some() {
            let note = Some("fluid rests on a segment of the line".to_string());
            points.push(PointReport { location: c.location, class: Class::Unresolved, phi0: None, f0: None, metrics: Metrics::default(), note });
            continue;
        }
        let sc = match scales {
            Some(s) => s.to_vec(),
            None => default_scales(f, c.location),
        };
        let rep = match classify(f, c.location, &sc) {
            Ok(r) => r,
            Err(e @ (Error::Geometry(_) | Error::Contract(_) | Error::DegenerateNormalization(_))) => PointReport {
                location: c.location,
                class: Class::Unresolved,
                phi0: None,
                f0: None,
                metrics: Metrics::default(),
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        points.push(rep);
    }
    Ok(StagnationReport { points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tangents {
    pub left_slope: f64,
    pub right_slope: f64,
    pub angle_degrees: f64,
}

fn fit_slope(pts: &[Point]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.x).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.y).sum::<f64>() / m;
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), p| (n + (p.x - mx) * (p.y - my), d + (p.x - mx).powi(2)));
    (den > 0.0).then(|| num / den)
}

/// Slopes at window size zero from a straight-line fit of per-window
/// slopes against window radius.
fn extrapolate_slopes(w: &[(f64, f64)]) -> Option<f64> {
    match w.len() {
        0 => None,
        1 => Some(w[0].1),
        _ => {
            let m = w.len() as f64;
            let mx = w.iter().map(|p| p.0).sum::<f64>() / m;
            let my = w.iter().map(|p| p.1).sum::<f64>() / m;
            let (num, den) = w.iter().fold((0.0, 0.0), |(n, d), p| (n + (p.0 - mx) * (p.1 - my), d + (p.0 - mx).powi(2)));
            Some(my - num / den * mx)
        }
    }
}

/// One-sided tangents of the free boundary at `x0` from line fits in the
/// dyadic windows `2^-k-1 r0 < |x - x0| < 2^-k r0`, extrapolated to zero
/// window size. The angle is the opening between the two tangent rays.
pub fn measure_tangents(f: &ScalarField, x0: Point) -> Result<Tangents> {
    check_line(x0)?;
    let s = f.spec();
    let r0 = 0.5f64.min(diagnostics::admissible_radius(f, x0));
    let pts: Vec<Point> = f.interface_points().into_iter().map(|p| p.at).filter(|p| p.y > 0.0).collect();
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut k = 0;
    loop {
        let (lo, hi) = (r0 * 0.5f64.powi(k + 1), r0 * 0.5f64.powi(k));
        if lo < 8.0 * s.h {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let ring = |p: &&Point| {
            let d = p.dist(x0);
            d >= lo && d < hi
        };
        let l: Vec<Point> = pts.iter().filter(ring).filter(|p| p.x < x0.x).copied().collect();
        let r: Vec<Point> = pts.iter().filter(ring).filter(|p| p.x > x0.x).copied().collect();
        if let Some(b) = fit_slope(&l) {
            left.push((mid, b));
        }
        if let Some(b) = fit_slope(&r) {
            right.push((mid, b));
        }
        k += 1;
    }
    let (Some(bl), Some(br)) = (extrapolate_slopes(&left), extrapolate_slopes(&right)) else {
        return Err(Error::Contract("too few interface points to fit tangents".into()));
    };
    let dl = Point::new(-1.0, -bl);
    let dr = Point::new(1.0, br);
    let c = dl.dot(dr) / (dl.norm() * dr.norm());
    Ok(Tangents { left_slope: bl, right_slope: br, angle_degrees: c.clamp(-1.0, 1.0).acos().to_degrees() })
}

/// `sup_{B_1} |u(x0 + r x)| / r^beta` per scale, from the source nodes.
pub fn decay_check(f: &ScalarField, x0: Point, beta: f64, scales: &[f64]) -> Result<Vec<f64>> {
    if !(beta >= 0.0) {
        return Err(Error::Contract(format!("beta {beta} must be >= 0")));
    }
    let s = f.spec();
    scales
        .iter()
        .map(|&r| {
            s.check_disk(x0, r)?;
            let (i0, i1) = s.i_range(x0.x - r, x0.x + r);
            let (j0, j1) = s.j_range(x0.y - r, x0.y + r);
            let mut m: f64 = 0.0;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if s.node(i, j).dist(x0) <= r {
                        m = m.max(f.value(i, j));
                    }
                }
            }
            Ok(m / r.powf(beta))
        })
        .collect()
}

/// Limit of `F` from a scan at `radii`, used for off-vertex probes.
pub fn frequency_limit(f: &ScalarField, x0: Point, radii: &[f64]) -> Result<Extrapolated> {
    let scan = diagnostics::scan(f, x0, radii)?;
    extrapolate_limit(&scan, Quantity::F, 5e-3)
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicontinuityProbe {
    pub location: Point,
    pub limit: Option<f64>,
}

/// Upper semicontinuity of a density at `x0`: limits at nearby points should
/// not exceed the limit at `x0`.
#[derive(Clone, Debug, Serialize)]
pub struct Semicontinuity {
    pub functional: Case,
    pub vertex: Option<f64>,
    pub probes: Vec<SemicontinuityProbe>,
    /// probe limits fitted linearly in the distance to `x0`, at distance 0
    pub approach: Option<f64>,
    pub holds: bool,
}

fn density_at(f: &ScalarField, x0: Point, case: Case, rmax: f64) -> Result<Option<f64>> {
    let h = f.spec().h;
    let rmin = (rmax / 8.0).max(3.0 * h);
    if rmax < 4.0 * rmin {
        return Ok(None);
    }
    let scan = diagnostics::scan_as(f, x0, &diagnostics::geometric_radii(rmin, rmax, 5), case)?;
    Ok(extrapolate_limit(&scan, Quantity::Phi, 5e-3)?.value())
}

/// Compares the `case` density at `x0` with densities at `probes`.
///
/// Boundary probes must lie on the line; interior probes are typically free
/// boundary points. Each probe uses radii up to half its distance to `x0`.
pub fn semicontinuity_check(f: &ScalarField, x0: Point, probes: &[Point], case: Case, tol: f64) -> Result<Semicontinuity> {
    let rmax = (0.95 * diagnostics::admissible_radius(f, x0)).min(0.4);
    let vertex = density_at(f, x0, case, rmax)?;
    let mut out = Vec::new();
    let mut pts = Vec::new();
    for &p in probes {
        let d = p.dist(x0);
        let r = (0.5 * d).min(0.95 * diagnostics::admissible_radius(f, p));
        let limit = if d > 0.0 { density_at(f, p, case, r)? } else { None };
        if let Some(v) = limit {
            pts.push((d, v));
        }
        out.push(SemicontinuityProbe { location: p, limit });
    }
    let approach = match pts.len() {
        0 => None,
        1 => Some(pts[0].1),
        n => {
            let nf = n as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            let (mx, my) = (sx / nf, sy / nf);
            let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            Some(if sxx > 0.0 { my - mx * sxy / sxx } else { my })
        }
    };
    let holds = matches!((vertex, approach), (Some(v), Some(a)) if a <= v + tol);
    Ok(Semicontinuity { functional: case, vertex, probes: out, approach, holds })
}

/// Probes at distances `rmax / {2, 4, 8}` from `x0`: points of the line for
/// the boundary density, nearest interface points for the interior one.
pub fn semicontinuity_probes(f: &ScalarField, x0: Point, case: Case) -> Vec<Point> {
    let h = f.spec().h;
    let rmax = (0.95 * diagnostics::admissible_radius(f, x0)).min(0.4);
    let ds = [rmax / 2.0, rmax / 4.0, rmax / 8.0];
    match case {
        Case::Boundary => ds
            .iter()
            .flat_map(|&d| [x0 + Point::new(d, 0.0), x0 - Point::new(d, 0.0)])
            .filter(|p| f.spec().contains(*p))
            .collect(),
        Case::Interior => {
            let pts = f.interface_points();
            ds.iter()
                .filter_map(|&d| {
                    pts.iter()
                        .map(|q| q.at)
                        .filter(|q| q.y > 4.0 * h)
                        .min_by(|a, b| (a.dist(x0) - d).abs().total_cmp(&(b.dist(x0) - d).abs()))
                        .filter(|q| (q.dist(x0) - d).abs() < 0.25 * d)
                })
                .collect()
        }
    }
}
