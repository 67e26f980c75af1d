//! Discrete solutions of the free-boundary problem from Dirichlet data on the
//! box boundary.
//!
//! Two schemes are available. [`minimize_j`] alternates harmonic solves with
//! batched updates of the positivity set and accepts only steps that lower
//! the sharp functional `J(v) = int |grad v|^2 + x2 chi_{v>0}`.
//! [`solve_bernoulli`] represents the free boundary as a graph over `x1` and
//! drives the Bernoulli residual `|grad u| - sqrt(x2)` to zero; it is the one
//! that reaches non-minimizing solutions such as the Stokes corner.

mod bernoulli;
mod descent;
mod sor;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{DomainSpec, IndicatorField, ScalarField};
use crate::geom::Point;
use crate::tolerances::{HARMONIC_REL_TOL, RELAX_OMEGA, RESIDUAL_CUTOFF_CELLS, SOLVER_THRESHOLD_C};

pub use bernoulli::solve_bernoulli;
pub use descent::minimize_j;

use sor::{optimal_omega, Arm, Stencil};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverParams {
    /// Ramp width of the smoothed characteristic function.
    pub epsilon: f64,
    pub max_outer: usize,
    /// Relative energy change below which the outer loop stalls.
    pub tol: f64,
    pub relax_omega: f64,
}

impl SolverParams {
    pub fn for_spec(spec: &DomainSpec) -> SolverParams {
        SolverParams { epsilon: spec.h, max_outer: 400, tol: 1e-9, relax_omega: RELAX_OMEGA }
    }

    pub fn validate(&self, spec: &DomainSpec) -> Result<()> {
        if !(self.epsilon >= spec.h * (1.0 - 1e-12)) {
            return Err(Error::Contract(format!("epsilon {} must be >= h = {}", self.epsilon, spec.h)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Contract(format!("tol {} must lie in (0, 1)", self.tol)));
        }
        if !(self.relax_omega >= 1.0 && self.relax_omega < 2.0) {
            return Err(Error::Contract(format!("relax_omega {} must lie in [1, 2)", self.relax_omega)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Descent,
    Bernoulli,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scheme> {
        match s {
            "descent" => Ok(Scheme::Descent),
            "bernoulli" => Ok(Scheme::Bernoulli),
            other => Err(Error::Contract(format!("unknown scheme '{other}'"))),
        }
    }
}

/// `| |grad u|^2 - x2 |` over reconstructed interface points above the cutoff.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FbStats {
    pub max: Option<f64>,
    pub median: Option<f64>,
    pub count: usize,
    /// No interface point above the cutoff.
    pub empty: bool,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: ScalarField,
    /// Sharp `J` of each accepted iterate.
    pub energy_history: Vec<f64>,
    pub fb_residual_stats: FbStats,
    pub converged: bool,
    pub iterations: usize,
}

impl SolveResult {
    pub fn energy_csv(&self) -> String {
        let mut s = String::from("iter,J\n");
        for (k, j) in self.energy_history.iter().enumerate() {
            let _ = writeln!(s, "{k},{j:.16e}");
        }
        s
    }
}

pub fn solve(spec: DomainSpec, boundary: &(dyn Fn(Point) -> f64 + Sync), params: &SolverParams, scheme: Scheme) -> Result<SolveResult> {
    match scheme {
        Scheme::Descent => minimize_j(spec, boundary, params),
        Scheme::Bernoulli => solve_bernoulli(spec, boundary, params),
    }
}

pub(crate) fn solver_threshold(spec: &DomainSpec) -> f64 {
    SOLVER_THRESHOLD_C * spec.h * spec.h
}

fn on_box_edge(spec: &DomainSpec, i: usize, j: usize) -> bool {
    i == 0 || j == 0 || i == spec.nx() || j == spec.ny()
}

/// Boundary values on box nodes, zero elsewhere; checked for sign and
/// finiteness.
pub(crate) fn boundary_values(spec: &DomainSpec, boundary: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<f64>> {
    let mut v = vec![0.0; spec.node_count()];
    for j in 0..=spec.ny() {
        for i in 0..=spec.nx() {
            if !on_box_edge(spec, i, j) {
                continue;
            }
            let b = boundary(spec.node(i, j));
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidValue { i, j, value: b });
            }
            if spec.y(j) > 0.0 {
                v[spec.index(i, j)] = b;
            }
        }
    }
    Ok(v)
}

/// Harmonic extension into the nodes where `free(i, j)` holds, with the box
/// boundary fixed to `fixed` and every other node zero.
pub(crate) fn harmonic_on(
    spec: &DomainSpec,
    fixed: &[f64],
    free: impl Fn(usize, usize) -> bool + Sync,
    init: Option<&[f64]>,
    omega: f64,
) -> Result<Vec<f64>> {
    let (nx, ny) = (spec.nx(), spec.ny());
    let n = nx + 1;
    let is_free = |i: usize, j: usize| !on_box_edge(spec, i, j) && spec.y(j) > 0.0 && free(i, j);
    let stencil = Stencil::build(nx, ny, spec.h, |i, j| {
        if !is_free(i, j) {
            return None;
        }
        let arm = |ii: usize, jj: usize| {
            if on_box_edge(spec, ii, jj) {
                Arm::Fixed(fixed[jj * n + ii])
            } else if is_free(ii, jj) {
                Arm::Free(jj * n + ii)
            } else {
                Arm::Cut(spec.h)
            }
        };
        Some([arm(i + 1, j), arm(i - 1, j), arm(i, j + 1), arm(i, j - 1)])
    });
    let mut u = fixed.to_vec();
    if let Some(init) = init {
        for j in 1..ny {
            for i in 1..nx {
                if is_free(i, j) {
                    u[j * n + i] = init[j * n + i];
                }
            }
        }
    }
    let scale = fixed.iter().copied().fold(0.0, f64::max);
    if scale > 0.0 {
        stencil.relax(&mut u, omega, HARMONIC_REL_TOL * scale, 60 * nx.max(ny) + 2000)?;
    }
    for x in &mut u {
        *x = x.max(0.0);
    }
    Ok(u)
}

/// Discrete harmonic function on the flagged nodes with the box boundary
/// prescribed by `boundary` where flagged and zero elsewhere.
pub fn harmonic_solve(indicator: &IndicatorField, boundary: impl Fn(Point) -> f64 + Sync) -> Result<ScalarField> {
    let spec = indicator.spec;
    let mut fixed = boundary_values(&spec, &boundary)?;
    for (v, f) in fixed.iter_mut().zip(&indicator.flags) {
        if !f {
            *v = 0.0;
        }
    }
    let omega = optimal_omega(spec.h, (spec.xmax - spec.xmin).max(spec.ymax - spec.ymin));
    let u = harmonic_on(&spec, &fixed, |i, j| indicator.get(i, j), None, omega)?;
    Ok(ScalarField::from_trusted(spec, u, 0.0))
}

/// Sharp discrete `J`: squared edge differences plus trapezoidal
/// `x2^+ chi_{u > thr}`.
pub fn discrete_j(spec: &DomainSpec, u: &[f64], thr: f64) -> f64 {
    let (nx, ny, h) = (spec.nx(), spec.ny(), spec.h);
    let n = nx + 1;
    let mut e = 0.0;
    let mut m = 0.0;
    for j in 0..=ny {
        let wy = if j == 0 || j == ny { 0.5 } else { 1.0 };
        let y = spec.y(j);
        for i in 0..=nx {
            let wx = if i == 0 || i == nx { 0.5 } else { 1.0 };
            let k = j * n + i;
            if i < nx {
                e += wy * (u[k + 1] - u[k]).powi(2);
            }
            if j < ny {
                e += wx * (u[k + n] - u[k]).powi(2);
            }
            if y > 0.0 && u[k] > thr {
                m += wx * wy * y;
            }
        }
    }
    e + m * h * h
}

/// Free-boundary residual of `f` at reconstructed interface points with
/// `x2 > 5h`. `|grad u|^2` is sampled at `2h` and `3h` inside along the
/// normal and extrapolated linearly to the interface.
pub fn residual_report(f: &ScalarField) -> FbStats {
    let s = f.spec();
    let h = s.h;
    let cut = RESIDUAL_CUTOFF_CELLS * h;
    let mut res: Vec<f64> = Vec::new();
    for p in f.interface_points() {
        if p.at.y <= cut {
            continue;
        }
        let probe = p.inside;
        if s.boundary_distance(probe) < 5.0 * h {
            continue;
        }
        let [gx, gy] = f.grad(probe);
        let g = (gx * gx + gy * gy).sqrt();
        if g == 0.0 {
            continue;
        }
        let nrm = Point::new(gx / g, gy / g);
        let a = p.at + nrm * (2.0 * h);
        let b = p.at + nrm * (3.0 * h);
        if s.boundary_distance(a).min(s.boundary_distance(b)) < 2.0 * h {
            continue;
        }
        let sq = |q: Point| {
            let [x, y] = f.grad(q);
            x * x + y * y
        };
        let g0 = 3.0 * sq(a) - 2.0 * sq(b);
        res.push((g0 - p.at.y).abs());
    }
    if res.is_empty() {
        return FbStats { max: None, median: None, count: 0, empty: true };
    }
    res.sort_by(f64::total_cmp);
    let m = res.len();
    let median = if m % 2 == 1 { res[m / 2] } else { 0.5 * (res[m / 2 - 1] + res[m / 2]) };
    FbStats { max: res.last().copied(), median: Some(median), count: m, empty: false }
}

/// Smallest `C` with `|grad u|^2 <= C x2` at positive nodes with `x2 >= 2h`
/// and at least `collar` from the box boundary.
pub fn gradient_bound(f: &ScalarField, collar: f64) -> Option<f64> {
    let s = f.spec();
    let mut c: Option<f64> = None;
    for j in 0..=s.ny() {
        let y = s.y(j);
        if y < 2.0 * s.h {
            continue;
        }
        for i in 0..=s.nx() {
            let p = s.node(i, j);
            if !f.is_positive_node(i, j) || s.boundary_distance(p) < collar.max(2.0 * s.h) {
                continue;
            }
            let [gx, gy] = f.grad(p);
            let r = (gx * gx + gy * gy) / y;
            c = Some(c.map_or(r, |c: f64| c.max(r)));
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Profile;

    #[test]
    fn linear_data_is_reproduced() {
        let s = DomainSpec::square(1.0, 1.0 / 32.0).unwrap();
        let f = crate::field::make_field(s, |p| p.y.max(0.0)).unwrap();
        let ind = f.positivity(0.0).unwrap();
        let u = harmonic_solve(&ind, |p| p.y.max(0.0)).unwrap();
        for (a, b) in u.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_indicator_gives_zero() {
        let s = DomainSpec::square(1.0, 1.0 / 16.0).unwrap();
        let ind = IndicatorField { spec: s, flags: vec![false; s.node_count()] };
        let u = harmonic_solve(&ind, |p| p.y.max(0.0)).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn stokes_cone_solve_matches_profile() {
        let p = Profile::stokes(Point::ORIGIN).unwrap();
        let mut errs = Vec::new();
        for n in [64.0, 128.0] {
            let s = DomainSpec::square(1.0, 1.0 / n).unwrap();
            let f = p.sample(s).unwrap();
            let u = harmonic_solve(&f.positivity(0.0).unwrap(), |q| p.eval(q)).unwrap();
            let e = u.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[1] < 0.6 * errs[0] && errs[1] < 5e-3, "{errs:?}");
    }

    #[test]
    fn maximum_principle() {
        let s = DomainSpec::square(1.0, 1.0 / 32.0).unwrap();
        let f = crate::field::make_field(s, |p| if p.y > 0.0 && p.x.abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let b = |p: Point| (p.y.max(0.0) * (1.0 + p.x)).min(1.0);
        let u = harmonic_solve(&f.positivity(0.0).unwrap(), b).unwrap();
        let bmax = (0..=s.nx()).map(|i| b(s.node(i, s.ny()))).fold(0.0, f64::max);
        assert!(u.values().iter().all(|v| *v >= 0.0 && *v <= bmax + 1e-12));
    }

    #[test]
    fn residual_of_stokes_and_doubled_stokes() {
        let p = Profile::stokes(Point::ORIGIN).unwrap();
        let s = DomainSpec::square(1.0, 1.0 / 256.0).unwrap();
        let f = p.sample(s).unwrap();
        let r = residual_report(&f);
        assert!(!r.empty && r.max.unwrap() < 2.0 * s.h, "{r:?}");
        let g = f.scaled(2.0).unwrap();
        let r2 = residual_report(&g);
        assert!(r2.median.unwrap() > 0.1, "{r2:?}");
        let lin = crate::field::make_field(s, |q| q.y.max(0.0)).unwrap();
        assert!(residual_report(&lin).empty);
    }

    #[test]
    fn discrete_j_of_linear_field() {
        let s = DomainSpec::square(1.0, 1.0 / 64.0).unwrap();
        let f = crate::field::make_field(s, |q| q.y.max(0.0)).unwrap();
        let j = discrete_j(&s, f.values(), 0.0);
        // int over [-1,1]x[0,1] of 1 + y, with the trapezoid row at y = 0 weighing zero
        assert!((j - 3.0).abs() < 1e-12, "{j}");
    }
}
