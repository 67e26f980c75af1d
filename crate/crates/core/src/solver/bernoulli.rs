use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{DomainSpec, ScalarField};
use crate::geom::Point;
use crate::tolerances::HARMONIC_REL_TOL;

use super::sor::{optimal_omega, Arm, Stencil};
use super::{boundary_values, discrete_j, residual_report, solver_threshold, SolveResult, SolverParams};

/// Control points per unit length of the free-boundary graph.
const CONTROLS_PER_UNIT: f64 = 16.0;
/// Columns across the coarsest continuation level.
const COARSE_COLUMNS: usize = 64;
/// Finite-difference step for the Jacobian.
const FD_STEP: f64 = 1e-5;
/// Chord iterations allowed on each refined level.
const CHORD_ITERATIONS: usize = 8;

/// Piecewise-linear graph `y = eta(x)` through control points.
#[derive(Clone, Debug)]
struct Graph {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Graph {
    fn segment(&self, x: f64) -> usize {
        let m = self.xs.len() - 1;
        let t = (x - self.xs[0]) / (self.xs[m] - self.xs[0]) * m as f64;
        (t.floor().max(0.0) as usize).min(m - 1)
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
    }

    fn slope(&self, x: f64) -> f64 {
        let m = self.xs.len() - 1;
        let seg = |k: usize| (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]);
        let k = self.segment(x);
        let dx = (self.xs[1] - self.xs[0]) * 1e-9;
        if (x - self.xs[k]).abs() < dx && k > 0 {
            0.5 * (seg(k - 1) + seg(k))
        } else if (x - self.xs[k + 1]).abs() < dx && k + 1 < m {
            0.5 * (seg(k) + seg(k + 1))
        } else {
            seg(k)
        }
    }
}

struct Level {
    spec: DomainSpec,
    fixed: Vec<f64>,
    u: Vec<f64>,
    omega: f64,
    cols: Vec<usize>,
    tol: f64,
}

impl Level {
    fn new(spec: DomainSpec, boundary: &(dyn Fn(Point) -> f64 + Sync), stride: usize, m: usize) -> Result<Level> {
        let fixed = boundary_values(&spec, boundary)?;
        let omega = optimal_omega(spec.h, (spec.xmax - spec.xmin).max(spec.ymax - spec.ymin));
        let scale = fixed.iter().copied().fold(0.0, f64::max);
        Ok(Level { spec, u: fixed.clone(), fixed, omega, cols: (1..m).map(|c| c * stride).collect(), tol: HARMONIC_REL_TOL * scale })
    }

    fn columns(&self, g: &Graph) -> Vec<f64> {
        (0..=self.spec.nx()).map(|i| g.eval(self.spec.x(i))).collect()
    }

    /// Harmonic function above the graph, starting from `init`.
    fn harmonic(&self, eta: &[f64], init: &[f64]) -> Result<Vec<f64>> {
        let s = &self.spec;
        let (nx, ny, h) = (s.nx(), s.ny(), s.h);
        let n = nx + 1;
        let edge = |i: usize, j: usize| i == 0 || j == 0 || i == nx || j == ny;
        let stencil = Stencil::build(nx, ny, h, |i, j| {
            let y = s.y(j);
            if edge(i, j) || y <= eta[i] || y <= 0.0 {
                return None;
            }
            let side = |ii: usize| {
                if y <= eta[ii] {
                    Arm::Cut(h * (y - eta[i]) / (eta[ii] - eta[i]))
                } else if edge(ii, j) {
                    Arm::Fixed(self.fixed[j * n + ii])
                } else {
                    Arm::Free(j * n + ii)
                }
            };
            let north = if j + 1 == ny { Arm::Fixed(self.fixed[(j + 1) * n + i]) } else { Arm::Free((j + 1) * n + i) };
            let south = if s.y(j - 1) <= eta[i].max(0.0) {
                Arm::Cut(y - eta[i].max(0.0))
            } else if j - 1 == 0 {
                Arm::Fixed(self.fixed[i])
            } else {
                Arm::Free((j - 1) * n + i)
            };
            Some([side(i + 1), side(i - 1), north, south])
        });
        let mut u = vec![0.0; s.node_count()];
        for j in 0..=ny {
            for i in 0..=nx {
                let k = j * n + i;
                u[k] = if edge(i, j) {
                    self.fixed[k]
                } else if s.y(j) > eta[i] {
                    init[k]
                } else {
                    0.0
                };
            }
        }
        if self.tol > 0.0 {
            stencil.relax(&mut u, self.omega, self.tol, 60 * nx.max(ny) + 2000)?;
        }
        Ok(u)
    }

    /// `sqrt(|grad u|^2) - sqrt(eta)` on the residual columns.
    fn residual(&self, g: &Graph, eta: &[f64], u: &[f64]) -> Vec<f64> {
        let s = &self.spec;
        let (ny, h, n) = (s.ny(), s.h, s.nx() + 1);
        self.cols
            .iter()
            .map(|&i| {
                let e = eta[i].max(0.0);
                let mut j = s.zero_row().unwrap_or(0);
                while j <= ny && s.y(j) < e + 0.5 * h {
                    j += 1;
                }
                if j + 1 > ny {
                    return 0.0;
                }
                let s1 = s.y(j) - e;
                let s2 = s1 + h;
                let (ua, ub) = (u[j * n + i], u[(j + 1) * n + i]);
                let uy = (ua * s2 * s2 - ub * s1 * s1) / (s1 * s2 * (s2 - s1));
                let sl = g.slope(s.x(i));
                (uy * uy * (1.0 + sl * sl)).sqrt() - e.sqrt()
            })
            .collect()
    }

    fn evaluate(&self, g: &Graph, init: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let eta = self.columns(g);
        let u = self.harmonic(&eta, init)?;
        let r = self.residual(g, &eta, &u);
        Ok((u, r))
    }

    /// Finite-difference Jacobian of the residual in the interior controls.
    fn jacobian(&self, g: &Graph, u: &[f64], r: &[f64]) -> Result<DMatrix<f64>> {
        let q = g.ys.len() - 2;
        let cols: Vec<Vec<f64>> = (0..q)
            .into_par_iter()
            .map(|k| {
                let mut gp = g.clone();
                gp.ys[k + 1] += FD_STEP;
                let (_, rp) = self.evaluate(&gp, u)?;
                Ok(rp.iter().zip(r).map(|(a, b)| (a - b) / FD_STEP).collect())
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(r.len(), q, |i, k| cols[k][i]))
    }
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Zero crossing of the box-side trace in column `i`: above the returned
/// height the trace is positive all the way to the top.
fn side_height(spec: &DomainSpec, fixed: &[f64], i: usize) -> Result<f64> {
    let (ny, h, n) = (spec.ny(), spec.h, spec.nx() + 1);
    let mut j = ny;
    while j > 0 && fixed[j * n + i] > 0.0 {
        j -= 1;
    }
    if j == ny {
        return Err(Error::Contract("side wall trace vanishes at the top corner; the graph scheme needs fluid there".into()));
    }
    let b1 = fixed[(j + 1) * n + i];
    let y1 = spec.y(j + 1);
    let t = if j + 2 <= ny && fixed[(j + 2) * n + i] > b1 { b1 / (fixed[(j + 2) * n + i] - b1) } else { 0.5 };
    Ok((y1 - t.min(1.0) * h).max(spec.y(j)).max(0.0))
}

/// Levels from coarse to fine as grid-spacing multipliers.
fn level_factors(spec: &DomainSpec) -> Vec<usize> {
    let zr = spec.zero_row().unwrap_or(0);
    let mut f = 1usize;
    while spec.nx() % (2 * f) == 0
        && spec.ny() % (2 * f) == 0
        && zr % (2 * f) == 0
        && spec.nx() / (2 * f) >= COARSE_COLUMNS
    {
        f *= 2;
    }
    let mut out = Vec::new();
    while f >= 1 {
        out.push(f);
        f /= 2;
    }
    out
}

/// Least-squares step `-(J'J + lambda diag J'J)^-1 J'r`.
fn lm_step(jac: &DMatrix<f64>, r: &[f64], lambda: f64) -> Option<DVector<f64>> {
    let jt = jac.transpose();
    let mut a = &jt * jac;
    for k in 0..a.nrows() {
        a[(k, k)] += lambda * a[(k, k)].max(1e-12);
    }
    let rhs = -(&jt * DVector::from_column_slice(r));
    a.cholesky().map(|c| c.solve(&rhs))
}

fn apply(g: &Graph, step: &DVector<f64>, hi: f64) -> Graph {
    let mut out = g.clone();
    for k in 0..step.len() {
        out.ys[k + 1] = (g.ys[k + 1] + step[k]).clamp(0.0, hi);
    }
    out
}

/// Damped Gauss-Newton on one level. Returns the accepted graph and whether
/// it stopped at a stationary point rather than at the iteration cap.
fn gauss_newton(
    level: &mut Level,
    mut g: Graph,
    jac0: Option<&DMatrix<f64>>,
    max_iter: usize,
    hi: f64,
    move_tol: f64,
    mut on_accept: impl FnMut(&Level),
) -> Result<(Graph, bool, Option<DMatrix<f64>>)> {
    let (u, mut r) = level.evaluate(&g, &level.u)?;
    level.u = u;
    let mut jac = jac0.cloned();
    let mut lambda = 1e-4;
    for _ in 0..max_iter {
        if jac0.is_none() {
            jac = Some(level.jacobian(&g, &level.u, &r)?);
        }
        let j = jac.as_ref().expect("jacobian");
        let base = sq(&r);
        let mut accepted = None;
        while lambda < 1e8 {
            if let Some(step) = lm_step(j, &r, lambda) {
                let trial = apply(&g, &step, hi);
                let (u, rt) = level.evaluate(&trial, &level.u)?;
                if sq(&rt) < base {
                    let moved = trial.ys.iter().zip(&g.ys).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    accepted = Some((trial, u, rt, moved));
                    lambda = (lambda / 3.0).max(1e-9);
                    break;
                }
            }
            lambda *= 4.0;
        }
        let Some((trial, u, rt, moved)) = accepted else {
            return Ok((g, true, jac));
        };
        let gain = (base - sq(&rt)) / base.max(1e-300);
        g = trial;
        level.u = u;
        r = rt;
        on_accept(level);
        if moved < move_tol || gain < 1e-9 {
            return Ok((g, true, jac));
        }
    }
    Ok((g, false, jac))
}

/// Free-boundary solve with the fluid region `{x2 > eta(x1)}` above a
/// piecewise-linear graph.
///
/// The graph has controls every `1/16` and its ends are pinned where the side
/// wall traces vanish. For a given graph the field is harmonic with cut-cell
/// (Shortley-Weller) arms at the graph. The controls are fitted by damped
/// Gauss-Newton to the residual `|grad u| - sqrt(x2)` sampled on the graph,
/// first on a coarse grid with a finite-difference Jacobian, then on
/// successively refined grids reusing that Jacobian.
pub fn solve_bernoulli(spec: DomainSpec, boundary: &(dyn Fn(Point) -> f64 + Sync), params: &SolverParams) -> Result<SolveResult> {
    params.validate(&spec)?;
    let thr = solver_threshold(&spec);
    let fixed = boundary_values(&spec, boundary)?;
    if fixed.iter().all(|v| *v == 0.0) {
        let field = ScalarField::from_trusted(spec, vec![0.0; spec.node_count()], thr);
        let stats = residual_report(&field);
        return Ok(SolveResult { field, energy_history: vec![0.0], fb_residual_stats: stats, converged: true, iterations: 0 });
    }
    if spec.zero_row().is_none() {
        return Err(Error::InvalidDomain("the line x2 = 0 must be a grid row".into()));
    }
    let left = side_height(&spec, &fixed, 0)?;
    let right = side_height(&spec, &fixed, spec.nx())?;
    let len = spec.xmax - spec.xmin;
    let m = (CONTROLS_PER_UNIT * len).ceil() as usize;
    let xs: Vec<f64> = (0..=m).map(|k| spec.xmin + len * k as f64 / m as f64).collect();
    let ys = xs.iter().map(|x| left + (right - left) * (x - spec.xmin) / len).map(|y| 0.5 * y).collect::<Vec<_>>();
    let mut graph = Graph { xs, ys };
    graph.ys[0] = left;
    graph.ys[m] = right;

    let factors = level_factors(&spec);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    let mut jac: Option<DMatrix<f64>> = None;
    let mut prev: Option<(DomainSpec, Vec<f64>)> = None;
    let ncoarse = spec.nx() / factors[0];
    for (li, &f) in factors.iter().enumerate() {
        let ls = DomainSpec::new(spec.xmin, spec.xmax, spec.ymin, spec.ymax, spec.h * f as f64)?;
        let mut level = Level::new(ls, boundary, factors[0] / f, ncoarse)?;
        let hi = spec.ymax - 3.0 * ls.h;
        if let Some((ps, pu)) = &prev {
            let pf = ScalarField::from_trusted(*ps, pu.clone(), 0.0);
            for j in 0..=ls.ny() {
                for i in 0..=ls.nx() {
                    let k = ls.index(i, j);
                    if level.u[k] == 0.0 {
                        level.u[k] = pf.interp(ls.node(i, j));
                    }
                }
            }
        }
        let finest = li + 1 == factors.len();
        let cap = if li == 0 { params.max_outer } else { params.max_outer.min(CHORD_ITERATIONS) };
        let mut iters = 0;
        let move_tol = if li == 0 { 1e-10 } else { 5e-2 * ls.h };
        let (g, stationary, j) = gauss_newton(&mut level, graph, jac.as_ref(), cap, hi, move_tol, |lv| {
            iters += 1;
            if finest {
                history.push(discrete_j(&lv.spec, &lv.u, thr));
            }
        })?;
        iterations += iters;
        if jac.is_none() {
            jac = j;
        }
        graph = g;
        converged &= stationary;
        if finest && history.is_empty() {
            history.push(discrete_j(&level.spec, &level.u, thr));
        }
        prev = Some((ls, std::mem::take(&mut level.u)));
    }
    let (_, u) = prev.expect("at least one level");
    let field = ScalarField::from_trusted(spec, u, thr);
    let stats = residual_report(&field);
    Ok(SolveResult { field, energy_history: history, fb_residual_stats: stats, converged, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_interpolation() {
        let g = Graph { xs: vec![-1.0, 0.0, 1.0], ys: vec![1.0, 0.0, 2.0] };
        assert_eq!(g.eval(-0.5), 0.5);
        assert_eq!(g.eval(0.5), 1.0);
        assert_eq!(g.slope(0.0), 0.5);
        assert_eq!(g.slope(0.25), 2.0);
    }

    #[test]
    fn levels_are_nested() {
        let s = DomainSpec::square(1.0, 1.0 / 256.0).unwrap();
        assert_eq!(level_factors(&s), vec![8, 4, 2, 1]);
        let s = DomainSpec::square(1.0, 1.0 / 16.0).unwrap();
        assert_eq!(level_factors(&s), vec![1]);
    }

    #[test]
    fn side_height_of_stokes_trace() {
        let s = DomainSpec::square(1.0, 1.0 / 64.0).unwrap();
        let p = crate::profiles::Profile::stokes(Point::ORIGIN).unwrap();
        let b = boundary_values(&s, &|q| p.eval(q)).unwrap();
        let y = side_height(&s, &b, 0).unwrap();
        assert!((y - 1.0 / 3f64.sqrt()).abs() < 0.02, "{y}");
    }

    #[test]
    fn zero_data() {
        let s = DomainSpec::square(1.0, 1.0 / 32.0).unwrap();
        let r = solve_bernoulli(s, &|_| 0.0, &SolverParams::for_spec(&s)).unwrap();
        assert!(r.converged && r.field.max_value() == 0.0);
    }
}
