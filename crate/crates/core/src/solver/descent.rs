use crate::error::{Error, Result};
use crate::field::{DomainSpec, ScalarField};
use crate::geom::Point;

use super::sor::optimal_omega;
use super::{boundary_values, discrete_j, harmonic_on, residual_report, solver_threshold, SolveResult, SolverParams};

/// Trial aggressiveness levels; level `c` uses the ramp width `epsilon / sqrt(c)`.
const LEVELS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// Energy descent on the positivity set.
///
/// Each outer iteration proposes one synchronous batch: interface nodes whose
/// smoothed indicator `min(1, u / (sqrt(x2) eps))` is below one leave, and dry
/// neighbours whose predicted `|grad u|^2` exceeds `x2` enter. The batch is
/// accepted only if the sharp `J` of the re-solved field drops; otherwise a
/// narrower ramp is tried. No accepted batch at any level ends the loop.
pub fn minimize_j(spec: DomainSpec, boundary: &(dyn Fn(Point) -> f64 + Sync), params: &SolverParams) -> Result<SolveResult> {
    params.validate(&spec)?;
    let (nx, ny, h) = (spec.nx(), spec.ny(), spec.h);
    let n = nx + 1;
    let thr = solver_threshold(&spec);
    let fixed = boundary_values(&spec, boundary)?;
    let omega = params.relax_omega.max(optimal_omega(h, (spec.xmax - spec.xmin).max(spec.ymax - spec.ymin)));
    let interior = |i: usize, j: usize| i > 0 && j > 0 && i < nx && j < ny && spec.y(j) > 0.0;

    let full = harmonic_on(&spec, &fixed, |_, _| true, None, omega)?;
    let mut set: Vec<bool> = (0..spec.node_count()).map(|k| interior(k % n, k / n) && full[k] > thr).collect();
    let mut u = harmonic_on(&spec, &fixed, |i, j| set[j * n + i], Some(&full), omega)?;
    let mut jc = discrete_j(&spec, &u, thr);
    let mut history = vec![jc];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.max_outer {
        iterations += 1;
        let mut accepted = false;
        for c in LEVELS {
            let eps = params.epsilon / c.sqrt();
            let mut trial = set.clone();
            let mut changed = false;
            for j in 1..ny {
                let y = spec.y(j);
                if y <= 0.0 {
                    continue;
                }
                for i in 1..nx {
                    let k = j * n + i;
                    let nbrs = [k + 1, k - 1, k + n, k - n];
                    if set[k] {
                        let touches_dry = nbrs.iter().any(|&m| !set[m] && (interior(m % n, m / n)));
                        if touches_dry && u[k] < y.sqrt() * eps {
                            trial[k] = false;
                            changed = true;
                        }
                    } else if nbrs.iter().any(|&m| set[m]) {
                        let s: f64 = nbrs.iter().map(|&m| u[m]).sum();
                        let grad = 0.25 * s / h;
                        if grad * grad * h * h > c * y * eps * eps {
                            trial[k] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                continue;
            }
            let uu = harmonic_on(&spec, &fixed, |i, j| trial[j * n + i], Some(&u), omega)?;
            let jj = discrete_j(&spec, &uu, thr);
            if jj < jc - params.tol * jc.abs().max(1e-300) {
                set = trial;
                u = uu;
                jc = jj;
                history.push(jc);
                accepted = true;
                break;
            }
        }
        if !accepted {
            converged = true;
            break;
        }
    }
    if history.windows(2).any(|w| w[1] > w[0] * (1.0 + params.tol) + 1e-300) {
        return Err(Error::Internal("accepted iterate raised J".into()));
    }
    let field = ScalarField::from_trusted(spec, u, thr);
    let stats = residual_report(&field);
    Ok(SolveResult { field, energy_history: history, fb_residual_stats: stats, converged, iterations })
}
