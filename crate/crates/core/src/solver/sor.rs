use rayon::prelude::*;

use crate::error::{Error, Result};

/// One stencil arm of a free node.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Arm {
    /// Unknown neighbour at distance `h`.
    Free(usize),
    /// Prescribed value at distance `h`.
    Fixed(f64),
    /// Zero level at distance `d <= h`.
    Cut(f64),
}

struct Colour {
    nodes: Vec<usize>,
    nb: Vec<[usize; 4]>,
    w: Vec<[f64; 4]>,
    rhs: Vec<f64>,
}

/// Shortley-Weller five-point Laplacian on the free nodes, relaxed by
/// red-black SOR.
pub(crate) struct Stencil {
    colours: [Colour; 2],
}

impl Stencil {
    /// `arms(k)` gives the arms (east, west, north, south) of free node `k`
    /// at grid position `(i, j)`, or `None` when the node is not free.
    pub(crate) fn build(
        nx: usize,
        ny: usize,
        h: f64,
        arms: impl Fn(usize, usize) -> Option<[Arm; 4]> + Sync,
    ) -> Stencil {
        let rows: Vec<Vec<(usize, [Arm; 4])>> = (0..=ny)
            .into_par_iter()
            .map(|j| (0..=nx).filter_map(|i| arms(i, j).map(|a| (j * (nx + 1) + i, a))).collect())
            .collect();
        let mut colours = [Colour::new(), Colour::new()];
        for row in rows {
            for (k, a) in row {
                let (i, j) = (k % (nx + 1), k / (nx + 1));
                colours[(i + j) % 2].push(k, &a, h);
            }
        }
        Stencil { colours }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.colours[0].nodes.is_empty() && self.colours[1].nodes.is_empty()
    }

    /// Relaxes `u` in place until the largest update is below `tol`.
    /// Returns the number of sweeps.
    pub(crate) fn relax(&self, u: &mut [f64], omega: f64, tol: f64, max_sweeps: usize) -> Result<usize> {
        if self.is_empty() {
            return Ok(0);
        }
        let mut buf = [vec![0.0; self.colours[0].nodes.len()], vec![0.0; self.colours[1].nodes.len()]];
        let mut last = f64::INFINITY;
        for sweep in 1..=max_sweeps {
            last = 0.0;
            for (c, out) in self.colours.iter().zip(buf.iter_mut()) {
                let view: &[f64] = u;
                let change = out
                    .par_iter_mut()
                    .enumerate()
                    .with_min_len(4096)
                    .map(|(k, o)| {
                        let nb = &c.nb[k];
                        let w = &c.w[k];
                        let gs = c.rhs[k] + w[0] * view[nb[0]] + w[1] * view[nb[1]] + w[2] * view[nb[2]] + w[3] * view[nb[3]];
                        let old = view[c.nodes[k]];
                        *o = old + omega * (gs - old);
                        (gs - old).abs()
                    })
                    .reduce(|| 0.0, f64::max);
                last = last.max(change);
                for (k, v) in c.nodes.iter().zip(out.iter()) {
                    u[*k] = *v;
                }
            }
            if last < tol {
                return Ok(sweep);
            }
        }
        Err(Error::NoConvergence { residual: last })
    }
}

impl Colour {
    fn new() -> Colour {
        Colour { nodes: Vec::new(), nb: Vec::new(), w: Vec::new(), rhs: Vec::new() }
    }

    fn push(&mut self, k: usize, arms: &[Arm; 4], h: f64) {
        let len = |a: &Arm| match a {
            Arm::Cut(d) => d.max(1e-9 * h),
            _ => h,
        };
        let mut nb = [k; 4];
        let mut w = [0.0; 4];
        let mut rhs = 0.0;
        let mut diag = 0.0;
        for axis in 0..2 {
            let (a, b) = (&arms[2 * axis], &arms[2 * axis + 1]);
            let span = len(a) + len(b);
            for (s, arm) in [(2 * axis, a), (2 * axis + 1, b)] {
                let c = 2.0 / (span * len(arm));
                diag += c;
                match *arm {
                    Arm::Free(n) => {
                        nb[s] = n;
                        w[s] = c;
                    }
                    Arm::Fixed(v) => rhs += c * v,
                    Arm::Cut(_) => {}
                }
            }
        }
        for x in &mut w {
            *x /= diag;
        }
        self.nodes.push(k);
        self.nb.push(nb);
        self.w.push(w);
        self.rhs.push(rhs / diag);
    }
}

/// Optimal SOR factor for the model problem on a box of side `len`.
pub(crate) fn optimal_omega(h: f64, len: f64) -> f64 {
    2.0 / (1.0 + (std::f64::consts::PI * h / len).sin())
}
