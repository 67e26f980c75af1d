//! Named tolerances and defaults shared by the solver, diagnostics and
//! classifier.

/// Positivity threshold for solver output is `SOLVER_THRESHOLD_C * h^2`.
pub const SOLVER_THRESHOLD_C: f64 = 10.0;

/// Linear solves stop when the largest update falls below this times the
/// largest boundary value.
pub const HARMONIC_REL_TOL: f64 = 1e-10;

/// Interface points below `RESIDUAL_CUTOFF_CELLS * h` are left out of
/// free-boundary residual statistics.
pub const RESIDUAL_CUTOFF_CELLS: f64 = 5.0;

/// Monotonicity and constancy tolerance for exact profiles.
pub const PROFILE_TOL: f64 = 1e-3;

/// Monotonicity and constancy tolerance for solver output.
pub const SOLVER_TOL: f64 = 5e-2;

/// Boundary density of the Stokes corner, `int_{B_1} x2^+ chi_cone`.
pub const STOKES_DENSITY: f64 = 0.577_350_269_189_625_8; // sqrt(3) / 3

/// Boundary density of a degenerate point, `int_{B_1} x2^+`.
pub const FULL_DENSITY: f64 = 2.0 / 3.0;

/// `|phi0 - density|` allowed for either class.
pub const DENSITY_TOL: f64 = 0.05;

/// `|F0 - round(F0)|` allowed for a degenerate class.
pub const FREQUENCY_ROUND_TOL: f64 = 0.1;

/// Annulus on which blow-up frames are compared with profiles.
pub const W12_ANNULUS: (f64, f64) = (0.1, 0.9);

/// Relative growth allowed between successive blow-up distances that still
/// counts as converging.
pub const CONVERGENCE_SLACK: f64 = 0.1;

/// Blow-up distances below this count as converged regardless of trend.
pub const DISTANCE_FLOOR: f64 = 0.02;

/// Lower bound for `r^-5 int_{B_r} u^2` in property (N).
pub const KAPPA: f64 = 1e-4;

/// Margin kept from 0 and from 2/3 by `r^-3 int_{B_r} x2^+ chi` in property (D).
pub const VOLUME_MARGIN: f64 = 0.02;

/// Nodes per axis of a blow-up frame.
pub const FRAME_RESOLUTION: usize = 256;

/// Blow-up scales must be at least this many source cells.
pub const MIN_SCALE_CELLS: f64 = 16.0;

/// Default over-relaxation factor for red-black SOR.
pub const RELAX_OMEGA: f64 = 1.9;
