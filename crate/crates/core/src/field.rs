//! Uniform-grid scalar fields and the quadratures built on them.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::geom::{clip_segment, sqrt_y_line_integral, square_coverage, Point};
use crate::recon::Geometry;

/// Rectangular grid `[xmin,xmax] x [ymin,ymax]` with square cells of side `h`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DomainSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub h: f64,
    nx: usize,
    ny: usize,
    zero_row: Option<usize>,
}

fn cell_count(len: f64, h: f64, axis: &str) -> Result<usize> {
    let q = len / h;
    let n = q.round();
    if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::InvalidDomain(format!(
            "{axis} extent {len} is not an integer multiple of h = {h}"
        )));
    }
    Ok(n as usize)
}

impl DomainSpec {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, h: f64) -> Result<Self> {
        if ![xmin, xmax, ymin, ymax, h].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidDomain("non-finite bound".into()));
        }
        if !(xmin < xmax && ymin < ymax) {
            return Err(Error::InvalidDomain("empty box".into()));
        }
        if !(ymin < 0.0 && 0.0 < ymax) {
            return Err(Error::InvalidDomain(
                "the line x2 = 0 must cross the box interior".into(),
            ));
        }
        if h <= 0.0 {
            return Err(Error::InvalidDomain("h must be positive".into()));
        }
        let nx = cell_count(xmax - xmin, h, "x")?;
        let ny = cell_count(ymax - ymin, h, "y")?;
        let q = -ymin / h;
        let zero_row = ((q - q.round()).abs() <= 1e-9 * q.max(1.0)).then(|| q.round() as usize);
        Ok(DomainSpec { xmin, xmax, ymin, ymax, h, nx, ny, zero_row })
    }

    /// Square box `[-half, half]^2`.
    pub fn square(half: f64, h: f64) -> Result<Self> {
        Self::new(-half, half, -half, half, h)
    }

    /// Number of cells along x.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of cells along y.
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Row index of the line x2 = 0 when it is a grid row.
    pub fn zero_row(&self) -> Option<usize> {
        self.zero_row
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.xmax
        } else {
            self.xmin + i as f64 * self.h
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if Some(j) == self.zero_row {
            0.0
        } else if j == self.ny {
            self.ymax
        } else {
            self.ymin + j as f64 * self.h
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.x(i), self.y(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Distance from `p` to the box boundary (negative outside).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        (p.x - self.xmin).min(self.xmax - p.x).min(p.y - self.ymin).min(self.ymax - p.y)
    }

    pub fn check_disk(&self, center: Point, r: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Geometry(format!("radius {r} must be positive")));
        }
        let slack = 1e-12 * (1.0 + r);
        if self.boundary_distance(center) + slack < r {
            return Err(Error::Geometry(format!(
                "disk of radius {r} about ({}, {}) leaves the domain",
                center.x, center.y
            )));
        }
        Ok(())
    }

    /// Node index range `[lo, hi]` along x covering `[a, b]`, clamped to the grid.
    pub(crate) fn i_range(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = ((a - self.xmin) / self.h).floor().max(0.0) as usize;
        let hi = (((b - self.xmin) / self.h).ceil().max(0.0) as usize).min(self.nx);
        (lo.min(self.nx), hi)
    }

    pub(crate) fn j_range(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = ((a - self.ymin) / self.h).floor().max(0.0) as usize;
        let hi = (((b - self.ymin) / self.h).ceil().max(0.0) as usize).min(self.ny);
        (lo.min(self.ny), hi)
    }
}

struct FieldData {
    spec: DomainSpec,
    values: Vec<f64>,
    threshold: f64,
    geometry: OnceLock<Geometry>,
}

/// Nonnegative samples on the nodes of a [`DomainSpec`], zero on `x2 <= 0`.
///
/// Cloning is cheap; the data is shared and immutable. The positivity
/// threshold travels with the field and decides which nodes count as fluid in
/// every reconstruction.
#[derive(Clone)]
pub struct ScalarField {
    inner: Arc<FieldData>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("spec", &self.inner.spec)
            .field("threshold", &self.inner.threshold)
            .finish_non_exhaustive()
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.inner.spec == other.inner.spec
            && self.inner.threshold == other.inner.threshold
            && self.inner.values.len() == other.inner.values.len()
            && self
                .inner
                .values
                .iter()
                .zip(&other.inner.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl ScalarField {
    pub fn from_values(spec: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.node_count() {
            return Err(Error::Format(format!(
                "expected {} samples, got {}",
                spec.node_count(),
                values.len()
            )));
        }
        for j in 0..=spec.ny {
            let on_line = spec.y(j) <= 0.0;
            for i in 0..=spec.nx {
                let v = values[spec.index(i, j)];
                if !v.is_finite() || v < 0.0 || (on_line && v != 0.0) {
                    return Err(Error::InvalidValue { i, j, value: v });
                }
            }
        }
        Ok(Self::from_trusted(spec, values, 0.0))
    }

    pub(crate) fn from_trusted(spec: DomainSpec, values: Vec<f64>, threshold: f64) -> Self {
        ScalarField {
            inner: Arc::new(FieldData { spec, values, threshold, geometry: OnceLock::new() }),
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.inner.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.inner.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.inner.values[self.inner.spec.index(i, j)]
    }

    pub fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    /// Same samples with a different positivity threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::Contract(format!("threshold {threshold} must be finite and >= 0")));
        }
        Ok(Self::from_trusted(self.inner.spec, self.inner.values.clone(), threshold))
    }

    /// `lambda * u`, threshold scaled alongside.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Contract(format!("scale factor {lambda} must be positive")));
        }
        let values = self.inner.values.iter().map(|v| v * lambda).collect();
        Ok(Self::from_trusted(self.inner.spec, values, self.inner.threshold * lambda))
    }

    pub fn max_value(&self) -> f64 {
        self.inner.values.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn geometry(&self) -> &Geometry {
        self.inner.geometry.get_or_init(|| Geometry::build(self))
    }

    pub fn is_positive_node(&self, i: usize, j: usize) -> bool {
        self.value(i, j) > self.inner.threshold
    }

    /// Bilinear interpolant; points outside the box are rejected.
    pub fn interpolate(&self, p: Point) -> Result<f64> {
        if !self.inner.spec.contains(p) {
            return Err(Error::OutOfDomain { x: p.x, y: p.y });
        }
        Ok(self.interp(p))
    }

    /// Bilinear interpolant with coordinates clamped into the box.
    pub(crate) fn interp(&self, p: Point) -> f64 {
        let s = &self.inner.spec;
        let fx = ((p.x - s.xmin) / s.h).clamp(0.0, s.nx as f64);
        let fy = ((p.y - s.ymin) / s.h).clamp(0.0, s.ny as f64);
        let i = (fx.floor() as usize).min(s.nx - 1);
        let j = (fy.floor() as usize).min(s.ny - 1);
        let a = fx - i as f64;
        let b = fy - j as f64;
        let v = &self.inner.values;
        let n = s.nx + 1;
        let k = j * n + i;
        (1.0 - a) * (1.0 - b) * v[k] + a * (1.0 - b) * v[k + 1] + (1.0 - a) * b * v[k + n] + a * b * v[k + n + 1]
    }

    /// Central difference of the bilinear interpolant with step `h`.
    pub fn gradient(&self, p: Point) -> Result<[f64; 2]> {
        let s = &self.inner.spec;
        let h = s.h;
        let tol = 1e-12 * h;
        if p.x < s.xmin + h - tol || p.x > s.xmax - h + tol || p.y < s.ymin + h - tol || p.y > s.ymax - h + tol {
            return Err(Error::OutOfDomain { x: p.x, y: p.y });
        }
        Ok(self.grad(p))
    }

    pub(crate) fn grad(&self, p: Point) -> [f64; 2] {
        let h = self.inner.spec.h;
        let gx = (self.interp(p + Point::new(h, 0.0)) - self.interp(p - Point::new(h, 0.0))) / (2.0 * h);
        let gy = (self.interp(p + Point::new(0.0, h)) - self.interp(p - Point::new(0.0, h))) / (2.0 * h);
        [gx, gy]
    }

    pub fn positivity(&self, threshold: f64) -> Result<IndicatorField> {
        if !(threshold >= 0.0) || threshold.is_nan() {
            return Err(Error::Contract(format!("threshold {threshold} must be >= 0")));
        }
        let s = self.inner.spec;
        let mut flags = vec![false; s.node_count()];
        for j in 0..=s.ny {
            if s.y(j) <= 0.0 {
                continue;
            }
            for i in 0..=s.nx {
                let k = s.index(i, j);
                flags[k] = self.inner.values[k] > threshold;
            }
        }
        Ok(IndicatorField { spec: s, flags })
    }

    /// Whether `p` lies in the reconstructed positive phase.
    pub fn positive_at(&self, p: Point) -> bool {
        crate::recon::positive_at(self, p)
    }

    /// `int_{B_r(x0)} |grad u|^2`.
    pub fn dirichlet_energy(&self, x0: Point, r: f64) -> Result<f64> {
        self.inner.spec.check_disk(x0, r)?;
        Ok(self.geometry().disk_energy(&self.inner.spec, x0, r))
    }

    /// Disk sums shared by the monotonicity and frequency functionals.
    pub fn disk_sums(&self, x0: Point, r: f64) -> Result<DiskSums> {
        self.inner.spec.check_disk(x0, r)?;
        let g = self.geometry();
        let s = &self.inner.spec;
        let energy = g.disk_energy(s, x0, r);
        let (chi_area, x2_chi, x2_plus) = g.disk_phase_moments(s, x0, r);
        Ok(DiskSums { energy, chi_area, x2_chi, x2_plus })
    }

    /// `int_{dB_r(x0)} u^2`.
    pub fn sphere_l2(&self, x0: Point, r: f64) -> Result<f64> {
        circle_integral(&self.inner.spec, |p| self.interp(p).powi(2), x0, r)
    }

    /// `int_{B_r(x0)} sqrt(x2) |grad chi|` over the reconstructed interface.
    pub fn weighted_perimeter(&self, x0: Point, r: f64) -> Result<f64> {
        if x0.y != 0.0 {
            return Err(Error::Contract("weighted perimeter is centred on the line x2 = 0".into()));
        }
        self.inner.spec.check_disk(x0, r)?;
        let mut total = 0.0;
        for seg in &self.geometry().segments {
            if let Some((t0, t1)) = clip_segment(seg.a, seg.b, x0, r) {
                let d = seg.b - seg.a;
                total += sqrt_y_line_integral(seg.a + d * t0, seg.a + d * t1);
            }
        }
        Ok(total)
    }

    /// Interface points where the reconstruction crosses grid edges.
    pub fn interface_points(&self) -> Vec<InterfacePoint> {
        self.geometry().crossings.clone()
    }
}

/// Point of the reconstructed free boundary on a grid edge, with the
/// positive endpoint of that edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfacePoint {
    pub at: Point,
    pub inside: Point,
}

/// Integrals over a disk computed by [`ScalarField::disk_sums`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskSums {
    /// `int |grad u|^2`
    pub energy: f64,
    /// `int chi`
    pub chi_area: f64,
    /// `int x2 chi`
    pub x2_chi: f64,
    /// `int x2^+`
    pub x2_plus: f64,
}

/// `values > threshold` per node, false on `x2 <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    pub spec: DomainSpec,
    pub flags: Vec<bool>,
}

impl IndicatorField {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.flags[self.spec.index(i, j)]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

/// Samples `evaluator` at every node; nodes with `x2 <= 0` are set to zero.
pub fn make_field(spec: DomainSpec, evaluator: impl Fn(Point) -> f64) -> Result<ScalarField> {
    let mut values = vec![0.0; spec.node_count()];
    for j in 0..=spec.ny {
        let y = spec.y(j);
        for i in 0..=spec.nx {
            let p = Point::new(spec.x(i), y);
            let v = evaluator(p);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidValue { i, j, value: v });
            }
            if y > 0.0 {
                values[spec.index(i, j)] = v;
            }
        }
    }
    Ok(ScalarField::from_trusted(spec, values, 0.0))
}

/// Cell-midpoint quadrature over `B_r(x0)` with exact coverage of cut cells.
pub fn disk_integral(spec: &DomainSpec, expr: impl Fn(Point) -> f64, x0: Point, r: f64) -> Result<f64> {
    spec.check_disk(x0, r)?;
    let h = spec.h;
    let (i0, i1) = spec.i_range(x0.x - r, x0.x + r);
    let (j0, j1) = spec.j_range(x0.y - r, x0.y + r);
    let mut total = 0.0;
    for j in j0..j1 {
        let yc = 0.5 * (spec.y(j) + spec.y(j + 1));
        for i in i0..i1 {
            let c = Point::new(0.5 * (spec.x(i) + spec.x(i + 1)), yc);
            let w = square_coverage(c, 0.5 * h, x0, r);
            if w > 0.0 {
                total += w * expr(c);
            }
        }
    }
    Ok(total * h * h)
}

/// Number of trapezoid nodes used on a circle of radius `r`.
pub fn circle_samples(r: f64, h: f64) -> usize {
    ((8.0 * PI * r / h).ceil() as usize).max(64)
}

/// Trapezoid rule in angle over `dB_r(x0)`.
pub fn circle_integral(spec: &DomainSpec, expr: impl Fn(Point) -> f64, x0: Point, r: f64) -> Result<f64> {
    spec.check_disk(x0, r)?;
    let m = circle_samples(r, spec.h);
    let mut total = 0.0;
    for k in 0..m {
        let t = 2.0 * PI * k as f64 / m as f64;
        total += expr(Point::new(x0.x + r * t.cos(), x0.y + r * t.sin()));
    }
    Ok(total * 2.0 * PI * r / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stokes(p: Point) -> f64 {
        let rho = p.norm();
        if p.y <= 0.0 || rho == 0.0 {
            return 0.0;
        }
        let th = p.y.atan2(p.x);
        (2f64.sqrt() / 3.0) * rho.powf(1.5) * (1.5 * (th - PI / 2.0)).cos().max(0.0)
    }

    #[test]
    fn spec_validation() {
        assert!(DomainSpec::new(-1.0, 1.0, 0.0, 1.0, 0.1).is_err());
        assert!(DomainSpec::new(-1.0, 1.0, -1.0, 1.0, 0.3).is_err());
        assert!(DomainSpec::new(-1.0, 1.0, -1.0, 1.0, -0.5).is_err());
        let s = DomainSpec::square(1.0, 0.25).unwrap();
        assert_eq!((s.nx(), s.ny()), (8, 8));
        assert_eq!(s.zero_row(), Some(4));
        assert_eq!(s.y(4), 0.0);
    }

    #[test]
    fn zero_field_nine_nodes() {
        let s = DomainSpec::square(1.0, 1.0).unwrap();
        let f = make_field(s, |_| 0.0).unwrap();
        assert_eq!(f.values().len(), 9);
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn stokes_node_value() {
        let s = DomainSpec::square(1.0, 0.25).unwrap();
        let f = make_field(s, stokes).unwrap();
        let v = f.value(4, 6);
        assert!((v - (2f64.sqrt() / 3.0) * 0.5f64.powf(1.5)).abs() < 1e-15);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn negative_rejected() {
        let s = DomainSpec::square(1.0, 0.5).unwrap();
        let e = make_field(s, |p| if p.x > 0.9 && p.y > 0.9 { -1.0 } else { 0.0 }).unwrap_err();
        assert_eq!(e, Error::InvalidValue { i: 4, j: 4, value: -1.0 });
        assert!(make_field(s, |_| f64::NAN).is_err());
    }

    #[test]
    fn affine_gradient() {
        let s = DomainSpec::square(1.0, 1.0 / 16.0).unwrap();
        let f = make_field(s, |p| p.y.max(0.0)).unwrap();
        let g = f.gradient(Point::new(0.0, 0.5)).unwrap();
        assert!((g[0]).abs() < 1e-15 && (g[1] - 1.0).abs() < 1e-14);
        assert!(f.gradient(Point::new(0.99, 0.0)).is_err());
        let z = make_field(s, |_| 0.0).unwrap();
        assert_eq!(z.gradient(Point::new(0.1, 0.2)).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn stokes_gradient_on_axis() {
        for n in [64usize, 128, 256] {
            let h = 2.0 / n as f64;
            let f = make_field(DomainSpec::square(1.0, h).unwrap(), stokes).unwrap();
            let g = f.gradient(Point::new(0.0, 0.5)).unwrap();
            let m2 = g[0] * g[0] + g[1] * g[1];
            assert!((m2 - 0.25).abs() < 2.0 * h, "h={h} |g|^2={m2}");
        }
    }

    #[test]
    fn disk_integrals() {
        let s = DomainSpec::square(1.0, 1.0 / 128.0).unwrap();
        let a = disk_integral(&s, |_| 1.0, Point::ORIGIN, 0.5).unwrap();
        assert!((a - PI * 0.25).abs() < 1e-12);
        let m = disk_integral(&s, |p| p.y.max(0.0), Point::ORIGIN, 1.0).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-4);
        let cone = disk_integral(
            &s,
            |p| {
                let th = p.y.atan2(p.x);
                if p.y > 0.0 && th > PI / 6.0 && th < 5.0 * PI / 6.0 {
                    p.y
                } else {
                    0.0
                }
            },
            Point::ORIGIN,
            1.0,
        )
        .unwrap();
        assert!((cone - 3f64.sqrt() / 3.0).abs() < 2e-3);
        assert!(disk_integral(&s, |_| 1.0, Point::new(0.6, 0.0), 0.5).is_err());
    }

    #[test]
    fn circle_integrals() {
        let s = DomainSpec::square(1.0, 1.0 / 128.0).unwrap();
        let c = circle_integral(&s, |_| 1.0, Point::ORIGIN, 0.5).unwrap();
        assert!((c - PI).abs() < 1e-12);
        let st = circle_integral(&s, |p| stokes(p).powi(2), Point::ORIGIN, 1.0).unwrap();
        assert!((st - 2.0 / 9.0 * PI / 3.0).abs() < 1e-6);
        let sn = circle_integral(
            &s,
            |p| {
                let (rho, th) = (p.norm(), p.y.atan2(p.x));
                (rho * rho * (2.0 * th).sin().abs()).powi(2)
            },
            Point::ORIGIN,
            1.0,
        )
        .unwrap();
        assert!((sn - PI).abs() < 1e-12);
    }

    #[test]
    fn positivity_flags() {
        let s = DomainSpec::square(1.0, 1.0 / 32.0).unwrap();
        let z = make_field(s, |_| 0.0).unwrap();
        assert_eq!(z.positivity(0.0).unwrap().count(), 0);
        let f = make_field(s, stokes).unwrap();
        let ind = f.positivity(0.0).unwrap();
        for j in 0..=s.ny() {
            for i in 0..=s.nx() {
                let p = s.node(i, j);
                let th = p.y.atan2(p.x);
                let cone = p.y > 0.0 && th > PI / 6.0 + 1e-12 && th < 5.0 * PI / 6.0 - 1e-12;
                assert_eq!(ind.get(i, j), cone, "node {i},{j}");
            }
        }
    }
}
