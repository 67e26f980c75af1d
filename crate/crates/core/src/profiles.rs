//! Closed-form homogeneous solutions used as oracles.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{make_field, DomainSpec, ScalarField};
use crate::geom::{square_coverage, Point};

/// `sqrt(int_0^pi sin^2(N theta) d theta)`, the same for every N >= 1.
///
/// The sine profile vanishes on `x2 <= 0`, so only the upper half circle
/// carries mass; dividing by this constant gives unit `L^2` norm on the
/// unit circle.
pub const SINE_NORM: f64 = 1.253_314_137_315_500_3; // sqrt(pi / 2)

const STOKES_C: f64 = SQRT_2 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProfileKind {
    StokesCorner,
    DegenerateSine { n: u32, normalized: bool },
    InteriorHalfPlane { e: Point, x2base: f64 },
    InteriorTwoPhase { e: Point, gamma: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub vertex: Point,
}

fn on_line(vertex: Point) -> Result<()> {
    if vertex.y != 0.0 {
        return Err(Error::Contract(format!("vertex ({}, {}) must lie on x2 = 0", vertex.x, vertex.y)));
    }
    Ok(())
}

fn unit(e: Point) -> Result<Point> {
    if !((e.norm() - 1.0).abs() <= 1e-9) {
        return Err(Error::Contract(format!("direction ({}, {}) is not a unit vector", e.x, e.y)));
    }
    Ok(e)
}

impl Profile {
    pub fn stokes(vertex: Point) -> Result<Self> {
        on_line(vertex)?;
        Ok(Profile { kind: ProfileKind::StokesCorner, vertex })
    }

    /// `rho^N |sin N theta|` about `vertex`.
    pub fn sine(n: u32, vertex: Point) -> Result<Self> {
        Self::sine_with(n, false, vertex)
    }

    /// `rho^N |sin N theta| / SINE_NORM`, unit `L^2` mass on the unit circle.
    pub fn sine_normalized(n: u32, vertex: Point) -> Result<Self> {
        Self::sine_with(n, true, vertex)
    }

    fn sine_with(n: u32, normalized: bool, vertex: Point) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract(format!("degenerate profile needs N >= 2, got {n}")));
        }
        on_line(vertex)?;
        Ok(Profile { kind: ProfileKind::DegenerateSine { n, normalized }, vertex })
    }

    pub fn half_plane(e: Point, x2base: f64, vertex: Point) -> Result<Self> {
        if !(x2base > 0.0) {
            return Err(Error::Contract(format!("x2base {x2base} must be positive")));
        }
        Ok(Profile { kind: ProfileKind::InteriorHalfPlane { e: unit(e)?, x2base }, vertex })
    }

    pub fn two_phase(e: Point, gamma: f64, vertex: Point) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::Contract(format!("gamma {gamma} must be >= 0")));
        }
        Ok(Profile { kind: ProfileKind::InteriorTwoPhase { e: unit(e)?, gamma }, vertex })
    }

    pub fn zero() -> Self {
        Profile { kind: ProfileKind::Zero, vertex: Point::ORIGIN }
    }

    /// Homogeneity degree about the vertex.
    pub fn degree(&self) -> f64 {
        match self.kind {
            ProfileKind::StokesCorner => 1.5,
            ProfileKind::DegenerateSine { n, .. } => n as f64,
            _ => 1.0,
        }
    }

    fn polar(&self, x: Point) -> (f64, f64) {
        let d = x - self.vertex;
        let th = d.y.atan2(d.x);
        (d.norm(), if th < 0.0 { th + 2.0 * PI } else { th })
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self.kind {
            ProfileKind::StokesCorner => {
                if x.y <= 0.0 {
                    return 0.0;
                }
                let (rho, th) = self.polar(x);
                STOKES_C * rho.powf(1.5) * (1.5 * (th - FRAC_PI_2)).cos().max(0.0)
            }
            ProfileKind::DegenerateSine { n, normalized } => {
                if x.y <= 0.0 {
                    return 0.0;
                }
                let (rho, th) = self.polar(x);
                let v = rho.powi(n as i32) * (n as f64 * th).sin().abs();
                if normalized {
                    v / SINE_NORM
                } else {
                    v
                }
            }
            ProfileKind::InteriorHalfPlane { e, x2base } => x2base.sqrt() * (x - self.vertex).dot(e).max(0.0),
            ProfileKind::InteriorTwoPhase { e, gamma } => gamma * (x - self.vertex).dot(e).abs(),
            ProfileKind::Zero => 0.0,
        }
    }

    /// Analytic gradient; the vertex and the non-smooth rays are rejected.
    pub fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        let singular = Err(Error::SingularPoint { x: x.x, y: x.y });
        let tol = 1e-12;
        match self.kind {
            ProfileKind::StokesCorner | ProfileKind::DegenerateSine { .. } => {
                let (rho, th) = self.polar(x);
                if rho <= tol || x.y.abs() <= tol * rho.max(1.0) {
                    return singular;
                }
                if let ProfileKind::StokesCorner = self.kind {
                    let phi = th - FRAC_PI_2;
                    if x.y > 0.0 && ((phi.abs() - PI / 3.0).abs() <= tol) {
                        return singular;
                    }
                } else if let ProfileKind::DegenerateSine { n, .. } = self.kind {
                    if x.y > 0.0 && (n as f64 * th).sin().abs() <= tol {
                        return singular;
                    }
                }
                Ok(self.grad_smooth(x))
            }
            ProfileKind::InteriorHalfPlane { e, .. } | ProfileKind::InteriorTwoPhase { e, .. } => {
                if (x - self.vertex).dot(e).abs() <= tol {
                    return singular;
                }
                Ok(self.grad_smooth(x))
            }
            ProfileKind::Zero => Ok([0.0, 0.0]),
        }
    }

    /// Gradient of whichever smooth branch is active at `x` (one-sided on
    /// rays, zero at the vertex); for quadrature, where rays have measure zero.
    pub(crate) fn grad_smooth(&self, x: Point) -> [f64; 2] {
        match self.kind {
            ProfileKind::StokesCorner => {
                let (rho, th) = self.polar(x);
                let phi = th - FRAC_PI_2;
                if x.y <= 0.0 || rho == 0.0 || phi.abs() >= PI / 3.0 {
                    return [0.0, 0.0];
                }
                let g = 1.5 * STOKES_C * rho.sqrt();
                polar_to_xy(th, g * (1.5 * phi).cos(), -g * (1.5 * phi).sin())
            }
            ProfileKind::DegenerateSine { n, normalized } => {
                let (rho, th) = self.polar(x);
                if x.y <= 0.0 || rho == 0.0 {
                    return [0.0, 0.0];
                }
                let nf = n as f64;
                let s = (nf * th).sin();
                let sg = if s < 0.0 { -1.0 } else { 1.0 };
                let g = nf * rho.powi(n as i32 - 1) / if normalized { SINE_NORM } else { 1.0 };
                polar_to_xy(th, g * s.abs(), g * sg * (nf * th).cos())
            }
            ProfileKind::InteriorHalfPlane { e, x2base } => {
                if (x - self.vertex).dot(e) > 0.0 {
                    let s = x2base.sqrt();
                    [s * e.x, s * e.y]
                } else {
                    [0.0, 0.0]
                }
            }
            ProfileKind::InteriorTwoPhase { e, gamma } => {
                let sg = if (x - self.vertex).dot(e) >= 0.0 { gamma } else { -gamma };
                [sg * e.x, sg * e.y]
            }
            ProfileKind::Zero => [0.0, 0.0],
        }
    }

    /// Largest `| |grad u|^2 - x2 |` over `samples` points of the free
    /// boundary, with the gradient taken as the limit from the fluid side.
    pub fn fb_residual(&self, samples: usize) -> Result<f64> {
        let samples = samples.max(1);
        match self.kind {
            ProfileKind::StokesCorner => {
                let mut worst: f64 = 0.0;
                for k in 1..=samples {
                    let rho = k as f64 / samples as f64;
                    for th in [PI / 6.0, 5.0 * PI / 6.0] {
                        let phi = th - FRAC_PI_2;
                        let g = 1.5 * STOKES_C * rho.sqrt();
                        let [gx, gy] = polar_to_xy(th, g * (1.5 * phi).cos(), -g * (1.5 * phi).sin());
                        let x2 = rho * th.sin();
                        worst = worst.max((gx * gx + gy * gy - x2).abs());
                    }
                }
                Ok(worst)
            }
            ProfileKind::InteriorHalfPlane { e, x2base } => {
                // on the line x.e = 0 the fluid-side gradient is sqrt(x2base) e
                let s = x2base.sqrt();
                let g2 = (s * e.x).powi(2) + (s * e.y).powi(2);
                let mut worst: f64 = 0.0;
                for _ in 0..samples {
                    worst = worst.max((g2 - x2base).abs());
                }
                Ok(worst)
            }
            _ => Err(Error::Contract(format!("{self} has no Bernoulli free boundary"))),
        }
    }

    /// Node samples on `spec`.
    pub fn sample(&self, spec: DomainSpec) -> Result<ScalarField> {
        make_field(spec, |p| self.eval(p))
    }
}

fn polar_to_xy(th: f64, radial: f64, angular: f64) -> [f64; 2] {
    let (s, c) = th.sin_cos();
    [radial * c - angular * s, radial * s + angular * c]
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.vertex;
        match self.kind {
            ProfileKind::StokesCorner => write!(f, "stokes@{},{}", v.x, v.y),
            ProfileKind::DegenerateSine { n, normalized: false } => write!(f, "sine:N={n}@{},{}", v.x, v.y),
            ProfileKind::DegenerateSine { n, normalized: true } => write!(f, "sine:N={n};norm@{},{}", v.x, v.y),
            ProfileKind::InteriorHalfPlane { e, x2base } => {
                write!(f, "halfplane:e={},{};x2={x2base}@{},{}", e.x, e.y, v.x, v.y)
            }
            ProfileKind::InteriorTwoPhase { e, gamma } => {
                write!(f, "twophase:e={},{};gamma={gamma}@{},{}", e.x, e.y, v.x, v.y)
            }
            ProfileKind::Zero => write!(f, "zero"),
        }
    }
}

fn parse_pair(s: &str) -> Result<Point> {
    let mut it = s.split(',');
    let bad = || Error::Contract(format!("expected 'x,y', got '{s}'"));
    let x = it.next().ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?;
    let y = it.next().ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?;
    if it.next().is_some() || !x.is_finite() || !y.is_finite() {
        return Err(bad());
    }
    Ok(Point::new(x, y))
}

impl FromStr for Profile {
    type Err = Error;

    /// `kind[:k=v;k=v;flag][@x,y]`, e.g. `stokes@0,0`, `sine:N=3@0,0`,
    /// `halfplane:e=0,1;x2=0.8@0,0.8`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, vertex) = match s.split_once('@') {
            Some((h, v)) => (h, parse_pair(v)?),
            None => (s, Point::ORIGIN),
        };
        let (kind, params) = head.split_once(':').unwrap_or((head, ""));
        let mut n = None;
        let mut e = None;
        let mut x2 = None;
        let mut gamma = None;
        let mut norm = false;
        for item in params.split(';').filter(|p| !p.is_empty()) {
            let bad = || Error::Contract(format!("bad profile parameter '{item}'"));
            match item.split_once('=') {
                Some(("N", v)) => n = Some(v.parse::<u32>().map_err(|_| bad())?),
                Some(("e", v)) => e = Some(parse_pair(v)?),
                Some(("x2", v)) => x2 = Some(v.parse::<f64>().map_err(|_| bad())?),
                Some(("gamma", v)) => gamma = Some(v.parse::<f64>().map_err(|_| bad())?),
                None if item == "norm" => norm = true,
                _ => return Err(bad()),
            }
        }
        let missing = |what: &str| Error::Contract(format!("profile '{s}' needs {what}"));
        match kind {
            "stokes" => Profile::stokes(vertex),
            "sine" => Profile::sine_with(n.ok_or_else(|| missing("N"))?, norm, vertex),
            "halfplane" => Profile::half_plane(
                e.ok_or_else(|| missing("e"))?,
                x2.unwrap_or(if vertex.y > 0.0 { vertex.y } else { f64::NAN }),
                vertex,
            ),
            "twophase" => Profile::two_phase(e.ok_or_else(|| missing("e"))?, gamma.ok_or_else(|| missing("gamma"))?, vertex),
            "zero" => Ok(Profile { kind: ProfileKind::Zero, vertex }),
            other => Err(Error::Contract(format!("unknown profile kind '{other}'"))),
        }
    }
}

/// `int_{rin<|x-x0|<rout} |x-x0|^{-1} (grad f . (x-x0) - degree f)^2`.
pub fn homogeneity_defect(f: &ScalarField, x0: Point, degree: f64, rin: f64, rout: f64) -> Result<f64> {
    if !(0.0 < rin && rin < rout) {
        return Err(Error::Contract(format!("need 0 < rin < rout, got ({rin}, {rout})")));
    }
    let s = f.spec();
    s.check_disk(x0, rout + 2.0 * s.h)?;
    let h = s.h;
    let (i0, i1) = s.i_range(x0.x - rout, x0.x + rout);
    let (j0, j1) = s.j_range(x0.y - rout, x0.y + rout);
    let mut total = 0.0;
    for j in j0..j1 {
        let yc = 0.5 * (s.y(j) + s.y(j + 1));
        for i in i0..i1 {
            let c = Point::new(0.5 * (s.x(i) + s.x(i + 1)), yc);
            let w = square_coverage(c, 0.5 * h, x0, rout) - square_coverage(c, 0.5 * h, x0, rin);
            if w <= 0.0 {
                continue;
            }
            let d = c - x0;
            let [gx, gy] = f.grad(c);
            let q = gx * d.x + gy * d.y - degree * f.interp(c);
            total += w * q * q / d.norm();
        }
    }
    Ok(total * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stokes_values() {
        let p = Profile::stokes(Point::ORIGIN).unwrap();
        assert_eq!(p.eval(Point::ORIGIN), 0.0);
        assert!((p.eval(Point::new(0.0, 0.5)) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.eval(Point::new(0.5, 0.1)), 0.0);
        assert!(Profile::stokes(Point::new(0.0, 0.1)).is_err());
    }

    #[test]
    fn sine_value_and_norm() {
        let p = Profile::sine(2, Point::ORIGIN).unwrap();
        assert!((p.eval(Point::new(0.3, 0.3)) - 0.18).abs() < 1e-15);
        let q = Profile::sine_normalized(2, Point::ORIGIN).unwrap();
        assert!((q.eval(Point::new(0.3, 0.3)) - 0.18 / (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!((SINE_NORM - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!(Profile::sine(1, Point::ORIGIN).is_err());
    }

    #[test]
    fn gradients() {
        let p = Profile::stokes(Point::ORIGIN).unwrap();
        let g = p.gradient(Point::new(0.0, 0.5)).unwrap();
        assert!((g[0] * g[0] + g[1] * g[1] - 0.25).abs() < 1e-15);
        assert!(p.gradient(Point::ORIGIN).is_err());
        let ray = Point::new((PI / 6.0).cos(), (PI / 6.0).sin()) * 0.5;
        assert!(p.gradient(ray).is_err());
        let hp = Profile::half_plane(Point::new(0.0, 1.0), 0.8, Point::new(0.0, 0.8)).unwrap();
        let g = hp.gradient(Point::new(0.0, 1.1)).unwrap();
        assert!(g[0].abs() < 1e-15 && (g[1] - 0.8f64.sqrt()).abs() < 1e-15);
        assert_eq!(Profile::zero().gradient(Point::new(0.2, 0.3)).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_differences() {
        let profiles = [
            Profile::stokes(Point::new(0.1, 0.0)).unwrap(),
            Profile::sine(3, Point::ORIGIN).unwrap(),
            Profile::sine_normalized(4, Point::ORIGIN).unwrap(),
        ];
        let x = Point::new(0.05, 0.4);
        let d = 1e-6;
        for p in profiles {
            let g = p.gradient(x).unwrap();
            let fx = (p.eval(x + Point::new(d, 0.0)) - p.eval(x - Point::new(d, 0.0))) / (2.0 * d);
            let fy = (p.eval(x + Point::new(0.0, d)) - p.eval(x - Point::new(0.0, d))) / (2.0 * d);
            assert!((g[0] - fx).abs() < 1e-7 && (g[1] - fy).abs() < 1e-7, "{p}");
        }
    }

    #[test]
    fn bernoulli_residuals() {
        let p = Profile::stokes(Point::ORIGIN).unwrap();
        assert!(p.fb_residual(1000).unwrap() < 1e-15);
        let hp = Profile::half_plane(Point::new(0.0, 1.0), 0.8, Point::new(0.0, 0.8)).unwrap();
        assert!(hp.fb_residual(10).unwrap() < 1e-15);
        assert!(Profile::sine(3, Point::ORIGIN).unwrap().fb_residual(10).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["stokes@0,0", "sine:N=3@0,0", "sine:N=2;norm@0.5,0", "halfplane:e=0,1;x2=0.8@0,0.8", "twophase:e=1,0;gamma=0.5@0,0.3"] {
            let p: Profile = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("sine:N=1@0,0".parse::<Profile>().is_err());
        assert!("stokes@0,1".parse::<Profile>().is_err());
        assert!("blob@0,0".parse::<Profile>().is_err());
        assert_eq!("zero".parse::<Profile>().unwrap().kind, ProfileKind::Zero);
    }

    #[test]
    fn homogeneity() {
        let s = DomainSpec::square(1.0, 1.0 / 128.0).unwrap();
        let st = Profile::stokes(Point::ORIGIN).unwrap().sample(s).unwrap();
        let d32 = homogeneity_defect(&st, Point::ORIGIN, 1.5, 0.1, 0.8).unwrap();
        let d2 = homogeneity_defect(&st, Point::ORIGIN, 2.0, 0.1, 0.8).unwrap();
        assert!(d32 < 2e-3, "{d32}");
        let exact = 0.25 * (2.0 * PI / 27.0) * (0.8f64.powi(4) - 0.1f64.powi(4)) / 4.0;
        assert!((d2 - exact).abs() < 1e-5, "{d2}");
        let lin = make_field(s, |p| p.y.max(0.0)).unwrap();
        assert!(homogeneity_defect(&lin, Point::ORIGIN, 1.0, 0.1, 0.8).unwrap() < 1e-3);
    }
}
