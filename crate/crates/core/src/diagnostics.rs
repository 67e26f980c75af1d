//! Weiss-type monotonicity functionals, the frequency function and its split,
//! scanned over radii about a centre.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geom::Point;

/// Circle integrals of `u^2` below this are treated as zero.
pub const SPHERE_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Interior,
    Boundary,
}

impl Case {
    pub fn of(center: Point) -> Case {
        if center.y == 0.0 {
            Case::Boundary
        } else {
            Case::Interior
        }
    }
}

/// Half the distance from `x0` to the box boundary; admissible radii are
/// strictly below it.
pub fn admissible_radius(f: &ScalarField, x0: Point) -> f64 {
    0.5 * f.spec().boundary_distance(x0)
}

fn check_radius(f: &ScalarField, x0: Point, r: f64) -> Result<()> {
    let delta = admissible_radius(f, x0);
    if !(r > 0.0 && r < delta) {
        return Err(Error::Geometry(format!(
            "radius {r} not in (0, {delta}) about ({}, {})",
            x0.x, x0.y
        )));
    }
    Ok(())
}

fn check_boundary(x0: Point) -> Result<()> {
    if x0.y != 0.0 {
        return Err(Error::Contract(format!("centre ({}, {}) is not on x2 = 0", x0.x, x0.y)));
    }
    Ok(())
}

/// `r^-2 int_{B_r}(|grad u|^2 + x2 chi) - r^-3 int_{dB_r} u^2`.
pub fn phi_interior(f: &ScalarField, x0: Point, r: f64) -> Result<f64> {
    if x0.y < 0.0 {
        return Err(Error::Contract("interior centre must have x2 >= 0".into()));
    }
    check_radius(f, x0, r)?;
    let d = f.disk_sums(x0, r)?;
    let s = f.sphere_l2(x0, r)?;
    Ok((d.energy + d.x2_chi) / (r * r) - s / (r * r * r))
}

/// `r^-3 int_{B_r}(|grad u|^2 + x2 chi) - (3/2) r^-4 int_{dB_r} u^2`.
pub fn phi_boundary(f: &ScalarField, x0: Point, r: f64) -> Result<f64> {
    check_boundary(x0)?;
    check_radius(f, x0, r)?;
    let d = f.disk_sums(x0, r)?;
    let s = f.sphere_l2(x0, r)?;
    Ok((d.energy + d.x2_chi) / r.powi(3) - 1.5 * s / r.powi(4))
}

/// `r int_{B_r}(|grad u|^2 + x2^+ (chi - 1)) / int_{dB_r} u^2`, undefined
/// when the denominator vanishes.
///
/// Evaluated as `D - V`: the combined numerator cancels badly when the
/// energy is small against the volume terms.
pub fn frequency(f: &ScalarField, x0: Point, r: f64) -> Result<Option<f64>> {
    Ok(d_and_v(f, x0, r)?.map(|(d, v)| d - v))
}

/// `D = r int |grad u|^2 / int u^2` and `V = r int x2^+ (1 - chi) / int u^2`.
pub fn d_and_v(f: &ScalarField, x0: Point, r: f64) -> Result<Option<(f64, f64)>> {
    check_radius(f, x0, r)?;
    let d = f.disk_sums(x0, r)?;
    let s = f.sphere_l2(x0, r)?;
    Ok((s >= SPHERE_FLOOR).then(|| (r * d.energy / s, r * (d.x2_plus - d.x2_chi).max(0.0) / s)))
}

/// `r^-4 int_{dB_r} u^2` per radius.
pub fn sphere_l2_scan(f: &ScalarField, x0: Point, radii: &[f64]) -> Result<Vec<f64>> {
    check_boundary(x0)?;
    radii
        .iter()
        .map(|&r| {
            check_radius(f, x0, r)?;
            Ok(f.sphere_l2(x0, r)? / r.powi(4))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub r: f64,
    pub phi: f64,
    pub f: Option<f64>,
    pub d: Option<f64>,
    pub v: Option<f64>,
    pub sphere_l2: f64,
    pub perim: Option<f64>,
    /// `r^-3 int_{B_r} (x2 - x2^0) chi`, interior case only
    pub drift: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialScan {
    pub center: Point,
    pub case: Case,
    pub records: Vec<ScanRecord>,
}

fn record(f: &ScalarField, x0: Point, case: Case, r: f64) -> Result<ScanRecord> {
    check_radius(f, x0, r)?;
    let d = f.disk_sums(x0, r)?;
    let s = f.sphere_l2(x0, r)?;
    let bulk = d.energy + d.x2_chi;
    let defined = s >= SPHERE_FLOOR;
    // F is assembled as D - V so that the identity holds bit for bit
    let dd = defined.then(|| r * d.energy / s);
    let vv = defined.then(|| r * (d.x2_plus - d.x2_chi).max(0.0) / s);
    let ff = dd.zip(vv).map(|(a, b)| a - b);
    let (phi, perim, drift) = match case {
        Case::Boundary => (bulk / r.powi(3) - 1.5 * s / r.powi(4), Some(f.weighted_perimeter(x0, r)? / r.powf(1.5)), None),
        Case::Interior => (
            bulk / (r * r) - s / r.powi(3),
            None,
            Some((d.x2_chi - x0.y * d.chi_area) / r.powi(3)),
        ),
    };
    Ok(ScanRecord { r, phi, f: ff, d: dd, v: vv, sphere_l2: s / r.powi(4), perim, drift })
}

/// One record per radius; the case follows from `x0.y`.
pub fn scan(f: &ScalarField, x0: Point, radii: &[f64]) -> Result<RadialScan> {
    scan_as(f, x0, radii, Case::of(x0))
}

/// As [`scan`] with the functional chosen explicitly. The interior functional
/// is also defined on the line.
pub fn scan_as(f: &ScalarField, x0: Point, radii: &[f64], case: Case) -> Result<RadialScan> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("radii must be non-empty and strictly increasing".into()));
    }
    if x0.y < 0.0 {
        return Err(Error::Contract("centre must have x2 >= 0".into()));
    }
    if case == Case::Boundary {
        check_boundary(x0)?;
    }
    // build the cached geometry once before fanning out
    let _ = f.dirichlet_energy(x0, radii[0]);
    let records = radii.par_iter().map(|&r| record(f, x0, case, r)).collect::<Result<Vec<_>>>()?;
    Ok(RadialScan { center: x0, case, records })
}

/// `count` radii spaced geometrically from `rmin` to `rmax`.
pub fn geometric_radii(rmin: f64, rmax: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![rmin];
    }
    let q = (rmax / rmin).powf(1.0 / (count - 1) as f64);
    (0..count)
        .map(|k| if k + 1 == count { rmax } else { rmin * q.powi(k as i32) })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Quantity {
    Phi,
    F,
    SphereL2,
}

impl RadialScan {
    pub fn radii(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r).collect()
    }

    pub fn series(&self, which: Quantity) -> Vec<Option<f64>> {
        self.records
            .iter()
            .map(|r| match which {
                Quantity::Phi => Some(r.phi),
                Quantity::F => r.f,
                Quantity::SphereL2 => Some(r.sphere_l2),
            })
            .collect()
    }

    /// `r,case,phi,F,D,V,sphereL2,perim` with `NA` for undefined entries.
    pub fn to_csv(&self) -> String {
        let case = match self.case {
            Case::Interior => "interior",
            Case::Boundary => "boundary",
        };
        let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.16e}"));
        let mut out = String::from("r,case,phi,F,D,V,sphereL2,perim\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:.16e},{case},{:.16e},{},{},{},{:.16e},{}",
                r.r,
                r.phi,
                na(r.f),
                na(r.d),
                na(r.v),
                r.sphere_l2,
                na(r.perim)
            );
        }
        out
    }
}

/// Adjacent radii where a quantity drops by more than the allowance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub r0: f64,
    pub r1: f64,
    pub defect: f64,
}

/// Decreases larger than `tol` between neighbouring radii. For the interior
/// `phi` the allowance also includes the drift bound `r1 - r0`.
pub fn monotonicity_check(s: &RadialScan, which: Quantity, tol: f64) -> Result<Vec<Violation>> {
    if s.records.len() < 2 {
        return Err(Error::Contract("monotonicity needs at least two radii".into()));
    }
    let vals = s.series(which);
    let mut out = Vec::new();
    for k in 0..vals.len() - 1 {
        let (r0, r1) = (s.records[k].r, s.records[k + 1].r);
        if let (Some(a), Some(b)) = (vals[k], vals[k + 1]) {
            let allowance = tol
                + if which == Quantity::Phi && s.case == Case::Interior { r1 - r0 } else { 0.0 };
            if a - b > allowance {
                out.push(Violation { r0, r1, defect: a - b });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Extrapolated {
    Limit {
        value: f64,
        /// spread of the three smallest-radius values
        uncertainty: f64,
        /// fitted `p` in `a + b r^p`, when a rate was resolved
        exponent: Option<f64>,
    },
    Declined {
        reason: String,
    },
}

impl Extrapolated {
    pub fn value(&self) -> Option<f64> {
        match self {
            Extrapolated::Limit { value, .. } => Some(*value),
            Extrapolated::Declined { .. } => None,
        }
    }

    pub fn uncertainty(&self) -> Option<f64> {
        match self {
            Extrapolated::Limit { uncertainty, .. } => Some(*uncertainty),
            Extrapolated::Declined { .. } => None,
        }
    }
}

/// Limit at `r -> 0` of `phi` or `F` from the three smallest radii, fitting
/// `a + b r^p`. Tails that change direction by more than `tol` are declined.
pub fn extrapolate_limit(s: &RadialScan, which: Quantity, tol: f64) -> Result<Extrapolated> {
    let radii = s.radii();
    if radii.len() < 3 || radii[radii.len() - 1] < 4.0 * radii[0] * (1.0 - 1e-12) {
        return Err(Error::Contract("extrapolation needs >= 3 radii spanning a factor >= 4".into()));
    }
    let vals = s.series(which);
    let tail: Vec<(f64, f64)> = radii.iter().zip(&vals).take(3).filter_map(|(r, v)| v.map(|v| (*r, v))).collect();
    if tail.len() < 3 {
        return Ok(Extrapolated::Declined { reason: "undefined values in the tail".into() });
    }
    Ok(fit_tail(&tail, tol))
}

pub(crate) fn fit_tail(tail: &[(f64, f64)], tol: f64) -> Extrapolated {
    let [(r1, f1), (r2, f2), (r3, f3)] = [tail[0], tail[1], tail[2]];
    if !(f1.is_finite() && f2.is_finite() && f3.is_finite()) {
        return Extrapolated::Declined { reason: "non-finite tail".into() };
    }
    let spread = f1.max(f2).max(f3) - f1.min(f2).min(f3);
    let (d1, d2) = (f2 - f1, f3 - f2);
    let flat = Extrapolated::Limit { value: f1, uncertainty: spread, exponent: None };
    if d1 * d2 <= 0.0 {
        return if spread <= tol {
            flat
        } else {
            Extrapolated::Declined { reason: format!("non-monotone tail (spread {spread:.3e})") }
        };
    }
    let q = d2 / d1;
    let g = |p: f64| (r3.powf(p) - r2.powf(p)) / (r2.powf(p) - r1.powf(p)) - q;
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return flat;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    if p <= 0.05 {
        return flat;
    }
    let b = d1 / (r2.powf(p) - r1.powf(p));
    let a = f1 - b * r1.powf(p);
    if !a.is_finite() || (a - f1).abs() > 10.0 * spread + 1e-14 * f1.abs() {
        return flat;
    }
    Extrapolated::Limit { value: a, uncertainty: spread, exponent: Some(p) }
}

/// `int (grad u . (x-x0))^2 * int u^2 - (int u grad u . (x-x0))^2` over
/// `dB_r(x0)`; nonnegative by Cauchy-Schwarz.
pub fn cauchy_schwarz_gap(f: &ScalarField, x0: Point, r: f64) -> Result<f64> {
    check_radius(f, x0, r)?;
    let s = f.spec();
    let m = crate::field::circle_samples(r, s.h);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for k in 0..m {
        let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let p = Point::new(x0.x + r * t.cos(), x0.y + r * t.sin());
        let u = f.interp(p);
        let [gx, gy] = f.grad(p);
        let radial = gx * (p.x - x0.x) + gy * (p.y - x0.y);
        a += radial * radial;
        b += u * u;
        c += u * radial;
    }
    let w = 2.0 * std::f64::consts::PI * r / m as f64;
    Ok(a * w * b * w - (c * w).powi(2))
}

/// `sup r^-3/2 int_{B_r(y)} sqrt(x2) |grad chi|` over line centres and radii.
pub fn perimeter_constant(f: &ScalarField, centers: &[Point], radii: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &c in centers {
        for &r in radii {
            worst = worst.max(f.weighted_perimeter(c, r)? / r.powf(1.5));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_of(vals: &[(f64, f64)]) -> RadialScan {
        RadialScan {
            center: Point::ORIGIN,
            case: Case::Boundary,
            records: vals
                .iter()
                .map(|&(r, phi)| ScanRecord { r, phi, f: Some(phi), d: None, v: None, sphere_l2: 0.0, perim: None, drift: None })
                .collect(),
        }
    }

    #[test]
    fn power_law_tail_is_removed() {
        let vals: Vec<(f64, f64)> = [0.1, 0.2, 0.4, 0.8].iter().map(|&r: &f64| (r, 0.5 + 0.3 * r.powf(1.7))).collect();
        let e = extrapolate_limit(&scan_of(&vals), Quantity::Phi, 1e-3).unwrap();
        assert!((e.value().unwrap() - 0.5).abs() < 1e-10);
        let vals: Vec<(f64, f64)> = [0.1, 0.15, 0.3, 0.45].iter().map(|&r| (r, 2.0 - r * r)).collect();
        let e = extrapolate_limit(&scan_of(&vals), Quantity::F, 1e-3).unwrap();
        assert!((e.value().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_tail_is_declined() {
        let vals = [(0.1, 1.0), (0.2, 1.3), (0.3, 0.9), (0.4, 1.2)];
        let e = extrapolate_limit(&scan_of(&vals), Quantity::Phi, 1e-3).unwrap();
        assert!(matches!(e, Extrapolated::Declined { .. }));
        assert!(extrapolate_limit(&scan_of(&vals[..2]), Quantity::Phi, 1e-3).is_err());
    }

    #[test]
    fn monotonicity_pairs() {
        let s = scan_of(&[(0.1, 1.0), (0.2, 0.99), (0.3, 1.1), (0.4, 1.0995)]);
        let v = monotonicity_check(&s, Quantity::Phi, 1e-3).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].r0, v[0].r1), (0.1, 0.2));
        assert!(monotonicity_check(&scan_of(&[(0.1, 1.0)]), Quantity::Phi, 1e-3).is_err());
    }

    #[test]
    fn radii_ladder() {
        let r = geometric_radii(0.05, 0.4, 4);
        assert_eq!(r.len(), 4);
        assert!((r[1] - 0.1).abs() < 1e-15 && r[3] == 0.4);
    }
}
