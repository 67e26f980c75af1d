//! Points and exact disk/rectangle geometry used by the quadratures.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

// antiderivative of sqrt(r^2 - x^2)
fn chord_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// Exact area of `[x0,x1] x [y0,y1]` intersected with the disk of radius `r`
/// centred at the origin.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let lo = x0.max(-r);
    let hi = x1.min(r);
    if lo >= hi || y0 >= y1 {
        return 0.0;
    }
    let mut cuts = [0.0f64; 6];
    let mut n = 0;
    cuts[n] = lo;
    n += 1;
    cuts[n] = hi;
    n += 1;
    for y in [y0, y1] {
        if y.abs() < r {
            let q = (r * r - y * y).sqrt();
            for t in [-q, q] {
                if t > lo && t < hi {
                    cuts[n] = t;
                    n += 1;
                }
            }
        }
    }
    let cuts = &mut cuts[..n];
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let m = 0.5 * (p + q);
        let s = (r * r - m * m).max(0.0).sqrt();
        // on this piece the vertical extent is min(y1, s) - max(y0, -s)
        let (top_s, top_c) = if y1 >= s { (1.0, 0.0) } else { (0.0, y1) };
        let (bot_s, bot_c) = if y0 <= -s { (-1.0, 0.0) } else { (0.0, y0) };
        let cs = top_s - bot_s;
        let cc = top_c - bot_c;
        if cs * s + cc <= 0.0 {
            continue;
        }
        total += cs * (chord_primitive(q, r) - chord_primitive(p, r)) + cc * (q - p);
    }
    total
}

/// Fraction of the axis-aligned square of half-width `half` centred at `c`
/// lying inside the disk `B_r(center)`.
pub fn square_coverage(c: Point, half: f64, center: Point, r: f64) -> f64 {
    let dx = (c.x - center.x).abs();
    let dy = (c.y - center.y).abs();
    let far = (dx + half).hypot(dy + half);
    if far <= r {
        return 1.0;
    }
    let near = (dx - half).max(0.0).hypot((dy - half).max(0.0));
    if near >= r {
        return 0.0;
    }
    let a = rect_disk_area(dx - half, dx + half, dy - half, dy + half, r);
    (a / (4.0 * half * half)).clamp(0.0, 1.0)
}

/// Centroid of the part of the square (half-width `half`, centre `c`) on the
/// inner side of the tangent line to `B_r(center)` facing `c`.
pub fn cut_square_centroid(c: Point, half: f64, center: Point, r: f64) -> Point {
    let d = c - center;
    let len = d.norm();
    if len == 0.0 {
        return c;
    }
    let n = d * (1.0 / len);
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].map(|(a, b)| c + Point::new(a * half, b * half));
    let level = |p: Point| (p - center).dot(n) - r;
    let mut poly = [Point::ORIGIN; 8];
    let mut m = 0;
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let (la, lb) = (level(a), level(b));
        if la <= 0.0 {
            poly[m] = a;
            m += 1;
        }
        if (la < 0.0) != (lb < 0.0) && la != lb {
            poly[m] = a + (b - a) * (la / (la - lb));
            m += 1;
        }
    }
    let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
    for k in 0..m {
        let (u, v) = (poly[k] - c, poly[(k + 1) % m] - c);
        let cr = u.x * v.y - v.x * u.y;
        area += cr;
        mx += cr * (u.x + v.x);
        my += cr * (u.y + v.y);
    }
    if area.abs() < 1e-14 * half * half {
        return c;
    }
    c + Point::new(mx / (3.0 * area), my / (3.0 * area))
}

/// Portion of segment `a`-`b` inside the closed disk, as parameters `[t0, t1]`.
pub fn clip_segment(a: Point, b: Point, center: Point, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let f = a - center;
    let qa = d.dot(d);
    let qb = 2.0 * f.dot(d);
    let qc = f.dot(f) - r * r;
    if qa == 0.0 {
        return if qc <= 0.0 { Some((0.0, 1.0)) } else { None };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    if t1 > t0 {
        Some((t0, t1))
    } else {
        None
    }
}

/// `int sqrt(y) ds` along the straight segment `a`-`b`, with `y` clamped at 0.
pub fn sqrt_y_line_integral(a: Point, b: Point) -> f64 {
    let len = a.dist(b);
    if len == 0.0 {
        return 0.0;
    }
    let ya = a.y.max(0.0);
    let yb = b.y.max(0.0);
    let dy = yb - ya;
    if dy.abs() <= 1e-14 * (ya + yb + 1e-300) {
        return len * (0.5 * (ya + yb)).sqrt();
    }
    len * (2.0 / 3.0) * (yb.powf(1.5) - ya.powf(1.5)) / dy
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rect_area_limits() {
        assert!((rect_disk_area(-1.0, 1.0, -1.0, 1.0, 0.5) - PI * 0.25).abs() < 1e-14);
        assert!((rect_disk_area(0.0, 1.0, 0.0, 1.0, 0.5) - PI / 16.0).abs() < 1e-14);
        let inside = rect_disk_area(0.1, 0.11, 0.1, 0.11, 0.5);
        assert!((inside - 1e-4).abs() < 1e-15);
        assert_eq!(rect_disk_area(0.6, 0.7, 0.0, 0.1, 0.5), 0.0);
    }

    #[test]
    fn coverage_sums_to_disk_area() {
        let h = 0.01;
        let r = 0.237;
        let c = Point::new(0.013, -0.02);
        let mut s = 0.0;
        for i in -40..40 {
            for j in -40..40 {
                let p = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                s += square_coverage(p, h / 2.0, c, r) * h * h;
            }
        }
        assert!((s - PI * r * r).abs() < 1e-12);
    }

    #[test]
    fn ray_weight() {
        // x2 = t/2 along the ray at 30 degrees
        let a = Point::ORIGIN;
        let b = Point::new(3f64.sqrt() / 2.0, 0.5);
        let exact = (1.0f64 / 2.0).sqrt() * 2.0 / 3.0;
        assert!((sqrt_y_line_integral(a, b) - exact).abs() < 1e-14);
    }

    #[test]
    fn clip() {
        let (t0, t1) = clip_segment(Point::new(-2.0, 0.0), Point::new(2.0, 0.0), Point::ORIGIN, 1.0).unwrap();
        assert!((t0 - 0.25).abs() < 1e-15 && (t1 - 0.75).abs() < 1e-15);
        assert!(clip_segment(Point::new(-2.0, 2.0), Point::new(2.0, 2.0), Point::ORIGIN, 1.0).is_none());
    }
}
