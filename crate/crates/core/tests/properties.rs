use proptest::prelude::*;
use stokeslab::diagnostics::{d_and_v, frequency, scan};
use stokeslab::io::{parse_fbf, to_fbf_string};
use stokeslab::{circle_integral, disk_integral, make_field, DomainSpec, Point, Profile, ScalarField};

fn grid() -> DomainSpec {
    DomainSpec::square(1.0, 1.0 / 64.0).unwrap()
}

fn corpus(k: usize) -> ScalarField {
    let p = match k {
        0 => Profile::stokes(Point::ORIGIN).unwrap(),
        1 => Profile::sine(2, Point::ORIGIN).unwrap(),
        2 => Profile::sine(3, Point::ORIGIN).unwrap(),
        3 => Profile::sine_normalized(4, Point::ORIGIN).unwrap(),
        _ => {
            let st = Profile::stokes(Point::ORIGIN).unwrap();
            return make_field(grid(), |x| st.eval(x) * (1.0 + 0.5 * x.norm())).unwrap();
        }
    };
    p.sample(grid()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn amplitude_scaling(k in 0usize..5, lambda in 0.05f64..20.0, r in 0.1f64..0.45) {
        let f = corpus(k);
        let g = f.scaled(lambda).unwrap();
        let (d0, v0) = d_and_v(&f, Point::ORIGIN, r).unwrap().unwrap();
        let (d1, v1) = d_and_v(&g, Point::ORIGIN, r).unwrap().unwrap();
        prop_assert!(rel(d0, d1) < 1e-12, "{} {}", d0, d1);
        // the volume term does not scale with u, its denominator does
        prop_assert!(rel(v0, v1 * lambda * lambda) < 1e-12 || (v0 == 0.0 && v1 == 0.0));
        let s0 = f.sphere_l2(Point::ORIGIN, r).unwrap();
        let s1 = g.sphere_l2(Point::ORIGIN, r).unwrap();
        prop_assert!(rel(s1, lambda * lambda * s0) < 1e-12);
    }

    #[test]
    fn frequency_splits(k in 0usize..5, r in 0.1f64..0.45) {
        let f = corpus(k);
        let (d, v) = d_and_v(&f, Point::ORIGIN, r).unwrap().unwrap();
        let fr = frequency(&f, Point::ORIGIN, r).unwrap().unwrap();
        prop_assert!((fr - (d - v)).abs() <= 1e-14 * d.abs().max(1.0));
        prop_assert!(v >= 0.0);
        let s = scan(&f, Point::ORIGIN, &[r]).unwrap();
        let rec = s.records[0];
        prop_assert!(rel(rec.f.unwrap(), fr) < 1e-13);
    }

    #[test]
    fn quadrature_of_polynomials(cx in -0.4f64..0.4, cy in -0.4f64..0.4, r in 0.05f64..0.45, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let s = grid();
        let x0 = Point::new(cx, cy);
        let area = disk_integral(&s, |_| 1.0, x0, r).unwrap();
        prop_assert!(rel(area, std::f64::consts::PI * r * r) < 1e-12);
        let lin = disk_integral(&s, |p| 1.0 + a * (p.x - cx) + b * (p.y - cy), x0, r).unwrap();
        prop_assert!((lin - area).abs() < 4.0 * s.h.powi(3), "{} {}", lin, area);
        let circ = circle_integral(&s, |p| (p.x - cx).powi(2), x0, r).unwrap();
        prop_assert!(rel(circ, std::f64::consts::PI * r.powi(3)) < 1e-12);
    }

    #[test]
    fn fbf_round_trip(seed in proptest::collection::vec(0.0f64..1e3, 17 * 17)) {
        let s = DomainSpec::new(-1.0, 1.0, -0.5, 1.5, 0.125).unwrap();
        let f = make_field(s, |p| {
            let i = ((p.x + 1.0) / 0.125).round() as usize;
            let j = ((p.y + 0.5) / 0.125).round() as usize;
            seed[j * 17 + i] / 7.0
        }).unwrap();
        let text = to_fbf_string(&f);
        let g = parse_fbf(&text).unwrap();
        prop_assert_eq!(g.spec(), f.spec());
        prop_assert!(g.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(to_fbf_string(&g), text);
    }

    #[test]
    fn affine_gradients_are_exact(a in 1.0f64..3.0, b in -0.4f64..0.4, c in -0.4f64..0.4, px in -0.8f64..0.8, py in 0.05f64..0.8) {
        let s = grid();
        let f = make_field(s, |p| if p.y > 0.0 { a + b * p.x + c * p.y } else { 0.0 }).unwrap();
        let [gx, gy] = f.gradient(Point::new(px, py)).unwrap();
        prop_assert!((gx - b).abs() < 1e-10 && (gy - c).abs() < 1e-10);
        let v = f.interpolate(Point::new(px, py)).unwrap();
        prop_assert!((v - (a + b * px + c * py)).abs() < 1e-12);
    }

    #[test]
    fn profiles_respect_field_invariants(k in 0usize..5) {
        let f = corpus(k);
        let s = *f.spec();
        for j in 0..=s.ny() {
            for i in 0..=s.nx() {
                let v = f.value(i, j);
                prop_assert!(v >= 0.0 && v.is_finite());
                if s.y(j) <= 0.0 {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }
}
