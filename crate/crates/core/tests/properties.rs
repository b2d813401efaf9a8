mod common;

use common::*;
use nearcurve::bounds;
use nearcurve::counting;
use nearcurve::geometry;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponent_identities(n in 3usize..200) {
        let t = bounds::exponent_table(n).unwrap();
        prop_assert!(t.identities_hold());
        prop_assert_eq!(t.beta, t.kappa_min());
        prop_assert_eq!(t.theta, bounds::Q64::from_integer(1) - bounds::Q64::from_integer(n as i64 - 1) * t.beta);
    }

    #[test]
    fn count_monotone_in_delta(q in 1u64..400, d1 in 0.001f64..0.45, d2 in 0.001f64..0.45) {
        let c = moment(3);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let a = counting::count_exact(&c, q, lo).unwrap().value;
        let b = counting::count_exact(&c, q, hi).unwrap().value;
        prop_assert!(a <= b);
        prop_assert!(b <= (2 * q + 1) as f64);
    }

    #[test]
    fn h_is_even_in_xi(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3) {
        let c = moment(3);
        let a = geometry::h_functional(&c, &[x, y, z]).value;
        let b = geometry::h_functional(&c, &[-x, -y, -z]).value;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn h_is_bounded_below(x in -1e4f64..1e4, y in -1e4f64..1e4, z in -1e4f64..1e4) {
        let c = moment(3);
        let xi = [x, y, z];
        let h = geometry::h_functional(&c, &xi).value;
        let norm = (x * x + y * y + z * z).sqrt();
        prop_assert!(h >= H_FLOOR_N3 * (1.0 + norm).cbrt());
    }

    #[test]
    fn h_reflection_symmetry(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3) {
        // γ(−t) = (−t, t², −t³) on a symmetric interval
        let c = moment(3);
        let a = geometry::h_functional(&c, &[x, y, z]).value;
        let b = geometry::h_functional(&c, &[-x, y, -z]).value;
        prop_assert!((a - b).abs() <= 1e-7 * (1.0 + a));
    }

    #[test]
    fn envelope_decreases_in_q(n in 3usize..8, e in 3.0f64..7.0) {
        let beta = bounds::to_f64(bounds::beta_closed(n));
        let q = 10f64.powf(e);
        let at = |q: f64| bounds::envelope(n, q, q.powf(-beta + 0.05));
        prop_assert!(at(q) <= 1.0);
        prop_assert!(at(2.0 * q) < at(q));
    }

    #[test]
    fn lattice_distance_matches_graph_offset(q in 1u64..60, a in -60i64..60) {
        prop_assume!(a.abs() as u64 <= q);
        let c = moment(3);
        let t = a as f64 / q as f64;
        let p = c.point(t);
        let b: Vec<i64> = p[1..].iter().map(|x| (x * q as f64).round() as i64).collect();
        let d = counting::lattice_distance(&c, q as f64, a, &b, -1.0, 1.0);
        let off: f64 = p[1..].iter().zip(&b).map(|(x, &bi)| (x * q as f64 - bi as f64).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d <= off + 1e-9);
    }
}
