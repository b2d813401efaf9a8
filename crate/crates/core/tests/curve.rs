mod common;

use common::*;
use nearcurve::{Curve, Error, Interval};
use nearcurve::poly::Poly;

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn frame_is_orthonormal_and_positively_oriented() {
    for n in [3, 4, 5] {
        let c = moment(n);
        for t in [-1.0, -0.2, 0.0, 0.6, 1.0] {
            let f = c.frenet_at(t).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let d: f64 = f.e[i].iter().zip(&f.e[j]).map(|(a, b)| a * b).sum();
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
                }
            }
            assert!(c.frenet_serret_residual(t, 1e-4).unwrap() < 1e-5);
        }
    }
}

#[test]
fn twisted_cubic_curvature_and_torsion() {
    // κ = |γ'×γ''|/|γ'|³, τ = det(γ',γ'',γ''')/|γ'×γ''|², times the speed |γ'|
    let c = moment(3);
    for t in [-0.8, 0.0, 0.5] {
        let d1 = c.deriv_any(t, 1);
        let d2 = c.deriv_any(t, 2);
        let d3 = c.deriv_any(t, 3);
        let x = cross(&d1, &d2);
        let speed = norm(&d1);
        let kappa = norm(&x) / speed.powi(3);
        let tau = (x[0] * d3[0] + x[1] * d3[1] + x[2] * d3[2]) / norm(&x).powi(2);
        let f = c.frenet_at(t).unwrap();
        assert!(rel(f.kappa_tilde[0].abs(), kappa * speed) < 1e-9, "t={t}");
        assert!(rel(f.kappa_tilde[1].abs(), tau.abs() * speed) < 1e-9, "t={t}");
    }
}

#[test]
fn dual_curve_at_origin() {
    let f = moment(3).frenet_at(0.0).unwrap();
    assert!((f.big_g[0]).abs() < 1e-14 && (f.big_g[1]).abs() < 1e-14 && (f.big_g[2] - 1.0).abs() < 1e-14);
    assert_eq!(f.g.len(), 2);
}

#[test]
fn moment_wronskian_is_superfactorial() {
    // det[γ', …, γ⁽ⁿ⁾] of the moment curve is ∏ k!
    for n in 3..=7usize {
        let expect: f64 = (1..=n).map(|k| (1..=k).product::<usize>() as f64).product();
        let c = moment(n);
        assert!(rel(c.wronskian(0.3), expect) < 1e-10, "n={n}");
    }
}

#[test]
fn degenerate_curves_are_rejected() {
    let comps = vec![Poly::monomial(2), Poly::monomial(2)];
    assert!(matches!(Curve::new(comps, Interval::new(-1.0, 1.0)), Err(Error::Degenerate { .. })));
    // (t, t², t⁴) has Wronskian 48t
    let comps = vec![Poly::monomial(2), Poly::monomial(4)];
    assert!(Curve::new(comps, Interval::new(-1.0, 1.0)).is_err());
    // nondegeneracy is checked on the extension [−2, 2], not only on the domain
    let comps = vec![Poly::monomial(2), Poly::monomial(4)];
    assert!(Curve::new(comps, Interval::new(0.5, 1.0)).is_err());
}

#[test]
fn json_curves() {
    let c = Curve::from_json(r#"{"moment": 4}"#).unwrap();
    assert_eq!(c.n(), 4);
    let c = Curve::from_json(r#"{"n": 3, "coeffs": [[0, 0, 1], [0, "1/3", 0, 1]], "domain": [-0.5, 0.5]}"#).unwrap();
    assert_eq!(c.domain(), Interval::new(-0.5, 0.5));
    assert!((c.point(0.3)[2] - (0.1 + 0.027)).abs() < 1e-15);
    assert!(Curve::from_json(r#"{"n": 3, "coeffs": [[0, 0, "x"], [0, 0, 0, 1]]}"#).is_err());
    assert!(Curve::from_json("not json").is_err());
}

#[test]
fn moment_curve_needs_three_dimensions() {
    assert!(Curve::moment(2).is_err());
    assert!(Curve::moment(3).is_ok());
}
