mod common;

use std::f64::consts::PI;

use common::*;
use nearcurve::counting;
use nearcurve::fourier::{self, FrequencySet};
use nearcurve::SmoothWeights;

/// Composite midpoint rule with a fixed, large number of nodes.
fn midpoint_integral(n: usize, xi: &[f64], w: &SmoothWeights) -> (f64, f64) {
    let m = 400_000;
    let h = 4.0 / m as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..m {
        let t = -2.0 + (i as f64 + 0.5) * h;
        let wt = w.w(t);
        if wt == 0.0 {
            continue;
        }
        let ph: f64 = (1..=n).map(|k| xi[k - 1] * t.powi(k as i32)).sum();
        re += wt * (2.0 * PI * ph).cos();
        im += wt * (2.0 * PI * ph).sin();
    }
    (re * h, im * h)
}

#[test]
fn curve_integral_matches_dense_midpoint_rule() {
    let w = SmoothWeights::minus();
    for xi in [vec![0.0, 0.0, 0.0], vec![3.0, -1.5, 2.0], vec![-20.0, 7.0, 40.0], vec![0.0, 0.0, 150.0]] {
        let got = fourier::curve_integral(&moment(3), &xi, &w, 1e-10).unwrap();
        let (re, im) = midpoint_integral(3, &xi, &w);
        assert!((got.re - re).abs() < 1e-7 && (got.im - im).abs() < 1e-7, "xi={xi:?}: {got} vs {re}+{im}i");
    }
}

#[test]
fn oscillatory_integral_uses_minus_k_convention() {
    let w = SmoothWeights::minus();
    let c = moment(3);
    let a = fourier::osc_integral(&c, 3, 2, &[1, -1], &w, 1e-10).unwrap();
    let b = fourier::curve_integral(&c, &[-6.0, 3.0, -3.0], &w, 1e-10).unwrap();
    assert!((a - b).norm() < 1e-12);
}

#[test]
fn zero_frequency_exponential_sum_is_weight_sum() {
    let w = SmoothWeights::minus();
    let c = moment(3);
    let q = 17;
    let s = fourier::exp_sum(&c, q, &[0, 0], &w).unwrap();
    let direct: f64 = (-2 * q as i64..=2 * q as i64).map(|a| w.w(a as f64 / q as f64)).sum();
    assert!((s.re - direct).abs() < 1e-9 && s.im.abs() < 1e-9);
}

#[test]
fn eta_hat_at_origin_is_bump_volume() {
    let w = SmoothWeights::minus();
    let m = 200_000;
    let h = 4.0 / m as f64;
    let vol1: f64 = (0..m).map(|i| w.eta_factor(-2.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
    let e = fourier::eta_hat(&w, &[0.0, 0.0]);
    assert!(rel(e.re, vol1 * vol1) < 1e-8);
}

#[test]
fn frequency_set_membership() {
    let c = moment(3);
    let fs = FrequencySet::new(&c, 5, 0.2, 1.0).unwrap();
    // j = 0 belongs to the main term
    assert!(!fs.contains(0, &[0, 0]));
    assert!(!fs.contains(1, &[0, 0]));
    assert!(fs.contains(fs.k_max, &[0, -fs.j_max]));
    assert!(!fs.contains(fs.k_max + 1, &[1, 0]));
    assert!(fs.contains(0, &[1, 0]));
    assert_eq!(fs.j_count() as usize, fs.j_vectors().len());
}

#[test]
fn reconstruction_converges_with_larger_cutoff() {
    let c = moment(3);
    let w = SmoothWeights::minus();
    let (q, delta) = (5, 0.2);
    let s = counting::count_smooth(&c, q, delta, &w).unwrap().value;
    let scale = delta * delta * q as f64;
    let mut last = f64::INFINITY;
    for eps in [1.0, 1.3] {
        let f = fourier::fourier_count(&c, q, delta, eps, &w, 1e-8).unwrap();
        let diff = (f.total - s).abs();
        assert!(diff <= f.allowed_discrepancy(), "eps={eps}: {diff} > {}", f.allowed_discrepancy());
        assert!(diff / scale < last);
        last = diff / scale;
    }
    assert!(last < 0.05, "relative discrepancy {last}");
}

#[test]
fn discrepancy_stays_inside_truncation_bound() {
    let w = SmoothWeights::minus();
    for (n, q, delta) in [(3usize, 10u64, 0.1), (3, 20, 0.2), (4, 5, 0.2)] {
        let c = moment(n);
        let f = fourier::fourier_count(&c, q, delta, POISSON_EPS, &w, POISSON_TOL).unwrap();
        let s = counting::count_smooth(&c, q, delta, &w).unwrap().value;
        assert!((f.total - s).abs() <= f.allowed_discrepancy());
        assert!(f.error_sum_imag.abs() < 1e-6 * (1.0 + f.main_term));
    }
}

#[test]
fn ledger_csv_has_header() {
    let c = moment(3);
    let w = SmoothWeights::minus();
    let opts = fourier::FourierOptions { ledger: true, ..fourier::FourierOptions::new(1e-8) };
    let f = fourier::fourier_count_with(&c, 5, 0.2, 0.4, &w, &opts).unwrap();
    let entries = f.per_frequency.expect("ledger requested");
    assert!(!entries.is_empty());
    let mut buf = Vec::new();
    fourier::write_ledger_csv(&c, 5, &entries, 0.45, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().count() == entries.len() + 1);
}
