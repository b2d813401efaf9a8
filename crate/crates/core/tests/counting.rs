mod common;

use common::*;
use nearcurve::counting::{self, Method};
use nearcurve::{Curve, SmoothWeights};

/// Distance from `a^k / q^{k-1}` to the nearest integer, in exact arithmetic.
fn moment_offset(a: i64, q: i64, k: u32) -> f64 {
    let den = (q as i128).pow(k - 1);
    let r = (a as i128).pow(k).rem_euclid(den);
    r.min(den - r) as f64 / den as f64
}

fn brute_moment(n: usize, q: u64, delta: f64) -> u64 {
    let q = q as i64;
    (-q..=q)
        .filter(|&a| {
            let d2: f64 = (2..=n as u32).map(|k| moment_offset(a, q, k).powi(2)).sum();
            d2.sqrt() < delta
        })
        .count() as u64
}

#[test]
fn exact_count_matches_integer_brute_force() {
    for n in [3, 4] {
        let c = moment(n);
        for q in [1u64, 2, 3, 7, 12, 30, 64, 101] {
            for delta in [0.01, 0.05, 0.1, 0.2, 0.3] {
                let got = counting::count_exact(&c, q, delta).unwrap();
                assert_eq!(got.method, Method::GraphExact);
                assert_eq!(got.value as u64, brute_moment(n, q, delta), "n={n} q={q} delta={delta}");
            }
        }
    }
}

#[test]
fn on_curve_points_of_the_moment_curve() {
    // a^2/q and a^3/q^2 are both integers iff q | a for squarefree q
    let c = moment(3);
    for q in [1u64, 2, 3, 5, 6, 7, 10] {
        assert_eq!(counting::count_on_curve(&c, q), 3, "q={q}");
    }
    // q = 4: a ∈ {−4, −2, 0, 2, 4} gives a^2/4 integral, a^3/16 needs 4 | a... except a = ±2 fails
    assert_eq!(counting::count_on_curve(&c, 4), 3);
}

#[test]
fn easy_count_floor_on_cubes() {
    let c = moment(3);
    for z in 1..=20u64 {
        let q = z * z * z;
        assert!(counting::count_exact(&c, q, 1e-6).unwrap().value >= z as f64);
    }
}

#[test]
fn exact_count_is_monotone_in_delta() {
    let c = moment(3);
    let mut last = 0.0;
    for delta in [0.01, 0.02, 0.05, 0.1, 0.2, 0.4] {
        let v = counting::count_exact(&c, 200, delta).unwrap().value;
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn oracle_contains_graph_points_in_the_limit() {
    let c = moment(3);
    for q in 1..=20u64 {
        let o = counting::count_euclidean_oracle(&c, q, 1e-9).unwrap().value;
        assert_eq!(o, counting::count_on_curve(&c, q) as f64);
    }
}

#[test]
fn smoothed_counts_are_ordered_by_weight_kind() {
    let c = moment(3);
    for (q, delta) in [(10u64, 0.1), (40, 0.05), (40, 0.2)] {
        let lo = counting::count_smooth(&c, q, delta, &SmoothWeights::minus()).unwrap().value;
        let hi = counting::count_smooth(&c, q, delta, &SmoothWeights::plus()).unwrap().value;
        assert!(lo >= 0.0 && lo <= hi, "q={q} delta={delta}: {lo} > {hi}");
    }
}

#[test]
fn smoothed_count_approaches_main_term() {
    // for large q the smoothed count behaves like ∫w · η̂(0) δ^{n-1} q
    let c = moment(3);
    let w = SmoothWeights::minus();
    let (q, delta) = (1_000_000u64, 0.4);
    let s = counting::count_smooth(&c, q, delta, &w).unwrap().value;
    let grid = 200_000;
    let h = 4.0 / grid as f64;
    let w_int: f64 = (0..grid).map(|i| w.w(-2.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
    let eta0 = w.eta_hat(&[0.0, 0.0]).re;
    let main = w_int * eta0 * delta * delta * q as f64;
    assert!(rel(s, main) < 0.05, "smooth {s} main {main}");
}

#[test]
fn rational_count_sums_exact_counts() {
    let c = moment(3);
    let direct: f64 = (1..=25).map(|q| counting::count_exact(&c, q, 0.1).unwrap().value).sum();
    assert_eq!(counting::count_rational(&c, 25, 0.1).unwrap() as f64, direct);
}

#[test]
fn invalid_arguments_are_rejected() {
    let c = moment(3);
    assert!(counting::count_exact(&c, 0, 0.1).is_err());
    assert!(counting::count_exact(&c, 5, 0.0).is_err());
    assert!(counting::count_exact(&c, 5, 0.5).is_err());
    assert!(counting::count_euclidean_oracle(&c, 5, f64::NAN).is_err());
}

#[test]
fn csv_rows_have_fixed_header() {
    let c = Curve::moment(3).unwrap();
    let rows = vec![counting::count_exact(&c, 5, 0.1).unwrap()];
    let mut buf = Vec::new();
    counting::write_counts_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,q,delta,method,value,wall_time_ms");
    assert!(text.lines().nth(1).unwrap().starts_with("3,5,0.1,graph_exact,"));
}
