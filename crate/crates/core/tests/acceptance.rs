//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 5`.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use nearcurve::bounds::{self, Mode, Q64, VerifyOptions};
use nearcurve::counting;
use nearcurve::fourier::{self, FrequencySet};
use nearcurve::geometry;
use nearcurve::{Curve, Result, SmoothWeights};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

type Criterion = (u32, &'static str, Duration, fn() -> Result<Outcome>);

fn main() {
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: Vec<Criterion> = vec![
        (1, "oracle agrees with graph count", Duration::from_secs(60), c1_oracle_equivalence),
        (2, "Poisson reconstruction", Duration::from_secs(600), c2_poisson_reconstruction),
        (3, "ACK bound with one constant per curve", Duration::from_secs(900), c3_ack_bound),
        (4, "H floor on the corpus", Duration::from_secs(300), c4_h_floor),
        (5, "exponent identities", Duration::from_secs(1), c5_exponents),
        (6, "n = 3 exponents 3/5 and 1/5", Duration::from_secs(1), c6_huang_exponents),
        (7, "lower bound at desk scale", Duration::from_secs(300), c7_lower_bound),
        (8, "upper bound and easy-count floor", Duration::from_secs(300), c8_upper_bound),
        (9, "level sets and cone counts", Duration::from_secs(600), c9_geometry),
        (10, "envelope contract", Duration::from_secs(1), c10_envelope),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let (pass, detail) = match res {
            Ok(o) => (o.pass && took <= limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {detail} [{:.1}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn c1_oracle_equivalence() -> Result<Outcome> {
    let c = moment(3);
    let mut worst = (1.0f64, 0u64, 0.0f64);
    for q in 1..=50u64 {
        for delta in [0.05, 0.1, 0.2] {
            let e = counting::count_exact(&c, q, delta)?.value;
            let o = counting::count_euclidean_oracle(&c, q, delta)?.value;
            let ratio = if e == o {
                1.0
            } else if e == 0.0 || o == 0.0 {
                f64::INFINITY
            } else {
                (o / e).max(e / o)
            };
            if ratio > worst.0 {
                worst = (ratio, q, delta);
            }
        }
    }
    let mut limit_ok = true;
    for q in 1..=50u64 {
        let on = counting::count_on_curve(&c, q) as f64;
        let e = counting::count_exact(&c, q, 1e-9)?.value;
        let o = counting::count_euclidean_oracle(&c, q, 1e-9)?.value;
        limit_ok &= e == on && o == on;
    }
    outcome(
        worst.0 <= ORACLE_FACTOR && limit_ok,
        format!(
            "max ratio {:.3} at q = {}, delta = {} (allowed {ORACLE_FACTOR}); delta -> 0 exact match: {limit_ok}",
            worst.0, worst.1, worst.2
        ),
    )
}

fn c2_poisson_reconstruction() -> Result<Outcome> {
    let w = SmoothWeights::minus();
    let mut worst = (0.0f64, 0usize, 0u64, 0.0f64);
    let mut inside_tail = true;
    for n in [3usize, 4] {
        let c = moment(n);
        for q in [5u64, 10, 20] {
            for delta in [0.05, 0.1, 0.2] {
                let f = fourier::fourier_count(&c, q, delta, POISSON_EPS, &w, POISSON_TOL)?;
                let s = counting::count_smooth(&c, q, delta, &w)?.value;
                let diff = (f.total - s).abs();
                inside_tail &= diff <= f.allowed_discrepancy();
                let r = diff / (delta.powi(n as i32 - 1) * q as f64);
                if r > worst.0 {
                    worst = (r, n, q, delta);
                }
            }
        }
    }
    outcome(
        worst.0 < POISSON_REL_TOL,
        format!(
            "max relative discrepancy {:.3e} at n = {}, q = {}, delta = {} (allowed {POISSON_REL_TOL:e}); within truncation bound: {inside_tail}",
            worst.0, worst.1, worst.2, worst.3
        ),
    )
}

fn ack_constant(c: &Curve, seed: u64) -> Result<f64> {
    let w = SmoothWeights::minus();
    let mut cmax = 0.0f64;
    for xi in geometry::xi_corpus(c.n(), CORPUS_SIZE, CORPUS_MAX_NORM, seed) {
        let (a, b) = geometry::ack_check(c, &xi, &w, 1e-10)?;
        cmax = cmax.max(a / b);
    }
    Ok(cmax)
}

fn c3_ack_bound() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, frozen) in [(3usize, ACK_C_FIT_N3), (4, ACK_C_FIT_N4)] {
        let c = moment(n);
        let fit = ack_constant(&c, CORPUS_SEED_FIT)?;
        let held = ack_constant(&c, CORPUS_SEED_HELD)?;
        let change = (fit / held).max(held / fit);
        pass &= fit <= frozen && held <= frozen && change < ACK_REFIT_FACTOR;
        parts.push(format!("n = {n}: C_fit {fit:.3}, held-out {held:.3}, change {change:.3} (frozen {frozen})"));
    }
    outcome(pass, parts.join("; "))
}

fn h_floor(c: &Curve, grid: usize) -> f64 {
    geometry::xi_corpus(c.n(), CORPUS_SIZE, CORPUS_MAX_NORM, CORPUS_SEED_FIT)
        .iter()
        .map(|xi| {
            let h = geometry::h_functional_on(c, xi, c.domain(), grid).value;
            let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            h / (1.0 + norm).powf(1.0 / c.n() as f64)
        })
        .fold(f64::INFINITY, f64::min)
}

fn c4_h_floor() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, frozen) in [(3usize, H_FLOOR_N3), (4, H_FLOOR_N4)] {
        let c = moment(n);
        let base = h_floor(&c, geometry::H_GRID);
        let fine = h_floor(&c, 2 * geometry::H_GRID);
        let change = rel(fine, base);
        pass &= base > 0.0 && base >= frozen && change < H_GRID_STABILITY;
        parts.push(format!("n = {n}: min {base:.5}, doubled grid {fine:.5}, change {change:.2e} (floor {frozen})"));
    }
    outcome(pass, parts.join("; "))
}

fn c5_exponents() -> Result<Outcome> {
    let t3 = bounds::exponent_table(3)?;
    let t4 = bounds::exponent_table(4)?;
    let mut pass = t3.theta == Q64::new(3, 5)
        && t4.theta == Q64::new(5, 8)
        && t3.beta == Q64::new(1, 5)
        && t4.beta == Q64::new(1, 8);
    let mut bad = Vec::new();
    for n in 3..=64usize {
        let t = bounds::exponent_table(n)?;
        let ends = t.kappa[n - 2] == Q64::new(1, 2 * n as i64 - 1) && t.kappa[n - 1] == Q64::new(1, n as i64);
        if !(ends && t.identities_hold()) {
            bad.push(n);
        }
    }
    pass &= bad.is_empty();
    outcome(
        pass,
        format!("Theta(3) = {}, Theta(4) = {}, beta(3) = {}, beta(4) = {}; failing n: {bad:?}", t3.theta, t4.theta, t3.beta, t4.beta),
    )
}

fn c6_huang_exponents() -> Result<Outcome> {
    // Main-term exponent of q^{3/5}(log q)^{4/5} and the range δ ≫ q^{−1/5}(log q)^{2/5}.
    let t = bounds::exponent_table(3)?;
    let pass = t.theta == Q64::new(3, 5) && t.beta == Q64::new(1, 5);
    outcome(pass, format!("Theta(3) = {}, beta(3) = {}", t.theta, t.beta))
}

fn main_ratio_bracket(c: &Curve, qs: &[u64], nu: f64) -> Result<(f64, f64)> {
    let n = c.n();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &q in qs {
        let delta = bounds::lower_delta(n, q, nu);
        let count = counting::count_exact(c, q, delta)?.value;
        let r = count / (delta.powi(n as i32 - 1) * q as f64);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

fn c7_lower_bound() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, qs) in [(3usize, vec![1_000u64, 10_000, 100_000, 1_000_000]), (4, vec![20_000, 50_000, 100_000])] {
        let (lo, hi) = main_ratio_bracket(&moment(n), &qs, 0.05)?;
        pass &= lo > 0.0 && hi / lo <= LOWER_SPREAD;
        parts.push(format!("n = {n}: N/(delta^(n-1) q) in [{lo:.3}, {hi:.3}], spread {:.3}", hi / lo));
    }
    outcome(pass, parts.join("; "))
}

fn c8_upper_bound() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, qs, c_up) in [
        (3usize, vec![1_000u64, 10_000, 100_000, 1_000_000], C_UP_N3),
        (4, vec![20_000, 50_000, 100_000], C_UP_N4),
    ] {
        let opts = VerifyOptions { c_up, c_low: 0.0 };
        let rep = bounds::verify_theorem_with(&moment(n), &qs, 0.05, Mode::Upper, &opts)?;
        pass &= rep.passed();
        parts.push(format!("n = {n}: C_up fit {:.3} (frozen {c_up}), {} rows", rep.c_up_fit, rep.rows.len()));
    }
    let c = moment(3);
    let mut short = Vec::new();
    for z in 1..=100u64 {
        let q = z * z * z;
        if (counting::count_exact(&c, q, 1e-6)?.value as u64) < z {
            short.push(z);
        }
    }
    pass &= short.is_empty();
    parts.push(format!("easy-count floor violations: {short:?}"));
    outcome(pass, parts.join("; "))
}

fn c9_geometry() -> Result<Outcome> {
    let c = moment(3);
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [4u64, 8] {
        let fs = FrequencySet::new(&c, q, 0.25, 1.0)?;
        for r in [8.0, 16.0] {
            let shell: BTreeSet<(i64, Vec<i64>)> = fs.members_in_shell(r / 2.0, r).into_iter().collect();
            let reports = geometry::level_sets_for_shell(&c, q, r, &fs, geometry::DEFAULT_FLOOR_C)?;
            let mut union = BTreeSet::new();
            let mut overlap = false;
            for rep in &reports {
                for m in &rep.members {
                    overlap |= !union.insert((m.k, m.j.clone()));
                }
            }
            let partition = !overlap && union == shell;
            let contained = reports.iter().all(|rep| geometry::containment_check(&c, rep, CONTAINMENT_C));
            let fitted = reports
                .iter()
                .map(|rep| geometry::containment_constant(&c, rep))
                .fold(0.0, f64::max);
            pass &= partition && contained && CONTAINMENT_C <= 32.0;
            parts.push(format!(
                "q = {q}, R = {r}: {} members in {} classes, partition {partition}, containment {contained} (fit {fitted:.3})",
                shell.len(),
                reports.len()
            ));
        }
    }
    let corpus: [[f64; 2]; 10] = [
        [1.0, 1.0],
        [2.0, 1.0],
        [2.0, 2.0],
        [4.0, 1.0],
        [4.0, 2.0],
        [4.0, 4.0],
        [8.0, 1.0],
        [8.0, 2.0],
        [8.0, 4.0],
        [16.0, 2.0],
    ];
    let mut worst = 0.0f64;
    for t in corpus {
        let nb = geometry::cone_members(&c, &t, 1.0)?;
        worst = worst.max(nb.count() as f64 / nb.volume_scale());
    }
    pass &= worst <= CONE_C;
    parts.push(format!("cone count / (R prod T) max {worst:.1} (frozen {CONE_C})"));
    outcome(pass, parts.join("; "))
}

fn c10_envelope() -> Result<Outcome> {
    let nu = 0.05;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [3usize, 4, 5] {
        let vals: Vec<f64> = [1e4, 1e5, 1e6]
            .iter()
            .map(|&q| bounds::envelope(n, q, q.powf(-bounds::to_f64(bounds::beta_closed(n)) + nu)))
            .collect();
        let ok = vals.iter().all(|&e| e <= 1.0) && vals.windows(2).all(|w| w[1] < w[0]);
        pass &= ok;
        parts.push(format!("n = {n}: {:?}", vals.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()));
    }
    outcome(pass, parts.join("; "))
}
