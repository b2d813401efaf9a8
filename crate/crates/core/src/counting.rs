//! Exact, Euclidean-oracle and smoothed counts of lattice points near `qM`.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, Interval};
use crate::error::{invalid, Error, Result};
use crate::poly::Poly;
use crate::weights::{DomainWeight, SmoothWeights};

/// Hard cap on candidate evaluations in the Euclidean oracle.
pub const ORACLE_BUDGET: f64 = 1e9;

/// Width of the band around `δ` inside which a comparison is flagged.
pub const GUARD_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GraphExact,
    EuclideanOracle,
    SmoothDirect,
    Fourier,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::GraphExact => "graph_exact",
            Method::EuclideanOracle => "euclidean_oracle",
            Method::SmoothDirect => "smooth_direct",
            Method::Fourier => "fourier",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub n: usize,
    pub q: u64,
    pub delta: f64,
    pub method: Method,
    /// Integral for the sharp counters.
    pub value: f64,
    pub wall_time_ms: f64,
    /// Comparisons that fell within [`GUARD_BAND`] of the threshold.
    #[serde(skip)]
    pub boundary_warnings: u64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return invalid(format!("delta must lie in (0, 1/2), got {delta}"));
    }
    Ok(())
}

fn check_q(q: u64) -> Result<()> {
    if q == 0 {
        return invalid("q must be at least 1");
    }
    Ok(())
}

/// Integers `a` with `a/q ∈ I`.
pub fn parameter_range(domain: Interval, q: u64) -> (i64, i64) {
    let qf = q as f64;
    let mut lo = (domain.lo * qf).ceil() as i64;
    let mut hi = (domain.hi * qf).floor() as i64;
    // Undo rounding slips at exactly representable endpoints.
    if (lo - 1) as f64 >= domain.lo * qf {
        lo -= 1;
    }
    if ((hi + 1) as f64) <= domain.hi * qf {
        hi += 1;
    }
    (lo, hi)
}

/// Evaluates the signed fractional parts of `q f(a/q)` (offset to the
/// nearest integer, in [−1/2, 1/2]), exactly when the coefficients allow.
pub struct ScaledGraph {
    q: u64,
    comps: Vec<ScaledComponent>,
}

enum ScaledComponent {
    /// `q f(a/q) = (Σ c_k a^k) / den` with `c_k` already carrying `q^{D−k}`.
    Exact { c: Vec<i128>, den: i128, poly: Poly, q: f64 },
    Float { poly: Poly, q: f64 },
}

impl ScaledGraph {
    pub fn new(curve: &Curve, q: u64) -> Self {
        let comps = curve
            .components()
            .iter()
            .map(|p| ScaledComponent::build(p, q))
            .collect();
        ScaledGraph { q, comps }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Signed offsets `x_i − round(x_i)` for `x = q f(a/q)`.
    pub fn offsets(&self, a: i64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.offset(a);
        }
    }

    /// `q f(a/q)` in floating point.
    pub fn values(&self, a: i64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = match c {
                ScaledComponent::Exact { poly, q, .. } | ScaledComponent::Float { poly, q } => q * poly.eval(a as f64 / q),
            };
        }
    }
}

impl ScaledComponent {
    fn build(p: &Poly, q: u64) -> Self {
        let qf = q as f64;
        let float = || ScaledComponent::Float { poly: p.clone(), q: qf };
        let exact = match p.exact() {
            Some(e) => e,
            None => return float(),
        };
        let d = exact.len().max(2) - 1;
        let lcm = exact.iter().fold(1i128, |l, r| l.lcm(r.denom()));
        let qi = q as i128;
        let mut c = Vec::with_capacity(exact.len());
        for (k, r) in exact.iter().enumerate() {
            let scale = lcm / r.denom();
            let qpow = match qi.checked_pow((d - k) as u32) {
                Some(v) => v,
                None => return float(),
            };
            match r.numer().checked_mul(scale).and_then(|v| v.checked_mul(qpow)) {
                Some(v) => c.push(v),
                None => return float(),
            }
        }
        let den = match qi.checked_pow(d as u32 - 1).and_then(|v| v.checked_mul(lcm)) {
            Some(v) => v,
            None => return float(),
        };
        ScaledComponent::Exact {
            c,
            den,
            poly: p.clone(),
            q: qf,
        }
    }

    fn offset(&self, a: i64) -> f64 {
        match self {
            ScaledComponent::Exact { c, den, poly, q } => {
                let a = a as i128;
                let mut acc: Option<i128> = Some(0);
                for &ck in c.iter().rev() {
                    acc = acc.and_then(|v| v.checked_mul(a)).and_then(|v| v.checked_add(ck));
                }
                match acc {
                    Some(num) => {
                        let r = num.rem_euclid(*den);
                        let signed = if 2 * r > *den { r - den } else { r };
                        signed as f64 / *den as f64
                    }
                    None => float_offset(poly, *q, a as i64),
                }
            }
            ScaledComponent::Float { poly, q } => float_offset(poly, *q, a),
        }
    }
}

fn float_offset(p: &Poly, q: f64, a: i64) -> f64 {
    let x = q * p.eval(a as f64 / q);
    x - x.round()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64() * 1e3)
}

/// `#{a : a/q ∈ I, ‖q f(a/q)‖ < δ}` with `‖·‖` the Euclidean distance to
/// the integer lattice.
pub fn count_exact(curve: &Curve, q: u64, delta: f64) -> Result<CountResult> {
    check_q(q)?;
    check_delta(delta)?;
    let ((value, warnings), ms) = timed(|| exact_count_raw(curve, q, delta));
    if warnings > 0 {
        log::warn!("count_exact: {warnings} points within {GUARD_BAND:e} of the threshold (q = {q}, delta = {delta})");
    }
    Ok(CountResult {
        n: curve.n(),
        q,
        delta,
        method: Method::GraphExact,
        value: value as f64,
        wall_time_ms: ms,
        boundary_warnings: warnings,
    })
}

fn exact_count_raw(curve: &Curve, q: u64, delta: f64) -> (u64, u64) {
    let sg = ScaledGraph::new(curve, q);
    let (lo, hi) = parameter_range(curve.domain(), q);
    let warnings = AtomicU64::new(0);
    let m = curve.n() - 1;
    let count = chunked(lo, hi)
        .into_par_iter()
        .map(|(s, e)| {
            let mut off = vec![0.0; m];
            let mut c = 0u64;
            let mut w = 0u64;
            for a in s..=e {
                sg.offsets(a, &mut off);
                let d = off.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (d - delta).abs() <= GUARD_BAND {
                    w += 1;
                }
                if d < delta {
                    c += 1;
                }
            }
            warnings.fetch_add(w, Ordering::Relaxed);
            c
        })
        .sum::<u64>();
    (count, warnings.into_inner())
}

fn chunked(lo: i64, hi: i64) -> Vec<(i64, i64)> {
    const CHUNK: i64 = 1 << 14;
    let mut v = Vec::new();
    let mut s = lo;
    while s <= hi {
        let e = (s + CHUNK - 1).min(hi);
        v.push((s, e));
        s = e + 1;
    }
    v
}

/// `#{b ∈ ℤⁿ : dist(b/q, M) < δ/q}` by exhaustive search.
pub fn count_euclidean_oracle(curve: &Curve, q: u64, delta: f64) -> Result<CountResult> {
    count_euclidean_oracle_with_budget(curve, q, delta, ORACLE_BUDGET)
}

pub fn count_euclidean_oracle_with_budget(curve: &Curve, q: u64, delta: f64, budget: f64) -> Result<CountResult> {
    check_q(q)?;
    check_delta(delta)?;
    let (res, ms) = timed(|| oracle_raw(curve, q, delta, budget));
    let (value, warnings) = res?;
    Ok(CountResult {
        n: curve.n(),
        q,
        delta,
        method: Method::EuclideanOracle,
        value: value as f64,
        wall_time_ms: ms,
        boundary_warnings: warnings,
    })
}

struct Slice {
    b1: i64,
    t_lo: f64,
    t_hi: f64,
    ranges: Vec<(i64, i64)>,
}

fn oracle_raw(curve: &Curve, q: u64, delta: f64, budget: f64) -> Result<(u64, u64)> {
    let dom = curve.domain();
    let qf = q as f64;
    let b_lo = (dom.lo * qf - delta).ceil() as i64;
    let b_hi = (dom.hi * qf + delta).floor() as i64;
    let mut slices = Vec::new();
    let mut total = 0.0;
    for b1 in b_lo..=b_hi {
        // Any point of qM within δ of b has |b₁ − qt| < δ.
        let t_lo = ((b1 as f64 - delta) / qf).max(dom.lo);
        let t_hi = ((b1 as f64 + delta) / qf).min(dom.hi);
        if t_lo > t_hi {
            continue;
        }
        let ranges: Vec<(i64, i64)> = curve
            .components()
            .iter()
            .map(|f| {
                let (mn, mx) = scaled_range(f, qf, t_lo, t_hi);
                ((mn - delta).ceil() as i64, (mx + delta).floor() as i64)
            })
            .collect();
        let size: f64 = ranges.iter().map(|(a, b)| (b - a + 1).max(0) as f64).product();
        total += size;
        if total > budget {
            return Err(Error::Budget {
                what: "euclidean oracle candidates",
                needed: total,
                budget,
            });
        }
        slices.push(Slice { b1, t_lo, t_hi, ranges });
    }
    let warnings = AtomicU64::new(0);
    let count = slices
        .par_iter()
        .map(|s| {
            let mut c = 0u64;
            let mut w = 0u64;
            let mut b = vec![0i64; s.ranges.len()];
            for_each_in_box(&s.ranges, &mut b, &mut |rest| {
                let d = lattice_distance(curve, qf, s.b1, rest, s.t_lo, s.t_hi);
                if (d - delta).abs() <= GUARD_BAND {
                    w += 1;
                }
                if d < delta {
                    c += 1;
                }
            });
            warnings.fetch_add(w, Ordering::Relaxed);
            c
        })
        .sum::<u64>();
    Ok((count, warnings.into_inner()))
}

/// Enclosing range of `q f(t)` for `t ∈ [lo, hi]`.
fn scaled_range(f: &Poly, q: f64, lo: f64, hi: f64) -> (f64, f64) {
    const SAMPLES: usize = 64;
    let h = (hi - lo) / SAMPLES as f64;
    let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lip = 0.0f64;
    for i in 0..=SAMPLES {
        let t = lo + h * i as f64;
        let v = q * f.eval(t);
        mn = mn.min(v);
        mx = mx.max(v);
        lip = lip.max((q * f.deriv(t, 1)).abs());
    }
    // Between samples the value moves by at most half a step times the slope.
    let pad = lip * h + 1e-9;
    (mn - pad, mx + pad)
}

fn for_each_in_box(ranges: &[(i64, i64)], cur: &mut [i64], f: &mut impl FnMut(&[i64])) {
    fn rec(k: usize, ranges: &[(i64, i64)], cur: &mut [i64], f: &mut impl FnMut(&[i64])) {
        if k == ranges.len() {
            f(cur);
            return;
        }
        for v in ranges[k].0..=ranges[k].1 {
            cur[k] = v;
            rec(k + 1, ranges, cur, f);
        }
    }
    rec(0, ranges, cur, f);
}

/// `min_{t ∈ [lo, hi]} |b − qγ(t)|` by multistart golden-section search.
pub fn lattice_distance(curve: &Curve, q: f64, b1: i64, rest: &[i64], lo: f64, hi: f64) -> f64 {
    let dist2 = |t: f64| {
        let mut s = (b1 as f64 - q * t).powi(2);
        for (f, &b) in curve.components().iter().zip(rest) {
            s += (b as f64 - q * f.eval(t)).powi(2);
        }
        s
    };
    let mut best = dist2((b1 as f64 / q).clamp(lo, hi)).min(dist2(lo)).min(dist2(hi));
    const SEEDS: usize = 5;
    let h = (hi - lo) / SEEDS as f64;
    if h <= 0.0 {
        return best.sqrt();
    }
    for s in 0..SEEDS {
        let (a, b) = (lo + h * s as f64, lo + h * (s + 1) as f64);
        best = best.min(golden_min(&dist2, a, b));
    }
    best.sqrt()
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    f1.min(f2)
}

/// `Σ_a Σ_b w(a/q) η((q f(a/q) − b)/δ)`.
pub fn count_smooth(curve: &Curve, q: u64, delta: f64, wts: &SmoothWeights) -> Result<CountResult> {
    check_q(q)?;
    check_delta(delta)?;
    let dw = DomainWeight::new(*wts, curve.domain());
    let (value, ms) = timed(|| {
        let sg = ScaledGraph::new(curve, q);
        let supp = dw.support();
        let (lo, hi) = parameter_range(supp, q);
        let m = curve.n() - 1;
        let reach = delta * wts.eta_radius();
        let parts: Vec<f64> = chunked(lo, hi)
            .into_par_iter()
            .map(|(s, e)| {
                let mut off = vec![0.0; m];
                let mut acc = 0.0;
                for a in s..=e {
                    let wa = dw.eval(a as f64 / q as f64);
                    if wa == 0.0 {
                        continue;
                    }
                    sg.offsets(a, &mut off);
                    let mut prod = wa;
                    for &r in &off {
                        prod *= periodised_factor(wts, r, delta, reach);
                        if prod == 0.0 {
                            break;
                        }
                    }
                    acc += prod;
                }
                acc
            })
            .collect();
        pairwise_sum(&parts)
    });
    Ok(CountResult {
        n: curve.n(),
        q,
        delta,
        method: Method::SmoothDirect,
        value,
        wall_time_ms: ms,
        boundary_warnings: 0,
    })
}

/// `Σ_{m ∈ ℤ} φ_η((r − m)/δ)` for an offset `r ∈ [−1/2, 1/2]`.
fn periodised_factor(wts: &SmoothWeights, r: f64, delta: f64, reach: f64) -> f64 {
    let lo = (r - reach).ceil() as i64;
    let hi = (r + reach).floor() as i64;
    (lo..=hi).map(|m| wts.eta_factor((r - m as f64) / delta)).sum()
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// `Σ_{q ≤ Q} count_exact(q, δ)`.
pub fn count_rational(curve: &Curve, big_q: u64, delta: f64) -> Result<u64> {
    check_q(big_q)?;
    check_delta(delta)?;
    Ok((1..=big_q)
        .into_par_iter()
        .map(|q| exact_count_raw(curve, q, delta).0)
        .sum())
}

/// Number of `a` with `a/q ∈ I` and `q f(a/q)` integral.
pub fn count_on_curve(curve: &Curve, q: u64) -> u64 {
    let sg = ScaledGraph::new(curve, q);
    let (lo, hi) = parameter_range(curve.domain(), q);
    let mut off = vec![0.0; curve.n() - 1];
    (lo..=hi)
        .filter(|&a| {
            sg.offsets(a, &mut off);
            off.iter().all(|&x| x == 0.0)
        })
        .count() as u64
}

#[derive(Serialize)]
struct CsvRow<'a> {
    n: usize,
    q: u64,
    delta: f64,
    method: &'a str,
    value: String,
    wall_time_ms: f64,
}

/// Integral values print without a fractional part.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Writes rows as `n,q,delta,method,value,wall_time_ms`.
pub fn write_counts_csv<W: Write>(rows: &[CountResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            n: r.n,
            q: r.q,
            delta: r.delta,
            method: r.method.as_str(),
            value: format_value(r.value),
            wall_time_ms: r.wall_time_ms,
        })?;
    }
    if rows.is_empty() {
        w.write_record(["n", "q", "delta", "method", "value", "wall_time_ms"])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exact_counts() {
        let c = Curve::moment(3).unwrap();
        assert_eq!(count_exact(&c, 1, 0.1).unwrap().value, 3.0);
        assert_eq!(count_exact(&c, 2, 0.1).unwrap().value, 3.0);
        assert!(count_exact(&c, 8, 0.01).unwrap().value >= 2.0);
        assert!(count_exact(&c, 1, 0.5).is_err());
    }

    #[test]
    fn offsets_are_exact_for_rationals() {
        let c = Curve::moment(3).unwrap();
        let sg = ScaledGraph::new(&c, 7);
        let mut off = [0.0; 2];
        sg.offsets(3, &mut off);
        // 9/7 and 27/49
        assert_eq!(off[0], 2.0 / 7.0);
        assert_eq!(off[1], -22.0 / 49.0);
    }

    #[test]
    fn oracle_at_q_one() {
        let c = Curve::moment(3).unwrap();
        assert_eq!(count_euclidean_oracle(&c, 1, 0.1).unwrap().value, 3.0);
    }

    #[test]
    fn central_point_contributes_one() {
        let c = Curve::moment(3).unwrap();
        let v = count_smooth(&c, 1, 0.1, &SmoothWeights::minus()).unwrap().value;
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let c = Curve::moment(3).unwrap();
        let r = count_exact(&c, 1, 0.1).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&[r], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,q,delta,method,value,wall_time_ms\n3,1,0.1,graph_exact,3,"));
    }
}
