//! Exponents Θ, β, κ, the error envelope, the λ classification and the
//! theorem harness.

use std::io::Write;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::counting;
use crate::curve::Curve;
use crate::error::{invalid, Error, Result};
use crate::fourier::FrequencySet;
use crate::geometry::{self, LambdaGrid};

pub type Q64 = Ratio<i64>;

/// `κ(d) = 1/((n−d+1)(d+1)−1)`.
pub fn kappa(n: usize, d: usize) -> Q64 {
    let (n, d) = (n as i64, d as i64);
    Q64::new(1, (n - d + 1) * (d + 1) - 1)
}

/// `(n²+4)/(n(n+4))` for even `n`, `(n²+3)/(n(n+4)−1)` for odd `n`.
pub fn theta_closed(n: usize) -> Q64 {
    let n = n as i64;
    if n % 2 == 0 {
        Q64::new(n * n + 4, n * (n + 4))
    } else {
        Q64::new(n * n + 3, n * (n + 4) - 1)
    }
}

/// `4/(n(n+4))` for even `n`, `4/(n(n+4)−1)` for odd `n`.
pub fn beta_closed(n: usize) -> Q64 {
    let n = n as i64;
    if n % 2 == 0 {
        Q64::new(4, n * (n + 4))
    } else {
        Q64::new(4, n * (n + 4) - 1)
    }
}

fn ser_ratio<S: Serializer>(r: &Q64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [*r.numer(), *r.denom()].serialize(s)
}

fn ser_ratios<S: Serializer>(v: &[Q64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[i64; 2]> = v.iter().map(|r| [*r.numer(), *r.denom()]).collect();
    pairs.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentTable {
    pub n: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub theta: Q64,
    #[serde(serialize_with = "ser_ratio")]
    pub beta: Q64,
    /// `κ(1), …, κ(n)`
    #[serde(serialize_with = "ser_ratios")]
    pub kappa: Vec<Q64>,
}

impl ExponentTable {
    /// `min_d κ(d)`
    pub fn kappa_min(&self) -> Q64 {
        *self.kappa.iter().min().unwrap()
    }

    /// Whether `1 − (n−1)β = Θ` and `β = min_d κ(d)` hold exactly.
    pub fn identities_hold(&self) -> bool {
        let one = Q64::from_integer(1);
        one - Q64::from_integer(self.n as i64 - 1) * self.beta == self.theta && self.beta == self.kappa_min()
    }
}

pub fn exponent_table(n: usize) -> Result<ExponentTable> {
    if n < 3 {
        return invalid(format!("exponents need n >= 3, got {n}"));
    }
    if n > 1 << 20 {
        return invalid("n too large for 64-bit rationals");
    }
    Ok(ExponentTable {
        n,
        theta: theta_closed(n),
        beta: beta_closed(n),
        kappa: (1..=n).map(|d| kappa(n, d)).collect(),
    })
}

pub fn to_f64(r: Q64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `max_{1≤d≤n} (q^{−κ(d)} δ^{−1})^{d+1−1/(n−d+1)}`.
pub fn envelope(n: usize, q: f64, delta: f64) -> f64 {
    (1..=n)
        .map(|d| envelope_term(n, d, q, delta))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The `d`-th term of [`envelope`], evaluated in logarithms.
pub fn envelope_term(n: usize, d: usize, q: f64, delta: f64) -> f64 {
    let k = to_f64(kappa(n, d));
    let expo = (d + 1) as f64 - 1.0 / (n - d + 1) as f64;
    ((-k * q.ln() - delta.ln()) * expo).exp()
}

/// Default `C` in `ρ_n^{q,R}(r; λ) = C R min{1, λ^{n−r}/(qR)}`.
pub const DEFAULT_RHO_C: f64 = geometry::DEFAULT_CONTAINMENT_C;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaClass {
    /// `ρ(1), …, ρ(n)`
    pub rho: Vec<f64>,
    /// `D(λ)`, the smallest `r` with `ρ(r) ≤ 1`.
    pub d: usize,
}

/// `ρ_n^{q,R}(·; λ)` and `D(λ)` with the configured `C`.
pub fn classify_lambda_with(n: usize, q: u64, r: f64, lambda: f64, c: f64, floor_c: f64) -> Result<LambdaClass> {
    let qr = q as f64 * r;
    let lo = floor_c * qr.powf(1.0 / n as f64);
    let hi = qr.sqrt();
    if !(lambda >= lo * (1.0 - 1e-12) && lambda <= hi * (1.0 + 1e-12)) {
        return invalid(format!("lambda = {lambda} outside the admissible window [{lo}, {hi}]"));
    }
    Ok(classify_unchecked(n, q, r, lambda, c))
}

pub fn classify_lambda(n: usize, q: u64, r: f64, lambda: f64) -> Result<LambdaClass> {
    classify_lambda_with(n, q, r, lambda, DEFAULT_RHO_C, geometry::DEFAULT_FLOOR_C)
}

/// As [`classify_lambda`] without the window check.
pub fn classify_unchecked(n: usize, q: u64, r: f64, lambda: f64, c: f64) -> LambdaClass {
    let qr = q as f64 * r;
    let mut rho: Vec<f64> = (1..n)
        .map(|k| c * r * (lambda.powi((n - k) as i32) / qr).min(1.0))
        .collect();
    rho.push(1.0);
    let d = rho.iter().position(|&x| x <= 1.0).unwrap() + 1;
    LambdaClass { rho, d }
}

/// Admissible grid values `λ ∈ Λ_n^{q,R}` on the anchored dyadic grid.
pub fn lambda_window(n: usize, q: u64, r: f64, floor_c: f64) -> Vec<f64> {
    let grid = LambdaGrid::new(n, q, r, floor_c);
    let hi = (q as f64 * r).sqrt();
    let mut out = Vec::new();
    let mut lam = grid.anchor;
    while lam <= hi * (1.0 + 1e-12) {
        out.push(lam);
        lam *= 2.0;
    }
    out
}

/// Per-`d` totals in [`near_sum_bound`].
#[derive(Debug, Clone, Serialize)]
pub struct NearSumReport {
    /// `Σ_R Σ_{λ ∈ Λ(d)} #S^{q,R}(λ) λ^{−1}` indexed by `d − 1`.
    pub empirical: Vec<f64>,
    /// `Σ_R Σ_{λ ∈ Λ(d)} R^{d+1} min{1, λ^{n−d+1}/(qR)} λ^{−1}`, with `R^n λ^{−1}` for `d = n`.
    pub closed_form: Vec<f64>,
    pub members: u64,
    pub shells: Vec<f64>,
    pub ratio: f64,
}

/// `R^{d+1} min{1, λ^{n−d+1}/(qR)} λ^{−1}` (or `R^n λ^{−1}` when `d = n`).
pub fn closed_form_term(n: usize, d: usize, q: u64, r: f64, lambda: f64) -> f64 {
    if d == n {
        return r.powi(n as i32) / lambda;
    }
    let qr = q as f64 * r;
    r.powi(d as i32 + 1) * (lambda.powi((n - d + 1) as i32) / qr).min(1.0) / lambda
}

/// `(qR)^{−1/(n−d+1)}`, the order of the λ-sum in [`closed_form_term`] divided by `R^{d+1}`.
pub fn crossover_order(n: usize, d: usize, q: u64, r: f64) -> f64 {
    (q as f64 * r).powf(-1.0 / (n - d + 1) as f64)
}

/// Empirical near sum against its closed-form majorant over all shells of `𝐉`.
pub fn near_sum_bound(curve: &Curve, q: u64, delta: f64, eps: f64) -> Result<NearSumReport> {
    near_sum_bound_with(curve, q, delta, eps, DEFAULT_RHO_C, geometry::DEFAULT_FLOOR_C)
}

pub fn near_sum_bound_with(curve: &Curve, q: u64, delta: f64, eps: f64, c: f64, floor_c: f64) -> Result<NearSumReport> {
    if !(delta > 0.0 && delta <= 0.25) {
        return invalid(format!("delta must lie in (0, 1/4], got {delta}"));
    }
    let n = curve.n();
    let fs = FrequencySet::new(curve, q, delta, eps)?;
    let top = 2.0 * fs.m_gamma * (q as f64).powf(eps) / delta;
    let mut shells = Vec::new();
    let mut r = 2.0;
    while r / 2.0 <= top {
        shells.push(r);
        r *= 2.0;
    }
    let mut empirical = vec![0.0; n];
    let mut closed = vec![0.0; n];
    let mut members = 0u64;
    for &rr in &shells {
        let all = geometry::shell_members(curve, q, rr, &fs)?;
        members += all.len() as u64;
        let grid = LambdaGrid::new(n, q, rr, floor_c);
        let window = lambda_window(n, q, rr, floor_c);
        for &lam in &window {
            let cls = classify_unchecked(n, q, rr, lam, c);
            closed[cls.d - 1] += closed_form_term(n, cls.d, q, rr, lam);
        }
        let top_lam = window.last().copied().unwrap_or(0.0);
        for m in &all {
            let lam = grid.class_of(m.h);
            if lam < grid.anchor * (1.0 - 1e-12) || lam > top_lam * (1.0 + 1e-12) {
                continue;
            }
            let cls = classify_unchecked(n, q, rr, lam, c);
            empirical[cls.d - 1] += 1.0 / lam;
        }
    }
    let e: f64 = empirical.iter().sum();
    let cf: f64 = closed.iter().sum();
    Ok(NearSumReport {
        empirical,
        closed_form: closed,
        members,
        shells,
        ratio: if cf > 0.0 { e / cf } else { 0.0 },
    })
}

/// `q·(a/z, a²/z², …, aⁿ/zⁿ)` for `a = 0..z`, with `q = zⁿ`.
pub fn easy_count_points(n: usize, z: u64) -> Result<Vec<Vec<i64>>> {
    if z == 0 {
        return invalid("z must be at least 1");
    }
    let zi = z as i128;
    if (n as f64) * (z as f64).log2() > 62.0 {
        return invalid("z^n overflows 64 bits");
    }
    Ok((0..zi)
        .map(|a| {
            (1..=n as u32)
                .map(|i| (a.pow(i) * zi.pow(n as u32 - i)) as i64)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Upper,
    Lower,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Mode::Upper),
            "lower" => Ok(Mode::Lower),
            _ => invalid(format!("mode must be upper or lower, got {s}")),
        }
    }
}

/// Default constants for the moment curves, with a 2× margin over the fits.
pub const DEFAULT_C_UP: f64 = 12.0;
pub const DEFAULT_C_LOW: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub c_up: f64,
    pub c_low: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            c_up: DEFAULT_C_UP,
            c_low: DEFAULT_C_LOW,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub q: u64,
    pub delta: f64,
    pub n_exact: u64,
    /// `N/(δ^{n−1}q)`
    pub main_ratio: f64,
    pub envelope: f64,
    /// `N ≤ C_up (δ^{n−1}q + q^{Θ+ν})`
    pub verdict_upper: bool,
    /// `N ≥ c_low δ^{n−1}q`, for rows with `δ ≥ q^{−β+ν}`.
    pub verdict_lower: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub curve: String,
    pub n: usize,
    pub mode: Mode,
    pub nu: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub theta: Q64,
    #[serde(serialize_with = "ser_ratio")]
    pub beta: Q64,
    pub rows: Vec<BoundRow>,
    /// `min` and `max` of `main_ratio` over the rows checked in this mode.
    pub c1: f64,
    pub c2: f64,
    /// Smallest `C_up` that would pass every row.
    pub c_up_fit: f64,
    pub options_c_up: f64,
    pub options_c_low: f64,
    /// Smallest tested `q` from which every larger tested `q` passes.
    pub q0: Option<u64>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| match self.mode {
            Mode::Upper => r.verdict_upper,
            Mode::Lower => r.verdict_lower.unwrap_or(true),
        })
    }

    /// Writes `n,q,delta,N,main_ratio,envelope,theta,beta,verdict`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "q", "delta", "N", "main_ratio", "envelope", "theta", "beta", "verdict"])?;
        for r in &self.rows {
            let ok = match self.mode {
                Mode::Upper => Some(r.verdict_upper),
                Mode::Lower => r.verdict_lower,
            };
            w.write_record([
                self.n.to_string(),
                r.q.to_string(),
                r.delta.to_string(),
                r.n_exact.to_string(),
                r.main_ratio.to_string(),
                r.envelope.to_string(),
                self.theta.to_string(),
                self.beta.to_string(),
                match ok {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "skip",
                }
                .to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Geometric grid, 8 points per decade, from `q^{−β−0.1}` to `0.24`.
pub fn delta_grid(n: usize, q: u64) -> Vec<f64> {
    let beta = to_f64(beta_closed(n));
    let lo = (q as f64).powf(-beta - 0.1).min(0.24);
    let hi: f64 = 0.24;
    let steps = ((hi / lo).log10() * 8.0).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
        .collect()
}

/// The `δ` values tested for a given `q` and mode. Lower mode starts at
/// `q^{−β+ν}`, which exceeds the grid's top for small `q`.
pub fn deltas_for(n: usize, q: u64, nu: f64, mode: Mode) -> Vec<f64> {
    let grid = delta_grid(n, q);
    match mode {
        Mode::Upper => grid,
        Mode::Lower => {
            let floor = lower_delta(n, q, nu);
            let mut v = vec![floor];
            v.extend(grid.into_iter().filter(|&d| d > floor));
            v
        }
    }
}

/// `q^{−β(n)+ν}`
pub fn lower_delta(n: usize, q: u64, nu: f64) -> f64 {
    (q as f64).powf(-to_f64(beta_closed(n)) + nu)
}

pub fn verify_theorem(curve: &Curve, q_list: &[u64], nu: f64, mode: Mode) -> Result<BoundReport> {
    verify_theorem_with(curve, q_list, nu, mode, &VerifyOptions::default())
}

/// Rows from an explicit list of `(q, δ)`.
pub fn verify_pairs(curve: &Curve, pairs: &[(u64, f64)], nu: f64, mode: Mode, opts: &VerifyOptions) -> Result<BoundReport> {
    let n = curve.n();
    let table = exponent_table(n)?;
    let theta = to_f64(table.theta);
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let counts: Vec<u64> = sorted
        .par_iter()
        .map(|&(q, d)| counting::count_exact(curve, q, d).map(|c| c.value as u64))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(sorted.len());
    let mut c_up_fit: f64 = 0.0;
    for (&(q, delta), &count) in sorted.iter().zip(&counts) {
        let qf = q as f64;
        let main = delta.powi(n as i32 - 1) * qf;
        let up = main + qf.powf(theta + nu);
        c_up_fit = c_up_fit.max(count as f64 / up);
        let lower_applies = delta >= lower_delta(n, q, nu) * (1.0 - 1e-12);
        rows.push(BoundRow {
            q,
            delta,
            n_exact: count,
            main_ratio: count as f64 / main,
            envelope: envelope(n, qf, delta),
            verdict_upper: count as f64 <= opts.c_up * up,
            verdict_lower: lower_applies.then(|| count as f64 >= opts.c_low * main),
        });
    }
    let checked: Vec<f64> = rows
        .iter()
        .filter(|r| mode == Mode::Upper || r.verdict_lower.is_some())
        .map(|r| r.main_ratio)
        .collect();
    let c1 = checked.iter().cloned().fold(f64::INFINITY, f64::min);
    let c2 = checked.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut qs: Vec<u64> = rows.iter().map(|r| r.q).collect();
    qs.dedup();
    let q_ok = |q: u64| {
        rows.iter().filter(|r| r.q == q).all(|r| match mode {
            Mode::Upper => r.verdict_upper,
            Mode::Lower => r.verdict_lower.unwrap_or(true),
        })
    };
    let mut q0 = None;
    for &q in qs.iter().rev() {
        if q_ok(q) {
            q0 = Some(q);
        } else {
            break;
        }
    }
    Ok(BoundReport {
        curve: curve.name().to_string(),
        n,
        mode,
        nu,
        theta: table.theta,
        beta: table.beta,
        rows,
        c1,
        c2,
        c_up_fit,
        options_c_up: opts.c_up,
        options_c_low: opts.c_low,
        q0,
    })
}

pub fn verify_theorem_with(curve: &Curve, q_list: &[u64], nu: f64, mode: Mode, opts: &VerifyOptions) -> Result<BoundReport> {
    if q_list.is_empty() {
        return invalid("empty q list");
    }
    if !(nu > 0.0) {
        return invalid(format!("nu must be positive, got {nu}"));
    }
    let n = curve.n();
    let pairs: Vec<(u64, f64)> = q_list
        .iter()
        .flat_map(|&q| deltas_for(n, q, nu, mode).into_iter().map(move |d| (q, d)))
        .collect();
    verify_pairs(curve, &pairs, nu, mode, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        let t = exponent_table(3).unwrap();
        assert_eq!(t.theta, Q64::new(3, 5));
        assert_eq!(t.beta, Q64::new(1, 5));
        assert_eq!(t.kappa, vec![Q64::new(1, 5), Q64::new(1, 5), Q64::new(1, 3)]);
        let t = exponent_table(4).unwrap();
        assert_eq!((t.theta, t.beta), (Q64::new(5, 8), Q64::new(1, 8)));
        assert_eq!(t.kappa[2], Q64::new(1, 7));
        assert_eq!(t.kappa[3], Q64::new(1, 4));
        assert!(exponent_table(2).is_err());
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&exponent_table(3).unwrap()).unwrap();
        assert_eq!(s, r#"{"n":3,"theta":[3,5],"beta":[1,5],"kappa":[[1,5],[1,5],[1,3]]}"#);
    }

    #[test]
    fn envelope_at_the_critical_delta() {
        let q = 1e6;
        let e = envelope(3, q, q.powf(-0.2));
        assert!((e - 1.0).abs() < 1e-9);
        assert!((envelope_term(3, 3, q, q.powf(-0.2)) - q.powf(-0.4)).abs() < 1e-12);
    }

    #[test]
    fn easy_points() {
        assert_eq!(easy_count_points(3, 2).unwrap(), vec![vec![0, 0, 0], vec![4, 2, 1]]);
        assert_eq!(
            easy_count_points(3, 3).unwrap(),
            vec![vec![0, 0, 0], vec![9, 3, 1], vec![18, 12, 8]]
        );
    }

    #[test]
    fn classes_saturate_for_huge_lambda() {
        let c = classify_unchecked(3, 1000, 16.0, 1e9, 2.0);
        assert_eq!(c.rho, vec![32.0, 32.0, 1.0]);
        assert_eq!(c.d, 3);
    }
}
