//! The H-functional, oscillatory decay checks, sublevel sets of `H(q; ·)`
//! and lattice points in the neighbourhoods of the dual cone.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{Curve, Interval, EXTENSION};
use crate::error::{invalid, Error, Result};
use crate::fourier::{curve_integral, FrequencySet};
use crate::linalg;
use crate::quad::{self, OscOptions};
use crate::weights::{DomainWeight, SmoothWeights};

/// Base grid size of the H-functional minimisation.
pub const H_GRID: usize = 1024;
/// Trisection rounds after the grid search.
pub const H_ROUNDS: usize = 40;
/// Default `c` in the floor `H(q; 𝐣) ≥ c (q|𝐣|)^{1/n}` anchoring the λ grid.
pub const DEFAULT_FLOOR_C: f64 = 0.45;
/// Default `C` in the witness bounds `|ρ_r| ≤ C min{R, λ^{n−r}/q}`.
pub const DEFAULT_CONTAINMENT_C: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct HResult {
    pub xi: Vec<f64>,
    pub value: f64,
    pub argmin_t: f64,
    pub argmax_r: usize,
}

/// Coefficients of `p(t) = γ(t)·ξ`.
fn phase_coeffs(curve: &Curve, xi: &[f64]) -> Vec<f64> {
    let deg = curve.components().iter().map(|p| p.degree()).max().unwrap_or(1).max(1);
    let mut c = vec![0.0; deg + 1];
    c[1] += xi[0];
    for (p, &x) in curve.components().iter().zip(&xi[1..]) {
        for (ck, pk) in c.iter_mut().zip(p.coeffs()) {
            *ck += x * pk;
        }
    }
    c
}

/// `β_r(t) = p^{(r)}(t)` for `r = 0..=n`.
fn phase_derivs(c: &[f64], t: f64, n: usize, out: &mut [f64]) {
    // Taylor coefficients by repeated synthetic division, then scale.
    let mut work = c.to_vec();
    let d = work.len();
    let mut fact = 1.0;
    for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
        if m >= d {
            *slot = 0.0;
            continue;
        }
        for i in (m..d - 1).rev() {
            let hi = work[i + 1];
            work[i] += t * hi;
        }
        if m > 0 {
            fact *= m as f64;
        }
        *slot = work[m] * fact;
    }
}

/// `max_r |β_r(t)|^{1/r}` and the maximising `r`.
fn inner_max(c: &[f64], t: f64, n: usize, buf: &mut [f64]) -> (f64, usize) {
    phase_derivs(c, t, n, buf);
    let mut best = buf[1].abs();
    let mut arg = 1;
    for (r, b) in buf.iter().enumerate().take(n + 1).skip(2) {
        let a = b.abs();
        // |β_r|^{1/r} > best  ⇔  |β_r| > best^r
        if a > best.powi(r as i32) {
            best = a.powf(1.0 / r as f64);
            arg = r;
        }
    }
    (best, arg)
}

/// `H_γ(ξ) = inf_{t∈I} max_{1≤r≤n} |γ⁽ʳ⁾(t)·ξ|^{1/r}`.
pub fn h_functional(curve: &Curve, xi: &[f64]) -> HResult {
    h_functional_on(curve, xi, curve.domain(), H_GRID)
}

pub fn h_functional_on(curve: &Curve, xi: &[f64], on: Interval, grid: usize) -> HResult {
    let n = curve.n();
    assert_eq!(xi.len(), n, "xi must have n components");
    let c = phase_coeffs(curve, xi);
    let mut buf = vec![0.0; n + 1];
    let h = on.len() / grid as f64;
    let vals: Vec<f64> = (0..=grid)
        .map(|i| inner_max(&c, on.lo + h * i as f64, n, &mut buf).0)
        .collect();
    // Refine around the best few local minima.
    let mut locals: Vec<usize> = (0..=grid)
        .filter(|&i| (i == 0 || vals[i] <= vals[i - 1]) && (i == grid || vals[i] <= vals[i + 1]))
        .collect();
    locals.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    locals.truncate(4);
    let mut best = (f64::INFINITY, 0.0);
    for &i in &locals {
        let mut a = (on.lo + h * (i as f64 - 1.0)).max(on.lo);
        let mut b = (on.lo + h * (i as f64 + 1.0)).min(on.hi);
        for _ in 0..H_ROUNDS {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if inner_max(&c, m1, n, &mut buf).0 <= inner_max(&c, m2, n, &mut buf).0 {
                b = m2;
            } else {
                a = m1;
            }
        }
        let t = 0.5 * (a + b);
        for cand in [t, on.lo + h * i as f64] {
            let v = inner_max(&c, cand, n, &mut buf).0;
            if v < best.0 {
                best = (v, cand);
            }
        }
    }
    let (value, argmax_r) = inner_max(&c, best.1, n, &mut buf);
    HResult {
        xi: xi.to_vec(),
        value,
        argmin_t: best.1,
        argmax_r,
    }
}

/// `H(q; 𝐣) = H_γ(q·(−k, j))`, the functional governing `I(q; k, j)`.
pub fn h_of_frequency(curve: &Curve, q: u64, k: i64, j: &[i64]) -> HResult {
    h_functional(curve, &frequency_vector(q, k, j))
}

/// `q·(−k, j)`.
pub fn frequency_vector(q: u64, k: i64, j: &[i64]) -> Vec<f64> {
    let qf = q as f64;
    let mut v = Vec::with_capacity(j.len() + 1);
    v.push(-qf * k as f64);
    v.extend(j.iter().map(|&x| qf * x as f64));
    v
}

/// `(|∫ e^{2πiγ·ξ} w|, (1 + H_γ(ξ))^{−1})` with H taken over the support of `w`.
pub fn ack_check(curve: &Curve, xi: &[f64], wts: &SmoothWeights, tol: f64) -> Result<(f64, f64)> {
    let v = curve_integral(curve, xi, wts, tol)?;
    let supp = DomainWeight::new(*wts, curve.domain()).support();
    let h = h_functional_on(curve, xi, supp, H_GRID).value;
    Ok((v.norm(), 1.0 / (1.0 + h)))
}

/// `(1 + |ξ|)^{1/n} / (1 + H_γ(ξ))`.
pub fn vdc_floor_ratio(curve: &Curve, xi: &[f64]) -> f64 {
    let h = h_functional(curve, xi).value;
    (1.0 + linalg::norm(xi)).powf(1.0 / curve.n() as f64) / (1.0 + h)
}

/// Whether `(1 + |ξ|)^{1/n} ≤ C (1 + H_γ(ξ))` for the fitted `C`.
pub fn vdc_floor_check(curve: &Curve, xi: &[f64], c_fit: f64) -> bool {
    vdc_floor_ratio(curve, xi) <= c_fit
}

/// Seeded frequencies: uniform direction, log-uniform norm in `[1, max_norm]`.
pub fn xi_corpus(n: usize, count: usize, max_norm: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = linalg::norm(&dir);
            let mag = max_norm.powf(rng.gen::<f64>());
            dir.iter().map(|x| x / len * mag).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PieceClass {
    /// `|β_r| ≥ H^r` and `β_{r}` monotone throughout.
    Large(usize),
    /// All `|β_r| < H^r` for `r` below the supplied order.
    Small,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionPiece {
    pub lo: f64,
    pub hi: f64,
    pub class: PieceClass,
    /// `|∫_J e^{2πiγ·ξ}|` for large pieces.
    pub integral_abs: Option<f64>,
    /// `c_r (2π)^{−1/r} H^{−1}` for large pieces.
    pub vdc_bound: Option<f64>,
}

/// Lower bound factor for the derivative hypothesis `|β_ℓ| > c|ξ|`.
pub const PARTITION_HYPOTHESIS_C: f64 = 1e-3;

/// van der Corput constant `5·2^{r−1} − 2`.
pub fn vdc_constant(r: usize) -> f64 {
    5.0 * 2f64.powi(r as i32 - 1) - 2.0
}

/// The partition of `I` into pieces on which each `β_r` (`r < ℓ`) is monotone
/// and either above or below `H^r`.
pub fn ack_partition_diagnostic(curve: &Curve, xi: &[f64], ell: usize) -> Result<Vec<PartitionPiece>> {
    let n = curve.n();
    if ell == 0 || ell > n {
        return invalid(format!("ell must lie in 1..={n}"));
    }
    let dom = curve.domain();
    let c = phase_coeffs(curve, xi);
    let mut buf = vec![0.0; n + 2];
    let beta = |r: usize, t: f64, buf: &mut [f64]| -> f64 {
        phase_derivs(&c, t, n + 1, buf);
        buf[r]
    };
    const SCAN: usize = 4096;
    let xnorm = linalg::norm(xi);
    let hstep = dom.len() / SCAN as f64;
    let mut worst: Option<(f64, f64)> = None;
    for i in 0..=SCAN {
        let t = dom.lo + hstep * i as f64;
        if beta(ell, t, &mut buf).abs() <= PARTITION_HYPOTHESIS_C * xnorm {
            worst = Some(match worst {
                None => (t, t),
                Some((a, _)) => (a, t),
            });
        }
    }
    if let Some((lo, hi)) = worst {
        return Err(Error::Hypothesis {
            lo,
            hi,
            reason: format!("|beta_{ell}| <= {PARTITION_HYPOTHESIS_C}·|xi| on this subinterval"),
        });
    }
    let h = h_functional(curve, xi).value;
    let mut cuts = vec![dom.lo, dom.hi];
    for r in 1..ell {
        cuts.extend(roots_on(|t| beta(r + 1, t, &mut vec![0.0; n + 2]), dom));
        let level = h.powi(r as i32);
        cuts.extend(roots_on(|t| beta(r, t, &mut vec![0.0; n + 2]) - level, dom));
        cuts.extend(roots_on(|t| beta(r, t, &mut vec![0.0; n + 2]) + level, dom));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid_samples: Vec<f64> = (1..16).map(|i| lo + (hi - lo) * i as f64 / 16.0).collect();
        let class = (1..=n)
            .find(|&r| {
                mid_samples
                    .iter()
                    .all(|&t| beta(r, t, &mut vec![0.0; n + 2]).abs() >= h.powi(r as i32))
            })
            .filter(|&r| r < ell || ell == 1 || r == ell)
            .map(PieceClass::Large)
            .unwrap_or(PieceClass::Small);
        let (integral_abs, vdc_bound) = match class {
            PieceClass::Large(r) => {
                let pc = c.clone();
                let v = quad::oscillatory(
                    lo,
                    hi,
                    |_| 1.0,
                    move |t| pc.iter().rev().fold(0.0, |acc, &x| acc * t + x),
                    OscOptions::new(1e-10),
                )?;
                (
                    Some(v.value.norm()),
                    Some(vdc_constant(r) * (2.0 * PI).powf(-1.0 / r as f64) / h),
                )
            }
            PieceClass::Small => (None, None),
        };
        pieces.push(PartitionPiece {
            lo,
            hi,
            class,
            integral_abs,
            vdc_bound,
        });
    }
    Ok(pieces)
}

/// Roots of a continuous function on an interval by scanning and bisection.
fn roots_on(f: impl Fn(f64) -> f64, on: Interval) -> Vec<f64> {
    const SCAN: usize = 2048;
    let h = on.len() / SCAN as f64;
    let mut out = Vec::new();
    let mut prev = f(on.lo);
    for i in 1..=SCAN {
        let t = on.lo + h * i as f64;
        let v = f(t);
        if prev == 0.0 {
            out.push(t - h);
        } else if prev.signum() != v.signum() && v != 0.0 {
            let (mut a, mut b) = (t - h, t);
            let mut fa = prev;
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = v;
    }
    out.retain(|&t| t > on.lo + 1e-12 && t < on.hi - 1e-12);
    out
}

/// Dyadic λ grid `λ_m = c (qR)^{1/n} 2^m`.
#[derive(Debug, Clone, Copy)]
pub struct LambdaGrid {
    pub anchor: f64,
}

impl LambdaGrid {
    pub fn new(n: usize, q: u64, r: f64, floor_c: f64) -> Self {
        LambdaGrid {
            anchor: floor_c * (q as f64 * r).powf(1.0 / n as f64),
        }
    }

    /// The grid value `λ` with `λ/2 ≤ h < λ`.
    pub fn class_of(&self, h: f64) -> f64 {
        if !(h > 0.0) {
            return 0.0;
        }
        let m = (h / self.anchor).log2().floor() as i32 + 1;
        let mut lam = self.anchor * 2f64.powi(m);
        // Guard against rounding at exact powers.
        if h >= lam {
            lam *= 2.0;
        } else if h < lam / 2.0 {
            lam /= 2.0;
        }
        lam
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelMember {
    pub k: i64,
    pub j: Vec<i64>,
    pub h: f64,
    pub witness_t: f64,
    /// `ρ₁, …, ρ_{n−1}`
    pub rho: Vec<f64>,
    /// Coefficient of `G(t)`, equal to the last frequency coordinate.
    pub j_n: f64,
    /// `|𝐣 − j_n G(t) − Σ ρ_r G⁽ʳ⁾(t)|`
    pub residual: f64,
}

impl LevelMember {
    /// The frequency as a vector in `ℤⁿ` ordered like `γ`.
    pub fn vector(&self) -> Vec<f64> {
        let mut v = vec![-(self.k as f64)];
        v.extend(self.j.iter().map(|&x| x as f64));
        v
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.vector())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetReport {
    pub q: u64,
    pub r: f64,
    pub lambda: f64,
    pub members: Vec<LevelMember>,
    pub cardinality: usize,
}

/// Solves `v = v_n G(t) + Σ_r ρ_r G⁽ʳ⁾(t)`.
pub fn containment_witness(curve: &Curve, v: &[f64], t: f64) -> Result<(Vec<f64>, f64, f64)> {
    let n = curve.n();
    let jet = curve.dual_jet(t, n - 1)?;
    let vn = v[n - 1];
    let rhs: Vec<f64> = (0..n - 1).map(|i| v[i] - vn * jet[0][i]).collect();
    let cols: Vec<Vec<f64>> = (1..n).map(|r| jet[r][..n - 1].to_vec()).collect();
    let rho = linalg::solve_columns(&cols, &rhs).ok_or(Error::Degenerate {
        what: "dual curve Wronskian",
        t,
    })?;
    let mut recon: Vec<f64> = jet[0].iter().map(|g| vn * g).collect();
    for (r, &p) in rho.iter().enumerate() {
        for (x, g) in recon.iter_mut().zip(&jet[r + 1]) {
            *x += p * g;
        }
    }
    let resid = recon.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok((rho, vn, resid))
}

fn make_member(curve: &Curve, q: u64, k: i64, j: &[i64]) -> Result<LevelMember> {
    let hr = h_of_frequency(curve, q, k, j);
    let mut v = vec![-(k as f64)];
    v.extend(j.iter().map(|&x| x as f64));
    let (rho, j_n, residual) = containment_witness(curve, &v, hr.argmin_t)?;
    Ok(LevelMember {
        k,
        j: j.to_vec(),
        h: hr.value,
        witness_t: hr.argmin_t,
        rho,
        j_n,
        residual,
    })
}

/// Shell members of `𝐉` with `R/2 ≤ |𝐣| < R`, with their H values and witnesses.
pub fn shell_members(curve: &Curve, q: u64, r: f64, fs: &FrequencySet) -> Result<Vec<LevelMember>> {
    let raw = fs.members_in_shell(r / 2.0, r);
    const BUDGET: usize = 20_000_000;
    if raw.len() > BUDGET {
        return Err(Error::Budget {
            what: "shell members",
            needed: raw.len() as f64,
            budget: BUDGET as f64,
        });
    }
    raw.par_iter().map(|(k, j)| make_member(curve, q, *k, j)).collect()
}

/// `S^{q,R}(λ)`: shell members with `λ/2 ≤ H(q; 𝐣) < λ`.
pub fn level_set_enumerate(curve: &Curve, q: u64, r: f64, lambda: f64, fs: &FrequencySet) -> Result<LevelSetReport> {
    let all = shell_members(curve, q, r, fs)?;
    Ok(level_set_from(q, r, lambda, &all))
}

pub fn level_set_from(q: u64, r: f64, lambda: f64, shell: &[LevelMember]) -> LevelSetReport {
    let members: Vec<LevelMember> = shell
        .iter()
        .filter(|m| m.h >= lambda / 2.0 && m.h < lambda)
        .cloned()
        .collect();
    LevelSetReport {
        q,
        r,
        lambda,
        cardinality: members.len(),
        members,
    }
}

/// All nonempty λ-classes of a shell on the anchored grid.
pub fn level_sets_for_shell(curve: &Curve, q: u64, r: f64, fs: &FrequencySet, floor_c: f64) -> Result<Vec<LevelSetReport>> {
    let all = shell_members(curve, q, r, fs)?;
    let grid = LambdaGrid::new(curve.n(), q, r, floor_c);
    let mut lams: Vec<f64> = all.iter().map(|m| grid.class_of(m.h)).collect();
    lams.sort_by(f64::total_cmp);
    lams.dedup();
    Ok(lams.into_iter().map(|l| level_set_from(q, r, l, &all)).collect())
}

/// `C · min{R, λ^{n−r}/q}` for `r = 1..n−1`.
pub fn rho_bounds(n: usize, q: u64, r: f64, lambda: f64, c: f64) -> Vec<f64> {
    (1..n)
        .map(|k| c * r.min(lambda.powi((n - k) as i32) / q as f64))
        .collect()
}

/// Smallest `C` for which every witness satisfies the coefficient bounds.
pub fn containment_constant(curve: &Curve, report: &LevelSetReport) -> f64 {
    let n = curve.n();
    let unit = rho_bounds(n, report.q, report.r, report.lambda, 1.0);
    report
        .members
        .iter()
        .flat_map(|m| m.rho.iter().zip(&unit).map(|(p, u)| p.abs() / u))
        .fold(0.0, f64::max)
}

/// Rechecks membership and witness bounds for every member.
pub fn containment_check(curve: &Curve, report: &LevelSetReport, c: f64) -> bool {
    let n = curve.n();
    let bounds = rho_bounds(n, report.q, report.r, report.lambda, c);
    report.members.iter().all(|m| {
        let fresh = match make_member(curve, report.q, m.k, &m.j) {
            Ok(f) => f,
            Err(_) => return false,
        };
        let norm = fresh.norm();
        let in_shell = norm >= report.r / 2.0 && norm < report.r;
        let in_class = fresh.h >= report.lambda / 2.0 && fresh.h < report.lambda;
        let reported_ok = (fresh.h - m.h).abs() <= 1e-9 * fresh.h.max(1.0);
        let witness_ok = fresh.residual <= 1e-8 * norm.max(1.0)
            && fresh.rho.iter().zip(&bounds).all(|(p, b)| p.abs() <= *b);
        in_shell && in_class && reported_ok && witness_ok
    })
}

/// Writes `q,R,lambda,j1..jn,H,witness_t,rho1..`, where `j1` is `k`.
pub fn write_level_sets_csv<W: Write>(n: usize, reports: &[LevelSetReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["q", "R", "lambda"].map(String::from).to_vec();
    header.extend((1..=n).map(|i| format!("j{i}")));
    header.extend(["H", "witness_t"].map(String::from));
    header.extend((1..n).map(|i| format!("rho{i}")));
    w.write_record(&header)?;
    for rep in reports {
        for m in &rep.members {
            let mut row = vec![rep.q.to_string(), rep.r.to_string(), rep.lambda.to_string(), m.k.to_string()];
            row.extend(m.j.iter().map(|x| x.to_string()));
            row.push(m.h.to_string());
            row.push(m.witness_t.to_string());
            row.extend(m.rho.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Lattice points within σ of `{Σ_r s_r G⁽ʳ⁾(t) : t ∈ [−2, 2], |s_r| ≤ T_r}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeNeighborhood {
    pub t_radii: Vec<f64>,
    pub sigma: f64,
    pub r: f64,
    pub lattice_members: Vec<Vec<i64>>,
    pub net_size: usize,
    /// Distinct lattice points examined.
    pub candidates: usize,
}

impl ConeNeighborhood {
    pub fn count(&self) -> usize {
        self.lattice_members.len()
    }

    /// `R ∏ T_r`
    pub fn volume_scale(&self) -> f64 {
        self.r * self.t_radii.iter().product::<f64>()
    }
}

/// Cap on lattice points visited by `cone_members`, summed over slabs.
pub const CONE_BUDGET: f64 = 2e8;

/// The plane piece `P_t = {Σ_r s_r G⁽ʳ⁾(t) : |s_r| ≤ T_r}` in adapted coordinates.
///
/// `G, …, G⁽ⁿ⁻²⁾` span `e₁(t)^⊥`, so `x = Σ s_r G⁽ʳ⁾ + u e₁` with `u = x·e₁`.
struct Slab {
    basis: Vec<Vec<f64>>,
    e1: Vec<f64>,
    /// Rows of the inverse of `[G … G⁽ⁿ⁻²⁾ e₁]`.
    inv: Vec<Vec<f64>>,
}

impl Slab {
    fn at(curve: &Curve, t: f64) -> Result<Slab> {
        let n = curve.n();
        let frame = curve.frenet_at(t)?;
        let basis = curve.dual_jet(t, n - 2)?;
        let mut cols = basis.clone();
        cols.push(frame.e[0].clone());
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let inv = linalg::inverse(&rows).ok_or(Error::Degenerate {
            what: "dual frame",
            t,
        })?;
        Ok(Slab {
            basis,
            e1: frame.e[0].clone(),
            inv,
        })
    }

    /// `dist(x, P_t)`, or `None` once it provably exceeds `cap`.
    fn distance(&self, x: &[f64], radii: &[f64], cap: f64) -> Option<f64> {
        let m = radii.len();
        let u = linalg::dot(&self.inv[m], x);
        if u.abs() > cap {
            return None;
        }
        let mut inside = true;
        for (r, row) in self.inv[..m].iter().enumerate() {
            let s = linalg::dot(row, x);
            let over = s.abs() - radii[r];
            if over > 0.0 {
                inside = false;
                // |s_r(x − p)| ≤ |row_r|·|x − p|
                if over / linalg::norm(row) > cap {
                    return None;
                }
            }
        }
        if inside {
            return Some(u.abs());
        }
        let d = box_distance(x, &self.basis, radii);
        (d <= cap).then_some(d)
    }

    /// Lattice points `x` with `|s_r(x)| ≤ T_r + reach|row_r|`, `|u(x)| ≤ reach`.
    fn for_each_candidate(&self, radii: &[f64], reach: f64, f: &mut impl FnMut(&[i64])) {
        let n = self.inv.len();
        let half: Vec<f64> = (0..n)
            .map(|i| {
                let base = if i < radii.len() { radii[i] } else { 0.0 };
                base + reach * linalg::norm(&self.inv[i])
            })
            .collect();
        let mut x = vec![0i64; n];
        scan(&self.inv, &half, 0, &mut x, f);
    }
}

/// Range of `x_k` over `{x : |A x|_i ≤ h_i}` with `x_0..x_{k−1}` fixed, by
/// enumerating vertices of the remaining polytope.
fn coordinate_range(a: &[Vec<f64>], half: &[f64], k: usize, x: &[i64]) -> Option<(f64, f64)> {
    let n = a.len();
    let m = n - k;
    // Constraint i: lo_i ≤ Σ_{j≥k} a_ij x_j ≤ hi_i.
    let fixed: Vec<f64> = a
        .iter()
        .map(|row| (0..k).map(|j| row[j] * x[j] as f64).sum())
        .collect();
    if m == 1 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let c = a[i][k];
            let (l, h) = (-half[i] - fixed[i], half[i] - fixed[i]);
            if c.abs() < 1e-300 {
                if l > 0.0 || h < 0.0 {
                    return None;
                }
                continue;
            }
            let (p, q) = if c > 0.0 { (l / c, h / c) } else { (h / c, l / c) };
            lo = lo.max(p);
            hi = hi.min(q);
        }
        return (lo <= hi).then_some((lo, hi));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut choice = Vec::with_capacity(m);
    choose(n, m, 0, &mut choice, &mut |rows: &[usize]| {
        let cols: Vec<Vec<f64>> = (k..n).map(|j| rows.iter().map(|&i| a[i][j]).collect()).collect();
        for signs in 0..(1usize << m) {
            let b: Vec<f64> = rows
                .iter()
                .enumerate()
                .map(|(p, &i)| {
                    let h = if signs >> p & 1 == 1 { half[i] } else { -half[i] };
                    h - fixed[i]
                })
                .collect();
            let Some(v) = linalg::solve_small(&cols, &b) else {
                return;
            };
            let feasible = (0..n).all(|i| {
                let val: f64 = fixed[i] + (k..n).map(|j| a[i][j] * v[j - k]).sum::<f64>();
                val.abs() <= half[i] * (1.0 + 1e-9) + 1e-9
            });
            if feasible {
                lo = lo.min(v[0]);
                hi = hi.max(v[0]);
            }
        }
    });
    (lo <= hi).then_some((lo, hi))
}

fn choose(n: usize, m: usize, from: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if acc.len() == m {
        f(acc);
        return;
    }
    for i in from..n {
        acc.push(i);
        choose(n, m, i + 1, acc, f);
        acc.pop();
    }
}

fn scan(a: &[Vec<f64>], half: &[f64], k: usize, x: &mut [i64], f: &mut impl FnMut(&[i64])) {
    let n = a.len();
    if k == n {
        f(x);
        return;
    }
    let Some((lo, hi)) = coordinate_range(a, half, k, x) else {
        return;
    };
    for v in (lo - 1e-9).ceil() as i64..=(hi + 1e-9).floor() as i64 {
        x[k] = v;
        scan(a, half, k + 1, x, f);
    }
    x[k] = 0;
}

/// `min_{|s_r| ≤ T_r} |x − Σ s_r b_r|` by enumerating active faces.
fn box_distance(x: &[f64], basis: &[Vec<f64>], radii: &[f64]) -> f64 {
    let m = basis.len();
    let total = 3usize.pow(m as u32);
    let mut best = f64::INFINITY;
    let mut state = vec![0u8; m];
    for code in 0..total {
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        // 0: free, 1: at −T, 2: at +T
        let mut resid = x.to_vec();
        for (r, &s) in state.iter().enumerate() {
            let fixed = match s {
                1 => -radii[r],
                2 => radii[r],
                _ => continue,
            };
            for (a, b) in resid.iter_mut().zip(&basis[r]) {
                *a -= fixed * b;
            }
        }
        let free: Vec<usize> = (0..m).filter(|&r| state[r] == 0).collect();
        if free.is_empty() {
            best = best.min(linalg::norm(&resid));
            continue;
        }
        // Normal equations on the free columns.
        let gram_cols: Vec<Vec<f64>> = free
            .iter()
            .map(|&a| free.iter().map(|&b| linalg::dot(&basis[a], &basis[b])).collect())
            .collect();
        let rhs: Vec<f64> = free.iter().map(|&a| linalg::dot(&basis[a], &resid)).collect();
        let Some(s) = linalg::solve_small(&gram_cols, &rhs) else {
            continue;
        };
        if s.iter().zip(&free).any(|(v, &r)| v.abs() > radii[r] * (1.0 + 1e-12)) {
            continue;
        }
        for (v, &r) in s.iter().zip(&free) {
            for (a, b) in resid.iter_mut().zip(&basis[r]) {
                *a -= v * b;
            }
        }
        best = best.min(linalg::norm(&resid));
    }
    best
}

/// Points `t_i` of `[−2, 2]` with `sup_{s∈ω(T)} |φ(t, s) − φ(t_i, s)| < σ/2` on each step.
fn t_net(curve: &Curve, radii: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let n = curve.n();
    let dom = EXTENSION;
    let lip = |t: f64| -> Result<f64> {
        let jet = curve.dual_jet(t, n - 1)?;
        Ok(radii
            .iter()
            .enumerate()
            .map(|(r, tr)| tr * linalg::norm(&jet[r + 1]))
            .sum::<f64>()
            .max(1e-9))
    };
    let mut ts = vec![dom.lo];
    let mut t = dom.lo;
    while t < dom.hi {
        let mut step = (sigma / (2.0 * 1.25 * lip(t)?)).min(dom.len() / 16.0);
        // Shrink until the bound also holds at the far end.
        while step * 1.25 * lip((t + step).min(dom.hi))? > sigma / 2.0 {
            step /= 2.0;
        }
        t = (t + step).min(dom.hi);
        ts.push(t);
    }
    Ok(ts)
}

/// Enumerates `𝓛_σ(T)` with `R = max T_r`.
pub fn cone_members(curve: &Curve, t_radii: &[f64], sigma: f64) -> Result<ConeNeighborhood> {
    cone_members_with_r(curve, t_radii, sigma, None)
}

fn check_cone_args(curve: &Curve, t_radii: &[f64], sigma: f64) -> Result<()> {
    let n = curve.n();
    if t_radii.len() != n - 1 {
        return invalid(format!("need {} box radii, got {}", n - 1, t_radii.len()));
    }
    if !(sigma >= 1.0) || t_radii.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return invalid("need sigma >= 1 and positive radii");
    }
    Ok(())
}

pub fn cone_members_with_r(curve: &Curve, t_radii: &[f64], sigma: f64, r: Option<f64>) -> Result<ConeNeighborhood> {
    check_cone_args(curve, t_radii, sigma)?;
    let n = curve.n();
    let r = r.unwrap_or_else(|| t_radii.iter().cloned().fold(0.0, f64::max));
    let ts = t_net(curve, t_radii, sigma)?;
    let slabs: Vec<Slab> = ts.iter().map(|&t| Slab::at(curve, t)).collect::<Result<_>>()?;
    let reach = 1.5 * sigma;
    // Each slab's candidate set is a parallelepiped.
    let est: f64 = slabs
        .iter()
        .map(|s| {
            let vol: f64 = (0..n)
                .map(|i| {
                    let base = if i < n - 1 { t_radii[i] } else { 0.0 };
                    2.0 * (base + reach * linalg::norm(&s.inv[i])) + 1.0
                })
                .product();
            vol / linalg::det(&s.inv).abs()
        })
        .sum();
    if est > CONE_BUDGET {
        return Err(Error::Budget {
            what: "cone candidates",
            needed: est,
            budget: CONE_BUDGET,
        });
    }
    // point → accepted, or the slabs at which it came within reach
    let mut seen: HashMap<Vec<i64>, Option<Vec<u32>>> = HashMap::new();
    let mut xf = vec![0.0; n];
    for (idx, slab) in slabs.iter().enumerate() {
        slab.for_each_candidate(t_radii, reach, &mut |x| {
            if let Some(None) = seen.get(x) {
                return;
            }
            for (a, &b) in xf.iter_mut().zip(x) {
                *a = b as f64;
            }
            match slab.distance(&xf, t_radii, reach) {
                Some(d) if d < sigma => {
                    seen.insert(x.to_vec(), None);
                }
                Some(_) => seen
                    .entry(x.to_vec())
                    .or_insert_with(|| Some(Vec::new()))
                    .as_mut()
                    .unwrap()
                    .push(idx as u32),
                None => {}
            }
        });
    }
    let candidates = seen.len();
    let pending: Vec<(Vec<i64>, Vec<u32>)> = seen
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|idx| (k.clone(), idx.clone())))
        .collect();
    // A point within σ of some P_t is within reach of every net slab next
    // to t, so one local search per run of consecutive slabs suffices.
    let rescued: Vec<Vec<i64>> = pending
        .par_iter()
        .filter(|(p, idxs)| {
            let x: Vec<f64> = p.iter().map(|&v| v as f64).collect();
            let mut runs: Vec<(usize, usize)> = Vec::new();
            for &i in idxs.iter() {
                let i = i as usize;
                match runs.last_mut() {
                    Some(run) if run.1 + 1 == i => run.1 = i,
                    _ => runs.push((i, i)),
                }
            }
            runs.iter().any(|&(a, b)| {
                let lo = ts[a.saturating_sub(1)];
                let hi = ts[(b + 1).min(ts.len() - 1)];
                min_over_t(curve, &x, t_radii, lo, hi) < sigma
            })
        })
        .map(|(p, _)| p.clone())
        .collect();
    let mut members: Vec<Vec<i64>> = seen
        .into_iter()
        .filter_map(|(k, v)| v.is_none().then_some(k))
        .chain(rescued)
        .collect();
    members.sort();
    Ok(ConeNeighborhood {
        t_radii: t_radii.to_vec(),
        sigma,
        r,
        lattice_members: members,
        net_size: ts.len(),
        candidates,
    })
}

/// `min_{t ∈ [lo, hi]} dist(x, P_t)` by a coarse scan and golden-section polish.
fn min_over_t(curve: &Curve, x: &[f64], radii: &[f64], lo: f64, hi: f64) -> f64 {
    let n = curve.n();
    let d = |t: f64| -> f64 {
        match curve.dual_jet(t, n - 2) {
            Ok(jet) => box_distance(x, &jet, radii),
            Err(_) => f64::INFINITY,
        }
    };
    const SCAN: usize = 8;
    let h = (hi - lo) / SCAN as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=SCAN {
        let t = lo + h * i as f64;
        let v = d(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if d(x1) <= d(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.0.min(d(0.5 * (a + b)))
}

/// Monte Carlo estimate of `Vol(𝓕_σ(T))` from uniform samples in its bounding box.
///
/// Membership is tested against the net slabs, which cover `𝓕_{σ/2}(T)` and
/// lie inside `𝓕_σ(T)`.
pub fn cone_volume_mc(curve: &Curve, t_radii: &[f64], sigma: f64, samples: usize, seed: u64) -> Result<f64> {
    check_cone_args(curve, t_radii, sigma)?;
    let n = curve.n();
    let ts = t_net(curve, t_radii, sigma)?;
    let slabs: Vec<Slab> = ts.iter().map(|&t| Slab::at(curve, t)).collect::<Result<_>>()?;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for s in &slabs {
        for i in 0..n {
            let ext: f64 = s.basis.iter().zip(t_radii).map(|(b, tr)| tr * b[i].abs()).sum();
            lo[i] = lo[i].min(-ext - sigma);
            hi[i] = hi[i].max(ext + sigma);
        }
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..n).map(|i| rng.gen_range(lo[i]..hi[i])).collect())
        .collect();
    let hits: usize = points
        .par_iter()
        .filter(|x| {
            slabs.iter().any(|s| {
                linalg::dot(x, &s.e1).abs() < sigma && s.distance(x, t_radii, sigma).is_some_and(|d| d < sigma)
            })
        })
        .count();
    Ok(box_vol * hits as f64 / samples as f64)
}

/// Matrix `[G⁽ʳ⁾(t)·e_s(t)]` for `r = 0..n−1`, `s = 1..n`.
pub fn dual_frame_matrix(curve: &Curve, t: f64) -> Result<Vec<Vec<f64>>> {
    let n = curve.n();
    let frame = curve.frenet_at(t)?;
    let jet = curve.dual_jet(t, n - 1)?;
    Ok(jet
        .iter()
        .map(|g| frame.e.iter().map(|e| linalg::dot(g, e)).collect())
        .collect())
}

/// `|∫ e^{2πiγ·ξ} w|` convenience for sweeps.
pub fn integral_abs(curve: &Curve, xi: &[f64], wts: &SmoothWeights, tol: f64) -> Result<f64> {
    curve_integral(curve, xi, wts, tol).map(|v: Complex64| v.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_of_simple_frequencies() {
        let c = Curve::moment(3).unwrap();
        assert!((h_functional(&c, &[1.0, 0.0, 0.0]).value - 1.0).abs() < 1e-12);
        let h = h_functional(&c, &[0.0, 0.0, 1.0]);
        assert!((h.value - 6f64.powf(1.0 / 3.0)).abs() < 1e-6);
        // The inner max is flat at 6^{1/3} for |t| ≤ 6^{-1/3}.
        assert!(h.argmin_t.abs() <= 6f64.powf(-1.0 / 3.0) + 1e-9);
        assert_eq!(h_functional(&c, &[0.0, 0.0, 0.0]).value, 0.0);
    }

    #[test]
    fn twisted_cubic_partition() {
        let c = Curve::moment(3).unwrap();
        let p = ack_partition_diagnostic(&c, &[0.0, 0.0, 1.0], 3).unwrap();
        assert!(p.len() <= 6, "{} pieces", p.len());
        assert_eq!(p.first().unwrap().lo, -1.0);
        assert_eq!(p.last().unwrap().hi, 1.0);
    }

    #[test]
    fn lambda_classes_bracket() {
        let g = LambdaGrid::new(3, 4, 8.0, 0.3);
        for &h in &[0.01, 0.5, 1.0, 3.7, 100.0] {
            let l = g.class_of(h);
            assert!(l / 2.0 <= h && h < l);
        }
    }

    #[test]
    fn witness_reconstructs() {
        let c = Curve::moment(3).unwrap();
        let v = [3.0, -5.0, 2.0];
        let (_, vn, res) = containment_witness(&c, &v, 0.3).unwrap();
        assert_eq!(vn, 2.0);
        assert!(res < 1e-10);
    }

    #[test]
    fn box_distance_of_interior_point() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!(box_distance(&[0.5, 0.5, 2.0], &basis, &[1.0, 1.0]) - 2.0 < 1e-12);
        let d = box_distance(&[3.0, 0.0, 0.0], &basis, &[1.0, 1.0]);
        assert!((d - 2.0).abs() < 1e-12);
    }
}
