//! Poisson-summation side of the smoothed count: `η̂`, exponential sums,
//! the oscillatory integrals `I(q; k, j) = ∫ w(t) e^{2πi q(f(t)·j − tk)} dt`
//! and their assembly into the main term plus error sum.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::counting::{pairwise_sum, parameter_range, ScaledGraph};
use crate::curve::{Curve, Interval};
use crate::error::{invalid, Error, Result};
use crate::geometry::{self, LambdaGrid};
use crate::poly::falling;
use crate::quad::{self, OscOptions};
use crate::weights::{DomainWeight, SmoothWeights};

/// Cap on the total number of trapezoid samples in one `fourier_count`.
pub const SAMPLE_BUDGET: f64 = 2e11;
/// Cap on ledger rows.
pub const LEDGER_BUDGET: usize = 4_000_000;

/// Frequencies `(k, j)` with `0 < ‖j‖∞ ≤ J` and `|k| ≤ K`.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencySet {
    pub n: usize,
    pub q: u64,
    pub delta: f64,
    pub eps: f64,
    pub m_gamma: f64,
    /// `⌊q^ε/δ⌋`
    pub j_max: i64,
    /// `⌊M_γ q^ε/δ⌋`
    pub k_max: i64,
}

impl FrequencySet {
    pub fn new(curve: &Curve, q: u64, delta: f64, eps: f64) -> Result<Self> {
        if q == 0 {
            return invalid("q must be at least 1");
        }
        if !(delta > 0.0) || !(eps > 0.0) {
            return invalid(format!("need delta > 0 and eps > 0, got delta = {delta}, eps = {eps}"));
        }
        let scale = (q as f64).powf(eps) / delta;
        Ok(FrequencySet {
            n: curve.n(),
            q,
            delta,
            eps,
            m_gamma: curve.m_gamma(),
            j_max: scale.floor() as i64,
            k_max: (curve.m_gamma() * scale).floor() as i64,
        })
    }

    /// Number of `j` vectors.
    pub fn j_count(&self) -> u64 {
        (2 * self.j_max as u64 + 1).pow(self.n as u32 - 1) - 1
    }

    /// `|𝐉|`
    pub fn len(&self) -> u64 {
        self.j_count() * (2 * self.k_max as u64 + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.j_max == 0
    }

    pub fn contains(&self, k: i64, j: &[i64]) -> bool {
        let inf = j.iter().map(|x| x.abs()).max().unwrap_or(0);
        inf > 0 && inf <= self.j_max && k.abs() <= self.k_max
    }

    /// All `j` in lexicographic order.
    pub fn j_vectors(&self) -> Vec<Vec<i64>> {
        let m = self.n - 1;
        let side = (2 * self.j_max + 1) as usize;
        let total = side.pow(m as u32);
        let mut out = Vec::with_capacity(total - 1);
        for idx in 0..total {
            let mut rem = idx;
            let mut j = vec![0i64; m];
            for slot in j.iter_mut().rev() {
                *slot = (rem % side) as i64 - self.j_max;
                rem /= side;
            }
            if j.iter().any(|&x| x != 0) {
                out.push(j);
            }
        }
        out
    }

    /// Members `(k, j)` with `lo ≤ |(k, j)| < hi`, in lexicographic order.
    pub fn members_in_shell(&self, lo: f64, hi: f64) -> Vec<(i64, Vec<i64>)> {
        let mut out = Vec::new();
        for j in self.j_vectors() {
            let jj: f64 = j.iter().map(|&x| (x * x) as f64).sum();
            if jj >= hi * hi {
                continue;
            }
            let kk_max = (hi * hi - jj).sqrt().ceil() as i64;
            let kr = kk_max.min(self.k_max);
            for k in -kr..=kr {
                let r2 = (k * k) as f64 + jj;
                if r2 >= lo * lo && r2 < hi * hi {
                    out.push((k, j.clone()));
                }
            }
        }
        out.sort();
        out
    }
}

/// `η̂(ξ)`.
pub fn eta_hat(wts: &SmoothWeights, xi: &[f64]) -> Complex64 {
    wts.eta_hat(xi)
}

/// `Σ_a w(a/q) e^{2πi q f(a/q)·j}`.
pub fn exp_sum(curve: &Curve, q: u64, j: &[i64], wts: &SmoothWeights) -> Result<Complex64> {
    if q == 0 {
        return invalid("q must be at least 1");
    }
    if j.len() != curve.n() - 1 {
        return invalid(format!("j must have {} components", curve.n() - 1));
    }
    let dw = DomainWeight::new(*wts, curve.domain());
    let sg = ScaledGraph::new(curve, q);
    let (lo, hi) = parameter_range(dw.support(), q);
    let mut off = vec![0.0; j.len()];
    let mut s = Complex64::new(0.0, 0.0);
    for a in lo..=hi {
        let w = dw.eval(a as f64 / q as f64);
        if w == 0.0 {
            continue;
        }
        sg.offsets(a, &mut off);
        let ph: f64 = off.iter().zip(j).map(|(o, &ji)| o * ji as f64).sum();
        s += Complex64::from_polar(w, 2.0 * PI * ph.rem_euclid(1.0));
    }
    Ok(s)
}

/// `∫ w(t) e^{2πi q(f(t)·j − tk)} dt` to absolute accuracy `tol`.
pub fn osc_integral(curve: &Curve, q: u64, k: i64, j: &[i64], wts: &SmoothWeights, tol: f64) -> Result<Complex64> {
    if j.len() != curve.n() - 1 {
        return invalid(format!("j must have {} components", curve.n() - 1));
    }
    let mut xi = Vec::with_capacity(curve.n());
    xi.push(-(q as f64) * k as f64);
    xi.extend(j.iter().map(|&x| q as f64 * x as f64));
    curve_integral(curve, &xi, wts, tol)
}

/// `∫ w(t) e^{2πi γ(t)·ξ} dt`.
pub fn curve_integral(curve: &Curve, xi: &[f64], wts: &SmoothWeights, tol: f64) -> Result<Complex64> {
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    if xi.len() != curve.n() {
        return invalid(format!("xi must have {} components", curve.n()));
    }
    let dw = DomainWeight::new(*wts, curve.domain());
    let supp = dw.support();
    let phase = phase_poly(curve, xi);
    let out = quad::oscillatory(
        supp.lo,
        supp.hi,
        |t| dw.eval(t),
        |t| horner(&phase, t),
        OscOptions::new(tol),
    )?;
    Ok(out.value)
}

/// Coefficients of `γ(t)·ξ`.
fn phase_poly(curve: &Curve, xi: &[f64]) -> Vec<f64> {
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

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * t + x)
}

/// Sampled beyond-cutoff integrals for one `j`.
#[derive(Debug, Clone, Serialize)]
pub struct TailCheck {
    pub cutoff: i64,
    /// Estimated `Σ_{|k| ≥ cutoff} |I(q; k, j)|`.
    pub tail: f64,
    /// `tail · qⁿ`
    pub constant: f64,
    /// Largest sampled `|I| / envelope`.
    pub max_envelope_ratio: f64,
    pub samples: Vec<(i64, f64, f64)>,
}

/// Envelope `(q·||k| − K/2|)^{−n}` for the beyond-cutoff integrals.
pub fn tail_envelope(n: usize, q: u64, k: i64, cutoff: i64) -> f64 {
    let d = (k.abs() as f64 - cutoff as f64 / 2.0).abs();
    (q as f64 * d).powi(-(n as i32))
}

pub fn poisson_tail_check(
    curve: &Curve,
    q: u64,
    j: &[i64],
    wts: &SmoothWeights,
    delta: f64,
    eps: f64,
) -> Result<TailCheck> {
    let fs = FrequencySet::new(curve, q, delta, eps)?;
    let inf = j.iter().map(|x| x.abs()).max().unwrap_or(0);
    if inf > fs.j_max.max(1) {
        return invalid(format!("‖j‖∞ = {inf} exceeds q^eps/delta = {}", fs.j_max));
    }
    let cutoff = fs.k_max.max(1);
    let n = curve.n();
    const PER_SIDE: usize = 24;
    let mut ks: Vec<i64> = (0..PER_SIDE)
        .map(|i| {
            let x = (cutoff as f64) * 4f64.powf(i as f64 / (PER_SIDE - 1) as f64);
            x.round() as i64
        })
        .collect();
    ks.dedup();
    let mut samples = Vec::new();
    let tol = 1e-15;
    for &k in &ks {
        for s in [1i64, -1] {
            let kk = s * k;
            let v = osc_integral(curve, q, kk, j, wts, tol)?.norm();
            samples.push((kk, v, tail_envelope(n, q, kk, cutoff)));
        }
    }
    let max_ratio = samples.iter().map(|(_, v, e)| v / e).fold(0.0, f64::max);
    // Trapezoid over the sampled k on each side, then the envelope beyond.
    let mut tail = 0.0;
    for side in [1i64, -1] {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(k, _, _)| k.signum() == side)
            .map(|(k, v, _)| (k.abs() as f64, *v))
            .collect();
        tail += pts[0].1;
        for w in pts.windows(2) {
            tail += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        let last = pts.last().unwrap().0 as i64;
        let c = max_ratio.max(1e-300);
        let d0 = last as f64 - cutoff as f64 / 2.0;
        // Σ_{k > last} (q(k − K/2))^{−n} ≤ ∫_{d0}^{∞} (q x)^{−n} dx
        tail += c * (q as f64).powi(-(n as i32)) * d0.powi(1 - n as i32) / (n as f64 - 1.0);
    }
    Ok(TailCheck {
        cutoff,
        tail,
        constant: tail * (q as f64).powi(n as i32),
        max_envelope_ratio: max_ratio,
        samples,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct FourierOptions {
    pub tol: f64,
    /// Record every computed `(k, j)` integral.
    pub ledger: bool,
    /// Evaluate only half of the `j` and use `I(−k, −j) = conj I(k, j)`.
    pub symmetric: bool,
    pub sample_budget: f64,
}

impl FourierOptions {
    pub fn new(tol: f64) -> Self {
        FourierOptions {
            tol,
            ledger: false,
            symmetric: true,
            sample_budget: SAMPLE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub k: i64,
    pub j: Vec<i64>,
    pub eta_hat: f64,
    #[serde(skip)]
    pub integral: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourierDecomposition {
    pub n: usize,
    pub q: u64,
    pub delta: f64,
    pub eps: f64,
    /// `η̂(0) δ^{n−1} Σ_a w(a/q)`
    pub main_term: f64,
    pub c0: f64,
    pub error_sum: f64,
    /// Imaginary part of the assembled error sum.
    pub error_sum_imag: f64,
    /// `main_term + error_sum`
    pub total: f64,
    pub tail_bound: f64,
    pub tail_j: f64,
    pub tail_k: f64,
    pub frequencies: u64,
    pub integrals_computed: u64,
    pub tol: f64,
    #[serde(skip)]
    pub per_frequency: Option<Vec<LedgerEntry>>,
}

impl FourierDecomposition {
    /// `|𝐉|·tol + tail_bound`.
    pub fn allowed_discrepancy(&self) -> f64 {
        self.tail_bound + self.frequencies as f64 * self.tol
    }
}

struct Grid {
    /// `w(t_m)`
    w: Vec<f64>,
    /// `q f_i(t_m) mod 1`, component-major.
    frac: Vec<Vec<f64>>,
    /// `e^{2πi q f_last(t_m)}`
    step: Vec<Complex64>,
}

struct Context<'a> {
    curve: &'a Curve,
    dw: DomainWeight,
    q: u64,
    supp: Interval,
    /// Derivative coefficients of each component.
    dcoef: Vec<Vec<f64>>,
    tmax: f64,
    guard_w: f64,
    k_max: i64,
    grids: Mutex<HashMap<usize, Arc<Grid>>>,
}

impl<'a> Context<'a> {
    fn grid(&self, p: usize) -> Arc<Grid> {
        if let Some(g) = self.grids.lock().unwrap().get(&p) {
            return g.clone();
        }
        let qf = self.q as f64;
        let m = (self.supp.len() * qf * p as f64).ceil() as usize;
        let dt = 1.0 / (qf * p as f64);
        let ts: Vec<f64> = (0..m).map(|i| self.supp.lo + dt * i as f64).collect();
        let w = ts.iter().map(|&t| self.dw.eval(t)).collect();
        let frac: Vec<Vec<f64>> = self
            .curve
            .components()
            .iter()
            .map(|f| ts.iter().map(|&t| (qf * f.eval(t)).rem_euclid(1.0)).collect())
            .collect();
        let step = frac
            .last()
            .unwrap()
            .iter()
            .map(|&x| Complex64::from_polar(1.0, 2.0 * PI * x))
            .collect();
        let g = Arc::new(Grid { w, frac, step });
        self.grids.lock().unwrap().insert(p, g.clone());
        g
    }

    /// Range of `f′(t)·j` over the support and the guard width in `k`.
    fn band(&self, j: &[i64]) -> (f64, f64, f64) {
        let deg = self.dcoef.iter().map(|c| c.len()).max().unwrap_or(1);
        let mut u = vec![0.0; deg];
        for (c, &ji) in self.dcoef.iter().zip(j) {
            for (uk, ck) in u.iter_mut().zip(c) {
                *uk += ji as f64 * ck;
            }
        }
        const SAMPLES: usize = 64;
        let h = self.supp.len() / SAMPLES as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=SAMPLES {
            let v = horner(&u, self.supp.lo + h * i as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // sup |u^{(r)}| from the coefficients
        let sup = |r: usize| -> f64 {
            u.iter()
                .enumerate()
                .skip(r)
                .map(|(k, c)| c.abs() * falling(k, r) * self.tmax.powi((k - r) as i32))
                .sum()
        };
        let pad = sup(1) * h / 2.0;
        let qf = self.q as f64;
        let mut guard = self.guard_w / qf + 2.0;
        for r in 2..deg.max(2) {
            let a = sup(r) / (1..=r).map(|x| x as f64).product::<f64>();
            if a > 0.0 {
                guard += 12.0 * a.powf(1.0 / (r as f64 + 1.0)) * qf.powf(-(r as f64) / (r as f64 + 1.0));
            }
        }
        (lo - pad, hi + pad, guard)
    }

    fn k_window(&self, j: &[i64]) -> (i64, i64, f64, f64) {
        let (lo, hi, g) = self.band(j);
        let kl = ((lo - g).ceil() as i64).max(-self.k_max);
        let kh = ((hi + g).floor() as i64).min(self.k_max);
        (kl, kh, lo, hi)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(p: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|pl| pl.borrow_mut().plan_fft_forward(p))
}

/// Smallest `2^a 3^b 5^c ≥ x`.
pub fn fft_size(x: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * x.max(1) {
        let mut p3 = p2;
        while p3 < 2 * x.max(1) {
            let mut p5 = p3;
            while p5 < x {
                p5 *= 5;
            }
            best = best.min(p5);
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

/// Smallest `ν` with `|ŵ(ν′)| ≤ tol` for all `ν′ ≥ ν`, from the derivative norms.
fn weight_frequency_cutoff(dw: &DomainWeight, tol: f64) -> f64 {
    let bound = |nu: f64| -> f64 {
        (2..=16)
            .map(|m| dw.norm(m) / (2.0 * PI * nu).powi(m as i32))
            .fold(f64::INFINITY, f64::min)
    };
    let mut nu = 1.0;
    while bound(nu) > tol && nu < 1e7 {
        nu *= 1.05;
    }
    nu
}

/// `main term + δ^{n−1} q Σ_{(k,j)∈𝐉} η̂(δj) I(q; k, j)`.
pub fn fourier_count(
    curve: &Curve,
    q: u64,
    delta: f64,
    eps: f64,
    wts: &SmoothWeights,
    tol: f64,
) -> Result<FourierDecomposition> {
    fourier_count_with(curve, q, delta, eps, wts, &FourierOptions::new(tol))
}

pub fn fourier_count_with(
    curve: &Curve,
    q: u64,
    delta: f64,
    eps: f64,
    wts: &SmoothWeights,
    opts: &FourierOptions,
) -> Result<FourierDecomposition> {
    if !(delta > 0.0 && delta <= 0.25) {
        return invalid(format!("delta must lie in (0, 1/4], got {delta}"));
    }
    if !(opts.tol > 0.0) {
        return invalid("tol must be positive");
    }
    let fs = FrequencySet::new(curve, q, delta, eps)?;
    let n = curve.n();
    let m = n - 1;
    let qf = q as f64;
    let dw = DomainWeight::new(*wts, curve.domain());
    let supp = dw.support();

    // Main term.
    let (alo, ahi) = parameter_range(supp, q);
    let wsum_terms: Vec<f64> = (alo..=ahi).map(|a| dw.eval(a as f64 / qf)).collect();
    let wsum = pairwise_sum(&wsum_terms);
    let eta0 = wts.eta_hat_factor(0.0).powi(m as i32);
    let dn = delta.powi(m as i32);
    let main_term = eta0 * dn * wsum;

    let big_j = fs.j_max;
    let eta1: Vec<f64> = (-big_j..=big_j).map(|j| wts.eta_hat_factor(delta * j as f64)).collect();
    let eta_at = |j: i64| eta1[(j + big_j) as usize];

    let ctx = Context {
        curve,
        dw,
        q,
        supp,
        dcoef: curve
            .components()
            .iter()
            .map(|p| p.derivative().coeffs().to_vec())
            .collect(),
        tmax: supp.lo.abs().max(supp.hi.abs()),
        guard_w: weight_frequency_cutoff(&dw, opts.tol * 1e-3),
        k_max: fs.k_max,
        grids: Mutex::new(HashMap::new()),
    };

    // Lines: all prefixes (j_1..j_{m−1}); the last coordinate runs along the line.
    let side = (2 * big_j + 1) as usize;
    let prefixes: Vec<Vec<i64>> = (0..side.pow(m as u32 - 1))
        .map(|idx| {
            let mut rem = idx;
            let mut p = vec![0i64; m - 1];
            for slot in p.iter_mut().rev() {
                *slot = (rem % side) as i64 - big_j;
                rem /= side;
            }
            p
        })
        .filter(|p| {
            if !opts.symmetric {
                return true;
            }
            match p.iter().find(|&&x| x != 0) {
                Some(&x) => x > 0,
                None => true,
            }
        })
        .collect();

    let line_start = |p: &[i64]| -> i64 {
        if opts.symmetric && p.iter().all(|&x| x == 0) {
            1
        } else {
            -big_j
        }
    };

    // Plan FFT sizes and check the budget.
    let plans: Vec<(usize, i64)> = prefixes
        .par_iter()
        .map(|p| {
            let start = line_start(p);
            let mut width = 1i64;
            let mut j = p.clone();
            j.push(0);
            for jn in start..=big_j {
                j[m - 1] = jn;
                if j.iter().all(|&x| x == 0) {
                    continue;
                }
                let (kl, kh, _, _) = ctx.k_window(&j);
                width = width.max(kh - kl + 1);
            }
            (fft_size(width as usize), start)
        })
        .collect();
    let samples: f64 = plans
        .iter()
        .map(|&(p, start)| (supp.len() * qf * p as f64).ceil() * (big_j - start + 1) as f64)
        .sum();
    if samples > opts.sample_budget {
        return Err(Error::Budget {
            what: "fourier_count trapezoid samples",
            needed: samples,
            budget: opts.sample_budget,
        });
    }
    log::info!(
        "fourier_count: q = {q}, delta = {delta}, eps = {eps}, J = {big_j}, K = {}, {} lines, {samples:.3e} samples",
        fs.k_max,
        prefixes.len()
    );

    struct LineOut {
        sum: Complex64,
        tail_k: f64,
        eta_abs: f64,
        computed: u64,
        ledger: Vec<LedgerEntry>,
    }

    let w0 = dw.norm(0);
    let w1 = dw.norm(1);
    let w2 = dw.norm(2);
    let two_pi_q2 = (2.0 * PI * qf).powi(2);
    // Σ_{k beyond the window} of the twice-integrated-by-parts bound.
    let ibp_tail = |g: f64, a1: f64, a2: f64| -> f64 {
        let g = g.max(1.0);
        let b = |d: f64| (w2 / (d * d) + (3.0 * w1 * a1 + w0 * a2) / d.powi(3) + 3.0 * w0 * a1 * a1 / d.powi(4)) / two_pi_q2;
        let integral = (w2 / g + (3.0 * w1 * a1 + w0 * a2) / (2.0 * g * g) + w0 * a1 * a1 / g.powi(3)) / two_pi_q2;
        2.0 * (b(g) + integral)
    };

    let lines: Vec<LineOut> = prefixes
        .par_iter()
        .zip(plans.par_iter())
        .map(|(prefix, &(p, start))| {
            let grid = ctx.grid(p);
            let fft = plan(p);
            let mlen = grid.w.len();
            let mut cur: Vec<Complex64> = (0..mlen)
                .map(|i| {
                    let mut ph = 0.0;
                    for (c, &ji) in prefix.iter().enumerate() {
                        ph += ji as f64 * grid.frac[c][i];
                    }
                    ph += start as f64 * grid.frac[m - 1][i];
                    Complex64::from_polar(grid.w[i], 2.0 * PI * ph.rem_euclid(1.0))
                })
                .collect();
            let mut fold = vec![Complex64::new(0.0, 0.0); p];
            let dt = 1.0 / (qf * p as f64);
            let mut out = LineOut {
                sum: Complex64::new(0.0, 0.0),
                tail_k: 0.0,
                eta_abs: 0.0,
                computed: 0,
                ledger: Vec::new(),
            };
            let eta_prefix: f64 = prefix.iter().map(|&x| eta_at(x)).product();
            let mut j = prefix.clone();
            j.push(0);
            for jn in start..=big_j {
                j[m - 1] = jn;
                if j.iter().any(|&x| x != 0) {
                    fold.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                    for (i, v) in cur.iter().enumerate() {
                        fold[i % p] += *v;
                    }
                    fft.process(&mut fold);
                    let (kl, kh, ulo, uhi) = ctx.k_window(&j);
                    let eta = eta_prefix * eta_at(jn);
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in kl..=kh {
                        let idx = k.rem_euclid(p as i64) as usize;
                        let corr = Complex64::from_polar(dt, -2.0 * PI * (qf * k as f64 * supp.lo).rem_euclid(1.0));
                        let ik = fold[idx] * corr;
                        s += ik;
                        if opts.ledger {
                            out.ledger.push(LedgerEntry {
                                k,
                                j: j.clone(),
                                eta_hat: eta,
                                integral: ik,
                            });
                        }
                    }
                    out.computed += (kh - kl + 1).max(0) as u64;
                    out.sum += s * eta;
                    // Beyond the window the stationary set is at distance ≥ g.
                    let g = ((ulo - kl as f64).min(kh as f64 - uhi)).max(0.0);
                    let (a1, a2) = second_third_sup(&ctx, &j);
                    out.tail_k += eta.abs() * ibp_tail(g, a1, a2);
                    out.eta_abs += eta.abs();
                }
                for (c, st) in cur.iter_mut().zip(&grid.step) {
                    *c *= *st;
                }
            }
            out
        })
        .collect();

    let sums: Vec<f64> = lines.iter().map(|l| l.sum.re).collect();
    let sums_im: Vec<f64> = lines.iter().map(|l| l.sum.im).collect();
    let factor = if opts.symmetric { 2.0 } else { 1.0 };
    let error_sum = factor * dn * qf * pairwise_sum(&sums);
    let error_sum_imag = if opts.symmetric { 0.0 } else { dn * qf * pairwise_sum(&sums_im) };
    let tail_k = factor * dn * qf * pairwise_sum(&lines.iter().map(|l| l.tail_k).collect::<Vec<_>>());
    let computed = factor as u64 * lines.iter().map(|l| l.computed).sum::<u64>();

    // j outside the box: δ^{n−1} Σw (S_all^{m} − S_in^{m}).
    let s_in: f64 = eta1.iter().map(|x| x.abs()).sum();
    let s_all = s_in + 2.0 * wts.eta_hat_tail(delta, big_j.max(0) as usize);
    let tail_j = dn * wsum * (s_all.powi(m as i32) - s_in.powi(m as i32));

    let ledger = if opts.ledger {
        let rows: usize = lines.iter().map(|l| l.ledger.len()).sum();
        if rows > LEDGER_BUDGET {
            return Err(Error::Budget {
                what: "ledger rows",
                needed: rows as f64,
                budget: LEDGER_BUDGET as f64,
            });
        }
        let mut v: Vec<LedgerEntry> = lines.into_iter().flat_map(|l| l.ledger).collect();
        v.sort_by(|a, b| (&a.j, a.k).cmp(&(&b.j, b.k)));
        Some(v)
    } else {
        None
    };

    Ok(FourierDecomposition {
        n,
        q,
        delta,
        eps,
        main_term,
        c0: eta0 * wsum / qf,
        error_sum,
        error_sum_imag,
        total: main_term + error_sum,
        tail_bound: tail_j + tail_k,
        tail_j,
        tail_k,
        frequencies: fs.len(),
        integrals_computed: computed,
        tol: opts.tol,
        per_frequency: ledger,
    })
}

/// `sup |f″·j|` and `sup |f‴·j|` over the support.
fn second_third_sup(ctx: &Context<'_>, j: &[i64]) -> (f64, f64) {
    let mut a = [0.0; 2];
    for (c, &ji) in ctx.dcoef.iter().zip(j) {
        for (r, slot) in a.iter_mut().enumerate() {
            let r = r + 1;
            *slot += (ji as f64).abs()
                * c.iter()
                    .enumerate()
                    .skip(r)
                    .map(|(k, x)| x.abs() * falling(k, r) * ctx.tmax.powi((k - r) as i32))
                    .sum::<f64>();
        }
    }
    (a[0], a[1])
}

/// Dyadic shell `R` with `R/2 ≤ r < R`.
pub fn dyadic_shell(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    2f64.powi(r.log2().floor() as i32 + 1)
}

/// Writes `k,j1,...,eta_hat,re_I,im_I,H_value,shell_R,lambda_class`.
pub fn write_ledger_csv<W: Write>(curve: &Curve, q: u64, entries: &[LedgerEntry], floor_c: f64, out: W) -> Result<()> {
    let m = curve.n() - 1;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend((1..=m).map(|i| format!("j{i}")));
    header.extend(["eta_hat", "re_I", "im_I", "H_value", "shell_R", "lambda_class"].map(String::from));
    w.write_record(&header)?;
    let rows: Vec<Vec<String>> = entries
        .par_iter()
        .map(|e| {
            let h = geometry::h_of_frequency(curve, q, e.k, &e.j).value;
            let norm = ((e.k * e.k) as f64 + e.j.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
            let r = dyadic_shell(norm);
            let lam = LambdaGrid::new(curve.n(), q, r, floor_c).class_of(h);
            let mut row = vec![e.k.to_string()];
            row.extend(e.j.iter().map(|x| x.to_string()));
            row.push(e.eta_hat.to_string());
            row.push(e.integral.re.to_string());
            row.push(e.integral.im.to_string());
            row.push(h.to_string());
            row.push(r.to_string());
            row.push(lam.to_string());
            row
        })
        .collect();
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Near/far organisation of the error-sum bound.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaSplit {
    pub near: f64,
    pub far: f64,
    pub near_members: u64,
    pub far_members: u64,
    pub shells: Vec<f64>,
}

pub fn sigma_split(curve: &Curve, q: u64, delta: f64, eps: f64) -> Result<SigmaSplit> {
    sigma_split_with(curve, q, delta, eps, geometry::DEFAULT_FLOOR_C)
}

pub fn sigma_split_with(curve: &Curve, q: u64, delta: f64, eps: f64, floor_c: f64) -> Result<SigmaSplit> {
    if !(delta > 0.0 && delta <= 0.25) {
        return invalid(format!("delta must lie in (0, 1/4], got {delta}"));
    }
    let fs = FrequencySet::new(curve, q, delta, eps)?;
    let n = curve.n();
    let qf = q as f64;
    let r_top = 2.0 * fs.m_gamma * qf.powf(eps) / delta;
    let mut shells = Vec::new();
    let mut r = 2.0;
    while r / 2.0 <= r_top {
        shells.push(r);
        r *= 2.0;
    }
    let per_shell: Vec<(f64, f64, u64, u64)> = shells
        .iter()
        .map(|&rr| {
            let members = fs.members_in_shell(rr / 2.0, rr);
            let grid = LambdaGrid::new(n, q, rr, floor_c);
            let thresh = (qf * rr).sqrt();
            let hs: Vec<f64> = members
                .par_iter()
                .map(|(k, j)| geometry::h_of_frequency(curve, q, *k, j).value)
                .collect();
            let mut near = Vec::new();
            let mut far_count = 0u64;
            for h in hs {
                let lam = grid.class_of(h);
                if lam <= thresh {
                    near.push(1.0 / lam);
                } else {
                    far_count += 1;
                }
            }
            let far = if far_count > 0 {
                rr.powi(n as i32) / thresh
            } else {
                0.0
            };
            (pairwise_sum(&near), far, near.len() as u64, far_count)
        })
        .collect();
    let scale = delta.powi(n as i32 - 1) * qf;
    Ok(SigmaSplit {
        near: scale * pairwise_sum(&per_shell.iter().map(|x| x.0).collect::<Vec<_>>()),
        far: scale * pairwise_sum(&per_shell.iter().map(|x| x.1).collect::<Vec<_>>()),
        near_members: per_shell.iter().map(|x| x.2).sum(),
        far_members: per_shell.iter().map(|x| x.3).sum(),
        shells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_sizes_are_smooth() {
        assert_eq!(fft_size(1), 1);
        assert_eq!(fft_size(7), 8);
        assert_eq!(fft_size(121), 125);
        assert_eq!(fft_size(1000), 1000);
        assert_eq!(fft_size(1001), 1024);
    }

    #[test]
    fn zero_frequency_integral_is_mass() {
        let c = Curve::moment(3).unwrap();
        let w = SmoothWeights::minus();
        let v = osc_integral(&c, 5, 0, &[0, 0], &w, 1e-12).unwrap();
        assert!((v.re - 1.5).abs() < 1e-10 && v.im.abs() < 1e-12);
    }

    #[test]
    fn frequency_set_size() {
        let c = Curve::moment(3).unwrap();
        let fs = FrequencySet::new(&c, 10, 0.25, 0.3).unwrap();
        assert_eq!(fs.j_max, 7);
        assert_eq!(fs.j_count(), 15 * 15 - 1);
        assert_eq!(fs.j_vectors().len() as u64, fs.j_count());
    }
}
