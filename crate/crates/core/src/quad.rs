//! Gauss–Legendre rules and an adaptive integrator for oscillatory
//! integrands `amp(t) · e^{2πi phase(t)}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `∫_a^b f` for a real integrand.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }
}

/// Gauss–Legendre rule with `m` points, by Newton iteration on `P_m`.
pub fn gauss_legendre(m: usize) -> Rule {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl16() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

pub fn gl32() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(32))
}

/// Limits for [`oscillatory`].
#[derive(Debug, Clone, Copy)]
pub struct OscOptions {
    pub tol: f64,
    pub max_panels: usize,
    /// Phase cycles allowed per initial panel.
    pub cycles_per_panel: f64,
}

impl OscOptions {
    pub fn new(tol: f64) -> Self {
        OscOptions {
            tol,
            max_panels: 1 << 18,
            // 32 nodes resolve π·32/4 radians, i.e. four cycles.
            cycles_per_panel: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OscOutcome {
    pub value: Complex64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// `∫_a^b amp(t) e^{2πi phase(t)} dt`, with `phase` in cycles.
pub fn oscillatory(
    a: f64,
    b: f64,
    amp: impl Fn(f64) -> f64,
    phase: impl Fn(f64) -> f64,
    opts: OscOptions,
) -> Result<OscOutcome> {
    if !(b > a) {
        return Ok(OscOutcome {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            panels: 0,
        });
    }
    let f = |t: f64| {
        let a = amp(t);
        if a == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(a, 2.0 * PI * phase(t))
        }
    };
    let mut panels = Vec::new();
    initial_partition(a, b, &phase, opts.cycles_per_panel, &mut panels);
    if panels.len() > opts.max_panels {
        return Err(Error::Budget {
            what: "oscillatory quadrature panels",
            needed: panels.len() as f64,
            budget: opts.max_panels as f64,
        });
    }
    let total = b - a;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut used = 0usize;
    let mut stack: Vec<(f64, f64)> = panels.into_iter().rev().collect();
    while let Some((lo, hi)) = stack.pop() {
        used += 1;
        if used > opts.max_panels {
            return Err(Error::Quadrature {
                estimate: err,
                panels: used,
            });
        }
        let whole = panel(gl32(), lo, hi, &f);
        let mid = (lo + hi) / 2.0;
        let halves = panel(gl16(), lo, mid, &f) + panel(gl16(), mid, hi, &f);
        let e = (whole - halves).norm();
        let local = opts.tol * (hi - lo) / total;
        if e <= local || hi - lo < 1e-12 * total {
            value += whole;
            err += e;
        } else {
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(OscOutcome {
        value,
        error_estimate: err,
        panels: used,
    })
}

fn panel(rule: &Rule, a: f64, b: f64, f: &impl Fn(f64) -> Complex64) -> Complex64 {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        s += f(c + h * x) * *w;
    }
    s * h
}

fn initial_partition(a: f64, b: f64, phase: &impl Fn(f64) -> f64, cycles: f64, out: &mut Vec<(f64, f64)>) {
    const PROBE: usize = 16;
    const START: usize = 64;
    let h = (b - a) / START as f64;
    for i in 0..START {
        let lo = a + h * i as f64;
        let hi = if i + 1 == START { b } else { lo + h };
        split_by_phase(lo, hi, phase, cycles, out, 0);
    }

    fn split_by_phase(
        lo: f64,
        hi: f64,
        phase: &impl Fn(f64) -> f64,
        cycles: f64,
        out: &mut Vec<(f64, f64)>,
        depth: usize,
    ) {
        let step = (hi - lo) / PROBE as f64;
        let (mut pmin, mut pmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut var = 0.0;
        let mut prev = phase(lo);
        for k in 0..=PROBE {
            let p = phase(lo + step * k as f64);
            pmin = pmin.min(p);
            pmax = pmax.max(p);
            var += (p - prev).abs();
            prev = p;
        }
        let spread = 1.25 * var.max(pmax - pmin);
        if spread <= cycles || depth > 40 {
            out.push((lo, hi));
            return;
        }
        let pieces = ((spread / cycles).ceil() as usize).clamp(2, 1 << 16);
        let h = (hi - lo) / pieces as f64;
        for i in 0..pieces {
            let a = lo + h * i as f64;
            let b = if i + 1 == pieces { hi } else { a + h };
            split_by_phase(a, b, phase, cycles, out, depth + 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let r = gauss_legendre(12);
        let v = r.integrate(-1.0, 2.0, |x| x.powi(23) - 3.0 * x.powi(4));
        let exact = (2f64.powi(24) - 1.0) / 24.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-8 * exact.abs());
        assert!((gl32().weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pure_oscillation() {
        // ∫_0^1 e^{2πi·100.5 t} dt
        let nu = 100.5;
        let out = oscillatory(0.0, 1.0, |_| 1.0, |t| nu * t, OscOptions::new(1e-12)).unwrap();
        let exact = (Complex64::from_polar(1.0, 2.0 * PI * nu) - 1.0) / Complex64::new(0.0, 2.0 * PI * nu);
        assert!((out.value - exact).norm() < 1e-12);
    }
}
