//! Smooth cutoff weights built from the bump `b(v) = exp(−1/(1−v²))`.
//!
//! The profile `φ = 1_{[−h,h]} ∗ b_ρ` with `h = 3/4`, `ρ = 1/4` is supported
//! in [−1, 1] and equal to 1 on [−1/2, 1/2]. The minus weights use `φ(s)`,
//! the plus weights `φ(s/2)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::Interval;
use crate::quad::{gl16, gl32};
use crate::series;

/// Half-width of the indicator that is mollified.
pub const HALF_WIDTH: f64 = 0.75;
/// Radius of the mollifying bump.
pub const BUMP_RADIUS: f64 = 0.25;

const TABLE_INTERVALS: usize = 1024;
const MAX_JET: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Minus,
    Plus,
}

impl Kind {
    /// Dilation applied to the base profile.
    pub fn scale(self) -> f64 {
        match self {
            Kind::Minus => 1.0,
            Kind::Plus => 2.0,
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minus" | "-" => Ok(Kind::Minus),
            "plus" | "+" => Ok(Kind::Plus),
            _ => Err(format!("unknown weight kind {s:?}, expected minus or plus")),
        }
    }
}

/// Profile parameters of the one-dimensional mollifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileShape {
    pub half_width: f64,
    pub bump_radius: f64,
}

impl Default for ProfileShape {
    fn default() -> Self {
        ProfileShape {
            half_width: HALF_WIDTH,
            bump_radius: BUMP_RADIUS,
        }
    }
}

/// The weight pair `(w, η)` used by the smoothed counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothWeights {
    pub phi_shape: ProfileShape,
    pub kind_w: Kind,
    pub kind_eta: Kind,
}

impl SmoothWeights {
    pub fn new(kind_w: Kind, kind_eta: Kind) -> Self {
        SmoothWeights {
            phi_shape: ProfileShape::default(),
            kind_w,
            kind_eta,
        }
    }

    pub fn minus() -> Self {
        Self::new(Kind::Minus, Kind::Minus)
    }

    pub fn plus() -> Self {
        Self::new(Kind::Plus, Kind::Plus)
    }

    pub fn w(&self, t: f64) -> f64 {
        profile(t / self.kind_w.scale())
    }

    /// `w^{(m)}(t)`.
    pub fn w_deriv(&self, t: f64, m: usize) -> f64 {
        let s = self.kind_w.scale();
        profile_deriv(t / s, m) / s.powi(m as i32)
    }

    /// Support radius of `w`.
    pub fn w_radius(&self) -> f64 {
        self.kind_w.scale()
    }

    /// Support radius of each factor of `η`.
    pub fn eta_radius(&self) -> f64 {
        self.kind_eta.scale()
    }

    pub fn eta_factor(&self, y: f64) -> f64 {
        profile(y / self.kind_eta.scale())
    }

    pub fn eta(&self, y: &[f64]) -> f64 {
        y.iter().map(|&v| self.eta_factor(v)).product()
    }

    /// `∫ w(t) e^{−2πitξ} dt`, real since `w` is even.
    pub fn w_hat(&self, xi: f64) -> f64 {
        let s = self.kind_w.scale();
        s * profile_hat(s * xi)
    }

    /// One factor of `η̂`.
    pub fn eta_hat_factor(&self, xi: f64) -> f64 {
        let s = self.kind_eta.scale();
        s * profile_hat(s * xi)
    }

    /// `η̂(ξ) = ∫ η(y) e^{−2πi y·ξ} dy`.
    pub fn eta_hat(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(xi.iter().map(|&x| self.eta_hat_factor(x)).product(), 0.0)
    }

    /// `‖w^{(m)}‖₁`.
    pub fn w_norm(&self, m: usize) -> f64 {
        let s = self.kind_w.scale();
        s * profile_norm(m) / s.powi(m as i32)
    }

    /// `‖φ_η^{(m)}‖₁` for one factor of `η`.
    pub fn eta_factor_norm(&self, m: usize) -> f64 {
        let s = self.kind_eta.scale();
        s * profile_norm(m) / s.powi(m as i32)
    }

    /// Rigorous upper bound for `Σ_{j > J} |φ̂_η(δj)|` (one side, integer `j`).
    pub fn eta_hat_tail(&self, delta: f64, cutoff: usize) -> f64 {
        if cutoff == 0 {
            return f64::INFINITY;
        }
        let j = cutoff as f64;
        (2..=MAX_JET)
            .map(|m| {
                let c = self.eta_factor_norm(m);
                let mf = m as f64;
                // Σ_{j>J} j^{−m} ≤ J^{1−m}/(m−1)
                c * (2.0 * PI * delta).powf(-mf) * j.powf(1.0 - mf) / (mf - 1.0)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for SmoothWeights {
    fn default() -> Self {
        Self::minus()
    }
}

/// `w` carried to a parameter interval `I` by `t ↦ w((t − mid)/half)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainWeight {
    pub wts: SmoothWeights,
    pub mid: f64,
    pub half: f64,
}

impl DomainWeight {
    pub fn new(wts: SmoothWeights, domain: Interval) -> Self {
        DomainWeight {
            wts,
            mid: (domain.lo + domain.hi) / 2.0,
            half: domain.len() / 2.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.wts.w((t - self.mid) / self.half)
    }

    pub fn deriv(&self, t: f64, m: usize) -> f64 {
        self.wts.w_deriv((t - self.mid) / self.half, m) / self.half.powi(m as i32)
    }

    /// Closed support of the weight.
    pub fn support(&self) -> Interval {
        let r = self.wts.w_radius() * self.half;
        Interval::new(self.mid - r, self.mid + r)
    }

    /// Interval on which the weight equals 1.
    pub fn plateau(&self) -> Interval {
        let r = self.wts.w_radius() * self.half * (HALF_WIDTH - BUMP_RADIUS);
        Interval::new(self.mid - r, self.mid + r)
    }

    /// `‖w^{(m)}‖₁` in the parameter variable.
    pub fn norm(&self, m: usize) -> f64 {
        self.wts.w_norm(m) * self.half.powi(1 - m as i32)
    }

    /// `∫ w(t) e^{−2πitξ} dt`.
    pub fn hat(&self, xi: f64) -> Complex64 {
        Complex64::from_polar(self.half * self.wts.w_hat(self.half * xi), -2.0 * PI * self.mid * xi)
    }
}

/// `b(v)` on (−1, 1), zero outside.
pub fn bump(v: f64) -> f64 {
    if v.abs() < 1.0 {
        (-1.0 / (1.0 - v * v)).exp()
    } else {
        0.0
    }
}

/// Taylor coefficients of `b(v + s)` in `s` up to order `len − 1`.
pub fn bump_taylor(v: f64, len: usize) -> Vec<f64> {
    if v.abs() >= 1.0 {
        return vec![0.0; len];
    }
    // −1/(1−x²) = −½ [1/(1−x) + 1/(1+x)]
    let (a, c) = (1.0 / (1.0 - v), 1.0 / (1.0 + v));
    let mut pa = a;
    let mut pc = c;
    let mut g = Vec::with_capacity(len);
    for k in 0..len {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        g.push(-0.5 * (pa + sign * pc));
        pa *= a;
        pc *= c;
    }
    series::exp(&g)
}

/// `b^{(m)}(v)`.
pub fn bump_deriv(v: f64, m: usize) -> f64 {
    let t = bump_taylor(v, m + 1);
    t[m] * (1..=m).map(|k| k as f64).product::<f64>()
}

struct Tables {
    z: f64,
    /// Normalised cumulative integral at the table nodes.
    cdf: Vec<f64>,
    /// `‖b^{(k)}‖₁` for `k < MAX_JET`.
    deriv_norms: Vec<f64>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let h = 2.0 / TABLE_INTERVALS as f64;
        let mut cum = vec![0.0; TABLE_INTERVALS + 1];
        for i in 0..TABLE_INTERVALS {
            let lo = -1.0 + h * i as f64;
            cum[i + 1] = cum[i] + gl16().integrate(lo, lo + h, bump);
        }
        let z = cum[TABLE_INTERVALS];
        let cdf = cum.iter().map(|c| c / z).collect();
        let mut deriv_norms = vec![0.0; MAX_JET];
        let fine = 4 * TABLE_INTERVALS;
        let hf = 2.0 / fine as f64;
        for i in 0..fine {
            let lo = -1.0 + hf * i as f64;
            let rule = gl32();
            let (c, hh) = (lo + hf / 2.0, hf / 2.0);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = bump_taylor(c + hh * x, MAX_JET);
                let mut fact = 1.0;
                for (k, dn) in deriv_norms.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *dn += hh * w * (t[k] * fact).abs();
                }
            }
        }
        Tables { z, cdf, deriv_norms }
    })
}

/// `∫_{−1}^{1} b`.
pub fn bump_mass() -> f64 {
    tables().z
}

/// Normalised bump distribution function `F(u) = Z⁻¹∫_{−1}^{u} b`.
fn bump_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let tb = tables();
    let h = 2.0 / TABLE_INTERVALS as f64;
    let x = (u + 1.0) / h;
    let i = (x.floor() as usize).min(TABLE_INTERVALS - 1);
    let s = x - i as f64;
    let (v0, v1) = (-1.0 + h * i as f64, -1.0 + h * (i + 1) as f64);
    let d0 = bump_taylor(v0, 2);
    let d1 = bump_taylor(v1, 2);
    // Quintic Hermite with F, F′ = b/Z, F″ = b′/Z at both ends.
    let (f0, f1) = (tb.cdf[i], tb.cdf[i + 1]);
    let (g0, g1) = (h * d0[0] / tb.z, h * d1[0] / tb.z);
    let (k0, k1) = (h * h * d0[1] / tb.z, h * h * d1[1] / tb.z);
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    f0 * h00 + f1 * h01 + g0 * h10 + g1 * h11 + k0 * h20 + k1 * h21
}

/// Base profile `φ(s) = F((s+h)/ρ) − F((s−h)/ρ)`.
pub fn profile(s: f64) -> f64 {
    let a = s.abs();
    if a <= HALF_WIDTH - BUMP_RADIUS {
        return 1.0;
    }
    if a >= HALF_WIDTH + BUMP_RADIUS {
        return 0.0;
    }
    // Only the outer edge is active; use the complementary form for accuracy.
    (1.0 - bump_cdf((a - HALF_WIDTH) / BUMP_RADIUS)).clamp(0.0, 1.0)
}

/// `φ^{(m)}(s)`.
pub fn profile_deriv(s: f64, m: usize) -> f64 {
    if m == 0 {
        return profile(s);
    }
    let z = tables().z;
    let r = BUMP_RADIUS;
    let scale = r.powi(-(m as i32)) / z;
    scale * (bump_deriv((s + HALF_WIDTH) / r, m - 1) - bump_deriv((s - HALF_WIDTH) / r, m - 1))
}

/// `‖φ^{(m)}‖₁`.
pub fn profile_norm(m: usize) -> f64 {
    if m == 0 {
        return 2.0 * HALF_WIDTH;
    }
    let tb = tables();
    assert!(m <= MAX_JET, "profile_norm supports m <= {MAX_JET}");
    2.0 * BUMP_RADIUS.powi(1 - m as i32) * tb.deriv_norms[m - 1] / tb.z
}

/// `B(ζ) = Z⁻¹∫ b(v) cos(2πvζ) dv`.
pub fn bump_hat(zeta: f64) -> f64 {
    let z = tables().z;
    let panels = (8.0 + 4.0 * zeta.abs()).ceil() as usize;
    let h = 2.0 / panels as f64;
    let mut s = 0.0;
    for i in 0..panels {
        let lo = -1.0 + h * i as f64;
        s += gl32().integrate(lo, lo + h, |v| bump(v) * (2.0 * PI * v * zeta).cos());
    }
    s / z
}

/// `φ̂(ξ) = ∫ φ(s) e^{−2πisξ} ds`.
pub fn profile_hat(xi: f64) -> f64 {
    let box_part = if xi == 0.0 {
        2.0 * HALF_WIDTH
    } else {
        (2.0 * PI * HALF_WIDTH * xi).sin() / (PI * xi)
    };
    box_part * bump_hat(BUMP_RADIUS * xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    #[test]
    fn plateau_and_support() {
        assert_eq!(profile(0.0), 1.0);
        assert_eq!(profile(0.5), 1.0);
        assert_eq!(profile(1.0), 0.0);
        assert!((profile(0.75) - 0.5).abs() < 1e-14);
        let w = SmoothWeights::plus();
        assert_eq!(w.w(1.0), 1.0);
        assert_eq!(w.w(2.0), 0.0);
    }

    #[test]
    fn cdf_table_matches_direct_quadrature() {
        let rule = gauss_legendre(64);
        let z = bump_mass();
        for &u in &[-0.93, -0.4, 0.0, 0.1234, 0.77] {
            let direct = rule.integrate(-1.0, u, bump) / z;
            assert!((bump_cdf(u) - direct).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for &s in &[0.6, 0.8, -0.9] {
            let h = 1e-5;
            let fd = (profile(s + h) - profile(s - h)) / (2.0 * h);
            assert!((profile_deriv(s, 1) - fd).abs() < 1e-7);
            let fd2 = (profile_deriv(s + h, 2) - profile_deriv(s - h, 2)) / (2.0 * h);
            assert!((profile_deriv(s, 3) - fd2).abs() < 1e-4 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn transform_matches_quadrature() {
        let rule = gauss_legendre(32);
        for &xi in &[0.0, 0.3, 1.7, 4.0] {
            let mut s = 0.0;
            let panels = 400;
            let h = 2.0 / panels as f64;
            for i in 0..panels {
                let lo = -1.0 + h * i as f64;
                s += rule.integrate(lo, lo + h, |x| profile(x) * (2.0 * PI * x * xi).cos());
            }
            assert!((profile_hat(xi) - s).abs() < 1e-11, "xi = {xi}");
        }
    }

    #[test]
    fn first_derivative_norm_is_total_variation() {
        assert!((profile_norm(1) - 2.0).abs() < 1e-10);
    }
}
