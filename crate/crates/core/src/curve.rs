//! Polynomial space curves in graph form `γ(t) = (t, f₂(t), …, fₙ(t))`.

use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::poly::{Poly, Rational};
use crate::series::{self, Series};

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    /// `m + 1` equally spaced points from `lo` to `hi`.
    pub fn grid(&self, m: usize) -> impl Iterator<Item = f64> + '_ {
        let h = self.len() / m as f64;
        (0..=m).map(move |i| if i == m { self.hi } else { self.lo + h * i as f64 })
    }
}

/// The extension interval on which nondegeneracy is checked.
pub const EXTENSION: Interval = Interval::new(-2.0, 2.0);

/// Default counting interval.
pub const DEFAULT_DOMAIN: Interval = Interval::new(-1.0, 1.0);

/// Largest dimension for which the dual curve jets are supported.
pub const MAX_DUAL_DIM: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct CurveOptions {
    pub max_degree: usize,
    pub grid: usize,
    pub refine_rounds: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            max_degree: 16,
            grid: 4096,
            refine_rounds: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Curve {
    n: usize,
    components: Vec<Poly>,
    domain: Interval,
    min_wronskian: f64,
    min_last_frenet: f64,
    m_gamma: f64,
    name: String,
}

/// Frenet frame at a parameter value.
#[derive(Debug, Clone)]
pub struct FrenetFrame {
    pub t: f64,
    /// `e[r]` is the unit vector `e_{r+1}(t)`.
    pub e: Vec<Vec<f64>>,
    /// `kappa_tilde[r]` couples `e_{r+1}` and `e_{r+2}`.
    pub kappa_tilde: Vec<f64>,
    /// `G(t) = e_n(t) / e_{n,n}(t)`.
    pub big_g: Vec<f64>,
    /// First `n − 1` entries of `G`.
    pub g: Vec<f64>,
}

impl Curve {
    pub fn new(components: Vec<Poly>, domain: Interval) -> Result<Self> {
        Self::with_options(components, domain, CurveOptions::default())
    }

    pub fn with_options(components: Vec<Poly>, domain: Interval, opts: CurveOptions) -> Result<Self> {
        let n = components.len() + 1;
        if n < 3 {
            return invalid(format!("ambient dimension must be at least 3, got {n}"));
        }
        if !(domain.lo < domain.hi) || !EXTENSION.contains(domain.lo) || !EXTENSION.contains(domain.hi) {
            return invalid(format!("domain [{}, {}] must be a nonempty subinterval of [-2, 2]", domain.lo, domain.hi));
        }
        for (i, p) in components.iter().enumerate() {
            if p.degree() > opts.max_degree {
                return invalid(format!("component f{} has degree {} > {}", i + 2, p.degree(), opts.max_degree));
            }
            if p.coeffs().iter().any(|c| !c.is_finite()) {
                return invalid(format!("component f{} has a non-finite coefficient", i + 2));
            }
        }
        let mut c = Curve {
            n,
            components,
            domain,
            min_wronskian: 0.0,
            min_last_frenet: 0.0,
            m_gamma: 0.0,
            name: "custom".into(),
        };
        c.min_wronskian = c.check_nonvanishing("Wronskian", opts, |c, t| c.wronskian(t))?;
        c.min_last_frenet = c.check_nonvanishing("e_{n,n}", opts, |c, t| c.last_frenet_component(t))?;
        c.m_gamma = 2.0
            * EXTENSION
                .grid(4 * opts.grid)
                .map(|t| c.components.iter().map(|f| f.deriv(t, 1).abs()).sum::<f64>())
                .fold(0.0, f64::max);
        Ok(c)
    }

    pub fn moment(n: usize) -> Result<Self> {
        if n < 3 {
            return invalid(format!("moment curve needs n >= 3, got {n}"));
        }
        let comps = (2..=n).map(Poly::monomial).collect();
        let mut c = Curve::new(comps, DEFAULT_DOMAIN)?;
        c.name = format!("moment{n}");
        Ok(c)
    }

    pub fn with_domain(&self, domain: Interval) -> Result<Self> {
        let mut c = Curve::new(self.components.clone(), domain)?;
        c.name = self.name.clone();
        Ok(c)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn from_spec(spec: &CurveSpec) -> Result<Self> {
        let domain = match spec.domain {
            Some([lo, hi]) => Interval::new(lo, hi),
            None => DEFAULT_DOMAIN,
        };
        if let Some(m) = spec.moment {
            let c = Curve::moment(m)?;
            return if domain == DEFAULT_DOMAIN { Ok(c) } else { c.with_domain(domain) };
        }
        let coeffs = match &spec.coeffs {
            Some(c) => c,
            None => return invalid("curve spec needs either \"moment\" or \"coeffs\""),
        };
        if let Some(n) = spec.n {
            if coeffs.len() + 1 != n {
                return invalid(format!("curve spec has n = {n} but {} coefficient lists", coeffs.len()));
            }
        }
        let comps = coeffs
            .iter()
            .map(|list| {
                let parsed = list.iter().map(Coefficient::parse).collect::<Result<Vec<_>>>()?;
                if parsed.iter().all(|p| p.1.is_some()) {
                    Ok(Poly::from_rationals(parsed.into_iter().map(|p| p.1.unwrap()).collect()))
                } else {
                    Ok(Poly::new(parsed.into_iter().map(|p| p.0).collect()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut c = Curve::new(comps, domain)?;
        if let Some(name) = &spec.name {
            c.name = name.clone();
        }
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CurveSpec = serde_json::from_str(text)?;
        Curve::from_spec(&spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Curve::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Graph components `f₂, …, fₙ`.
    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn min_wronskian(&self) -> f64 {
        self.min_wronskian
    }

    pub fn min_last_frenet(&self) -> f64 {
        self.min_last_frenet
    }

    /// `2 sup_{[-2,2]} ‖f′(t)‖₁`.
    pub fn m_gamma(&self) -> f64 {
        self.m_gamma
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n);
        v.push(t);
        v.extend(self.components.iter().map(|f| f.eval(t)));
        v
    }

    /// `f(t)` without the leading parameter coordinate.
    pub fn graph(&self, t: f64) -> Vec<f64> {
        self.components.iter().map(|f| f.eval(t)).collect()
    }

    /// `γ^{(r)}(t)` for `1 ≤ r ≤ n`.
    pub fn derivative(&self, t: f64, r: usize) -> Result<Vec<f64>> {
        if r == 0 || r > self.n {
            return invalid(format!("derivative order {r} outside 1..={}", self.n));
        }
        Ok(self.deriv_any(t, r))
    }

    /// `γ^{(r)}(t)` for any order, including 0.
    pub fn deriv_any(&self, t: f64, r: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n);
        v.push(match r {
            0 => t,
            1 => 1.0,
            _ => 0.0,
        });
        v.extend(self.components.iter().map(|f| f.deriv(t, r)));
        v
    }

    /// `det[γ′(t) … γ⁽ⁿ⁾(t)]`.
    pub fn wronskian(&self, t: f64) -> f64 {
        // The first row is (1, 0, …, 0), so expand along it.
        let m: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|f| (2..=self.n).map(|r| f.deriv(t, r)).collect())
            .collect();
        linalg::det(&m)
    }

    fn derivative_columns(&self, t: f64, upto: usize) -> Vec<Vec<f64>> {
        (1..=upto).map(|r| self.deriv_any(t, r)).collect()
    }

    fn last_frenet_component(&self, t: f64) -> f64 {
        let n_vec = self.cofactor_vector(t);
        n_vec[self.n - 1] / linalg::norm(&n_vec)
    }

    /// Generalised cross product `N` of `γ′, …, γ⁽ⁿ⁻¹⁾`, characterised by
    /// `det[γ′, …, γ⁽ⁿ⁻¹⁾, x] = N · x`.
    pub fn cofactor_vector(&self, t: f64) -> Vec<f64> {
        let cols = self.derivative_columns(t, self.n - 1);
        let n = self.n;
        (0..n)
            .map(|i| {
                let minor: Vec<Vec<f64>> = (0..n)
                    .filter(|&row| row != i)
                    .map(|row| cols.iter().map(|c| c[row]).collect())
                    .collect();
                let sign = if (i + n - 1) % 2 == 0 { 1.0 } else { -1.0 };
                sign * linalg::det(&minor)
            })
            .collect()
    }

    fn check_nonvanishing(
        &self,
        what: &'static str,
        opts: CurveOptions,
        f: impl Fn(&Curve, f64) -> f64,
    ) -> Result<f64> {
        let pts: Vec<f64> = EXTENSION.grid(opts.grid).collect();
        let vals: Vec<f64> = pts.iter().map(|&t| f(self, t)).collect();
        let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 1..vals.len() {
            if vals[i - 1].signum() != vals[i].signum() || vals[i] == 0.0 {
                return Err(Error::Degenerate { what, t: pts[i] });
            }
        }
        let (mut i_min, mut v_min) = (0, f64::INFINITY);
        for (i, v) in vals.iter().enumerate() {
            if v.abs() < v_min {
                v_min = v.abs();
                i_min = i;
            }
        }
        let mut t_min = pts[i_min];
        let mut h = EXTENSION.len() / opts.grid as f64;
        for _ in 0..opts.refine_rounds {
            h /= 2.0;
            for t in [t_min - h, t_min + h] {
                if EXTENSION.contains(t) {
                    let v = f(self, t);
                    if v.signum() != vals[i_min].signum() {
                        return Err(Error::Degenerate { what, t });
                    }
                    if v.abs() < v_min {
                        v_min = v.abs();
                        t_min = t;
                    }
                }
            }
        }
        if !(v_min > 1e-9 * max) {
            return Err(Error::Degenerate { what, t: t_min });
        }
        Ok(v_min)
    }

    pub fn frenet_at(&self, t: f64) -> Result<FrenetFrame> {
        let cols = self.derivative_columns(t, self.n);
        let (e, diag) = linalg::gram_schmidt(&cols).ok_or(Error::Degenerate {
            what: "derivative matrix",
            t,
        })?;
        // Differentiating e_r = (γ⁽ʳ⁾ − Σ_{s<r} a_{sr} e_s)/a_rr and pairing with
        // e_{r+1} leaves only a_{r+1,r+1}/a_rr.
        let kappa_tilde = (0..self.n - 1).map(|r| diag[r + 1] / diag[r]).collect();
        let last = &e[self.n - 1];
        let enn = last[self.n - 1];
        if enn == 0.0 {
            return Err(Error::Degenerate { what: "e_{n,n}", t });
        }
        let mut big_g: Vec<f64> = last.iter().map(|x| x / enn).collect();
        big_g[self.n - 1] = 1.0;
        let g = big_g[..self.n - 1].to_vec();
        Ok(FrenetFrame {
            t,
            e,
            kappa_tilde,
            big_g,
            g,
        })
    }

    /// Largest deviation between central-difference frame derivatives and
    /// the Frenet–Serret system.
    pub fn frenet_serret_residual(&self, t: f64, h: f64) -> Result<f64> {
        if !(h > 0.0) || !EXTENSION.contains(t - h) || !EXTENSION.contains(t + h) {
            return invalid(format!("need h > 0 and t ± h inside [-2, 2], got t = {t}, h = {h}"));
        }
        let f0 = self.frenet_at(t)?;
        let fp = self.frenet_at(t + h)?;
        let fm = self.frenet_at(t - h)?;
        let n = self.n;
        let mut worst = 0.0f64;
        for r in 0..n {
            let mut res = 0.0;
            for i in 0..n {
                let fd = (fp.e[r][i] - fm.e[r][i]) / (2.0 * h);
                let mut rhs = 0.0;
                if r > 0 {
                    rhs -= f0.kappa_tilde[r - 1] * f0.e[r - 1][i];
                }
                if r + 1 < n {
                    rhs += f0.kappa_tilde[r] * f0.e[r + 1][i];
                }
                res += (fd - rhs).powi(2);
            }
            worst = worst.max(res.sqrt());
        }
        Ok(worst)
    }

    /// `G⁽ʳ⁾(t)` for `r = 0..=order`, from the power series of `N(t+s)/N_n(t+s)`.
    pub fn dual_jet(&self, t: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        if n > MAX_DUAL_DIM {
            return invalid(format!("dual curve jets support n <= {MAX_DUAL_DIM}, got {n}"));
        }
        let len = order + 1;
        let taylors: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|f| f.taylor(t, len + n))
            .collect();
        // entry(row i, column r) = series of γ_i^{(r)}(t+s)
        let entry = |i: usize, r: usize| -> Series {
            if i == 0 {
                let mut s = vec![0.0; len];
                if r == 1 {
                    s[0] = 1.0;
                }
                return s;
            }
            let a = &taylors[i - 1];
            (0..len)
                .map(|m| {
                    let k = r + m;
                    let c = a.get(k).copied().unwrap_or(0.0);
                    c * falling_ratio(k, m)
                })
                .collect()
        };
        let cofactor: Vec<Series> = (0..n)
            .map(|i| {
                let minor: Vec<Vec<Series>> = (0..n)
                    .filter(|&row| row != i)
                    .map(|row| (1..n).map(|r| entry(row, r)).collect())
                    .collect();
                let d = series::det(&minor);
                if (i + n - 1) % 2 == 0 {
                    d
                } else {
                    d.iter().map(|x| -x).collect()
                }
            })
            .collect();
        let denom = &cofactor[n - 1];
        if denom[0] == 0.0 {
            return Err(Error::Degenerate { what: "e_{n,n}", t });
        }
        let quotients: Vec<Vec<f64>> = cofactor
            .iter()
            .map(|c| series::derivatives(&series::div(c, denom)))
            .collect();
        Ok((0..len)
            .map(|r| {
                let mut v: Vec<f64> = quotients.iter().map(|q| q[r]).collect();
                v[n - 1] = if r == 0 { 1.0 } else { 0.0 };
                v
            })
            .collect())
    }

    /// `det[g′(t) … g⁽ⁿ⁻¹⁾(t)]`.
    pub fn dual_wronskian(&self, t: f64) -> Result<f64> {
        let jet = self.dual_jet(t, self.n - 1)?;
        let m: Vec<Vec<f64>> = (0..self.n - 1)
            .map(|i| (1..self.n).map(|r| jet[r][i]).collect())
            .collect();
        Ok(linalg::det(&m))
    }

    /// `sup_{t∈I} |γ⁽ʳ⁾(t)|` estimated on a grid, for `r = 0..=order`.
    pub fn derivative_bounds(&self, order: usize) -> Vec<f64> {
        (0..=order)
            .map(|r| {
                self.domain
                    .grid(2048)
                    .map(|t| linalg::norm(&self.deriv_any(t, r)))
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// `k! / m!` for `k ≥ m`.
fn falling_ratio(k: usize, m: usize) -> f64 {
    ((m + 1)..=k).map(|x| x as f64).product()
}

/// JSON curve description.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Vec<Coefficient>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A coefficient given as a JSON number or as a `"p/q"` string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Text(String),
}

impl Coefficient {
    fn parse(&self) -> Result<(f64, Option<Rational>)> {
        match self {
            Coefficient::Number(x) => Ok((*x, Poly::new(vec![*x]).exact().map(|e| e[0]))),
            Coefficient::Text(s) => {
                let s = s.trim();
                let (num, den) = match s.split_once('/') {
                    Some((a, b)) => (a.trim(), b.trim()),
                    None => (s, "1"),
                };
                match (num.parse::<i128>(), den.parse::<i128>()) {
                    (Ok(p), Ok(q)) if !q.is_zero() => {
                        let r = Rational::new(p, q);
                        Ok((p as f64 / q as f64, Some(r)))
                    }
                    _ => match s.parse::<f64>() {
                        Ok(x) => Ok((x, None)),
                        Err(_) => invalid(format!("cannot parse coefficient {s:?}")),
                    },
                }
            }
        }
    }
}
