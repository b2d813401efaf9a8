//! Univariate polynomials with double coefficients and an optional exact
//! rational shadow used by the exact lattice-distance path.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
    exact: Option<Vec<Rational>>,
}

impl Poly {
    /// Builds from ascending-power double coefficients. Coefficients that are
    /// small dyadic rationals (integers included) also get an exact shadow.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let exact = coeffs.iter().map(|&c| dyadic(c)).collect::<Option<Vec<_>>>();
        let mut p = Poly { coeffs, exact };
        p.trim();
        p
    }

    pub fn from_rationals(coeffs: Vec<Rational>) -> Self {
        let f = coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect();
        let mut p = Poly {
            coeffs: f,
            exact: Some(coeffs),
        };
        p.trim();
        p
    }

    /// t^k
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Poly::new(c)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
            if let Some(e) = self.exact.as_mut() {
                e.pop();
            }
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
            if let Some(e) = self.exact.as_mut() {
                e.push(Rational::zero());
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&[Rational]> {
        self.exact.as_deref()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// r-th derivative at t.
    pub fn deriv(&self, t: f64, r: usize) -> f64 {
        let d = self.degree();
        if r > d {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in (r..=d).rev() {
            acc = acc * t + self.coeffs[k] * falling(k, r);
        }
        acc
    }

    /// Taylor coefficients a_m of p(t + s) = sum a_m s^m, for m < len.
    pub fn taylor(&self, t: f64, len: usize) -> Vec<f64> {
        let mut work = self.coeffs.clone();
        let d = work.len();
        let mut out = Vec::with_capacity(len);
        // repeated synthetic division by (x - t)
        for m in 0..len {
            if m >= d {
                out.push(0.0);
                continue;
            }
            for i in (m..d - 1).rev() {
                let hi = work[i + 1];
                work[i] += t * hi;
            }
            out.push(work[m]);
        }
        out
    }

    /// Coefficients of the derivative polynomial.
    pub fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly::new(vec![0.0]);
        }
        match &self.exact {
            Some(e) => Poly::from_rationals(
                e.iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| c * Rational::from_integer(k as i128))
                    .collect(),
            ),
            None => Poly::new(
                self.coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| c * k as f64)
                    .collect(),
            ),
        }
    }
}

/// k (k-1) ... (k-r+1)
pub(crate) fn falling(k: usize, r: usize) -> f64 {
    ((k - r + 1)..=k).fold(1.0, |acc, x| acc * x as f64)
}

fn dyadic(c: f64) -> Option<Rational> {
    if !c.is_finite() || c.abs() >= 2f64.powi(60) {
        return None;
    }
    let mut den: i128 = 1;
    let mut x = c;
    for _ in 0..=24 {
        if x.fract() == 0.0 && x.abs() < 2f64.powi(100) {
            return Some(Rational::new(x as i128, den));
        }
        x *= 2.0;
        den *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_cubic() {
        let p = Poly::monomial(3);
        assert_eq!(p.deriv(2.0, 0), 8.0);
        assert_eq!(p.deriv(2.0, 1), 12.0);
        assert_eq!(p.deriv(2.0, 2), 12.0);
        assert_eq!(p.deriv(2.0, 3), 6.0);
        assert_eq!(p.deriv(2.0, 4), 0.0);
    }

    #[test]
    fn taylor_matches_derivatives() {
        let p = Poly::new(vec![1.0, -2.0, 0.5, 3.0, 0.25]);
        let t = 0.7;
        let a = p.taylor(t, 6);
        let mut fact = 1.0;
        for (m, am) in a.iter().enumerate() {
            if m > 0 {
                fact *= m as f64;
            }
            assert!((am * fact - p.deriv(t, m)).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn dyadic_shadow() {
        let p = Poly::new(vec![0.5, 3.0, 0.1]);
        assert!(p.exact().is_none());
        let p = Poly::new(vec![0.5, 3.0, -0.25]);
        let e = p.exact().unwrap();
        assert_eq!(e[2], Rational::new(-1, 4));
    }
}
