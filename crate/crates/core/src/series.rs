//! Truncated power series in one variable. Used for exact Taylor jets of the
//! dual curve and of the mollifier bump.

/// Coefficients c_0, c_1, ... of a series truncated at a fixed length.
pub type Series = Vec<f64>;

pub fn mul(a: &[f64], b: &[f64]) -> Series {
    let len = a.len().min(b.len());
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// a / b; requires b[0] != 0.
pub fn div(a: &[f64], b: &[f64]) -> Series {
    let len = a.len().min(b.len());
    let mut out = vec![0.0; len];
    for k in 0..len {
        let mut acc = a[k];
        for j in 1..=k {
            acc -= b[j] * out[k - j];
        }
        out[k] = acc / b[0];
    }
    out
}

/// exp(a)
pub fn exp(a: &[f64]) -> Series {
    let len = a.len();
    let mut out = vec![0.0; len];
    if len == 0 {
        return out;
    }
    out[0] = a[0].exp();
    // out' = a' out
    for k in 1..len {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * a[j] * out[k - j];
        }
        out[k] = acc / k as f64;
    }
    out
}

/// Determinant of a square matrix of series, by Laplace expansion along the
/// first column. Intended for the small sizes used here (at most 7x7).
pub fn det(m: &[Vec<Series>]) -> Series {
    let size = m.len();
    let len = m[0][0].len();
    if size == 1 {
        return m[0][0].clone();
    }
    let mut out = vec![0.0; len];
    for row in 0..size {
        if m[row][0].iter().all(|&c| c == 0.0) {
            continue;
        }
        let minor: Vec<Vec<Series>> = m
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != row)
            .map(|(_, r)| r[1..].to_vec())
            .collect();
        let term = mul(&m[row][0], &det(&minor));
        let sign = if row % 2 == 0 { 1.0 } else { -1.0 };
        for (o, t) in out.iter_mut().zip(term) {
            *o += sign * t;
        }
    }
    out
}

/// n-th derivative values from series coefficients: k! c_k.
pub fn derivatives(s: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    s.iter()
        .enumerate()
        .map(|(k, &c)| {
            if k > 0 {
                fact *= k as f64;
            }
            c * fact
        })
        .collect()
}
