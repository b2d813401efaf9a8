//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Determinant of a row-major square matrix.
pub fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

/// Solves `a x = b` for square `a` given by columns.
pub fn solve_columns(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let a = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let rhs = DVector::from_column_slice(b);
    a.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

/// As [`solve_columns`] by partial-pivot elimination, for tiny systems.
pub fn solve_small(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut a: Vec<f64> = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for (j, c) in cols.iter().enumerate() {
            a[i * (n + 1) + j] = c[i];
        }
        a[i * (n + 1) + n] = b[i];
    }
    let w = n + 1;
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x * w + k].abs().total_cmp(&a[y * w + k].abs()))?;
        if a[p * w + k].abs() <= 1e-14 * scale {
            return None;
        }
        if p != k {
            for j in 0..w {
                a.swap(k * w + j, p * w + j);
            }
        }
        for i in k + 1..n {
            let f = a[i * w + k] / a[k * w + k];
            if f != 0.0 {
                for j in k..w {
                    a[i * w + j] -= f * a[k * w + j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * w + j] * x[j]).sum();
        x[i] = (a[i * w + n] - s) / a[i * w + i];
    }
    Some(x)
}

/// Inverse of a row-major square matrix.
pub fn inverse(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = rows.len();
    let inv = DMatrix::from_fn(n, n, |i, j| rows[i][j]).try_inverse()?;
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Modified Gram-Schmidt with one reorthogonalisation pass. Returns the
/// orthonormal vectors and the diagonal of the triangular factor (all
/// positive), or `None` if some vector is dependent on its predecessors.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    let mut diag = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&w, e);
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi -= c * ei;
                }
            }
        }
        let r = norm(&w);
        if !(r > 1e-13 * scale.max(1.0)) {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= r);
        basis.push(w);
        diag.push(r);
    }
    Some((basis, diag))
}
