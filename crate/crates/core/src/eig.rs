//! Hermitian eigensolver: complex Householder reduction to a real symmetric
//! tridiagonal matrix, then implicit QL iterations.
//!
//! Accuracy target is 1e-9 on reconstruction for the operator sizes used in
//! this crate (up to a few thousand rows). This is the numerical floor for
//! every positivity check.

use crate::error::{Error, Result};
use crate::matrix::{tol, ComplexMatrix, C64, ONE, ZERO};

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.col(k)
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        scaled.matmul(&self.vectors.dagger())
    }
}

fn hermitian_input(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let residual = m.hermiticity_residual();
    let scale = m.max_abs().max(1.0);
    if residual > tol::HERMITICITY * scale {
        return Err(Error::NotHermitian { residual });
    }
    Ok(m.hermitian_part())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Eigen> {
    let a = hermitian_input(m)?;
    let (diag, off, q) = tridiagonalize(a, true);
    let q = q.expect("requested transform");
    let n = diag.len();
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    let values = tql2(diag, off, Some(&mut z))?;
    // vectors = Q Z, with z stored transposed (row k = eigenvector k).
    let mut vectors = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let qrow = q.row(r);
        for (k, zk) in z.iter().enumerate() {
            let mut acc = ZERO;
            for (qv, &zv) in qrow.iter().zip(zk) {
                acc += qv * zv;
            }
            vectors[(r, k)] = acc;
        }
    }
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only; skips the transform accumulation.
pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let a = hermitian_input(m)?;
    let (diag, off, _) = tridiagonalize(a, false);
    tql2(diag, off, None)
}

/// True iff `m` is Hermitian within `tol` and its smallest eigenvalue is
/// at least `-tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() || m.hermiticity_residual() > tol {
        return false;
    }
    match eigvals_hermitian(m) {
        Ok(v) => v.first().is_none_or(|&l| l >= -tol),
        Err(_) => false,
    }
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.first().copied().unwrap_or(0.0))
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.iter().map(|l| l.abs()).sum())
}

/// Reduces Hermitian `a` to real tridiagonal form `T = Q† a Q`.
///
/// Returns the diagonal, the sub-diagonal (length n, `off[0] = 0`,
/// `off[i] = T[i][i-1]`), and optionally `Q`.
fn tridiagonalize(mut a: ComplexMatrix, want_q: bool) -> (Vec<f64>, Vec<f64>, Option<ComplexMatrix>) {
    let n = a.rows();
    let mut q = want_q.then(|| ComplexMatrix::identity(n));
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];

    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let norm: f64 = (lo..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(lo, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        for i in lo..n {
            v[i] = a[(i, k)];
        }
        v[lo] -= alpha;
        let vnorm: f64 = (lo..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm <= f64::MIN_POSITIVE {
            continue;
        }
        for vi in &mut v[lo..n] {
            *vi /= vnorm;
        }

        // p = A_sub v, K = v† p (real for Hermitian A), w = p - K v.
        for i in lo..n {
            let row = &a.as_slice()[i * n..(i + 1) * n];
            let mut acc = ZERO;
            for j in lo..n {
                acc += row[j] * v[j];
            }
            p[i] = acc;
        }
        let kk: C64 = (lo..n).map(|i| v[i].conj() * p[i]).sum();
        for i in lo..n {
            p[i] -= kk.re * v[i];
        }
        // A_sub -= 2 v w† + 2 w v†
        for i in lo..n {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a.as_mut_slice()[i * n..(i + 1) * n];
            for j in lo..n {
                row[j] -= 2.0 * (vi * p[j].conj() + wi * v[j].conj());
            }
        }
        a[(lo, k)] = alpha;
        a[(k, lo)] = alpha.conj();
        for i in lo + 1..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }

        if let Some(q) = q.as_mut() {
            // Q <- Q (I - 2 v v†)
            for r in 0..n {
                let row = &mut q.as_mut_slice()[r * n..(r + 1) * n];
                let mut s = ZERO;
                for j in lo..n {
                    s += row[j] * v[j];
                }
                s *= 2.0;
                for j in lo..n {
                    row[j] -= s * v[j].conj();
                }
            }
        }
    }

    // Diagonal phase change making the sub-diagonal real and non-negative.
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut off = vec![0.0; n];
    let mut phases = vec![ONE; n];
    for i in 1..n {
        let s = a[(i, i - 1)];
        let r = s.norm();
        off[i] = r;
        phases[i] = if r > 0.0 { phases[i - 1] * (s / r) } else { phases[i - 1] };
    }
    if let Some(q) = q.as_mut() {
        for r in 0..n {
            let row = &mut q.as_mut_slice()[r * n..(r + 1) * n];
            for (x, ph) in row.iter_mut().zip(&phases) {
                *x *= ph;
            }
        }
    }
    (diag, off, q)
}

/// Implicit QL on a real symmetric tridiagonal matrix, eigenvalues sorted
/// ascending. `z` (row k = eigenvector k) is updated in place when given.
fn tql2(mut d: Vec<f64>, mut e: Vec<f64>, mut z: Option<&mut Vec<Vec<f64>>>) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 200 {
                    return Err(Error::NonConvergence {
                        iterations: iter,
                        best_value: d[l],
                        residual: e[l].abs(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut cc = 1.0;
                let mut c2 = cc;
                let mut c3 = cc;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = cc;
                    s2 = s;
                    g = cc * e[i];
                    h = cc * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    cc = p / r;
                    p = cc * d[i] - s * g;
                    d[i + 1] = h + s * (cc * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut(i + 1);
                        let zi = &mut lo[i];
                        let zi1 = &mut hi[0];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hh = *b;
                            *b = s * *a + cc * hh;
                            *a = cc * *a - s * hh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = cc * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort keeps eigenvector rows aligned.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(z) = z.as_deref_mut() {
                z.swap(i, k);
            }
        }
    }
    Ok(d)
}
