//! Dense complex matrices and tensor-factor manipulation.
//!
//! Everything here works on row-major dense storage. Multipartite operators
//! are addressed by a `dims` slice listing the factor dimensions, with the
//! first factor as the most significant index (Kronecker convention).

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerances used across the crate.
pub mod tol {
    /// Entrywise equality of operators; also the global floor of the eigensolver.
    pub const EQUALITY: f64 = 1e-9;
    /// Smallest eigenvalue still accepted as non-negative is `-POSITIVITY`.
    pub const POSITIVITY: f64 = 1e-9;
    pub const UNITARITY: f64 = 1e-10;
    pub const HERMITICITY: f64 = 1e-10;
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows of complex entries.
    ///
    /// Panics on ragged input; meant for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged matrix literal");
        Self::from_fn(n, m, |i, j| rows[i][j])
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| re(data[i * cols + j]))
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Column vector with the given entries.
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Standard basis vector `|k⟩` of dimension `n` as a column.
    pub fn basis_ket(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, 1);
        m[(k, 0)] = ONE;
        m
    }

    /// Rank-one operator `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨v|M|v⟩` for a column vector `v`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mv = self.apply(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dagger();
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + d[(i, j)]) * 0.5)
    }

    /// `max |U†U - I|` entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.dagger()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let residual = self.unitarity_residual();
        if residual <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { residual })
        }
    }

    /// Hilbert–Schmidt inner product `Tr[A† B]`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Zeroes every entry below `threshold` in modulus.
    pub fn chop(&self, threshold: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&z| if z.norm() < threshold { ZERO } else { z })
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(16) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(16) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product; `a` carries the most significant index.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * oc + j * bc;
                let brow = b.row(k);
                for (o, &y) in out.data[row..row + bc].iter_mut().zip(brow) {
                    *o = x * y;
                }
            }
        }
    }
    out
}

pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, f| tensor(&acc, f))
}

/// Kronecker product of column vectors.
pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// Unnormalized maximally entangled vector `|I⟩ = Σ_i |i⟩|i⟩`.
pub fn max_entangled(d: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// The swap `S|φ⟩|ψ⟩ = |ψ⟩|φ⟩` on `H_d ⊗ H_d`.
pub fn swap(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

fn check_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if let Some(k) = dims.iter().position(|&x| x == 0) {
        return Err(Error::Factor {
            factor: k,
            reason: "zero dimension".into(),
        });
    }
    let total: usize = dims.iter().product();
    if total != m.rows {
        return Err(Error::DimensionMismatch(format!(
            "factor dimensions {dims:?} multiply to {total}, matrix has {} rows",
            m.rows
        )));
    }
    Ok(total)
}

/// Splits a flat index into per-factor digits.
fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

/// Reduced operator on the factors listed in `keep`, in their original order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    let n = dims.len();
    let mut kept = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::Factor {
                factor: k,
                reason: format!("only {n} factors present"),
            });
        }
        kept[k] = true;
    }
    let kdim: usize = (0..n).filter(|&k| kept[k]).map(|k| dims[k]).product();
    let tdim = total / kdim;

    // Bucket every flat index by its traced-out digits.
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kdim); tdim];
    let mut dig = vec![0; n];
    for idx in 0..total {
        digits(idx, dims, &mut dig);
        let (mut ki, mut ti) = (0, 0);
        for k in 0..n {
            if kept[k] {
                ki = ki * dims[k] + dig[k];
            } else {
                ti = ti * dims[k] + dig[k];
            }
        }
        groups[ti].push((idx, ki));
    }

    let mut out = ComplexMatrix::zeros(kdim, kdim);
    for group in &groups {
        for &(r, kr) in group {
            let row = m.row(r);
            for &(cidx, kc) in group {
                out.data[kr * kdim + kc] += row[cidx];
            }
        }
    }
    Ok(out)
}

/// Partial trace over the listed factors (complement of [`partial_trace`]).
pub fn trace_out(m: &ComplexMatrix, dims: &[usize], traced: &[usize]) -> Result<ComplexMatrix> {
    let keep: Vec<usize> = (0..dims.len()).filter(|k| !traced.contains(k)).collect();
    for &t in traced {
        if t >= dims.len() {
            return Err(Error::Factor {
                factor: t,
                reason: format!("only {} factors present", dims.len()),
            });
        }
    }
    partial_trace(m, dims, &keep)
}

/// Reorders tensor factors: factor `j` of the output is factor `perm[j]` of
/// the input.
pub fn permute_factors(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    let n = dims.len();
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation of length {} for {n} factors",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Factor {
                factor: p,
                reason: "not a permutation".into(),
            });
        }
        seen[p] = true;
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = index_map(dims, perm, &new_dims);
    let mut out = ComplexMatrix::zeros(total, total);
    for r in 0..total {
        let nr = map[r] * total;
        for (cidx, &z) in m.row(r).iter().enumerate() {
            out.data[nr + map[cidx]] = z;
        }
    }
    Ok(out)
}

/// Same as [`permute_factors`] for a state vector.
pub fn permute_vector(v: &[C64], dims: &[usize], perm: &[usize]) -> Vec<C64> {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = index_map(dims, perm, &new_dims);
    let mut out = vec![ZERO; v.len()];
    for (i, &z) in v.iter().enumerate() {
        out[map[i]] = z;
    }
    out
}

fn index_map(dims: &[usize], perm: &[usize], new_dims: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let n = dims.len();
    let mut dig = vec![0; n];
    (0..total)
        .map(|idx| {
            digits(idx, dims, &mut dig);
            perm.iter()
                .zip(new_dims)
                .fold(0, |acc, (&p, &nd)| acc * nd + dig[p])
        })
        .collect()
}

/// `(I ⊗ u ⊗ I) m (I ⊗ u† ⊗ I)` with `u` acting on factor `factor`.
///
/// Cost is `O(N² d)` instead of the `O(N³)` of forming the full operator.
pub fn conjugate_factor(
    m: &ComplexMatrix,
    dims: &[usize],
    factor: usize,
    u: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    if factor >= dims.len() {
        return Err(Error::Factor {
            factor,
            reason: format!("only {} factors present", dims.len()),
        });
    }
    let dk = dims[factor];
    if u.rows != dk || u.cols != dk {
        return Err(Error::Factor {
            factor,
            reason: format!("local operator is {}x{}, factor has dimension {dk}", u.rows, u.cols),
        });
    }
    let post: usize = dims[factor + 1..].iter().product();
    let pre = total / (dk * post);

    // Left multiplication mixes whole rows.
    let mut left = ComplexMatrix::zeros(total, total);
    for p in 0..pre {
        for q in 0..post {
            for a in 0..dk {
                let dst = (p * dk + a) * post + q;
                let drow = &mut left.data[dst * total..(dst + 1) * total];
                for b in 0..dk {
                    let w = u[(a, b)];
                    if w == ZERO {
                        continue;
                    }
                    let src = (p * dk + b) * post + q;
                    for (o, &z) in drow.iter_mut().zip(&m.data[src * total..(src + 1) * total]) {
                        *o += w * z;
                    }
                }
            }
        }
    }

    // Right multiplication by u† mixes column groups within every row.
    let mut out = ComplexMatrix::zeros(total, total);
    let mut buf = vec![ZERO; dk];
    for r in 0..total {
        let lrow = &left.data[r * total..(r + 1) * total];
        let orow = &mut out.data[r * total..(r + 1) * total];
        for p in 0..pre {
            for q in 0..post {
                for (b, slot) in buf.iter_mut().enumerate() {
                    *slot = lrow[(p * dk + b) * post + q];
                }
                for a in 0..dk {
                    let mut acc = ZERO;
                    for (b, &z) in buf.iter().enumerate() {
                        acc += z * u[(a, b)].conj();
                    }
                    orow[(p * dk + a) * post + q] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Applies a product of local operators `u_0 ⊗ u_1 ⊗ …` by conjugation.
pub fn conjugate_local(
    m: &ComplexMatrix,
    dims: &[usize],
    locals: &[&ComplexMatrix],
) -> Result<ComplexMatrix> {
    if locals.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} local operators for {} factors",
            locals.len(),
            dims.len()
        )));
    }
    let mut acc = m.clone();
    for (k, u) in locals.iter().enumerate() {
        acc = conjugate_factor(&acc, dims, k, u)?;
    }
    Ok(acc)
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
            ComplexMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
        })
    }

    #[test]
    fn tensor_identities() {
        let i4 = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(i4, ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_x_z_by_hand() {
        // σx ⊗ σz = [[0, σz], [σz, 0]]
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, -1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(tensor(&sigma_x(), &sigma_z()), expected);
    }

    #[test]
    fn partial_trace_of_max_entangled_is_identity() {
        let v = max_entangled(2);
        let p = ComplexMatrix::projector(&v);
        let r = partial_trace(&p, &[2, 2], &[0]).unwrap();
        assert!(r.approx_eq(&ComplexMatrix::identity(2), 1e-15));
    }

    #[test]
    fn partial_trace_errors_name_factor() {
        let m = ComplexMatrix::identity(4);
        match partial_trace(&m, &[2, 2], &[3]) {
            Err(Error::Factor { factor: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            partial_trace(&m, &[2, 3], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn full_partial_trace_is_trace() {
        let m = ComplexMatrix::from_fn(6, 6, |i, j| c(i as f64, j as f64 * 0.5));
        let r = partial_trace(&m, &[2, 3], &[]).unwrap();
        assert_eq!((r.rows(), r.cols()), (1, 1));
        assert!((r[(0, 0)] - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn permute_swaps_kronecker_order() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c(j as f64, 2.0 * i as f64));
        let ab = tensor(&a, &b);
        let ba = permute_factors(&ab, &[2, 3], &[1, 0]).unwrap();
        assert_eq!(ba, tensor(&b, &a));
    }

    #[test]
    fn conjugate_factor_matches_full_product() {
        let m = ComplexMatrix::from_fn(12, 12, |i, j| c((i * j) as f64 * 0.1, i as f64 - j as f64));
        let u = ComplexMatrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, 1.0 - i as f64));
        let full = tensor_all(&[&ComplexMatrix::identity(2), &u, &ComplexMatrix::identity(2)]);
        let expected = full.matmul(&m).matmul(&full.dagger());
        let got = conjugate_factor(&m, &[2, 3, 2], 1, &u).unwrap();
        assert!(got.approx_eq(&expected, 1e-10));
    }

    #[test]
    fn swap_squares_to_identity() {
        let s = swap(3);
        assert_eq!(s.matmul(&s), ComplexMatrix::identity(9));
    }

    proptest! {
        #[test]
        fn trace_is_multiplicative(a in arb_matrix(3), b in arb_matrix(3)) {
            let t = tensor(&a, &b).trace();
            prop_assert!((t - a.trace() * b.trace()).norm() < 1e-12);
        }

        #[test]
        fn tensor_is_associative(a in arb_matrix(2), b in arb_matrix(2), cc in arb_matrix(2)) {
            let left = tensor(&tensor(&a, &b), &cc);
            let right = tensor(&a, &tensor(&b, &cc));
            prop_assert!(left.approx_eq(&right, 1e-12));
        }

        #[test]
        fn partial_trace_of_product(a in arb_matrix(2), b in arb_matrix(3)) {
            let ab = tensor(&a, &b);
            let first = partial_trace(&ab, &[2, 3], &[0]).unwrap();
            prop_assert!(first.approx_eq(&a.scale(b.trace()), 1e-12));
            let second = partial_trace(&ab, &[2, 3], &[1]).unwrap();
            prop_assert!(second.approx_eq(&b.scale(a.trace()), 1e-12));
        }
    }
}
