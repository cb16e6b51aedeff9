//! Decomposition of `H ⊗ H ⊗ H*` under `V ⊗ V ⊗ V̄` and the block form of
//! covariant one-slot combs.
//!
//! `H⊗H = H₊ ⊕ H₋` (symmetric/antisymmetric) and
//! `H_± ⊗ H* = H_{α,±} ⊕ H_{β,+}` / `H_{α,−} ⊕ H_{γ,−}`. The two α copies
//! carry the defining representation and are identified through the basis
//! `|α,i,n⟩ = √(d/d_i)·(P_i ⊗ I)(|n⟩ ⊗ |I⟩)`.
//!
//! A comb commuting with `V⊗V⊗V̄⊗W̄⊗W⊗W` on `(0B,0E,1,2,3B,3E)` is, after
//! reordering to `(0B,0E,1 | 3B,3E,2)`,
//! `Σ r^{μν}_{ik,jl} T^μ_{ij} ⊗ T^ν_{kl}`; the coefficients are kept as one
//! block-diagonal Hermitian matrix, block `(μ,ν)` indexed by `(i,k)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eig::min_eigenvalue;
use crate::error::{check_dimension, Error, Result};
use crate::haar::{sample_haar_unitary, SeededRng};
use crate::matrix::{conjugate_local, max_entangled, permute_factors, swap, tensor, ComplexMatrix, C64, ZERO};

/// Symmetric (`+`) or antisymmetric (`−`) sector of `H ⊗ H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    pub const ALL: [Sector; 2] = [Sector::Plus, Sector::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Sector::Plus => 1.0,
            Sector::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Plus => "+",
            Sector::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Irrep {
    Alpha,
    Beta,
    Gamma,
}

impl Irrep {
    /// Sectors in which this irrep occurs.
    pub fn sectors(self) -> &'static [Sector] {
        match self {
            Irrep::Alpha => &Sector::ALL,
            Irrep::Beta => &[Sector::Plus],
            Irrep::Gamma => &[Sector::Minus],
        }
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Irrep::Alpha => "alpha",
            Irrep::Beta => "beta",
            Irrep::Gamma => "gamma",
        })
    }
}

/// `(I ± S)/2` on `H ⊗ H`.
pub fn sym_antisym_projectors(d: usize) -> (ComplexMatrix, ComplexMatrix) {
    let id = ComplexMatrix::identity(d * d);
    let s = swap(d);
    ((&id + &s).scale_real(0.5), (&id - &s).scale_real(0.5))
}

/// Dimensions, projectors and intertwiners for one gate dimension.
#[derive(Debug, Clone)]
pub struct IrrepTable {
    pub d: usize,
    pub d_plus: usize,
    pub d_minus: usize,
    pub d_alpha: usize,
    pub d_beta: usize,
    pub d_gamma: usize,
    pub p_plus: ComplexMatrix,
    pub p_minus: ComplexMatrix,
    /// `|α,i,n⟩` for `n = 0..d`, vectors on `H ⊗ H ⊗ H`.
    alpha_basis: BTreeMap<Sector, Vec<Vec<C64>>>,
    projectors: BTreeMap<(Irrep, Sector), ComplexMatrix>,
    intertwiners: BTreeMap<(Irrep, Sector, Sector), ComplexMatrix>,
}

/// Supported gate dimensions for the irrep machinery.
pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;

pub fn build_irrep_table(d: usize) -> Result<IrrepTable> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    let (p_plus, p_minus) = sym_antisym_projectors(d);
    let d_plus = d * (d + 1) / 2;
    let d_minus = d * (d - 1) / 2;
    let id = ComplexMatrix::identity(d);
    let omega = max_entangled(d);

    let mut alpha_basis = BTreeMap::new();
    let mut projectors = BTreeMap::new();
    let mut intertwiners = BTreeMap::new();
    for (sector, p, di) in [(Sector::Plus, &p_plus, d_plus), (Sector::Minus, &p_minus, d_minus)] {
        let lift = tensor(p, &id);
        let scale = (d as f64 / di as f64).sqrt();
        let vecs: Vec<Vec<C64>> = (0..d)
            .map(|n| {
                let mut e = vec![ZERO; d];
                e[n] = C64::new(1.0, 0.0);
                let raw: Vec<C64> = e
                    .iter()
                    .flat_map(|&a| omega.iter().map(move |&b| a * b))
                    .collect();
                lift.apply(&raw).into_iter().map(|z| z * scale).collect()
            })
            .collect();
        alpha_basis.insert(sector, vecs);
        projectors.insert((Irrep::Alpha, sector), lift);
    }
    for i in Sector::ALL {
        for j in Sector::ALL {
            let mut t = ComplexMatrix::zeros(d * d * d, d * d * d);
            for n in 0..d {
                t += &ComplexMatrix::outer(&alpha_basis[&i][n], &alpha_basis[&j][n]);
            }
            intertwiners.insert((Irrep::Alpha, i, j), t);
        }
    }
    let pa_plus = intertwiners[&(Irrep::Alpha, Sector::Plus, Sector::Plus)].clone();
    let pa_minus = intertwiners[&(Irrep::Alpha, Sector::Minus, Sector::Minus)].clone();
    let pb = &projectors[&(Irrep::Alpha, Sector::Plus)] - &pa_plus;
    let pg = &projectors[&(Irrep::Alpha, Sector::Minus)] - &pa_minus;
    projectors.insert((Irrep::Alpha, Sector::Plus), pa_plus);
    projectors.insert((Irrep::Alpha, Sector::Minus), pa_minus);
    projectors.insert((Irrep::Beta, Sector::Plus), pb.clone());
    projectors.insert((Irrep::Gamma, Sector::Minus), pg.clone());
    intertwiners.insert((Irrep::Beta, Sector::Plus, Sector::Plus), pb);
    intertwiners.insert((Irrep::Gamma, Sector::Minus, Sector::Minus), pg);

    Ok(IrrepTable {
        d,
        d_plus,
        d_minus,
        d_alpha: d,
        d_beta: d * (d_plus - 1),
        d_gamma: d * (d_minus - 1),
        p_plus,
        p_minus,
        alpha_basis,
        projectors,
        intertwiners,
    })
}

impl IrrepTable {
    /// Irreps present at this dimension (γ is absent for qubits).
    pub fn irreps(&self) -> Vec<Irrep> {
        let mut v = vec![Irrep::Alpha, Irrep::Beta];
        if self.d_gamma > 0 {
            v.push(Irrep::Gamma);
        }
        v
    }

    pub fn dim(&self, mu: Irrep) -> usize {
        match mu {
            Irrep::Alpha => self.d_alpha,
            Irrep::Beta => self.d_beta,
            Irrep::Gamma => self.d_gamma,
        }
    }

    pub fn sector_dim(&self, i: Sector) -> usize {
        match i {
            Sector::Plus => self.d_plus,
            Sector::Minus => self.d_minus,
        }
    }

    pub fn projector(&self, mu: Irrep, i: Sector) -> Option<&ComplexMatrix> {
        self.projectors.get(&(mu, i))
    }

    /// `T^μ_{ij}`; `None` when `μ` does not occur in both sectors.
    pub fn intertwiner(&self, mu: Irrep, i: Sector, j: Sector) -> Option<&ComplexMatrix> {
        self.intertwiners.get(&(mu, i, j))
    }

    pub fn alpha_vector(&self, i: Sector, n: usize) -> &[C64] {
        &self.alpha_basis[&i][n]
    }

    /// Block layout of covariant combs at this dimension.
    pub fn block_layout(&self) -> BlockLayout {
        BlockLayout::new(&self.irreps())
    }
}

/// One row/column label `(μ, i, ν, k)` of the block matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockIndex {
    pub mu: Irrep,
    pub i: Sector,
    pub nu: Irrep,
    pub k: Sector,
}

impl fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}/{}{}", self.mu, self.i, self.nu, self.k)
    }
}

/// Ordered index set of the block matrix, grouped by `(μ, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub indices: Vec<BlockIndex>,
    /// `(μ, ν, offset, size)` for each diagonal block.
    pub blocks: Vec<(Irrep, Irrep, usize, usize)>,
}

impl BlockLayout {
    pub fn new(irreps: &[Irrep]) -> Self {
        let mut indices = Vec::new();
        let mut blocks = Vec::new();
        for &mu in irreps {
            for &nu in irreps {
                let offset = indices.len();
                for &i in mu.sectors() {
                    for &k in nu.sectors() {
                        indices.push(BlockIndex { mu, i, nu, k });
                    }
                }
                blocks.push((mu, nu, offset, indices.len() - offset));
            }
        }
        Self { indices, blocks }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, idx: BlockIndex) -> Option<usize> {
        self.indices.iter().position(|&x| x == idx)
    }

    /// Whether entry `(row, col)` lies inside a diagonal `(μ, ν)` block.
    pub fn in_block(&self, row: usize, col: usize) -> bool {
        let (a, b) = (self.indices[row], self.indices[col]);
        a.mu == b.mu && a.nu == b.nu
    }
}

/// Coefficients `r^{μν}_{ik,jl}` of a covariant comb.
///
/// Entry `(row, col)` of `matrix` with `row = (μ,i,ν,k)`, `col = (μ,j,ν,l)` is
/// `r^{μν}_{ik,jl}`; entries across different `(μ,ν)` blocks are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepBlocks {
    pub d: usize,
    pub layout: BlockLayout,
    pub matrix: ComplexMatrix,
}

impl IrrepBlocks {
    pub fn new(table: &IrrepTable, matrix: ComplexMatrix) -> Result<Self> {
        let layout = table.block_layout();
        if matrix.rows() != layout.len() || !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "block matrix must be {0}x{0} at d = {1}",
                layout.len(),
                table.d
            )));
        }
        Ok(Self {
            d: table.d,
            layout,
            matrix,
        })
    }

    pub fn zeros(table: &IrrepTable) -> Self {
        let n = table.block_layout().len();
        Self::new(table, ComplexMatrix::zeros(n, n)).expect("sized from layout")
    }

    /// `r^{μν}_{ik,jl}`, zero for absent indices.
    pub fn get(&self, mu: Irrep, nu: Irrep, i: Sector, k: Sector, j: Sector, l: Sector) -> C64 {
        let row = self.layout.position(BlockIndex { mu, i, nu, k });
        let col = self.layout.position(BlockIndex { mu, i: j, nu, k: l });
        match (row, col) {
            (Some(r), Some(c)) => self.matrix[(r, c)],
            _ => ZERO,
        }
    }

    pub fn set(&mut self, mu: Irrep, nu: Irrep, i: Sector, k: Sector, j: Sector, l: Sector, v: C64) -> Result<()> {
        let row = self.layout.position(BlockIndex { mu, i, nu, k });
        let col = self.layout.position(BlockIndex { mu, i: j, nu, k: l });
        match (row, col) {
            (Some(r), Some(c)) => {
                self.matrix[(r, c)] = v;
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!(
                "no block entry r^({mu},{nu})_({i}{k},{j}{l}) at d = {}",
                self.d
            ))),
        }
    }

    /// `(1/d⁴) Σ_μ d_μ Σ_{ij} r^{μμ}_{ii,jj}`.
    pub fn fidelity(&self, table: &IrrepTable) -> f64 {
        let mut acc = 0.0;
        for mu in table.irreps() {
            for &i in mu.sectors() {
                for &j in mu.sectors() {
                    acc += table.dim(mu) as f64 * self.get(mu, mu, i, i, j, j).re;
                }
            }
        }
        acc / (self.d as f64).powi(4)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.matrix.hermitian_part())
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.matrix.hermiticity_residual() <= tol && self.min_eigenvalue()? >= -tol)
    }

    /// Largest entry outside the diagonal `(μ, ν)` blocks.
    pub fn off_block_residual(&self) -> f64 {
        let n = self.layout.len();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if !self.layout.in_block(r, c) {
                    worst = worst.max(self.matrix[(r, c)].norm());
                }
            }
        }
        worst
    }
}

/// Permutation taking `(0B,0E,1,2,3B,3E)` to `(0B,0E,1,3B,3E,2)`.
const TO_PAIRED: [usize; 6] = [0, 1, 2, 4, 5, 3];
/// Inverse of [`TO_PAIRED`].
const FROM_PAIRED: [usize; 6] = [0, 1, 2, 5, 3, 4];

/// Coefficients of the block form, without checking that `r` is covariant.
pub fn extract_blocks(r: &ComplexMatrix, table: &IrrepTable) -> Result<IrrepBlocks> {
    let d = table.d;
    let paired = permute_factors(r, &[d; 6], &TO_PAIRED)?;
    let n3 = d * d * d;
    let layout = table.block_layout();
    let mut blocks = IrrepBlocks::zeros(table);
    let pm = paired.as_slice();
    let full = n3 * n3;
    for mu in table.irreps() {
        for &i in mu.sectors() {
            for &j in mu.sectors() {
                // m = Tr_A[(T^μ_{ji} ⊗ I) R′]
                let t = table.intertwiner(mu, j, i).expect("valid sectors");
                let mut m = ComplexMatrix::zeros(n3, n3);
                for a in 0..n3 {
                    for ap in 0..n3 {
                        let tv = t[(ap, a)];
                        if tv == ZERO {
                            continue;
                        }
                        for b in 0..n3 {
                            let row = &pm[(a * n3 + b) * full + ap * n3..(a * n3 + b) * full + (ap + 1) * n3];
                            for (bp, &x) in row.iter().enumerate() {
                                m[(b, bp)] += tv * x;
                            }
                        }
                    }
                }
                for nu in table.irreps() {
                    let norm = (table.dim(mu) * table.dim(nu)) as f64;
                    for &k in nu.sectors() {
                        for &l in nu.sectors() {
                            let tn = table.intertwiner(nu, l, k).expect("valid sectors");
                            let v = tn.hs_inner_transposed(&m) / norm;
                            let row = layout.position(BlockIndex { mu, i, nu, k }).expect("in layout");
                            let col = layout.position(BlockIndex { mu, i: j, nu, k: l }).expect("in layout");
                            blocks.matrix[(row, col)] = v;
                        }
                    }
                }
            }
        }
    }
    Ok(blocks)
}

trait TraceProduct {
    /// `Tr[self · other]`.
    fn hs_inner_transposed(&self, other: &ComplexMatrix) -> C64;
}

impl TraceProduct for ComplexMatrix {
    fn hs_inner_transposed(&self, other: &ComplexMatrix) -> C64 {
        let n = self.rows();
        let mut acc = ZERO;
        for a in 0..n {
            for b in 0..n {
                acc += self[(a, b)] * other[(b, a)];
            }
        }
        acc
    }
}

/// `R^(1) = Σ r^{μν}_{ik,jl} T^μ_{ij} ⊗ T^ν_{kl}` in storage order `(0B,0E,1,2,3B,3E)`.
pub fn choi_from_blocks(blocks: &IrrepBlocks, table: &IrrepTable) -> Result<ComplexMatrix> {
    if blocks.d != table.d {
        return Err(Error::DimensionMismatch(format!(
            "blocks for d = {} with table for d = {}",
            blocks.d, table.d
        )));
    }
    let d = table.d;
    let n3 = d * d * d;
    let mut paired = ComplexMatrix::zeros(n3 * n3, n3 * n3);
    for mu in table.irreps() {
        for &i in mu.sectors() {
            for &j in mu.sectors() {
                let mut second = ComplexMatrix::zeros(n3, n3);
                for nu in table.irreps() {
                    for &k in nu.sectors() {
                        for &l in nu.sectors() {
                            let coeff = blocks.get(mu, nu, i, k, j, l);
                            if coeff != ZERO {
                                second += &table.intertwiner(nu, k, l).expect("valid").scale(coeff);
                            }
                        }
                    }
                }
                if second.max_abs() == 0.0 {
                    continue;
                }
                let first = table.intertwiner(mu, i, j).expect("valid");
                add_tensor(&mut paired, first, &second);
            }
        }
    }
    permute_factors(&paired, &[d; 6], &FROM_PAIRED)
}

fn add_tensor(acc: &mut ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) {
    let (na, nb) = (a.rows(), b.rows());
    let n = na * nb;
    let out = acc.as_mut_slice();
    for ar in 0..na {
        for ac in 0..na {
            let av = a[(ar, ac)];
            if av == ZERO {
                continue;
            }
            for br in 0..nb {
                let base = (ar * nb + br) * n + ac * nb;
                for (o, &bv) in out[base..base + nb].iter_mut().zip(b.row(br)) {
                    *o += av * bv;
                }
            }
        }
    }
}

/// Coefficients of a covariant comb.
///
/// Covariance is certified by the round trip: reconstruction from the
/// extracted coefficients is the orthogonal projection onto covariant
/// operators, so its distance from `r` is the covariance residual.
pub fn blocks_from_choi(r: &ComplexMatrix, table: &IrrepTable) -> Result<IrrepBlocks> {
    blocks_and_residual(r, table, 1e-8).map(|(b, _)| b)
}

/// Block coefficients with the projection residual, failing above `tol`.
pub fn blocks_and_residual(r: &ComplexMatrix, table: &IrrepTable, tol: f64) -> Result<(IrrepBlocks, f64)> {
    let blocks = extract_blocks(r, table)?;
    let back = choi_from_blocks(&blocks, table)?;
    let residual = back.max_abs_diff(r);
    if residual > tol {
        return Err(Error::NotCovariant { residual });
    }
    Ok((blocks, residual))
}

/// `V ⊗ V ⊗ V̄ ⊗ W̄ ⊗ W ⊗ W`, one factor per comb label.
pub fn group_action_factors(v: &ComplexMatrix, w: &ComplexMatrix) -> [ComplexMatrix; 6] {
    [v.clone(), v.clone(), v.conj(), w.conj(), w.clone(), w.clone()]
}

/// `max |g m g† − m|` for a fixed group element `(v, w)`.
pub fn covariance_residual(m: &ComplexMatrix, v: &ComplexMatrix, w: &ComplexMatrix) -> Result<f64> {
    let d = v.rows();
    let g = group_action_factors(v, w);
    let refs: Vec<&ComplexMatrix> = g.iter().collect();
    let moved = conjugate_local(m, &[d; 6], &refs)?;
    Ok(moved.max_abs_diff(m))
}

/// Largest covariance residual over `trials` Haar pairs `(V, W)`.
pub fn verify_covariance(m: &ComplexMatrix, table: &IrrepTable, trials: usize, rng: &mut SeededRng) -> Result<f64> {
    let d = table.d;
    if m.rows() != d.pow(6) || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "operator must act on six {d}-dimensional factors"
        )));
    }
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let v = sample_haar_unitary(d, rng);
        let w = sample_haar_unitary(d, rng);
        worst = worst.max(covariance_residual(m, &v, &w)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::eigvals_hermitian;
    use crate::matrix::re;

    fn rank(p: &ComplexMatrix) -> usize {
        p.trace().re.round() as usize
    }

    #[test]
    fn projector_ranks() {
        for (d, plus, minus) in [(2, 3, 1), (3, 6, 3), (4, 10, 6)] {
            let (p, m) = sym_antisym_projectors(d);
            assert_eq!((rank(&p), rank(&m)), (plus, minus));
            assert!(p.matmul(&p).approx_eq(&p, 1e-14));
            assert!(p.matmul(&m).max_abs() < 1e-14);
            assert!((&p + &m).approx_eq(&ComplexMatrix::identity(d * d), 0.0));
        }
    }

    #[test]
    fn dimension_table() {
        let t2 = build_irrep_table(2).unwrap();
        assert_eq!((t2.d_alpha, t2.d_beta, t2.d_gamma), (2, 4, 0));
        let t3 = build_irrep_table(3).unwrap();
        assert_eq!((t3.d_alpha, t3.d_beta, t3.d_gamma), (3, 15, 6));
        for d in 2..=4 {
            let t = build_irrep_table(d).unwrap();
            assert_eq!(t.d_alpha + t.d_beta, t.d_plus * d);
            assert_eq!(t.d_alpha + t.d_gamma, t.d_minus * d);
            for mu in [Irrep::Alpha, Irrep::Beta, Irrep::Gamma] {
                for &i in mu.sectors() {
                    assert_eq!(rank(t.projector(mu, i).unwrap()), t.dim(mu), "d={d} {mu}{i}");
                }
            }
        }
        assert!(matches!(build_irrep_table(5), Err(Error::UnsupportedDimension { d: 5, .. })));
        assert!(matches!(build_irrep_table(1), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn alpha_basis_orthonormal() {
        for d in 2..=4 {
            let t = build_irrep_table(d).unwrap();
            for i in Sector::ALL {
                for j in Sector::ALL {
                    for n in 0..d {
                        for m in 0..d {
                            let ip = crate::matrix::vdot(t.alpha_vector(i, n), t.alpha_vector(j, m));
                            let want = if i == j && n == m { 1.0 } else { 0.0 };
                            assert!((ip - re(want)).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn intertwiner_algebra() {
        for d in 2..=4 {
            let t = build_irrep_table(d).unwrap();
            for mu in t.irreps() {
                for &i in mu.sectors() {
                    for &j in mu.sectors() {
                        let tij = t.intertwiner(mu, i, j).unwrap();
                        assert!(tij.dagger().approx_eq(t.intertwiner(mu, j, i).unwrap(), 1e-12));
                        assert!((tij.matmul(&tij.dagger()).trace().re - t.dim(mu) as f64).abs() < 1e-9);
                        for &k in mu.sectors() {
                            let tjk = t.intertwiner(mu, j, k).unwrap();
                            assert!(tij.matmul(tjk).approx_eq(t.intertwiner(mu, i, k).unwrap(), 1e-12));
                        }
                    }
                }
            }
            assert!(t.intertwiner(Irrep::Beta, Sector::Plus, Sector::Minus).is_none());
            assert!(t.intertwiner(Irrep::Gamma, Sector::Minus, Sector::Plus).is_none());
        }
    }

    #[test]
    fn projectors_resolve_the_identity() {
        for d in 2..=4 {
            let t = build_irrep_table(d).unwrap();
            let mut sum = ComplexMatrix::zeros(d * d * d, d * d * d);
            let all: Vec<(Irrep, Sector)> = t
                .irreps()
                .into_iter()
                .flat_map(|mu| mu.sectors().iter().map(move |&i| (mu, i)))
                .collect();
            for &(mu, i) in &all {
                let p = t.projector(mu, i).unwrap();
                assert!(p.matmul(p).approx_eq(p, 1e-12));
                for &(nu, j) in &all {
                    if (mu, i) != (nu, j) {
                        assert!(p.matmul(t.projector(nu, j).unwrap()).max_abs() < 1e-12);
                    }
                }
                sum += p;
            }
            assert!(sum.approx_eq(&ComplexMatrix::identity(d * d * d), 1e-12));
        }
    }

    #[test]
    fn group_action_does_not_mix_irreps() {
        let mut rng = SeededRng::new(3);
        for d in 2..=3 {
            let t = build_irrep_table(d).unwrap();
            for _ in 0..10 {
                let v = sample_haar_unitary(d, &mut rng);
                let g = crate::matrix::tensor_all(&[&v, &v, &v.conj()]);
                for mu in t.irreps() {
                    for &i in mu.sectors() {
                        for nu in t.irreps() {
                            for &j in nu.sectors() {
                                if (mu, i) == (nu, j) {
                                    continue;
                                }
                                let leak = t.projector(mu, i).unwrap().matmul(&g).matmul(t.projector(nu, j).unwrap());
                                assert!(leak.max_abs() < 1e-9);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn layout_sizes() {
        assert_eq!(build_irrep_table(2).unwrap().block_layout().len(), 9);
        assert_eq!(build_irrep_table(3).unwrap().block_layout().len(), 16);
        assert_eq!(build_irrep_table(4).unwrap().block_layout().len(), 16);
    }

    fn random_psd_blocks(t: &IrrepTable, rng: &mut SeededRng) -> IrrepBlocks {
        let layout = t.block_layout();
        let mut m = ComplexMatrix::zeros(layout.len(), layout.len());
        for &(_, _, off, size) in &layout.blocks {
            let g = ComplexMatrix::from_fn(size, size, |_, _| rng.complex_normal());
            let p = g.matmul(&g.dagger());
            for a in 0..size {
                for b in 0..size {
                    m[(off + a, off + b)] = p[(a, b)];
                }
            }
        }
        IrrepBlocks::new(t, m).unwrap()
    }

    #[test]
    fn blocks_round_trip() {
        let mut rng = SeededRng::new(17);
        for d in 2..=3 {
            let t = build_irrep_table(d).unwrap();
            let b = random_psd_blocks(&t, &mut rng);
            let r = choi_from_blocks(&b, &t).unwrap();
            assert!(verify_covariance(&r, &t, 3, &mut rng).unwrap() < 1e-9);
            let back = blocks_from_choi(&r, &t).unwrap();
            assert!(back.matrix.approx_eq(&b.matrix, 1e-9));
            assert!(eigvals_hermitian(&r).unwrap()[0] > -1e-9);
        }
    }

    #[test]
    fn non_covariant_input_is_rejected() {
        let mut rng = SeededRng::new(2);
        let t = build_irrep_table(2).unwrap();
        let b = random_psd_blocks(&t, &mut rng);
        let mut r = choi_from_blocks(&b, &t).unwrap();
        r[(0, 1)] += re(1e-2);
        assert!(verify_covariance(&r, &t, 2, &mut rng).unwrap() > 1e-4);
        assert!(matches!(blocks_from_choi(&r, &t), Err(Error::NotCovariant { .. })));
    }

    #[test]
    fn negative_block_gives_non_psd_choi() {
        let t = build_irrep_table(2).unwrap();
        let mut b = IrrepBlocks::zeros(&t);
        b.set(Irrep::Beta, Irrep::Beta, Sector::Plus, Sector::Plus, Sector::Plus, Sector::Plus, re(-1.0)).unwrap();
        let r = choi_from_blocks(&b, &t).unwrap();
        assert!(eigvals_hermitian(&r).unwrap()[0] < -0.5);
        assert!(!b.is_psd(1e-9).unwrap());
        assert!(b
            .set(Irrep::Beta, Irrep::Beta, Sector::Minus, Sector::Plus, Sector::Plus, Sector::Plus, re(1.0))
            .is_err());
    }
}
