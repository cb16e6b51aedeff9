//! Semidefinite programs over covariant block matrices.
//!
//! Both tasks maximize `(1/d⁴) Σ_μ d_μ Σ_{ij} x^{μμ}_{ii,jj}` over PSD block
//! matrices `x` with the layout of [`crate::irrep::BlockLayout`]:
//!
//! * clone: `Σ_{μν} d_μ d_ν Σ_k r^{μν}_{ik,ik} = d_i d` for `i = ±`;
//! * learn: `Σ_{ν,m} d_ν l^{μν}_{im,jm} = δ_ij` for every irrep `μ` and
//!   sectors `i, j` of `μ` (off-diagonal pairs give a real and an imaginary
//!   equation).
//!
//! The solver is an infeasible primal-dual interior-point method with the
//! HKM search direction and a Mehrotra-style centering parameter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eig::eig_hermitian;
use crate::error::{check_dimension, Error, Result};
use crate::irrep::{build_irrep_table, BlockIndex, BlockLayout, IrrepBlocks, IrrepTable, MAX_DIM, MIN_DIM};
use crate::matrix::{ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Clone,
    Learn,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Clone => "clone",
            Task::Learn => "learn",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clone" => Ok(Task::Clone),
            "learn" => Ok(Task::Learn),
            other => Err(Error::InvalidArgument(format!("unknown task {other:?}"))),
        }
    }
}

/// `Tr(A x) = rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub a: ComplexMatrix,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub d: usize,
    pub task: Task,
    pub table: IrrepTable,
    pub layout: BlockLayout,
    /// Hermitian `C` with objective `Tr(C x)`.
    pub objective: ComplexMatrix,
    pub constraints: Vec<Constraint>,
}

impl OptimizationProblem {
    pub fn index_set(&self) -> &[BlockIndex] {
        &self.layout.indices
    }

    pub fn variable_size(&self) -> usize {
        self.layout.len()
    }

    /// Largest constraint violation of `x`.
    pub fn constraint_residual(&self, x: &ComplexMatrix) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.a.hs_inner(x).re - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &ComplexMatrix) -> f64 {
        self.objective.hs_inner(x).re
    }
}

pub fn build_problem(d: usize, task: Task) -> Result<OptimizationProblem> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    let table = build_irrep_table(d)?;
    let layout = table.block_layout();
    let n = layout.len();
    let pos = |idx: BlockIndex| layout.position(idx).expect("index in layout");

    let d4 = (d as f64).powi(4);
    let mut objective = ComplexMatrix::zeros(n, n);
    for mu in table.irreps() {
        for &i in mu.sectors() {
            for &j in mu.sectors() {
                let r = pos(BlockIndex { mu, i, nu: mu, k: i });
                let c = pos(BlockIndex { mu, i: j, nu: mu, k: j });
                objective[(r, c)] += C64::new(table.dim(mu) as f64 / d4, 0.0);
            }
        }
    }

    let mut constraints = Vec::new();
    match task {
        Task::Clone => {
            for i in crate::irrep::Sector::ALL {
                let mut a = ComplexMatrix::zeros(n, n);
                for (row, idx) in layout.indices.iter().enumerate() {
                    if idx.i == i {
                        a[(row, row)] = C64::new((table.dim(idx.mu) * table.dim(idx.nu)) as f64, 0.0);
                    }
                }
                constraints.push(Constraint {
                    name: format!("t_{i}"),
                    a,
                    rhs: (table.sector_dim(i) * d) as f64,
                });
            }
        }
        Task::Learn => {
            for mu in table.irreps() {
                let secs = mu.sectors();
                for (p, &i) in secs.iter().enumerate() {
                    for &j in &secs[p..] {
                        // F = Σ_{ν,m} d_ν l^{μν}_{im,jm}
                        let mut f = ComplexMatrix::zeros(n, n);
                        for nu in table.irreps() {
                            for &m in nu.sectors() {
                                let r = pos(BlockIndex { mu, i, nu, k: m });
                                let c = pos(BlockIndex { mu, i: j, nu, k: m });
                                // Tr(A x) picks x[r, c] when A[c, r] = 1
                                f[(c, r)] += C64::new(table.dim(nu) as f64, 0.0);
                            }
                        }
                        if i == j {
                            constraints.push(Constraint {
                                name: format!("l_{mu}{i}{j}"),
                                a: f,
                                rhs: 1.0,
                            });
                        } else {
                            // Re F = (Tr(f x) + Tr(f† x))/2, Im F = (Tr(f x) − Tr(f† x))/2i
                            let fd = f.dagger();
                            constraints.push(Constraint {
                                name: format!("re_l_{mu}{i}{j}"),
                                a: (&f + &fd).scale_real(0.5),
                                rhs: 0.0,
                            });
                            constraints.push(Constraint {
                                name: format!("im_l_{mu}{i}{j}"),
                                a: (&f - &fd).scale(C64::new(0.0, -0.5)),
                                rhs: 0.0,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(OptimizationProblem {
        d,
        task,
        table,
        layout,
        objective,
        constraints,
    })
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub task: Task,
    pub d: usize,
    pub optimal_value: f64,
    pub dual_value: f64,
    pub optimal_blocks: IrrepBlocks,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub kkt_residual: f64,
}

pub const ITERATION_CAP: usize = 100_000;

fn hermitian_fn(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let e = eig_hermitian(&m.hermitian_part())?;
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &l) in e.values.iter().enumerate() {
        let v = e.vector(k);
        let s = f(l);
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] += v[a] * v[b].conj() * s;
            }
        }
    }
    Ok(out)
}

/// Largest `α ≤ 1` keeping `x + α·dx ⪰ 0`, damped by 0.95 when limiting.
fn step_length(x: &ComplexMatrix, dx: &ComplexMatrix) -> Result<f64> {
    let inv_sqrt = hermitian_fn(x, |l| 1.0 / l.max(1e-300).sqrt())?;
    let scaled = inv_sqrt.matmul(dx).matmul(&inv_sqrt).hermitian_part();
    let lmin = eig_hermitian(&scaled)?.values[0];
    Ok(if lmin < 0.0 { (0.95 / -lmin).min(1.0) } else { 1.0 })
}

fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty");
        if m[piv][col].abs() < 1e-300 {
            return Err(Error::InvalidArgument("singular Newton system".into()));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Ok(x)
}

/// Diagonal starting point: each row touched by an equality with positive
/// right-hand side gets the constant that satisfies that equality.
fn initial_point(p: &OptimizationProblem) -> ComplexMatrix {
    let n = p.variable_size();
    let mut diag = vec![1.0; n];
    for c in &p.constraints {
        if c.rhs <= 0.0 {
            continue;
        }
        let rows: Vec<usize> = (0..n).filter(|&r| c.a[(r, r)].re != 0.0).collect();
        let weight: f64 = rows.iter().map(|&r| c.a[(r, r)].re).sum();
        for r in rows {
            diag[r] = c.rhs / weight;
        }
    }
    ComplexMatrix::diagonal(&diag.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>())
}

pub fn solve(p: &OptimizationProblem, tol: f64) -> Result<OptimizationResult> {
    if tol.is_nan() || tol < 1e-9 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below 1e-9")));
    }
    let n = p.variable_size();
    let m = p.constraints.len();
    let stop = (tol * 1e-3).max(1e-12);
    let a = &p.constraints;
    let c = &p.objective;
    let b: Vec<f64> = a.iter().map(|k| k.rhs).collect();
    let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));

    let mut x = initial_point(p);
    let mut y = vec![0.0; m];
    let mut z = ComplexMatrix::identity(n).scale_real(scale);

    let residuals = |x: &ComplexMatrix, y: &[f64], z: &ComplexMatrix| {
        let rp: Vec<f64> = a.iter().map(|k| k.rhs - k.a.hs_inner(x).re).collect();
        let mut rd = c.scale_real(-1.0);
        for (k, yk) in a.iter().zip(y) {
            rd += &k.a.scale_real(*yk);
        }
        let rd = &rd - z;
        (rp, rd)
    };

    let mut best = f64::NEG_INFINITY;
    for iter in 0..ITERATION_CAP {
        let (rp, rd) = residuals(&x, &y, &z);
        let primal_obj = p.objective_value(&x);
        let dual_obj: f64 = b.iter().zip(&y).map(|(bk, yk)| bk * yk).sum();
        let pres = rp.iter().fold(0.0f64, |s, v| s.max(v.abs())) / scale;
        let dres = rd.max_abs() / (1.0 + c.max_abs());
        let gap = (dual_obj - primal_obj).abs() / (1.0 + primal_obj.abs());
        let kkt = pres.max(dres).max(gap);
        best = best.max(primal_obj);
        if kkt <= stop {
            let blocks = IrrepBlocks::new(&p.table, x.hermitian_part())?;
            return Ok(OptimizationResult {
                task: p.task,
                d: p.d,
                optimal_value: primal_obj,
                dual_value: dual_obj,
                optimal_blocks: blocks,
                iterations: iter,
                primal_residual: pres,
                dual_residual: dres,
                gap,
                kkt_residual: kkt,
            });
        }

        let mu = x.hs_inner(&z).re / n as f64;
        let zinv = hermitian_fn(&z, |l| 1.0 / l)?;
        // M_kl = Re Tr(A_k X A_l Z⁻¹)
        let xa: Vec<ComplexMatrix> = a.iter().map(|k| x.matmul(&k.a).matmul(&zinv)).collect();
        let newton: Vec<Vec<f64>> = (0..m)
            .map(|k| (0..m).map(|l| a[k].a.hs_inner(&xa[l]).re).collect())
            .collect();
        let x_rd_zinv = x.matmul(&rd).matmul(&zinv);

        let direction = |sigma: f64| -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
            let target = &(&zinv.scale_real(sigma * mu) - &x) - &x_rd_zinv;
            let rhs: Vec<f64> = (0..m).map(|k| a[k].a.hs_inner(&target).re - rp[k]).collect();
            let dy = solve_linear(newton.clone(), rhs)?;
            let mut dz = rd.clone();
            for (k, dyk) in a.iter().zip(&dy) {
                dz += &k.a.scale_real(*dyk);
            }
            let dx = (&(&zinv.scale_real(sigma * mu) - &x) - &x.matmul(&dz).matmul(&zinv)).hermitian_part();
            Ok((dx, dy, dz))
        };

        let (dx, _, dz) = direction(0.0)?;
        let (ap, ad) = (step_length(&x, &dx)?, step_length(&z, &dz)?);
        let x_aff = &x + &dx.scale_real(ap);
        let z_aff = &z + &dz.scale_real(ad);
        let mu_aff = x_aff.hs_inner(&z_aff).re / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3).max(1e-8);

        let (dx, dy, dz) = direction(sigma)?;
        let (ap, ad) = (step_length(&x, &dx)?, step_length(&z, &dz)?);
        x = (&x + &dx.scale_real(ap)).hermitian_part();
        z = (&z + &dz.scale_real(ad)).hermitian_part();
        for (yk, dyk) in y.iter_mut().zip(&dy) {
            *yk += ad * dyk;
        }
        if !x.as_slice().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            let (rp, rd) = residuals(&x, &y, &z);
            return Err(Error::NonConvergence {
                iterations: iter,
                best_value: best,
                residual: rp.iter().fold(rd.max_abs(), |s, v| s.max(v.abs())),
            });
        }
    }
    let (rp, rd) = residuals(&x, &y, &z);
    Err(Error::NonConvergence {
        iterations: ITERATION_CAP,
        best_value: best,
        residual: rp.iter().fold(rd.max_abs(), |s, v| s.max(v.abs())),
    })
}

/// `(√d₊ + √d₋)²/d⁴ = (d + √(d²−1))/d³`.
pub fn analytic_bound(d: usize) -> f64 {
    let df = d as f64;
    let dp = (d * (d + 1) / 2) as f64;
    let dm = (d * d.saturating_sub(1) / 2) as f64;
    (dp.sqrt() + dm.sqrt()).powi(2) / df.powi(4)
}
