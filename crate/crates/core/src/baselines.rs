//! Reference fidelities and the arithmetic behind no-cloning of gates.

use serde::{Deserialize, Serialize};

use crate::eig::trace_norm_hermitian;
use crate::error::{Error, Result};
use crate::matrix::{tol, ComplexMatrix};

/// Gate applied to the first system, random unitary on the second: `1/d²`.
pub fn f_random(d: usize) -> f64 {
    1.0 / (d * d) as f64
}

/// Measure-and-prepare via optimal gate estimation: `5/16` at `d = 2`, else `6/d⁴`.
pub fn f_estimation(d: usize) -> f64 {
    if d == 2 {
        5.0 / 16.0
    } else {
        6.0 / (d as f64).powi(4)
    }
}

/// Optimal learning (store, then retrieve twice). Coincides with estimation.
pub fn f_learning(d: usize) -> f64 {
    f_estimation(d)
}

/// The cloning network with the memory dephased: `1/d²`.
pub fn f_decohered(d: usize) -> f64 {
    f_random(d)
}

/// `(d + √(d²−1))/d³`.
pub fn f_clon(d: usize) -> f64 {
    let d = d as f64;
    (d + (d * d - 1.0).sqrt()) / (d * d * d)
}

/// Worst-case error of deciding between two boxes by majority vote over
/// the original and two clones, each wrong with probability `p`.
pub fn majority_vote_error(p: f64) -> f64 {
    p * p * (3.0 - 2.0 * p)
}

/// Grid points `p ∈ [0, 1/2]` with `p ≤ p²(3−2p)` (up to 1e-12).
pub fn no_cloning_fixed_points(grid: usize) -> Result<Vec<f64>> {
    if grid < 10 {
        return Err(Error::InvalidArgument(format!("grid of {grid} points is below 10")));
    }
    Ok((0..grid)
        .map(|k| 0.5 * k as f64 / (grid - 1) as f64)
        .filter(|&p| p <= majority_vote_error(p) + 1e-12)
        .collect())
}

/// Minimum error probability `(1 − ½‖ρ₁ − ρ₂‖₁)/2` for equal priors.
pub fn helstrom_error(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64> {
    if rho1.rows() != rho2.rows() || !rho1.is_square() || !rho2.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "states of size {}x{} and {}x{}",
            rho1.rows(),
            rho1.cols(),
            rho2.rows(),
            rho2.cols()
        )));
    }
    for rho in [rho1, rho2] {
        if (rho.trace().re - 1.0).abs() > tol::EQUALITY || rho.hermiticity_residual() > tol::EQUALITY {
            return Err(Error::NotAState("Helstrom inputs must be density matrices".into()));
        }
    }
    let norm = trace_norm_hermitian(&(rho1 - rho2))?;
    Ok(((1.0 - 0.5 * norm) / 2.0).clamp(0.0, 0.5))
}

/// Result of the single-query permutation game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationDiscrimination {
    pub n_letters: usize,
    pub permutations: usize,
    pub max_distinguishable: usize,
    pub feasible_all: bool,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Largest set of permutations of `n` letters that one evaluation `π(x)`
/// tells apart, over every deterministic choice of query letter `x`.
///
/// A set is distinguishable by query `x` iff its members send `x` to
/// pairwise different letters; the largest such set therefore picks one
/// permutation per output class. Randomizing the query cannot help a
/// zero-error strategy, since every query it might make must already
/// succeed.
pub fn permutation_discrimination(n_letters: usize) -> Result<PermutationDiscrimination> {
    if !(2..=5).contains(&n_letters) {
        return Err(Error::InvalidArgument(format!(
            "n_letters = {n_letters} outside 2..=5"
        )));
    }
    let perms = permutations(n_letters);
    let mut best = 0;
    for query in 0..n_letters {
        // partition by observed output; one member per class is the maximum
        let mut classes = vec![0usize; n_letters];
        for p in &perms {
            classes[p[query]] += 1;
        }
        let distinguishable = classes.iter().filter(|&&c| c > 0).count();
        best = best.max(distinguishable);
    }
    Ok(PermutationDiscrimination {
        n_letters,
        permutations: perms.len(),
        max_distinguishable: best,
        feasible_all: best == perms.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub d: usize,
    pub f_clon: f64,
    pub f_est: f64,
    pub f_ran: f64,
    pub f_deco: f64,
    pub f_learn: f64,
}

impl BaselineReport {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            f_clon: f_clon(d),
            f_est: f_estimation(d),
            f_ran: f_random(d),
            f_deco: f_decohered(d),
            f_learn: f_learning(d),
        }
    }

    /// `f_clon > f_est ≥ f_learn`, `f_clon > f_ran`, `f_deco = f_ran`.
    pub fn ordering_holds(&self) -> bool {
        self.f_clon > self.f_est && self.f_est >= self.f_learn && self.f_clon > self.f_ran && self.f_deco == self.f_ran
    }
}
