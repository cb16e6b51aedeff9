//! Fixtures for the benchmarks.

use clonelab::haar::{sample_haar_unitary, SeededRng};
use clonelab::matrix::ComplexMatrix;

/// Deterministic Haar unitary for dimension `d`.
pub fn fixed_unitary(d: usize, seed: u64) -> ComplexMatrix {
    sample_haar_unitary(d, &mut SeededRng::new(seed))
}

/// Random positive operator `G G†` of size `n`.
pub fn fixed_hermitian(n: usize, seed: u64) -> ComplexMatrix {
    let g = clonelab::haar::ginibre(n, &mut SeededRng::new(seed));
    g.matmul(&g.dagger())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_reproducible() {
        assert_eq!(fixed_unitary(3, 1), fixed_unitary(3, 1));
        let h = fixed_hermitian(8, 2);
        assert!(h.hermiticity_residual() < 1e-12);
    }
}
