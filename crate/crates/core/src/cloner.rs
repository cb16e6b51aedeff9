//! The optimal one-slot cloning network and its variants.
//!
//! The network sends the system `0B` to the gate after storing which
//! symmetry sector the pair `(0B, 0E)` occupied in a qubit memory `M`
//! (basis `|+⟩ = |0⟩`, `|−⟩ = |1⟩`). After the gate, the returned system and a
//! fresh register are re-symmetrized according to the memory.

use crate::channel::{
    choi_from_kraus, choi_from_map, factors, identity_channel, insert_gate, unitary_channel,
    Channel, CombNetwork, Factor, Validation,
};
use crate::error::{check_dimension, Result};
use crate::haar::SeededRng;
use crate::irrep::{sym_antisym_projectors, Sector, MAX_DIM, MIN_DIM};
use crate::matrix::{partial_trace, swap, tensor, tol, ComplexMatrix, C64, ZERO};

/// Label of the memory register between the two processing stages.
pub const MEMORY: &str = "M";
pub const MEMORY_DIM: usize = 2;

fn memory_index(i: Sector) -> usize {
    match i {
        Sector::Plus => 0,
        Sector::Minus => 1,
    }
}

/// `(P_i, d_i)` for both sectors.
fn sectors(d: usize) -> [(Sector, ComplexMatrix, usize); 2] {
    let (pp, pm) = sym_antisym_projectors(d);
    [
        (Sector::Plus, pp, d * (d + 1) / 2),
        (Sector::Minus, pm, d * (d - 1) / 2),
    ]
}

fn pre_kraus(d: usize, dephase: bool) -> Vec<ComplexMatrix> {
    // K_m = Σ_i ((I ⊗ ⟨m|) P_i) ⊗ |i⟩ : (0B,0E) → (1, M)
    let mut out = Vec::new();
    let secs = sectors(d);
    for m in 0..d {
        let mut terms: Vec<ComplexMatrix> = Vec::new();
        for (sector, p, _) in &secs {
            let mut k = ComplexMatrix::zeros(d * MEMORY_DIM, d * d);
            for a in 0..d {
                for col in 0..d * d {
                    k[(a * MEMORY_DIM + memory_index(*sector), col)] = p[(a * d + m, col)];
                }
            }
            terms.push(k);
        }
        if dephase {
            out.extend(terms);
        } else {
            out.push(&terms[0] + &terms[1]);
        }
    }
    out
}

/// Pre-processing `𝒜(ρ) = Σ_{ij} Tr_{0E}[P_i ρ P_j] ⊗ |i⟩⟨j|` from `(0B, 0E)` to `(1, M)`.
pub fn pre_channel_a(d: usize) -> Result<Channel> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    let ch = choi_from_kraus(
        &pre_kraus(d, false),
        vec![Factor::new("1", d), Factor::new(MEMORY, MEMORY_DIM)],
        factors(&["0B", "0E"], d),
    )?;
    Ok(ch)
}

/// `𝒜` followed by dephasing of the memory in the `{|+⟩, |−⟩}` basis.
pub fn pre_channel_a_decohered(d: usize) -> Result<Channel> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    choi_from_kraus(
        &pre_kraus(d, true),
        vec![Factor::new("1", d), Factor::new(MEMORY, MEMORY_DIM)],
        factors(&["0B", "0E"], d),
    )
}

/// Post-processing `ℬ(σ) = Σ_{ij} d/√(d_i d_j) P_i[⟨i|σ|j⟩ ⊗ I] P_j` from `(2, M)` to `(3B, 3E)`.
pub fn post_channel_b(d: usize) -> Result<Channel> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    // K_n = Σ_i √(d/d_i) P_i (I ⊗ |n⟩) ⟨i|_M
    let secs = sectors(d);
    let kraus: Vec<ComplexMatrix> = (0..d)
        .map(|n| {
            let mut k = ComplexMatrix::zeros(d * d, d * MEMORY_DIM);
            for (sector, p, di) in &secs {
                if *di == 0 {
                    continue;
                }
                let w = (d as f64 / *di as f64).sqrt();
                for row in 0..d * d {
                    for a in 0..d {
                        k[(row, a * MEMORY_DIM + memory_index(*sector))] += p[(row, a * d + n)] * w;
                    }
                }
            }
            k
        })
        .collect();
    choi_from_kraus(
        &kraus,
        factors(&["3B", "3E"], d),
        vec![Factor::new("2", d), Factor::new(MEMORY, MEMORY_DIM)],
    )
}

/// `ℬ ∘ (𝒰 ⊗ I_M) ∘ 𝒜`, composed by linking the three Choi operators.
pub fn cloner_channel(u: &ComplexMatrix) -> Result<Channel> {
    let d = u.rows();
    let gate = unitary_channel(u, "2", "1")?;
    let a = pre_channel_a(d)?;
    let b = post_channel_b(d)?;
    let linked = a.operator().link(&gate.operator())?.link(&b.operator())?;
    Channel::from_operator(&linked, &["3B", "3E"], &["0B", "0E"], Validation::Full)
}

/// `Σ_{ij} d/√(d_i d_j) P_i[(U Tr_{0E}[P_i ρ P_j] U†) ⊗ I] P_j`, built
/// directly from its action on matrix units.
pub fn cloner_channel_closed_form(u: &ComplexMatrix) -> Result<Channel> {
    let d = u.rows();
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    u.ensure_unitary(tol::UNITARITY)?;
    let secs = sectors(d);
    let id = ComplexMatrix::identity(d);
    let ud = u.dagger();
    choi_from_map(factors(&["3B", "3E"], d), factors(&["0B", "0E"], d), Validation::Full, |rho| {
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for (_, pi, di) in &secs {
            for (_, pj, dj) in &secs {
                let w = d as f64 / ((*di * *dj) as f64).sqrt();
                let inner = partial_trace(&pi.matmul(rho).matmul(pj), &[d, d], &[0]).expect("dims");
                let lifted = tensor(&u.matmul(&inner).matmul(&ud), &id);
                out += &pi.matmul(&lifted).matmul(pj).scale_real(w);
            }
        }
        out
    })
}

/// `Σ_i d/d_i P_i[(U Tr_{0E}[P_i ρ P_i] U†) ⊗ I] P_i`.
pub fn decohered_cloner_channel(u: &ComplexMatrix) -> Result<Channel> {
    let d = u.rows();
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    u.ensure_unitary(tol::UNITARITY)?;
    let secs = sectors(d);
    let id = ComplexMatrix::identity(d);
    let ud = u.dagger();
    choi_from_map(factors(&["3B", "3E"], d), factors(&["0B", "0E"], d), Validation::Full, |rho| {
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for (_, p, di) in &secs {
            let inner = partial_trace(&p.matmul(rho).matmul(p), &[d, d], &[0]).expect("dims");
            let lifted = tensor(&u.matmul(&inner).matmul(&ud), &id);
            out += &p.matmul(&lifted).matmul(p).scale_real(d as f64 / *di as f64);
        }
        out
    })
}

/// Comb Choi operator `R^(1)` of the optimal cloning network.
pub fn choi_r1_of_cloner(d: usize) -> Result<CombNetwork> {
    CombNetwork::from_channels(&pre_channel_a(d)?, &post_channel_b(d)?, d)
}

/// The cloning network with its memory dephased between the two stages.
pub fn decohered_network(d: usize) -> Result<CombNetwork> {
    CombNetwork::from_channels(&pre_channel_a_decohered(d)?, &post_channel_b(d)?, d)
}

/// Network applying the gate to `0B → 3B` and the fixed unitary `w` to `0E → 3E`.
pub fn first_factor_network(d: usize, w: &ComplexMatrix) -> Result<CombNetwork> {
    let pre = identity_channel("1", "0B", d).tensor(&identity_channel(MEMORY, "0E", d))?;
    let post = identity_channel("3B", "2", d).tensor(&unitary_channel(w, "3E", MEMORY)?)?;
    CombNetwork::from_channels(&pre, &post, d)
}

/// Network applying the gate to `0B → 3B`, discarding `0E` and preparing `I/d` on `3E`.
pub fn random_guess_network(d: usize) -> Result<CombNetwork> {
    let discard = Channel::new(
        ComplexMatrix::identity(d),
        vec![],
        vec![Factor::new("0E", d)],
        Validation::Full,
    )?;
    let prepare = Channel::new(
        ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        vec![Factor::new("3E", d)],
        vec![],
        Validation::Full,
    )?;
    let pre = identity_channel("1", "0B", d).tensor(&discard)?;
    let post = identity_channel("3B", "2", d).tensor(&prepare)?;
    CombNetwork::from_channels(&pre, &post, d)
}

/// Output of `ℬ` on `|ψ⟩⟨ψ| ⊗ |+⟩⟨+|`.
pub fn state_cloner_output(psi: &[C64]) -> Result<ComplexMatrix> {
    let d = psi.len();
    let b = post_channel_b(d)?;
    let mut plus = ComplexMatrix::zeros(MEMORY_DIM, MEMORY_DIM);
    plus[(0, 0)] = C64::new(1.0, 0.0);
    b.apply(&tensor(&ComplexMatrix::projector(psi), &plus))
}

/// `(d/d₊) P₊(|ψ⟩⟨ψ| ⊗ I)P₊`, the optimal universal 1→2 state-cloner output.
pub fn universal_state_clone(psi: &[C64]) -> ComplexMatrix {
    let d = psi.len();
    let (pp, _) = sym_antisym_projectors(d);
    let lifted = tensor(&ComplexMatrix::projector(psi), &ComplexMatrix::identity(d));
    pp.matmul(&lifted).matmul(&pp).scale_real(2.0 / (d + 1) as f64)
}

/// `⟨ψ| Tr_2[ρ] |ψ⟩` for a two-clone output `ρ`.
pub fn single_clone_fidelity(output: &ComplexMatrix, psi: &[C64]) -> Result<f64> {
    let d = psi.len();
    let first = partial_trace(output, &[d, d], &[0])?;
    Ok(first.expectation(psi).re)
}

/// Controlled swap on `(0B, 0E, M)` and the memory basis change relating it to `𝒜`.
#[derive(Debug, Clone)]
pub struct Dilation {
    /// `V = I ⊗ |+⟩⟨+| + S ⊗ |−⟩⟨−|`.
    pub v: ComplexMatrix,
    /// Hadamard on the memory: `𝒜(ρ) = W_M Tr_{0E}[V(ρ ⊗ |0⟩⟨0|)V†] W_M†`.
    pub w_m: ComplexMatrix,
    /// Largest deviation from that identity over the test states.
    pub residual: f64,
}

pub fn controlled_swap_dilation(d: usize, trials: usize, rng: &mut SeededRng) -> Result<Dilation> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    let mut plus = ComplexMatrix::zeros(2, 2);
    plus[(0, 0)] = C64::new(1.0, 0.0);
    let mut minus = ComplexMatrix::zeros(2, 2);
    minus[(1, 1)] = C64::new(1.0, 0.0);
    let v = &tensor(&ComplexMatrix::identity(d * d), &plus) + &tensor(&swap(d), &minus);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let w_m = ComplexMatrix::from_real(2, 2, &[h, h, h, -h]);
    let zero = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]);
    let a = pre_channel_a(d)?;
    let vd = v.dagger();
    let mut residual = 0.0f64;
    for _ in 0..trials {
        let rho = random_state(d * d, rng);
        let direct = a.apply(&rho)?;
        // (0B, 0E, M) → (0B, M)
        let joint = v.matmul(&tensor(&rho, &zero)).matmul(&vd);
        let reduced = partial_trace(&joint, &[d, d, 2], &[0, 2])?;
        let dilated = tensor(&ComplexMatrix::identity(d), &w_m)
            .matmul(&reduced)
            .matmul(&tensor(&ComplexMatrix::identity(d), &w_m.dagger()));
        residual = residual.max(direct.max_abs_diff(&dilated));
    }
    Ok(Dilation { v, w_m, residual })
}

/// Random mixed state `GG†/Tr(GG†)` from a complex Ginibre matrix.
pub fn random_state(n: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
    let p = g.matmul(&g.dagger());
    let t = p.trace().re;
    p.scale_real(1.0 / t)
}

/// Random pure state vector.
pub fn random_pure_state(n: usize, rng: &mut SeededRng) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| rng.complex_normal()).collect();
    let norm = crate::matrix::vec_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

/// The pre/post channels of the cloning network and its comb.
#[derive(Debug, Clone)]
pub struct ClonerAssembly {
    pub d: usize,
    pub channel_a: Channel,
    pub channel_b: Channel,
    pub memory_dim: usize,
    pub r1: CombNetwork,
}

impl ClonerAssembly {
    pub fn build(d: usize) -> Result<Self> {
        let channel_a = pre_channel_a(d)?;
        let channel_b = post_channel_b(d)?;
        let r1 = CombNetwork::from_channels(&channel_a, &channel_b, d)?;
        Ok(Self {
            d,
            channel_a,
            channel_b,
            memory_dim: MEMORY_DIM,
            r1,
        })
    }

    pub fn clone_gate(&self, u: &ComplexMatrix) -> Result<Channel> {
        insert_gate(&self.r1, u)
    }
}

/// `Σ_k K_k†K_k − I`, largest entry.
pub fn kraus_completeness_residual(kraus: &[ComplexMatrix]) -> f64 {
    let n = kraus.first().map_or(0, |k| k.cols());
    let mut acc = ComplexMatrix::zeros(n, n);
    for k in kraus {
        acc += &k.dagger().matmul(k);
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { ZERO };
            worst = worst.max((acc[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn pre_kraus_operators(d: usize) -> Result<Vec<ComplexMatrix>> {
    check_dimension(d, MIN_DIM, MAX_DIM)?;
    Ok(pre_kraus(d, false))
}
