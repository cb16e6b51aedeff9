//! Gate-encoded BB84 variant on qubits and three eavesdropping strategies.
//!
//! Bob prepares a maximally entangled `|B⟩` on `(t, r)` and sends `t` to
//! Alice, who encodes a symbol `μ` by applying `σ_μ` (basis 1) or `Uσ_μ`
//! (basis 2). Bob measures `(t, r)` in `{(G ⊗ I)|B⟩}` for a basis of his
//! own choosing; rounds with different bases are discarded.
//!
//! Eve holds a known maximally entangled pair `|E⟩ = |I⟩/√2` on `(e1, e2)`.
//! * intercept-resend: Alice receives `e1`; Eve measures `(e1, e2)` in a
//!   random basis, applies her estimate to `t` and forwards it.
//! * clone attack: `(t, e1)` enter the optimal cloning network, whose slot
//!   is Alice; Bob receives clone `3B`. After the bases are announced, Eve
//!   measures `(3E, e2)` in the announced basis.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel_extended, insert_gate_with, Channel, CombNetwork, Validation};
use crate::cloner::choi_r1_of_cloner;
use crate::error::{Error, Result};
use crate::haar::SeededRng;
use crate::matrix::{max_entangled, partial_trace, permute_factors, tensor, tensor_vec, ComplexMatrix, C64};

pub const SYMBOLS: usize = 4;
/// Probabilities below this are treated as zero when sampling.
const CLAMP: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct GateBases {
    /// `σ_0 = I, σ_1, σ_2, σ_3`.
    pub sigma: [ComplexMatrix; 4],
    /// `U = (I + iΣ_k σ_k)/2`.
    pub u_rot: ComplexMatrix,
    pub basis1: [ComplexMatrix; 4],
    pub basis2: [ComplexMatrix; 4],
    pub bell: Vec<C64>,
    /// `|⟨(Uσ_μ ⊗ I)B | (σ_ν ⊗ I)B⟩|²`, indexed `[μ][ν]`.
    pub overlaps: [[f64; 4]; 4],
}

pub fn pauli() -> [ComplexMatrix; 4] {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    [
        ComplexMatrix::identity(2),
        ComplexMatrix::from_rows(&[&[o, l], &[l, o]]),
        ComplexMatrix::from_rows(&[&[o, -i], &[i, o]]),
        ComplexMatrix::from_rows(&[&[l, o], &[o, -l]]),
    ]
}

pub fn rotation() -> ComplexMatrix {
    let s = pauli();
    let sum = &(&s[1] + &s[2]) + &s[3];
    (&s[0] + &sum.scale(C64::new(0.0, 1.0))).scale_real(0.5)
}

/// `|I⟩/√2`.
pub fn canonical_bell() -> Vec<C64> {
    max_entangled(2).into_iter().map(|z| z * std::f64::consts::FRAC_1_SQRT_2).collect()
}

impl GateBases {
    pub fn basis(&self, k: usize) -> &[ComplexMatrix; 4] {
        if k == 0 {
            &self.basis1
        } else {
            &self.basis2
        }
    }

    /// `(G ⊗ I)|ψ⟩` for the `μ`-th gate of basis `k`.
    pub fn encoded(&self, k: usize, mu: usize, psi: &[C64]) -> Vec<C64> {
        tensor(&self.basis(k)[mu], &ComplexMatrix::identity(2)).apply(psi)
    }
}

pub fn build_bases(bell_state: &[C64]) -> Result<GateBases> {
    if bell_state.len() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "two-qubit state has 4 amplitudes, got {}",
            bell_state.len()
        )));
    }
    let reduced = partial_trace(&ComplexMatrix::projector(bell_state), &[2, 2], &[0])?;
    let residual = reduced.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5));
    if residual > 1e-9 {
        return Err(Error::NotMaximallyEntangled { residual });
    }
    let sigma = pauli();
    let u_rot = rotation();
    let basis1 = sigma.clone();
    let basis2 = [0, 1, 2, 3].map(|m| u_rot.matmul(&sigma[m]));
    let mut bases = GateBases {
        sigma,
        u_rot,
        basis1,
        basis2,
        bell: bell_state.to_vec(),
        overlaps: [[0.0; 4]; 4],
    };
    for mu in 0..4 {
        let a = bases.encoded(1, mu, bell_state);
        for nu in 0..4 {
            let b = bases.encoded(0, nu, bell_state);
            bases.overlaps[mu][nu] = crate::matrix::vdot(&a, &b).norm_sqr();
        }
    }
    Ok(bases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    None,
    InterceptResend,
    CloneAttack,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::None, Strategy::InterceptResend, Strategy::CloneAttack];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::InterceptResend => "intercept_resend",
            Strategy::CloneAttack => "clone_attack",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Strategy::None),
            "intercept" | "intercept_resend" => Ok(Strategy::InterceptResend),
            "clone" | "clone_attack" => Ok(Strategy::CloneAttack),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatErrors {
    pub sift_rate: f64,
    pub symbol_error_rate: f64,
    pub eve_guess_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStats {
    pub strategy: Strategy,
    pub sift_rate: f64,
    /// Fraction of sifted rounds where Bob's symbol differs from Alice's.
    pub symbol_error_rate: f64,
    /// Fraction of sifted rounds where Eve's symbol equals Alice's.
    pub eve_guess_prob: f64,
    /// `None` in exact mode.
    pub rounds: Option<u64>,
    pub stderr: Option<StatErrors>,
}

/// One round's classical choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    alice_basis: usize,
    symbol: usize,
    bob_basis: usize,
    eve_basis: usize,
}

/// Joint distribution `P(bob, eve)` of the measured symbols in one cell.
type Joint = [[f64; SYMBOLS]; SYMBOLS];

/// Precomputed per-cell physics for a strategy.
struct Engine<'a> {
    bases: &'a GateBases,
    strategy: Strategy,
    eve_pair: Vec<C64>,
    /// `C′_G` for each `(basis, symbol)` in the clone attack.
    cloned: Vec<Channel>,
}

impl<'a> Engine<'a> {
    fn new(bases: &'a GateBases, strategy: Strategy, network: Option<&CombNetwork>) -> Result<Self> {
        let mut cloned = Vec::new();
        if strategy == Strategy::CloneAttack {
            let owned;
            let r = match network {
                Some(r) => r,
                None => {
                    owned = choi_r1_of_cloner(2)?;
                    &owned
                }
            };
            for k in 0..2 {
                for g in bases.basis(k) {
                    cloned.push(insert_gate_with(r, g, Validation::TraceOnly)?);
                }
            }
        }
        Ok(Self {
            bases,
            strategy,
            eve_pair: canonical_bell(),
            cloned,
        })
    }

    fn cells(&self) -> Vec<Cell> {
        let eve_bases = if self.strategy == Strategy::InterceptResend { 2 } else { 1 };
        let mut v = Vec::new();
        for alice_basis in 0..2 {
            for symbol in 0..SYMBOLS {
                for bob_basis in 0..2 {
                    for eve_basis in 0..eve_bases {
                        v.push(Cell {
                            alice_basis,
                            symbol,
                            bob_basis,
                            eve_basis,
                        });
                    }
                }
            }
        }
        v
    }

    fn bob_distribution(&self, state: &[C64], bob_basis: usize) -> [f64; SYMBOLS] {
        let mut p = [0.0; SYMBOLS];
        for (m, slot) in p.iter_mut().enumerate() {
            *slot = crate::matrix::vdot(&self.bases.encoded(bob_basis, m, &self.bases.bell), state)
                .norm_sqr();
        }
        p
    }

    fn joint(&self, cell: Cell) -> Result<Joint> {
        let b = self.bases;
        let mut joint = [[0.0; SYMBOLS]; SYMBOLS];
        match self.strategy {
            Strategy::None => {
                let state = b.encoded(cell.alice_basis, cell.symbol, &b.bell);
                let bob = self.bob_distribution(&state, cell.bob_basis);
                for (m, row) in joint.iter_mut().enumerate() {
                    for slot in row.iter_mut() {
                        *slot = bob[m] / SYMBOLS as f64;
                    }
                }
            }
            Strategy::InterceptResend => {
                let returned = b.encoded(cell.alice_basis, cell.symbol, &self.eve_pair);
                for nu in 0..SYMBOLS {
                    let estimate = b.encoded(cell.eve_basis, nu, &self.eve_pair);
                    let p_eve = crate::matrix::vdot(&estimate, &returned).norm_sqr();
                    let forwarded = b.encoded(cell.eve_basis, nu, &b.bell);
                    let bob = self.bob_distribution(&forwarded, cell.bob_basis);
                    for m in 0..SYMBOLS {
                        joint[m][nu] = p_eve * bob[m];
                    }
                }
            }
            Strategy::CloneAttack => {
                let channel = &self.cloned[cell.alice_basis * SYMBOLS + cell.symbol];
                // (t, r, e1, e2) → (t, e1, r, e2)
                let input = ComplexMatrix::projector(&tensor_vec(&b.bell, &self.eve_pair));
                let input = permute_factors(&input, &[2, 2, 2, 2], &[0, 2, 1, 3])?;
                let out = apply_channel_extended(channel, &input, 4)?;
                // (3B, 3E, r, e2) → (3B, r, 3E, e2)
                let out = permute_factors(&out, &[2, 2, 2, 2], &[0, 2, 1, 3])?;
                let announced = cell.alice_basis;
                for m in 0..SYMBOLS {
                    let bob_vec = b.encoded(cell.bob_basis, m, &b.bell);
                    for nu in 0..SYMBOLS {
                        let eve_vec = b.encoded(announced, nu, &self.eve_pair);
                        joint[m][nu] = out.expectation(&tensor_vec(&bob_vec, &eve_vec)).re.max(0.0);
                    }
                }
            }
        }
        Ok(joint)
    }

    fn cell_weight(&self) -> f64 {
        1.0 / self.cells().len() as f64
    }
}

/// Exact statistics by enumerating every classical choice with equal weight.
pub fn run_exact(strategy: Strategy, bases: &GateBases) -> Result<ProtocolStats> {
    run_exact_with(strategy, bases, None)
}

/// As [`run_exact`], with the cloning network supplied by the caller.
pub fn run_exact_with(strategy: Strategy, bases: &GateBases, network: Option<&CombNetwork>) -> Result<ProtocolStats> {
    let engine = Engine::new(bases, strategy, network)?;
    let w = engine.cell_weight();
    let (mut sifted, mut errors, mut eve_right) = (0.0, 0.0, 0.0);
    for cell in engine.cells() {
        if cell.bob_basis != cell.alice_basis {
            continue;
        }
        sifted += w;
        let joint = engine.joint(cell)?;
        for (m, row) in joint.iter().enumerate() {
            for (nu, &p) in row.iter().enumerate() {
                if m != cell.symbol {
                    errors += w * p;
                }
                if nu == cell.symbol {
                    eve_right += w * p;
                }
            }
        }
    }
    Ok(ProtocolStats {
        strategy,
        sift_rate: sifted,
        symbol_error_rate: errors / sifted,
        eve_guess_prob: eve_right / sifted,
        rounds: None,
        stderr: None,
    })
}

/// Monte Carlo run of `rounds` protocol rounds; round `i` draws from
/// `substream(i)` of a key taken from `rng`.
pub fn run_sampled(strategy: Strategy, bases: &GateBases, rounds: u64, rng: &mut SeededRng) -> Result<ProtocolStats> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be at least 1".into()));
    }
    let engine = Engine::new(bases, strategy, None)?;
    let cells = engine.cells();
    let tables: Vec<Joint> = cells
        .iter()
        .map(|&c| {
            engine.joint(c).map(|mut j| {
                j.iter_mut().flatten().for_each(|p| {
                    if *p < CLAMP {
                        *p = 0.0
                    }
                });
                j
            })
        })
        .collect::<Result<_>>()?;
    let key = SeededRng::new(rand::RngCore::next_u64(rng));
    let (sifted, errors, eve_right) = (0..rounds)
        .into_par_iter()
        .map(|i| {
            let mut r = key.substream(i);
            let cell_index = (r.uniform() * cells.len() as f64) as usize % cells.len();
            let cell = cells[cell_index];
            if cell.bob_basis != cell.alice_basis {
                return (0u64, 0u64, 0u64);
            }
            let table = &tables[cell_index];
            let total: f64 = table.iter().flatten().sum();
            let mut x = r.uniform() * total;
            let mut outcome = (SYMBOLS - 1, SYMBOLS - 1);
            'pick: for (m, row) in table.iter().enumerate() {
                for (nu, &p) in row.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    if x < p {
                        outcome = (m, nu);
                        break 'pick;
                    }
                    x -= p;
                }
            }
            (1, (outcome.0 != cell.symbol) as u64, (outcome.1 == cell.symbol) as u64)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = rounds as f64;
    let s = sifted.max(1) as f64;
    let (sift_rate, qber, eve) = (sifted as f64 / n, errors as f64 / s, eve_right as f64 / s);
    let binomial = |p: f64, k: f64| (p * (1.0 - p) / k).sqrt();
    Ok(ProtocolStats {
        strategy,
        sift_rate,
        symbol_error_rate: qber,
        eve_guess_prob: eve,
        rounds: Some(rounds),
        stderr: Some(StatErrors {
            sift_rate: binomial(sift_rate, n),
            symbol_error_rate: binomial(qber, s),
            eve_guess_prob: binomial(eve, s),
        }),
    })
}
