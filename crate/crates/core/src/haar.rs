//! Haar-random unitaries and Monte Carlo averages over them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_fidelity_with_double_unitary, insert_gate_with, CombNetwork, Validation};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ZERO};

/// Deterministic random source: ChaCha20 keyed by a 64-bit seed.
///
/// Independent streams for parallel work are split off with
/// [`SeededRng::substream`], whose seeds are `splitmix64(seed ⊕ splitmix64(index))`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "chacha20";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        Self::ALGORITHM
    }

    /// Stream number `index` derived from this generator's seed. Does not
    /// advance `self`.
    pub fn substream(&self, index: u64) -> SeededRng {
        SeededRng::new(sub_seed(self.seed, index))
    }

    /// Standard complex normal `(x + iy)/√2`, `x, y ~ N(0, 1)`.
    pub fn complex_normal(&mut self) -> C64 {
        let x: f64 = StandardNormal.sample(&mut self.inner);
        let y: f64 = StandardNormal.sample(&mut self.inner);
        C64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Complex Ginibre matrix with i.i.d. standard complex normal entries.
pub fn ginibre(d: usize, rng: &mut SeededRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| rng.complex_normal())
}

/// Householder QR of a square matrix. Returns `Q` and the diagonal of `R`.
fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, Vec<C64>) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut diag = vec![ZERO; n];
    for k in 0..n {
        let norm = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            diag[k] = x0;
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // r ← (I − 2vv†) r on rows k..n
        for j in k..n {
            let s: C64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= v[i - k] * s * 2.0;
            }
        }
        // q ← q (I − 2vv†) on columns k..n
        for i in 0..n {
            let s: C64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            for j in k..n {
                q[(i, j)] -= s * v[j - k].conj() * 2.0;
            }
        }
        diag[k] = r[(k, k)];
    }
    (q, diag)
}

/// Haar-distributed unitary: Ginibre matrix, QR, then `Q·diag(r_ii/|r_ii|)`.
pub fn sample_haar_unitary(d: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let (mut q, diag) = householder_qr(&ginibre(d, rng));
    for (j, r) in diag.iter().enumerate() {
        let phase = if r.norm() > 0.0 { r / r.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Sample mean with its standard error `s/√n` (`s` the n−1 sample deviation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            mean,
            stderr,
            samples: n,
        }
    }

    /// `|mean − target| ≤ k·stderr`, with a floor for constant integrands.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr.max(1e-12)
    }
}

/// Average of `f(U)` over `samples` Haar unitaries.
///
/// One `u64` is drawn from `rng` to key the run; sample `i` then uses
/// `substream(i)` of that key, so results do not depend on the thread count.
pub fn haar_average<F>(d: usize, samples: usize, rng: &mut SeededRng, f: F) -> Result<Estimate>
where
    F: Fn(&ComplexMatrix) -> Result<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let key = SeededRng::new(rng.next_u64());
    let values = (0..samples as u64)
        .into_par_iter()
        .map(|i| f(&sample_haar_unitary(d, &mut key.substream(i))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&values))
}

/// Monte Carlo estimate of the averaged global fidelity of a one-slot network.
pub fn average_fidelity_mc(
    network: &CombNetwork,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<Estimate> {
    haar_average(network.d(), samples, rng, |u| {
        let c = insert_gate_with(network, u, Validation::TraceOnly)?;
        channel_fidelity_with_double_unitary(&c, u)
    })
}
