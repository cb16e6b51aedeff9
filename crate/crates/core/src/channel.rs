//! Channels as Choi operators and the link product of quantum combs.
//!
//! Conventions:
//! * `C = (𝒞 ⊗ I)|I⟩⟨I|` with `|I⟩ = Σ_i |i⟩|i⟩` unnormalized, so a channel's
//!   Choi operator lives on `outputs ⊗ inputs` (output factors first).
//! * A channel acts as `𝒞(ρ) = Tr_in[(I_out ⊗ ρᵀ) C]`.
//! * Transposes and conjugates are taken in the computational basis.
//! * The link product contracts shared labels:
//!   `A ∗ B = Tr_S[(A^{T_S} ⊗ I)(I ⊗ B)]`. Composition of channels and
//!   insertion of a gate into a comb are both link products.

use serde::{Deserialize, Serialize};

use crate::eig::{eig_hermitian, min_eigenvalue};
use crate::error::{Error, Result};
use crate::matrix::{
    max_entangled, partial_trace, permute_factors, tensor, tol, ComplexMatrix, C64, ZERO,
};

/// A labeled tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

impl Factor {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }
}

/// Factors with the given labels, all of dimension `d`.
pub fn factors(labels: &[&str], d: usize) -> Vec<Factor> {
    labels.iter().map(|l| Factor::new(*l, d)).collect()
}

fn dims_of(fs: &[Factor]) -> Vec<usize> {
    fs.iter().map(|f| f.dim).collect()
}

fn product(fs: &[Factor]) -> usize {
    fs.iter().map(|f| f.dim).product()
}

/// An operator on an ordered sequence of labeled factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    matrix: ComplexMatrix,
    factors: Vec<Factor>,
}

impl LabeledOperator {
    pub fn new(matrix: ComplexMatrix, factors: Vec<Factor>) -> Result<Self> {
        let total = product(&factors);
        if !matrix.is_square() || matrix.rows() != total {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on factors of total dimension {total}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::Factor {
                    factor: i,
                    reason: format!("duplicate label {:?}", f.label),
                });
            }
        }
        Ok(Self { matrix, factors })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        dims_of(&self.factors)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Reorders factors to match `order`, which must name every factor.
    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "order {order:?} does not cover factors {:?}",
                self.labels()
            )));
        }
        let perm = order
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let matrix = permute_factors(&self.matrix, &self.dims(), &perm)?;
        let factors = perm.iter().map(|&p| self.factors[p].clone()).collect();
        Ok(Self { matrix, factors })
    }

    pub fn trace_out(&self, labels: &[&str]) -> Result<Self> {
        let traced = labels
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<usize> = (0..self.factors.len())
            .filter(|k| !traced.contains(k))
            .collect();
        let matrix = partial_trace(&self.matrix, &self.dims(), &keep)?;
        let factors = keep.iter().map(|&k| self.factors[k].clone()).collect();
        Ok(Self { matrix, factors })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    /// Link product over all labels the two operators share.
    ///
    /// The result lives on `self`'s unshared factors followed by `other`'s.
    pub fn link(&self, other: &Self) -> Result<Self> {
        let shared: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| other.factors.iter().any(|f| f.label == *l))
            .collect();
        for l in &shared {
            let (a, b) = (&self.factors[self.position(l)?], &other.factors[other.position(l)?]);
            if a.dim != b.dim {
                return Err(Error::DimensionMismatch(format!(
                    "shared factor {l:?} has dimensions {} and {}",
                    a.dim, b.dim
                )));
            }
        }
        let a_rest: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !shared.contains(l))
            .collect();
        let b_rest: Vec<&str> = other
            .labels()
            .into_iter()
            .filter(|l| !shared.contains(l))
            .collect();

        let a_order: Vec<&str> = a_rest.iter().chain(&shared).copied().collect();
        let b_order: Vec<&str> = shared.iter().chain(&b_rest).copied().collect();
        let a = self.permuted(&a_order)?;
        let b = other.permuted(&b_order)?;

        let nx: usize = a.factors[..a_rest.len()].iter().map(|f| f.dim).product();
        let ns: usize = a.factors[a_rest.len()..].iter().map(|f| f.dim).product();
        let ny: usize = b.factors[shared.len()..].iter().map(|f| f.dim).product();
        let (am, bm) = (a.matrix.as_slice(), b.matrix.as_slice());
        let (acols, bcols, ocols) = (nx * ns, ns * ny, nx * ny);

        // out[(x,y),(x',y')] = Σ_{s,s'} A[(x,s'),(x',s)] B[(s',y),(s,y')]
        let mut out = vec![ZERO; ocols * ocols];
        for x in 0..nx {
            for s1 in 0..ns {
                let arow = &am[(x * ns + s1) * acols..(x * ns + s1 + 1) * acols];
                for xp in 0..nx {
                    for s in 0..ns {
                        let av = arow[xp * ns + s];
                        if av == ZERO {
                            continue;
                        }
                        for y in 0..ny {
                            let brow = &bm[(s1 * ny + y) * bcols + s * ny..(s1 * ny + y) * bcols + (s + 1) * ny];
                            let orow = (x * ny + y) * ocols + xp * ny;
                            for (o, &bv) in out[orow..orow + ny].iter_mut().zip(brow) {
                                *o += av * bv;
                            }
                        }
                    }
                }
            }
        }
        let factors = a.factors[..a_rest.len()]
            .iter()
            .chain(&b.factors[shared.len()..])
            .cloned()
            .collect();
        Ok(Self {
            matrix: ComplexMatrix::from_vec(ocols, ocols, out)?,
            factors,
        })
    }
}

/// How much checking a channel constructor performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    /// Positivity of the Choi operator and trace preservation.
    #[default]
    Full,
    /// Trace preservation only; skips the eigendecomposition.
    TraceOnly,
    Skip,
}

/// A CPTP map stored as its Choi operator on `outputs ⊗ inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    choi: ComplexMatrix,
    outputs: Vec<Factor>,
    inputs: Vec<Factor>,
}

impl Channel {
    pub fn new(
        choi: ComplexMatrix,
        outputs: Vec<Factor>,
        inputs: Vec<Factor>,
        validation: Validation,
    ) -> Result<Self> {
        let all: Vec<Factor> = outputs.iter().chain(&inputs).cloned().collect();
        LabeledOperator::new(choi.clone(), all)?;
        let ch = Self {
            choi,
            outputs,
            inputs,
        };
        match validation {
            Validation::Full => {
                ch.ensure_trace_preserving(tol::EQUALITY)?;
                ch.ensure_positive(tol::POSITIVITY)?;
            }
            Validation::TraceOnly => ch.ensure_trace_preserving(tol::EQUALITY)?,
            Validation::Skip => {}
        }
        Ok(ch)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn inputs(&self) -> &[Factor] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Factor] {
        &self.outputs
    }

    pub fn dim_in(&self) -> usize {
        product(&self.inputs)
    }

    pub fn dim_out(&self) -> usize {
        product(&self.outputs)
    }

    pub fn labels_in(&self) -> Vec<&str> {
        self.inputs.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn labels_out(&self) -> Vec<&str> {
        self.outputs.iter().map(|f| f.label.as_str()).collect()
    }

    /// The Choi operator with its factor labels (outputs first).
    pub fn operator(&self) -> LabeledOperator {
        LabeledOperator {
            matrix: self.choi.clone(),
            factors: self.outputs.iter().chain(&self.inputs).cloned().collect(),
        }
    }

    /// Builds a channel from a labeled Choi operator, reordering factors so
    /// that the named outputs come first.
    pub fn from_operator(
        op: &LabeledOperator,
        outputs: &[&str],
        inputs: &[&str],
        validation: Validation,
    ) -> Result<Self> {
        let order: Vec<&str> = outputs.iter().chain(inputs).copied().collect();
        let op = op.permuted(&order)?;
        let (outs, ins) = op.factors.split_at(outputs.len());
        Self::new(op.matrix.clone(), outs.to_vec(), ins.to_vec(), validation)
    }

    pub fn relabeled(&self, outputs: &[&str], inputs: &[&str]) -> Result<Self> {
        if outputs.len() != self.outputs.len() || inputs.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch("relabeling changes factor count".into()));
        }
        let rename = |fs: &[Factor], ls: &[&str]| -> Vec<Factor> {
            fs.iter().zip(ls).map(|(f, l)| Factor::new(*l, f.dim)).collect()
        };
        Self::new(
            self.choi.clone(),
            rename(&self.outputs, outputs),
            rename(&self.inputs, inputs),
            Validation::Skip,
        )
    }

    /// `max |Tr_out C - I_in|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let dims: Vec<usize> = [self.dim_out(), self.dim_in()].to_vec();
        let reduced = partial_trace(&self.choi, &dims, &[1]).expect("dimensions checked");
        reduced.max_abs_diff(&ComplexMatrix::identity(self.dim_in()))
    }

    pub fn ensure_trace_preserving(&self, tol: f64) -> Result<()> {
        let residual = self.trace_preservation_residual();
        if residual <= tol {
            Ok(())
        } else {
            Err(Error::NotTracePreserving { residual })
        }
    }

    pub fn ensure_positive(&self, tol: f64) -> Result<()> {
        let residual = self.choi.hermiticity_residual();
        if residual > tol {
            return Err(Error::NotHermitian { residual });
        }
        let min_eigenvalue = min_eigenvalue(&self.choi)?;
        if min_eigenvalue >= -tol {
            Ok(())
        } else {
            Err(Error::NotPositive { min_eigenvalue })
        }
    }

    /// `max(trace-preservation residual, -min eigenvalue)`.
    pub fn cptp_residual(&self) -> Result<f64> {
        let min = min_eigenvalue(&self.choi)?;
        Ok(self.trace_preservation_residual().max(-min).max(self.choi.hermiticity_residual()))
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_channel(self, rho)
    }

    /// A minimal Kraus decomposition from the spectral decomposition of the Choi operator.
    pub fn kraus(&self) -> Result<Vec<ComplexMatrix>> {
        let e = eig_hermitian(&self.choi)?;
        let (dout, din) = (self.dim_out(), self.dim_in());
        Ok(e
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > tol::EQUALITY)
            .map(|(k, &l)| {
                let v = e.vector(k);
                ComplexMatrix::from_fn(dout, din, |a, b| v[a * din + b] * l.sqrt())
            })
            .collect())
    }

    /// `self ∘ first`, linking `first`'s outputs to `self`'s inputs by label.
    pub fn after(&self, first: &Channel) -> Result<Channel> {
        let linked = first.operator().link(&self.operator())?;
        let outs: Vec<&str> = linked
            .labels()
            .into_iter()
            .filter(|l| self.outputs.iter().any(|f| f.label == *l) || first.outputs.iter().any(|f| f.label == *l))
            .collect();
        let ins: Vec<&str> = linked
            .labels()
            .into_iter()
            .filter(|l| !outs.contains(l))
            .collect();
        Channel::from_operator(&linked, &outs, &ins, Validation::Skip)
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        let joint = LabeledOperator::new(
            tensor(&self.choi, &other.choi),
            self.outputs
                .iter()
                .chain(&self.inputs)
                .chain(&other.outputs)
                .chain(&other.inputs)
                .cloned()
                .collect(),
        )?;
        let outs: Vec<&str> = self.labels_out().into_iter().chain(other.labels_out()).collect();
        let ins: Vec<&str> = self.labels_in().into_iter().chain(other.labels_in()).collect();
        Channel::from_operator(&joint, &outs, &ins, Validation::Skip)
    }

    pub fn dump(&self) -> ChoiDump {
        ChoiDump::new("channel", &self.outputs, &self.inputs, &self.choi)
    }

    pub fn from_dump(dump: &ChoiDump) -> Result<Self> {
        let (outs, ins) = dump.factors()?;
        Self::new(dump.matrix()?, outs, ins, Validation::Full)
    }
}

/// Choi operator of the unitary channel `ρ ↦ UρU†`, labeled `out`/`in`.
pub fn choi_of_unitary(u: &ComplexMatrix) -> Result<Channel> {
    unitary_channel(u, "out", "in")
}

pub fn unitary_channel(u: &ComplexMatrix, out: &str, input: &str) -> Result<Channel> {
    u.ensure_unitary(tol::UNITARITY)?;
    let d = u.rows();
    let v = unitary_vector(u);
    Channel::new(
        ComplexMatrix::projector(&v),
        vec![Factor::new(out, d)],
        vec![Factor::new(input, d)],
        Validation::Skip,
    )
}

/// `|U⟩ = (U ⊗ I)|I⟩`, whose entries are those of `U` in row-major order.
pub fn unitary_vector(u: &ComplexMatrix) -> Vec<C64> {
    u.as_slice().to_vec()
}

pub fn identity_channel(out: &str, input: &str, d: usize) -> Channel {
    unitary_channel(&ComplexMatrix::identity(d), out, input).expect("identity is unitary")
}

/// Choi operator `Σ_k (K_k ⊗ I)|I⟩⟨I|(K_k ⊗ I)†`.
pub fn choi_from_kraus(
    kraus: &[ComplexMatrix],
    outputs: Vec<Factor>,
    inputs: Vec<Factor>,
) -> Result<Channel> {
    let (dout, din) = (product(&outputs), product(&inputs));
    let mut completeness = ComplexMatrix::zeros(din, din);
    let mut choi = ComplexMatrix::zeros(dout * din, dout * din);
    for k in kraus {
        if k.rows() != dout || k.cols() != din {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {dout}x{din}",
                k.rows(),
                k.cols()
            )));
        }
        completeness += &k.dagger().matmul(k);
        choi += &ComplexMatrix::projector(k.as_slice());
    }
    let residual = completeness.max_abs_diff(&ComplexMatrix::identity(din));
    if residual > tol::EQUALITY {
        return Err(Error::IncompleteKraus { residual });
    }
    Channel::new(choi, outputs, inputs, Validation::Skip)
}

/// Choi operator of an arbitrary linear map given by its action on the
/// matrix units `|a⟩⟨b|`: `C = Σ_{ab} f(|a⟩⟨b|) ⊗ |a⟩⟨b|`.
pub fn choi_from_map(
    outputs: Vec<Factor>,
    inputs: Vec<Factor>,
    validation: Validation,
    f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> Result<Channel> {
    let (dout, din) = (product(&outputs), product(&inputs));
    let n = dout * din;
    let mut choi = ComplexMatrix::zeros(n, n);
    for a in 0..din {
        for b in 0..din {
            let mut unit = ComplexMatrix::zeros(din, din);
            unit[(a, b)] = C64::new(1.0, 0.0);
            let img = f(&unit);
            if img.rows() != dout || img.cols() != dout {
                return Err(Error::DimensionMismatch(format!(
                    "map produced a {}x{} output, expected {dout}x{dout}",
                    img.rows(),
                    img.cols()
                )));
            }
            for x in 0..dout {
                for y in 0..dout {
                    choi[(x * din + a, y * din + b)] = img[(x, y)];
                }
            }
        }
    }
    Channel::new(choi, outputs, inputs, validation)
}

/// `𝒞(ρ) = Tr_in[(I_out ⊗ ρᵀ) C]`.
pub fn apply_channel(c: &Channel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (dout, din) = (c.dim_out(), c.dim_in());
    if !rho.is_square() || rho.rows() != din {
        return Err(Error::DimensionMismatch(format!(
            "channel input dimension {din}, state is {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    ensure_state_like(rho)?;
    let n = dout * din;
    let choi = c.choi.as_slice();
    let mut out = ComplexMatrix::zeros(dout, dout);
    for x in 0..dout {
        for a1 in 0..din {
            let row = &choi[(x * din + a1) * n..(x * din + a1 + 1) * n];
            for y in 0..dout {
                let mut acc = ZERO;
                for a in 0..din {
                    acc += rho[(a1, a)] * row[y * din + a];
                }
                out[(x, y)] += acc;
            }
        }
    }
    Ok(out)
}

/// `(𝒞 ⊗ I_R)(ρ)` for `ρ` on `inputs ⊗ R`, returned on `outputs ⊗ R`.
pub fn apply_channel_extended(c: &Channel, rho: &ComplexMatrix, ancilla_dim: usize) -> Result<ComplexMatrix> {
    let (dout, din, dr) = (c.dim_out(), c.dim_in(), ancilla_dim);
    if !rho.is_square() || rho.rows() != din * dr {
        return Err(Error::DimensionMismatch(format!(
            "extended input must be {0}x{0}, state is {1}x{2}",
            din * dr,
            rho.rows(),
            rho.cols()
        )));
    }
    ensure_state_like(rho)?;
    let n = dout * din;
    let choi = c.choi.as_slice();
    let mut out = ComplexMatrix::zeros(dout * dr, dout * dr);
    // out[(x,r),(y,r')] = Σ_{a',a} ρ[(a',r),(a,r')] C[(x,a'),(y,a)]
    for x in 0..dout {
        for a1 in 0..din {
            let row = &choi[(x * din + a1) * n..(x * din + a1 + 1) * n];
            for y in 0..dout {
                for a in 0..din {
                    let cv = row[y * din + a];
                    if cv == ZERO {
                        continue;
                    }
                    for r in 0..dr {
                        for r2 in 0..dr {
                            out[(x * dr + r, y * dr + r2)] += cv * rho[(a1 * dr + r, a * dr + r2)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn ensure_state_like(rho: &ComplexMatrix) -> Result<()> {
    let h = rho.hermiticity_residual();
    if h > tol::EQUALITY {
        return Err(Error::NotAState(format!("Hermiticity residual {h:.3e}")));
    }
    let t = rho.trace();
    if (t - C64::new(1.0, 0.0)).norm() > tol::EQUALITY {
        return Err(Error::NotAState(format!("trace {t}")));
    }
    Ok(())
}

/// Factor labels of a one-slot comb, in storage order.
pub const COMB_LABELS: [&str; 6] = ["0B", "0E", "1", "2", "3B", "3E"];

/// Choi operator `R^(1)` of a one-slot network on `(0B, 0E, 1, 2, 3B, 3E)`:
/// bipartite input `0 = 0B ⊗ 0E`, slot input `1`, slot output `2`, bipartite
/// output `3 = 3B ⊗ 3E`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombNetwork {
    choi: ComplexMatrix,
    d: usize,
}

/// Residuals of the one-slot comb normalization
/// `Tr_3 R^(1) = I_2 ⊗ R^(0)`, `Tr_1 R^(0) = I_0`.
#[derive(Debug, Clone)]
pub struct NormalizationReport {
    /// `R^(0) = Tr_{2,3}[R^(1)] / d` on `(0B, 0E, 1)`.
    pub r0: ComplexMatrix,
    pub slot_residual: f64,
    pub channel_residual: f64,
}

impl NormalizationReport {
    pub fn max_residual(&self) -> f64 {
        self.slot_residual.max(self.channel_residual)
    }
}

impl CombNetwork {
    pub fn new(choi: ComplexMatrix, d: usize) -> Result<Self> {
        let n = d.pow(6);
        if !choi.is_square() || choi.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "comb Choi must be {n}x{n} for d = {d}, got {}x{}",
                choi.rows(),
                choi.cols()
            )));
        }
        Ok(Self { choi, d })
    }

    /// Reorders a labeled operator carrying the six comb labels.
    pub fn from_operator(op: &LabeledOperator, d: usize) -> Result<Self> {
        let op = op.permuted(&COMB_LABELS)?;
        if op.factors.iter().any(|f| f.dim != d) {
            return Err(Error::DimensionMismatch(format!(
                "comb factors must all have dimension {d}"
            )));
        }
        Self::new(op.matrix, d)
    }

    /// Network with pre-processing `pre: (0B,0E) → (1, memory…)` and
    /// post-processing `post: (2, memory…) → (3B, 3E)`, linked over the
    /// memory labels they share.
    pub fn from_channels(pre: &Channel, post: &Channel, d: usize) -> Result<Self> {
        let linked = pre.operator().link(&post.operator())?;
        Self::from_operator(&linked, d)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn into_choi(self) -> ComplexMatrix {
        self.choi
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn factor_dims(&self) -> [usize; 6] {
        [self.d; 6]
    }

    pub fn operator(&self) -> LabeledOperator {
        LabeledOperator {
            matrix: self.choi.clone(),
            factors: factors(&COMB_LABELS, self.d),
        }
    }

    pub fn normalization_report(&self) -> NormalizationReport {
        let d = self.d;
        let dims = self.factor_dims();
        let over_3 = partial_trace(&self.choi, &dims, &[0, 1, 2, 3]).expect("comb dims");
        let r0 = partial_trace(&over_3, &[d, d, d, d], &[0, 1, 2])
            .expect("comb dims")
            .scale_real(1.0 / d as f64);
        let slot_residual = over_3.max_abs_diff(&tensor(&r0, &ComplexMatrix::identity(d)));
        let over_1 = partial_trace(&r0, &[d, d, d], &[0, 1]).expect("comb dims");
        let channel_residual = over_1.max_abs_diff(&ComplexMatrix::identity(d * d));
        NormalizationReport {
            r0,
            slot_residual,
            channel_residual,
        }
    }

    pub fn check_normalization(&self, tol: f64) -> Result<NormalizationReport> {
        let report = self.normalization_report();
        if report.slot_residual > tol {
            return Err(Error::Normalization(format!(
                "Tr_3 R^(1) differs from I_2 ⊗ R^(0) by {:.3e}",
                report.slot_residual
            )));
        }
        if report.channel_residual > tol {
            return Err(Error::Normalization(format!(
                "Tr_1 R^(0) differs from I_0 by {:.3e}",
                report.channel_residual
            )));
        }
        Ok(report)
    }

    pub fn dump(&self) -> ChoiDump {
        ChoiDump::new("comb", &factors(&COMB_LABELS, self.d), &[], &self.choi)
    }
}

/// Channel obtained by plugging the unitary gate `u` into the slot `1 → 2`.
pub fn insert_gate(network: &CombNetwork, u: &ComplexMatrix) -> Result<Channel> {
    insert_gate_with(network, u, Validation::Full)
}

pub fn insert_gate_with(
    network: &CombNetwork,
    u: &ComplexMatrix,
    validation: Validation,
) -> Result<Channel> {
    if u.rows() != network.d || !u.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "gate is {}x{}, network slot has dimension {}",
            u.rows(),
            u.cols(),
            network.d
        )));
    }
    let gate = unitary_channel(u, "2", "1")?;
    let out = network.operator().link(&gate.operator())?;
    Channel::from_operator(&out, &["3B", "3E"], &["0B", "0E"], validation)
}

/// Per-gate integrand of the averaged global fidelity,
/// `Tr[C |U⟩⟨U|^{⊗2}] / d⁴`, for a bipartite channel on two `d`-dimensional
/// factors.
pub fn channel_fidelity_with_double_unitary(c: &Channel, u: &ComplexMatrix) -> Result<f64> {
    let d = u.rows();
    let bipartite = |fs: &[Factor]| fs.len() == 2 && fs.iter().all(|f| f.dim == d);
    if !bipartite(&c.outputs) || !bipartite(&c.inputs) {
        return Err(Error::DimensionMismatch(format!(
            "expected a channel on two {d}-dimensional factors"
        )));
    }
    let uu = tensor(u, u);
    let v = unitary_vector(&uu);
    Ok(c.choi.expectation(&v).re / (d as f64).powi(4))
}

/// Serialized Choi operator: labels and dimensions in storage order,
/// row-major `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiDump {
    pub kind: String,
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    /// Number of leading output factors (channels only).
    pub outputs: usize,
    pub entries: Vec<[f64; 2]>,
}

impl ChoiDump {
    fn new(kind: &str, outputs: &[Factor], inputs: &[Factor], m: &ComplexMatrix) -> Self {
        let all: Vec<&Factor> = outputs.iter().chain(inputs).collect();
        Self {
            kind: kind.to_string(),
            labels: all.iter().map(|f| f.label.clone()).collect(),
            dims: all.iter().map(|f| f.dim).collect(),
            outputs: outputs.len(),
            entries: m.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let n: usize = self.dims.iter().product();
        ComplexMatrix::from_vec(n, n, self.entries.iter().map(|&[a, b]| C64::new(a, b)).collect())
    }

    fn factors(&self) -> Result<(Vec<Factor>, Vec<Factor>)> {
        if self.labels.len() != self.dims.len() || self.outputs > self.labels.len() {
            return Err(Error::DimensionMismatch("malformed dump".into()));
        }
        let fs: Vec<Factor> = self
            .labels
            .iter()
            .zip(&self.dims)
            .map(|(l, &d)| Factor::new(l.clone(), d))
            .collect();
        let (o, i) = fs.split_at(self.outputs);
        Ok((o.to_vec(), i.to_vec()))
    }
}

/// `|I⟩⟨I|` on two `d`-dimensional factors.
pub fn max_entangled_projector(d: usize) -> ComplexMatrix {
    ComplexMatrix::projector(&max_entangled(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, re};

    fn pauli() -> [ComplexMatrix; 4] {
        [
            ComplexMatrix::identity(2),
            ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            ComplexMatrix::from_rows(&[&[re(0.0), c(0.0, -1.0)], &[c(0.0, 1.0), re(0.0)]]),
            ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        ]
    }

    fn some_unitary() -> ComplexMatrix {
        // exp(-iθ n·σ) for a fixed axis
        let (ct, st) = (0.3f64.cos(), 0.3f64.sin());
        let (nx, ny, nz) = (0.48, 0.6, 0.64);
        ComplexMatrix::from_rows(&[
            &[c(ct, -st * nz), c(-st * ny, -st * nx)],
            &[c(st * ny, -st * nx), c(ct, st * nz)],
        ])
    }

    #[test]
    fn unitary_choi_basics() {
        let id = choi_of_unitary(&ComplexMatrix::identity(2)).unwrap();
        assert!(id.choi().approx_eq(&max_entangled_projector(2), 0.0));
        assert!((id.choi().trace().re - 2.0).abs() < 1e-15);
        let x = choi_of_unitary(&pauli()[1]).unwrap();
        assert!(x.choi().hs_inner(id.choi()).norm() < 1e-15);
        assert!(matches!(
            choi_of_unitary(&ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0])),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn depolarizing_from_pauli_kraus() {
        let kraus: Vec<ComplexMatrix> = pauli().iter().map(|s| s.scale_real(0.5)).collect();
        let ch = choi_from_kraus(&kraus, factors(&["o"], 2), factors(&["i"], 2)).unwrap();
        assert!(ch.choi().approx_eq(&ComplexMatrix::identity(4).scale_real(0.5), 1e-15));
        let rho = ComplexMatrix::from_rows(&[&[re(0.7), c(0.1, 0.2)], &[c(0.1, -0.2), re(0.3)]]);
        let out = ch.apply(&rho).unwrap();
        assert!(out.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-15));
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let k = vec![ComplexMatrix::identity(2).scale_real(0.9)];
        match choi_from_kraus(&k, factors(&["o"], 2), factors(&["i"], 2)) {
            Err(Error::IncompleteKraus { residual }) => assert!((residual - 0.19).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unitary_action_and_kraus_round_trip() {
        let u = some_unitary();
        let ch = choi_of_unitary(&u).unwrap();
        let rho = ComplexMatrix::from_rows(&[&[re(0.6), c(0.2, -0.1)], &[c(0.2, 0.1), re(0.4)]]);
        let expected = u.matmul(&rho).matmul(&u.dagger());
        assert!(ch.apply(&rho).unwrap().approx_eq(&expected, 1e-14));
        let kraus = ch.kraus().unwrap();
        let back = choi_from_kraus(&kraus, factors(&["out"], 2), factors(&["in"], 2)).unwrap();
        assert!(back.choi().approx_eq(ch.choi(), 1e-12));
    }

    #[test]
    fn composition_by_link() {
        let u = some_unitary();
        let x = &pauli()[1];
        let first = unitary_channel(&u, "m", "a").unwrap();
        let second = unitary_channel(x, "b", "m").unwrap();
        let both = second.after(&first).unwrap();
        let direct = unitary_channel(&x.matmul(&u), "b", "a").unwrap();
        assert_eq!(both.labels_out(), vec!["b"]);
        assert!(both.choi().approx_eq(direct.choi(), 1e-14));
    }

    #[test]
    fn wire_network_passes_the_gate_through() {
        // 0B → 1 and 2 → 3B are wires; 0E rides a memory to 3E.
        let d = 2;
        let pre = identity_channel("1", "0B", d)
            .tensor(&identity_channel("M", "0E", d))
            .unwrap();
        let post = identity_channel("3B", "2", d)
            .tensor(&identity_channel("3E", "M", d))
            .unwrap();
        let r = CombNetwork::from_channels(&pre, &post, d).unwrap();
        r.check_normalization(1e-12).unwrap();
        let u = some_unitary();
        let out = insert_gate(&r, &u).unwrap();
        let expected = unitary_channel(&tensor(&u, &ComplexMatrix::identity(2)), "3", "0").unwrap();
        assert!(out.choi().approx_eq(expected.choi(), 1e-14));
        assert!((out.choi().trace().re - 4.0).abs() < 1e-12);
        assert!(channel_fidelity_with_double_unitary(&out, &u).unwrap() < 1.0);
        let uu = unitary_channel(&tensor(&u, &u), "x", "y").unwrap();
        let uu = Channel::new(uu.choi().clone(), factors(&["3B", "3E"], 2), factors(&["0B", "0E"], 2), Validation::Full).unwrap();
        assert!((channel_fidelity_with_double_unitary(&uu, &u).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn corrupted_comb_fails_normalization() {
        let d = 2;
        let pre = identity_channel("1", "0B", d)
            .tensor(&identity_channel("M", "0E", d))
            .unwrap();
        let post = identity_channel("3B", "2", d)
            .tensor(&identity_channel("3E", "M", d))
            .unwrap();
        let r = CombNetwork::from_channels(&pre, &post, d).unwrap();
        let mut m = r.into_choi();
        m[(0, 0)] += re(1e-3);
        let bad = CombNetwork::new(m, d).unwrap();
        assert!(matches!(bad.check_normalization(1e-9), Err(Error::Normalization(_))));
    }

    #[test]
    fn dump_round_trip() {
        let ch = choi_of_unitary(&some_unitary()).unwrap();
        let json = serde_json::to_string(&ch.dump()).unwrap();
        let back: ChoiDump = serde_json::from_str(&json).unwrap();
        let restored = Channel::from_dump(&back).unwrap();
        assert_eq!(restored.labels_out(), ch.labels_out());
        assert!(restored.choi().approx_eq(ch.choi(), 1e-15));
    }

    #[test]
    fn extended_application_on_product_input() {
        let u = some_unitary();
        let ch = choi_of_unitary(&u).unwrap();
        let rho = ComplexMatrix::from_rows(&[&[re(0.6), c(0.2, -0.1)], &[c(0.2, 0.1), re(0.4)]]);
        let anc = ComplexMatrix::from_real(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.3, 0.0, 0.0, 0.0, 0.2]);
        let out = apply_channel_extended(&ch, &tensor(&rho, &anc), 3).unwrap();
        assert!(out.approx_eq(&tensor(&ch.apply(&rho).unwrap(), &anc), 1e-14));
    }

    #[test]
    fn apply_rejects_bad_inputs() {
        let ch = choi_of_unitary(&ComplexMatrix::identity(2)).unwrap();
        assert!(matches!(ch.apply(&ComplexMatrix::identity(3)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(ch.apply(&ComplexMatrix::identity(2)), Err(Error::NotAState(_))));
    }
}
