//! States, Pauli measurements, Kraus channels and the Choi isomorphism.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matlin::{
    hermitian_eigs, psd_sqrt, CMatrix, Label, Operator, TensorShape, C64, HERMITIAN_TOL, I, ONE, PSD_CLIP, ZERO,
};
use crate::{Error, Result};

pub const TRACE_TOL: f64 = 1e-10;
pub const TP_TOL: f64 = 1e-10;
/// Input-marginal deviation above which a Choi state is reported as not trace preserving.
pub const CHOI_MARGINAL_TOL: f64 = 1e-8;

/// A Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(Operator);

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let m = op.matrix();
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = hermitian_eigs(m)?.min_value();
        if min < -PSD_CLIP {
            return Err(Error::NotPsd(min));
        }
        Ok(Self(op))
    }

    pub fn from_matrix(m: CMatrix, labels: &[Label]) -> Result<Self> {
        Self::new(Operator::new(m, TensorShape::qubits(labels)?)?)
    }

    /// Divides a PSD operator by its trace.
    pub fn normalized(op: Operator) -> Result<Self> {
        let tr = op.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidTrace(tr));
        }
        let shape = op.shape().clone();
        let m = op.into_matrix().scale_real(1.0 / tr).hermitian_part();
        Self::new(Operator::new(m, shape)?)
    }

    /// `|ψ><ψ|` for a normalized ket.
    pub fn pure(ket: &[C64], labels: &[Label]) -> Result<Self> {
        Self::from_matrix(CMatrix::outer(ket), labels)
    }

    pub fn maximally_mixed(labels: &[Label]) -> Result<Self> {
        let shape = TensorShape::qubits(labels)?;
        let n = shape.total_dim();
        Self::new(Operator::new(CMatrix::identity(n).scale_real(1.0 / n as f64), shape)?)
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn shape(&self) -> &TensorShape {
        self.0.shape()
    }

    pub fn purity(&self) -> f64 {
        self.matrix().trace_product(self.matrix()).re
    }

    pub fn partial_trace(&self, over: &Label) -> Result<Self> {
        Ok(Self(self.0.partial_trace(over)?))
    }

    pub fn permute(&self, order: &[Label]) -> Result<Self> {
        Ok(Self(self.0.permute(order)?))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.tensor(&other.0)?))
    }

    pub fn expectation(&self, observable: &CMatrix) -> f64 {
        self.matrix().trace_product(observable).re
    }
}

/// `(|HH> + |VV>)/√2` on the two named qubits.
pub fn bell_phi_plus(first: Label, second: Label) -> DensityOperator {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    DensityOperator::pure(&[s, ZERO, ZERO, s], &[first, second]).expect("Bell state is valid")
}

/// Measurement axis for a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn sigma(self) -> CMatrix {
        match self {
            PauliAxis::X => CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
            PauliAxis::Y => CMatrix::from_fn(2, |i, j| match (i, j) {
                (0, 1) => -I,
                (1, 0) => I,
                _ => ZERO,
            }),
            PauliAxis::Z => CMatrix::diag(&[1.0, -1.0]),
        }
    }

    /// Eigenket of `sigma()` with eigenvalue `outcome`.
    pub fn eigenket(self, outcome: Outcome) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match (self, outcome) {
            (PauliAxis::Z, Outcome::Plus) => [ONE, ZERO],
            (PauliAxis::Z, Outcome::Minus) => [ZERO, ONE],
            (PauliAxis::X, Outcome::Plus) => [C64::new(s, 0.0), C64::new(s, 0.0)],
            (PauliAxis::X, Outcome::Minus) => [C64::new(s, 0.0), C64::new(-s, 0.0)],
            (PauliAxis::Y, Outcome::Plus) => [C64::new(s, 0.0), C64::new(0.0, s)],
            (PauliAxis::Y, Outcome::Minus) => [C64::new(s, 0.0), C64::new(0.0, -s)],
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }

    /// Unit Bloch vector of the axis.
    pub fn unit_vector(self) -> [f64; 3] {
        match self {
            PauliAxis::X => [1.0, 0.0, 0.0],
            PauliAxis::Y => [0.0, 1.0, 0.0],
            PauliAxis::Z => [0.0, 0.0, 1.0],
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for PauliAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" | "1" => Ok(PauliAxis::X),
            "y" | "Y" | "2" => Ok(PauliAxis::Y),
            "z" | "Z" | "3" => Ok(PauliAxis::Z),
            other => Err(Error::Parse(format!("unknown Pauli axis `{other}`"))),
        }
    }
}

/// A ±1 measurement outcome. On the z axis `Plus` is `|H>` and `Minus` is `|V>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::Parse(format!("outcome must be +1 or -1, got {other}"))),
        }
    }

    /// `H` or `V`, the z-basis name.
    pub fn polarization(self) -> &'static str {
        match self {
            Outcome::Plus => "H",
            Outcome::Minus => "V",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "H" => Ok(Outcome::Plus),
            "-1" | "-" | "\u{2212}1" | "V" => Ok(Outcome::Minus),
            other => Err(Error::Parse(format!("unknown outcome `{other}`"))),
        }
    }
}

/// Rank-one projector onto the `outcome` eigenstate of `axis`.
pub fn pauli_projector(axis: PauliAxis, outcome: Outcome) -> CMatrix {
    CMatrix::outer(&axis.eigenket(outcome))
}

/// A completely positive map given by square Kraus operators.
///
/// Input and output shapes have equal total dimension; their labels may differ,
/// which is how a gate on `(D, E)` hands its output to `(B, F)`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    input: TensorShape,
    output: TensorShape,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, input: TensorShape, output: TensorShape) -> Result<Self> {
        let n = input.total_dim();
        if output.total_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: output.total_dim() });
        }
        if ops.is_empty() {
            return Err(Error::InvalidArgument("a channel needs at least one Kraus operator".into()));
        }
        if let Some(bad) = ops.iter().find(|k| k.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.dim() });
        }
        Ok(Self { ops, input, output })
    }

    /// Like [`KrausChannel::new`] but also requires `Σ K†K = 1`.
    pub fn trace_preserving(ops: Vec<CMatrix>, input: TensorShape, output: TensorShape) -> Result<Self> {
        let ch = Self::new(ops, input, output)?;
        let defect = ch.trace_preservation_defect();
        if defect > TP_TOL {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(ch)
    }

    pub fn identity(labels: &[Label]) -> Result<Self> {
        let shape = TensorShape::qubits(labels)?;
        Self::new(vec![CMatrix::identity(shape.total_dim())], shape.clone(), shape)
    }

    pub fn unitary(u: CMatrix, input: TensorShape, output: TensorShape) -> Result<Self> {
        Self::trace_preserving(vec![u], input, output)
    }

    /// Replaces each input by the maximally mixed state.
    pub fn depolarizing(label: Label) -> Result<Self> {
        let ops = PauliAxis::ALL
            .iter()
            .map(|a| a.sigma())
            .chain(std::iter::once(CMatrix::identity(2)))
            .map(|m| m.scale_real(0.5))
            .collect();
        let shape = TensorShape::qubits(&[label])?;
        Self::trace_preserving(ops, shape.clone(), shape)
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn input(&self) -> &TensorShape {
        &self.input
    }

    pub fn output(&self) -> &TensorShape {
        &self.output
    }

    /// `max |Σ K†K − 1|`
    pub fn trace_preservation_defect(&self) -> f64 {
        let n = self.input.total_dim();
        let mut sum = CMatrix::zeros(n);
        for k in &self.ops {
            sum += &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&CMatrix::identity(n))
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preservation_defect() <= TP_TOL
    }

    /// `next ∘ self`; the output of `self` must carry the labels of `next`'s input.
    pub fn then(&self, next: &KrausChannel) -> Result<Self> {
        let order: Vec<Label> = next.input.labels().cloned().collect();
        let (_, p) = self.output.permutation_matrix(&order)?;
        let mut aligned = Vec::with_capacity(self.ops.len());
        for k in &self.ops {
            aligned.push(&p * k);
        }
        let mut ops = Vec::with_capacity(self.ops.len() * next.ops.len());
        for a in &aligned {
            for b in &next.ops {
                ops.push(b * a);
            }
        }
        Self::new(ops, self.input.clone(), next.output.clone())
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &KrausChannel) -> Result<Self> {
        let input = self.input.concat(&other.input)?;
        let output = self.output.concat(&other.output)?;
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(a.kron(b));
            }
        }
        Self::new(ops, input, output)
    }

    /// Convex combination `Σ w_i E_i`; all channels must share shapes.
    pub fn mixture(parts: &[(f64, KrausChannel)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 || parts.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::InvalidArgument(format!("mixture weights must be a distribution, sum {total}")));
        }
        let mut ops = Vec::new();
        for (w, ch) in parts {
            if ch.input != first.input || ch.output != first.output {
                return Err(Error::InvalidArgument("mixture components have different shapes".into()));
            }
            if *w > 0.0 {
                ops.extend(ch.ops.iter().map(|k| k.scale_real(w.sqrt())));
            }
        }
        Self::new(ops, first.input.clone(), first.output.clone())
    }

    /// Renames the output factors, keeping their order.
    pub fn with_output(&self, labels: &[Label]) -> Result<Self> {
        let output = TensorShape::new(labels.iter().cloned().zip(self.output.dims()).collect())?;
        Self::new(self.ops.clone(), self.input.clone(), output)
    }

    /// `Σ K ρ K†` on the input factors of `rho`; the output factors replace the
    /// input factors at the front of the result's shape.
    pub fn apply_to(&self, rho: &Operator) -> Result<Operator> {
        let mut order: Vec<Label> = self.input.labels().cloned().collect();
        for l in self.input.labels() {
            let pos = rho.shape().position(l)?;
            if rho.shape().factors()[pos].1 != self.input.factors()[self.input.position(l)?].1 {
                return Err(Error::DimensionMismatch {
                    expected: self.input.factors()[self.input.position(l)?].1,
                    got: rho.shape().factors()[pos].1,
                });
            }
        }
        let rest: Vec<(Label, usize)> =
            rho.shape().factors().iter().filter(|(l, _)| !self.input.contains(l)).cloned().collect();
        order.extend(rest.iter().map(|(l, _)| l.clone()));
        let aligned = rho.permute(&order)?;
        let rest_dim: usize = rest.iter().map(|(_, d)| d).product();
        let id = CMatrix::identity(rest_dim);
        let mut out = CMatrix::zeros(aligned.matrix().dim());
        for k in &self.ops {
            let big = k.kron(&id);
            out += &(&(&big * aligned.matrix()) * &big.adjoint());
        }
        let shape = self.output.concat(&TensorShape::new(rest)?)?;
        Operator::new(out, shape)
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_to(rho.operator())?;
        if self.is_trace_preserving() {
            DensityOperator::new(out)
        } else {
            DensityOperator::normalized(out)
        }
    }
}

/// `(E ⊗ 1)(|Φ⁺><Φ⁺|)`; the reference factor keeps the input label (primed on a clash).
pub fn choi_of_channel(ch: &KrausChannel) -> Result<DensityOperator> {
    choi_operator(ch).and_then(DensityOperator::new)
}

/// Unnormalized-safe variant of [`choi_of_channel`] for trace-decreasing maps.
pub fn choi_operator(ch: &KrausChannel) -> Result<Operator> {
    let d = ch.input.total_dim();
    let mut reference = Vec::new();
    for (label, dim) in ch.input.factors() {
        let mut r = label.primed();
        while ch.output.contains(&r) || ch.input.contains(&r) {
            r = r.primed();
        }
        reference.push((r, *dim));
    }
    let reference = TensorShape::new(reference)?;
    // |Φ⁺> = Σ_i |i>_in |i>_ref / √d
    let mut ket = vec![ZERO; d * d];
    for i in 0..d {
        ket[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    let phi = Operator::new(CMatrix::outer(&ket), ch.input.concat(&reference)?)?;
    let mut out = ch.apply_to(&phi)?;
    // hand the input labels back to the reference factors where that is unambiguous
    for ((label, _), (r, _)) in ch.input.factors().iter().zip(reference.factors()) {
        if !out.shape().contains(label) {
            out = out.relabel(r, label.clone())?;
        }
    }
    Ok(out)
}

/// Channel recovered from a Choi operator: `E(ρ) = d · Tr_in[τ (1 ⊗ ρᵀ)]`.
#[derive(Clone, Debug)]
pub struct ChoiMap {
    tau: Operator,
    input: Label,
    input_dim: usize,
}

impl ChoiMap {
    pub fn input_label(&self) -> &Label {
        &self.input
    }

    /// Evaluates the map on an operator of the input factor.
    pub fn apply(&self, rho: &CMatrix) -> Result<Operator> {
        if rho.dim() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: rho.dim() });
        }
        let weighted = self.weight_input(&rho.transpose())?;
        let m = weighted.matrix().scale_real(self.input_dim as f64);
        Operator::new(m, weighted.shape().clone())
    }

    /// `Tr_in[τ (1 ⊗ X)]` for an operator `X` on the input factor.
    pub(crate) fn weight_input(&self, x: &CMatrix) -> Result<Operator> {
        let labels: Vec<Label> = self.tau.shape().labels().filter(|l| **l != self.input).cloned().chain([self.input.clone()]).collect();
        let aligned = self.tau.permute(&labels)?;
        let rest = aligned.matrix().dim() / self.input_dim;
        let product = aligned.matrix() * &CMatrix::identity(rest).kron(x);
        Operator::new(product, aligned.shape().clone())?.partial_trace(&self.input)
    }
}

/// Wraps a Choi state as a map evaluator on its `input_label` factor.
pub fn channel_of_choi(tau: &Operator, input_label: &Label) -> Result<ChoiMap> {
    let pos = tau.shape().position(input_label)?;
    let input_dim = tau.shape().factors()[pos].1;
    let marginal = tau.reduce_to(&[input_label.clone()])?;
    let defect = marginal.matrix().max_abs_diff(&CMatrix::identity(input_dim).scale_real(1.0 / input_dim as f64));
    if defect > CHOI_MARGINAL_TOL {
        log::warn!("Choi state is not trace preserving on {input_label}: marginal defect {defect:e}");
    }
    Ok(ChoiMap { tau: tau.clone(), input: input_label.clone(), input_dim })
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.shape().dims() != sigma.shape().dims() {
        return Err(Error::DimensionMismatch { expected: rho.matrix().dim(), got: sigma.matrix().dim() });
    }
    matrix_fidelity(rho.matrix(), sigma.matrix())
}

pub(crate) fn matrix_fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let root = psd_sqrt(rho)?;
    let inner = (&(&root * sigma) * &root).hermitian_part();
    let eig = hermitian_eigs(&inner)?;
    // round-off eigenvalues of a rank-deficient product would otherwise add ~√ε each
    let floor = 1e-14 * eig.values[0].abs();
    let s: f64 = eig.values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok((s * s).clamp(0.0, 1.0))
}
