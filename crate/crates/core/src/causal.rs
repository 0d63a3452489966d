//! Causal maps `E_{CB|D}` between two time-ordered qubits, represented by
//! their Choi states `τ_CBD`, and the example circuits that produce them.
//!
//! A circuit consists of a common-cause state `ρ_CE` and a gate taking the
//! intervention `D` and the environment `E` to the later system `B` and a
//! discarded system `F`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matlin::{CMatrix, Label, Operator, TensorShape, C64, ONE, ZERO};
use crate::quantum::{bell_phi_plus, pauli_projector, DensityOperator, KrausChannel, Outcome, PauliAxis};
use crate::{Error, Result};

/// Deviation allowed in `Tr_B τ = ρ_C ⊗ 1/2`.
pub const RETROCAUSATION_TOL: f64 = 1e-8;
/// Conditioning events less likely than this are rejected.
pub const MIN_CONDITIONING_PROBABILITY: f64 = 1e-12;
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Phase of the partial swap used for the coherent example.
pub const COH_THETA: f64 = -FRAC_PI_2;
/// Phase used for the dephased physical-mixture example.
pub const PHYSC_THETA: f64 = FRAC_PI_2;

fn cbd() -> [Label; 3] {
    [Label::C, Label::B, Label::D]
}

/// Choi state of a causal map over `(C, B, D)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalChoi {
    tau: DensityOperator,
}

impl CausalChoi {
    /// Validates unit trace, positivity and the no-retrocausation marginal.
    pub fn new(tau: DensityOperator) -> Result<Self> {
        let choi = Self::with_labels(tau)?;
        let defect = choi.retrocausation_defect()?;
        if defect > RETROCAUSATION_TOL {
            return Err(Error::InvariantViolation(format!(
                "Tr_B tau differs from rho_C (x) 1/2 by {defect:e}"
            )));
        }
        Ok(choi)
    }

    /// Accepts a reconstructed state whose marginal constraint only holds approximately.
    pub fn from_estimate(tau: DensityOperator) -> Result<Self> {
        Self::with_labels(tau)
    }

    fn with_labels(tau: DensityOperator) -> Result<Self> {
        let shape = tau.shape();
        if shape.dims() != [2, 2, 2] {
            return Err(Error::DimensionMismatch { expected: 8, got: shape.total_dim() });
        }
        let tau = tau.permute(&cbd())?;
        Ok(Self { tau })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(DensityOperator::from_matrix(m, &cbd())?)
    }

    pub fn tau(&self) -> &DensityOperator {
        &self.tau
    }

    pub fn matrix(&self) -> &CMatrix {
        self.tau.matrix()
    }

    /// `Tr_{BD} τ`
    pub fn rho_c(&self) -> Result<DensityOperator> {
        self.tau.partial_trace(&Label::D)?.partial_trace(&Label::B)
    }

    /// `Tr_B τ − ρ_C ⊗ 1/2` as an operator on `(C, D)`.
    pub fn retrocausation_residual(&self) -> Result<CMatrix> {
        let marginal = self.tau.partial_trace(&Label::B)?;
        let target = self.rho_c()?.matrix().kron(&CMatrix::identity(2).scale_real(0.5));
        Ok(marginal.matrix() - &target)
    }

    pub fn retrocausation_defect(&self) -> Result<f64> {
        Ok(self.retrocausation_residual()?.max_abs())
    }

    /// `τ^b_CD = Tr_B[Π^b τ] / p` and `p = Tr[Π^b τ]`.
    pub fn given_b(&self, proj_b: &CMatrix) -> Result<(DensityOperator, f64)> {
        self.condition_on_outcome(&Label::B, proj_b)
    }

    /// `τ^c_BD = Tr_C[Π^c τ] / p` and `p = Tr[Π^c τ]`.
    pub fn given_c(&self, proj_c: &CMatrix) -> Result<(DensityOperator, f64)> {
        self.condition_on_outcome(&Label::C, proj_c)
    }

    /// `τ^d_CB = 2 Tr_D[τ T_D(Π^d)]`, the state produced on `(C, B)` by preparing `Π^d` on `D`.
    pub fn given_d(&self, proj_d: &CMatrix) -> Result<DensityOperator> {
        check_projector(proj_d)?;
        let pt = proj_d.transpose();
        let sandwich = embed(&pt, 2);
        let m = (&(&sandwich * self.matrix()) * &sandwich).scale_real(2.0);
        let op = Operator::new(m, self.tau.shape().clone())?.partial_trace(&Label::D)?;
        DensityOperator::normalized(op)
    }

    fn condition_on_outcome(&self, wire: &Label, proj: &CMatrix) -> Result<(DensityOperator, f64)> {
        check_projector(proj)?;
        let pos = self.tau.shape().position(wire)?;
        let big = embed(proj, pos);
        let m = &(&big * self.matrix()) * &big;
        let p = m.trace().re;
        if p < MIN_CONDITIONING_PROBABILITY {
            return Err(Error::UndefinedConditioning(p));
        }
        let op = Operator::new(m, self.tau.shape().clone())?.partial_trace(wire)?;
        Ok((DensityOperator::normalized(op)?, p))
    }

    /// `P(cb|d, stu) = 2 Tr[T_D(τ) Π^{s,c} ⊗ Π^{u,b} ⊗ Π^{t,d}]`.
    pub fn predict_probability(&self, setting: Setting, cell: Cell) -> f64 {
        2.0 * self.cell_weight(setting, cell)
    }

    /// `Tr[τ Π^{s,c} ⊗ Π^{u,b} ⊗ T(Π^{t,d})] = <m|τ|m>`.
    pub(crate) fn cell_weight(&self, setting: Setting, cell: Cell) -> f64 {
        let m = measurement_vector(setting, cell);
        quadratic_form(self.matrix(), &m)
    }

    pub fn to_json(&self) -> ChoiJson {
        ChoiJson::from_operator(self.tau.operator())
    }
}

fn check_projector(p: &CMatrix) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: p.dim() });
    }
    let defect = (&(p * p) - p).max_abs().max(p.hermiticity_defect());
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!("not a projector (defect {defect:e})")));
    }
    Ok(())
}

/// `op` on factor `pos` of a three-qubit register, identity elsewhere.
fn embed(op: &CMatrix, pos: usize) -> CMatrix {
    let id = CMatrix::identity(2);
    let parts: [&CMatrix; 3] = match pos {
        0 => [op, &id, &id],
        1 => [&id, op, &id],
        _ => [&id, &id, op],
    };
    parts[0].kron(parts[1]).kron(parts[2])
}

pub(crate) fn quadratic_form(m: &CMatrix, v: &[C64]) -> f64 {
    let mv = m.mul_vec(v);
    v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

/// Measurement axes: `s` on C, `t` for the preparation on D, `u` on B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Setting {
    pub s: PauliAxis,
    pub t: PauliAxis,
    pub u: PauliAxis,
}

impl Setting {
    pub const fn new(s: PauliAxis, t: PauliAxis, u: PauliAxis) -> Self {
        Self { s, t, u }
    }

    /// `σ_x` on C, `σ_y` eigenstates prepared on D, `σ_z` on B.
    pub const XYZ: Setting = Setting::new(PauliAxis::X, PauliAxis::Y, PauliAxis::Z);

    /// All 27 settings, `s` slowest.
    pub fn all() -> impl Iterator<Item = Setting> {
        PauliAxis::ALL.into_iter().flat_map(|s| {
            PauliAxis::ALL
                .into_iter()
                .flat_map(move |t| PauliAxis::ALL.into_iter().map(move |u| Setting::new(s, t, u)))
        })
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.s, self.t, self.u)
    }
}

impl FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<String> = s.trim().chars().map(|c| c.to_string()).collect();
        if letters.len() != 3 {
            return Err(Error::Parse(format!("setting must be three axis letters, got `{s}`")));
        }
        Ok(Setting::new(letters[0].parse()?, letters[1].parse()?, letters[2].parse()?))
    }
}

/// Outcomes `c` on C, `b` on B and the prepared eigenvalue `d` on D.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub c: Outcome,
    pub b: Outcome,
    pub d: Outcome,
}

impl Cell {
    pub const fn new(c: Outcome, b: Outcome, d: Outcome) -> Self {
        Self { c, b, d }
    }

    /// All eight cells, `c` slowest, `+1` before `-1`.
    pub fn all() -> impl Iterator<Item = Cell> {
        Outcome::ALL.into_iter().flat_map(|c| {
            Outcome::ALL
                .into_iter()
                .flat_map(move |b| Outcome::ALL.into_iter().map(move |d| Cell::new(c, b, d)))
        })
    }
}

/// `|s,c> ⊗ |u,b> ⊗ conj|t,d>` on `(C, B, D)`.
pub fn measurement_vector(setting: Setting, cell: Cell) -> [C64; 8] {
    let kc = setting.s.eigenket(cell.c);
    let kb = setting.u.eigenket(cell.b);
    let kd = setting.t.eigenket(cell.d);
    let mut v = [ZERO; 8];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = kc[i >> 2] * kb[(i >> 1) & 1] * kd[i & 1].conj();
    }
    v
}

/// Serialized form of an operator: labels, dimension, real and imaginary grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiJson {
    pub labels: Vec<String>,
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ChoiJson {
    pub fn from_operator(op: &Operator) -> Self {
        let m = op.matrix();
        let n = m.dim();
        Self {
            labels: op.shape().labels().map(|l| l.to_string()).collect(),
            dim: n,
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<Operator> {
        let n = self.dim;
        if self.re.len() != n || self.im.len() != n || self.re.iter().chain(&self.im).any(|r| r.len() != n) {
            return Err(Error::Parse(format!("re/im grids must be {n}x{n}")));
        }
        let labels: Vec<Label> = self.labels.iter().map(|l| Label::new(l.clone())).collect();
        let shape = TensorShape::qubits(&labels)?;
        let m = CMatrix::from_fn(n, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        Operator::new(m, shape)
    }

    /// Strictly validated causal Choi state.
    pub fn to_causal(&self) -> Result<CausalChoi> {
        CausalChoi::new(DensityOperator::new(self.to_operator()?)?)
    }

    /// Choi state without the no-retrocausation check, e.g. a fitted estimate.
    pub fn to_causal_estimate(&self) -> Result<CausalChoi> {
        CausalChoi::from_estimate(DensityOperator::normalized(self.to_operator()?)?)
    }
}

/// `e^{iθ/2}(cos(θ/2) 1 − i sin(θ/2) SWAP)`, equal to `S + e^{iθ} A`.
pub fn partial_swap(theta: f64) -> CMatrix {
    let global = C64::from_polar(1.0, theta / 2.0);
    let a = global * (theta / 2.0).cos();
    let b = global * C64::new(0.0, -(theta / 2.0).sin());
    &CMatrix::identity(4).scale(a) + &swap_matrix().scale(b)
}

pub fn swap_matrix() -> CMatrix {
    CMatrix::from_fn(4, |i, j| if i == ((j & 1) << 1 | j >> 1) { ONE } else { ZERO })
}

/// Completely dephasing channel along the Bloch direction `axis`.
pub fn dephasing(axis: [f64; 3], label: Label) -> Result<KrausChannel> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitVector(norm));
    }
    let mut n_sigma = CMatrix::zeros(2);
    for (k, axis_k) in PauliAxis::ALL.iter().enumerate() {
        n_sigma += &axis_k.sigma().scale_real(axis[k]);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let shape = TensorShape::qubits(&[label])?;
    KrausChannel::trace_preserving(
        vec![CMatrix::identity(2).scale_real(s), n_sigma.scale_real(s)],
        shape.clone(),
        shape,
    )
}

fn de() -> TensorShape {
    TensorShape::qubits(&[Label::D, Label::E]).expect("distinct labels")
}

fn bf() -> TensorShape {
    TensorShape::qubits(&[Label::B, Label::F]).expect("distinct labels")
}

pub fn partial_swap_gate(theta: f64) -> Result<KrausChannel> {
    KrausChannel::unitary(partial_swap(theta), de(), bf())
}

/// Equal-weight mixture of the identity (`D→B`, `E→F`) and the swap (`D→F`, `E→B`).
pub fn identity_swap_mixture_gate() -> Result<KrausChannel> {
    let id = KrausChannel::unitary(CMatrix::identity(4), de(), bf())?;
    let sw = KrausChannel::unitary(swap_matrix(), de(), bf())?;
    KrausChannel::mixture(&[(0.5, id), (0.5, sw)])
}

/// Classical stochastic gate in the z basis: Kraus operators `√P(bf|de) |bf><de|`.
pub fn classical_gate(p: impl Fn(usize, usize, usize, usize) -> f64) -> Result<KrausChannel> {
    let mut ops = Vec::new();
    for b in 0..2 {
        for f in 0..2 {
            for d in 0..2 {
                for e in 0..2 {
                    let w = p(b, f, d, e);
                    if w > 0.0 {
                        let mut k = CMatrix::zeros(4);
                        k[(2 * b + f, 2 * d + e)] = C64::new(w.sqrt(), 0.0);
                        ops.push(k);
                    }
                }
            }
        }
    }
    KrausChannel::trace_preserving(ops, de(), bf())
}

/// `b = d ⊕ e` with `f` random, or the reverse, with equal probability.
pub fn xor_mixture_gate() -> Result<KrausChannel> {
    classical_gate(|b, f, d, e| {
        let x = d ^ e;
        0.5 * f64::from(u8::from(b == x)) * 0.5 + 0.5 * 0.5 * f64::from(u8::from(f == x))
    })
}

/// A common-cause state `ρ_CE` and a gate `(D, E) → (B, F)`.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub rho_ce: DensityOperator,
    pub gate: KrausChannel,
}

impl Circuit {
    pub fn new(rho_ce: DensityOperator, gate: KrausChannel) -> Result<Self> {
        let labels: Vec<&Label> = rho_ce.shape().labels().collect();
        if labels != [&Label::C, &Label::E] {
            return Err(Error::InvalidArgument(format!("common-cause state must live on (C, E), got {}", rho_ce.shape())));
        }
        if gate.input() != &de() || gate.output() != &bf() {
            return Err(Error::InvalidArgument(format!(
                "gate must map (D, E) to (B, F), got {} -> {}",
                gate.input(),
                gate.output()
            )));
        }
        if !gate.is_trace_preserving() {
            return Err(Error::NotTracePreserving(gate.trace_preservation_defect()));
        }
        Ok(Self { rho_ce, gate })
    }

    /// Maximally entangled common cause.
    pub fn with_bell_source(gate: KrausChannel) -> Result<Self> {
        Self::new(bell_phi_plus(Label::C, Label::E), gate)
    }

    /// `E_{CB|D}(ρ_D) = Tr_F E_{BF|DE}(ρ_D ⊗ ρ_CE)` as an operator on `(C, B)`.
    pub fn apply(&self, rho_d: &DensityOperator) -> Result<DensityOperator> {
        let input = rho_d.tensor(&self.rho_ce)?;
        let out = self.gate.apply(&input)?;
        out.partial_trace(&Label::F)?.permute(&[Label::C, Label::B])
    }

    /// Feeds half of `|Φ⁺>_{D'D}` through the circuit.
    pub fn causal_map(&self) -> Result<CausalChoi> {
        let reference = Label::D.primed();
        let phi = bell_phi_plus(reference.clone(), Label::D);
        // the gate consumes D; the reference half becomes the Choi input factor
        let input = phi.tensor(&self.rho_ce)?;
        let out = self.gate.apply_to(input.operator())?;
        let out = out.partial_trace(&Label::F)?.relabel(&reference, Label::D)?;
        let tau = DensityOperator::new(out.permute(&cbd())?)?;
        CausalChoi::new(tau)
    }

    /// Direct simulation: prepare `|t,d>` on D, run the circuit, measure `σ_s` on C and `σ_u` on B.
    pub fn simulate_probability(&self, setting: Setting, cell: Cell) -> Result<f64> {
        let rho_d = DensityOperator::from_matrix(pauli_projector(setting.t, cell.d), &[Label::D])?;
        let out = self.apply(&rho_d)?;
        let effect = pauli_projector(setting.s, cell.c).kron(&pauli_projector(setting.u, cell.b));
        Ok(out.expectation(&effect))
    }
}

/// Builds `τ_CBD` from a common-cause state and a gate.
pub fn causal_map_from_circuit(rho_ce: &DensityOperator, gate: &KrausChannel) -> Result<CausalChoi> {
    Circuit::new(rho_ce.clone(), gate.clone())?.causal_map()
}

/// The example causal maps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScenarioId {
    ProbC,
    PhysC,
    ProbQ,
    Coh,
    EpsilonMix(f64),
}

impl ScenarioId {
    pub fn epsilon_mix(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {eps}")));
        }
        Ok(ScenarioId::EpsilonMix(eps))
    }

    pub const FOUR: [ScenarioId; 4] = [ScenarioId::ProbC, ScenarioId::PhysC, ScenarioId::ProbQ, ScenarioId::Coh];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioId::ProbC => "probc",
            ScenarioId::PhysC => "physc",
            ScenarioId::ProbQ => "probq",
            ScenarioId::Coh => "coh",
            ScenarioId::EpsilonMix(_) => "epsmix",
        }
    }

    /// Local bases (C, B, D) in which the Choi state is diagonal, for the dephased scenarios.
    pub fn preferred_bases(&self) -> Option<[PauliAxis; 3]> {
        match self {
            ScenarioId::ProbC => Some([PauliAxis::Z; 3]),
            ScenarioId::PhysC => Some([PauliAxis::X, PauliAxis::Z, PauliAxis::Y]),
            _ => None,
        }
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let z = PauliAxis::Z.unit_vector();
        let gate = match *self {
            ScenarioId::Coh => partial_swap_gate(COH_THETA)?,
            ScenarioId::ProbQ => identity_swap_mixture_gate()?,
            ScenarioId::ProbC => {
                let pre = dephasing(z, Label::D)?.tensor(&dephasing(z, Label::E)?)?;
                let post = dephasing(z, Label::B)?.tensor(&KrausChannel::identity(&[Label::F])?)?;
                pre.then(&identity_swap_mixture_gate()?)?.then(&post)?
            }
            ScenarioId::PhysC => {
                let pre = dephasing(PauliAxis::Y.unit_vector(), Label::D)?
                    .tensor(&dephasing(PauliAxis::X.unit_vector(), Label::E)?)?;
                let post = dephasing(z, Label::B)?.tensor(&KrausChannel::identity(&[Label::F])?)?;
                pre.then(&partial_swap_gate(PHYSC_THETA)?)?.then(&post)?
            }
            ScenarioId::EpsilonMix(eps) => {
                Self::epsilon_mix(eps)?;
                KrausChannel::mixture(&[(1.0 - eps, identity_swap_mixture_gate()?), (eps, xor_mixture_gate()?)])?
            }
        };
        Circuit::with_bell_source(gate)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::EpsilonMix(eps) => write!(f, "epsmix:{eps}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        match (name, arg) {
            ("probc", None) => Ok(ScenarioId::ProbC),
            ("physc", None) => Ok(ScenarioId::PhysC),
            ("probq", None) => Ok(ScenarioId::ProbQ),
            ("coh", None) => Ok(ScenarioId::Coh),
            ("epsmix", None) => Ok(ScenarioId::EpsilonMix(DEFAULT_EPSILON)),
            ("epsmix", Some(a)) => {
                let eps: f64 = a.parse().map_err(|_| Error::Parse(format!("bad epsilon `{a}`")))?;
                ScenarioId::epsilon_mix(eps)
            }
            _ => Err(Error::Parse(format!("unknown scenario `{s}`; expected probc, physc, probq, coh or epsmix"))),
        }
    }
}

impl TryFrom<String> for ScenarioId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScenarioId> for String {
    fn from(id: ScenarioId) -> String {
        id.to_string()
    }
}

pub fn build_scenario(id: ScenarioId) -> Result<CausalChoi> {
    id.circuit()?.causal_map()
}
