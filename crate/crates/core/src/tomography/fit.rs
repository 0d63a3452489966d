use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::lm::{minimize, LeastSquares, Solution, Tolerances};
use super::{table_entries, CountData, SETTING_COUNT};
use crate::causal::{measurement_vector, CausalChoi, ChoiJson};
use crate::matlin::{
    cholesky_factor, cholesky_param_count, hermitian_eigs, lower_triangular_from_params, CMatrix, Label, C64, I, ONE, ZERO,
};
use crate::quantum::{DensityOperator, Outcome, PauliAxis};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weight of the no-retrocausation penalty.
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stop once `max |∇χ²| ≤ gradient_tolerance · (1 + χ²)`.
    pub gradient_tolerance: f64,
    /// Stop once a step is shorter than this relative to the parameters.
    pub parameter_tolerance: f64,
    pub seed: u64,
    /// Lower bound on the model count in each χ² denominator.
    pub cell_floor: f64,
    pub restarts: usize,
    /// Standard deviation of the initial perturbation, relative to the start scale.
    pub jitter: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 1e7,
            max_iterations: 1000,
            gradient_tolerance: 1e-10,
            parameter_tolerance: 1e-12,
            seed: 0,
            cell_floor: 0.5,
            restarts: 5,
            jitter: 1e-3,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.cell_floor > 0.0) {
            return Err(Error::InvalidArgument(format!("cell floor must be positive, got {}", self.cell_floor)));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument("restarts and max_iterations must be at least 1".into()));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::InvalidArgument(format!("jitter must be nonnegative, got {}", self.jitter)));
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            max_iterations: self.max_iterations,
            gradient: self.gradient_tolerance,
            parameter: self.parameter_tolerance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub tau_hat: CausalChoi,
    /// Data part of the objective, without the penalty.
    pub chi2: f64,
    /// Frobenius norm of `τ_CD − ρ_C ⊗ 𝟙/2` for the returned estimate.
    pub penalty_residual: f64,
    pub converged: bool,
    /// Iterations of the restart that produced the estimate.
    pub iterations: usize,
    pub config: FitConfig,
}

/// Serializable form of a [`FitResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tau_hat: ChoiJson,
    pub chi2: f64,
    pub penalty_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub config: FitConfig,
}

impl FitResult {
    pub fn report(&self) -> FitReport {
        FitReport {
            tau_hat: self.tau_hat.to_json(),
            chi2: self.chi2,
            penalty_residual: self.penalty_residual,
            converged: self.converged,
            iterations: self.iterations,
            config: self.config.clone(),
        }
    }
}

/// Which wire a conditioned reconstruction post-selects on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wire {
    /// Measurement outcome on B; leaves a state on C and D.
    B,
    /// Measurement outcome on C; leaves a channel D → B.
    C,
    /// Preparation on D; leaves a state on C and B.
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conditioning {
    pub wire: Wire,
    pub axis: PauliAxis,
    pub outcome: Outcome,
}

impl Conditioning {
    pub fn new(wire: Wire, axis: PauliAxis, outcome: Outcome) -> Self {
        Self { wire, axis, outcome }
    }

    /// Labels of the two remaining factors.
    pub fn remaining(&self) -> [Label; 2] {
        match self.wire {
            Wire::B => [Label::C, Label::D],
            Wire::C => [Label::B, Label::D],
            Wire::D => [Label::C, Label::B],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConditionedFit {
    pub state: DensityOperator,
    pub chi2: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `(row, column, unit)` of the lower-triangular entry each parameter moves.
fn parameter_slots(dim: usize) -> Vec<(usize, usize, C64)> {
    let mut slots: Vec<(usize, usize, C64)> = (0..dim).map(|i| (i, i, ONE)).collect();
    for r in 1..dim {
        for c in 0..r {
            slots.push((r, c, ONE));
            slots.push((r, c, I));
        }
    }
    slots
}

/// `Tr_B τ − Tr_BD τ ⊗ 𝟙/2` on `[C, D]`, as 16 row-major entries.
fn retrocausal_part(tau: &CMatrix) -> [C64; 16] {
    let idx = |c: usize, b: usize, d: usize| c * 4 + b * 2 + d;
    let mut out = [ZERO; 16];
    for c1 in 0..2 {
        for c2 in 0..2 {
            let rho_c: C64 = (0..2).flat_map(|b| (0..2).map(move |d| (b, d))).map(|(b, d)| tau[(idx(c1, b, d), idx(c2, b, d))]).sum();
            for d1 in 0..2 {
                for d2 in 0..2 {
                    let mut v: C64 = (0..2).map(|b| tau[(idx(c1, b, d1), idx(c2, b, d2))]).sum();
                    if d1 == d2 {
                        v -= rho_c * 0.5;
                    }
                    out[(c1 * 2 + d1) * 4 + c2 * 2 + d2] = v;
                }
            }
        }
    }
    out
}

/// Weighted residuals `(n_k − f_k)/√max(f_k, ε)` with `f_k = ‖J m_k‖²`, plus
/// the penalty entries when fitting a full causal map.
struct CountsProblem {
    dim: usize,
    vectors: Vec<Vec<C64>>,
    observed: Vec<f64>,
    floor: f64,
    penalty_weight: Option<f64>,
    slots: Vec<(usize, usize, C64)>,
}

impl CountsProblem {
    fn new(dim: usize, vectors: Vec<Vec<C64>>, observed: Vec<f64>, floor: f64, lambda: Option<f64>) -> Self {
        Self { dim, vectors, observed, floor, penalty_weight: lambda.map(f64::sqrt), slots: parameter_slots(dim) }
    }

    fn factor(&self, params: &[f64]) -> CMatrix {
        lower_triangular_from_params(params, self.dim).expect("parameter count fixed at construction")
    }

    fn data_residuals(&self, j: &CMatrix, out: &mut [f64]) {
        for ((slot, m), o) in out.iter_mut().zip(&self.vectors).zip(&self.observed) {
            let f = j.mul_vec(m).iter().map(|z| z.norm_sqr()).sum::<f64>();
            *slot = (o - f) / f.max(self.floor).sqrt();
        }
    }

    fn chi2(&self, params: &[f64]) -> f64 {
        let mut r = vec![0.0; self.vectors.len()];
        self.data_residuals(&self.factor(params), &mut r);
        r.iter().map(|x| x * x).sum()
    }

    fn gram(&self, params: &[f64]) -> CMatrix {
        let j = self.factor(params);
        &j.adjoint() * &j
    }
}

impl LeastSquares for CountsProblem {
    fn param_count(&self) -> usize {
        cholesky_param_count(self.dim)
    }

    fn residual_count(&self) -> usize {
        self.vectors.len() + if self.penalty_weight.is_some() { 32 } else { 0 }
    }

    fn residuals(&self, params: &[f64], out: &mut [f64]) {
        let j = self.factor(params);
        let n = self.vectors.len();
        self.data_residuals(&j, &mut out[..n]);
        if let Some(w) = self.penalty_weight {
            let a = &j.adjoint() * &j;
            let t = a.trace().re.max(f64::MIN_POSITIVE);
            for (k, z) in retrocausal_part(&a).iter().enumerate() {
                out[n + 2 * k] = w * z.re / t;
                out[n + 2 * k + 1] = w * z.im / t;
            }
        }
    }

    fn jacobian(&self, params: &[f64], jac: &mut DMatrix<f64>) {
        let j = self.factor(params);
        for (k, (m, o)) in self.vectors.iter().zip(&self.observed).enumerate() {
            let v = j.mul_vec(m);
            let f = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let w = f.max(self.floor);
            let mut scale = -1.0 / w.sqrt();
            if f > self.floor {
                scale -= (o - f) / (2.0 * w * w.sqrt());
            }
            for (p, &(r, c, unit)) in self.slots.iter().enumerate() {
                let df = 2.0 * (unit * v[r].conj() * m[c]).re;
                jac[(k, p)] = scale * df;
            }
        }
        if let Some(weight) = self.penalty_weight {
            let n = self.vectors.len();
            let a = &j.adjoint() * &j;
            let t = a.trace().re.max(f64::MIN_POSITIVE);
            let base = retrocausal_part(&a);
            let dim = self.dim;
            for (p, &(r, c, unit)) in self.slots.iter().enumerate() {
                let mut da = CMatrix::zeros(dim);
                for x in 0..dim {
                    da[(c, x)] += unit.conj() * j[(r, x)];
                    da[(x, c)] += unit * j[(r, x)].conj();
                }
                let dt = 2.0 * (unit * j[(r, c)].conj()).re;
                for (k, (dz, z)) in retrocausal_part(&da).iter().zip(&base).enumerate() {
                    let d = (dz - z * (dt / t)) / t;
                    jac[(n + 2 * k, p)] = weight * d.re;
                    jac[(n + 2 * k + 1, p)] = weight * d.im;
                }
            }
        }
    }
}

/// Scaled identity start with Gaussian jitter, one ChaCha stream per restart.
fn starting_point(dim: usize, scale: f64, cfg: &FitConfig, restart: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let noise = Normal::new(0.0, cfg.jitter * scale).expect("nonnegative spread");
    (0..cholesky_param_count(dim))
        .map(|k| if k < dim { scale } else { 0.0 } + noise.sample(&mut rng))
        .collect()
}

/// Weighted linear least-squares estimate of `A` from `n_k ≈ m_k† A m_k`,
/// with negative eigenvalues clipped, as Cholesky parameters.
fn linear_inversion(problem: &CountsProblem) -> Option<Vec<f64>> {
    let dim = problem.dim;
    let n = dim * dim;
    let rows = problem.vectors.len();
    let mut design = DMatrix::<f64>::zeros(rows, n);
    let mut rhs = nalgebra::DVector::<f64>::zeros(rows);
    for (k, (m, o)) in problem.vectors.iter().zip(&problem.observed).enumerate() {
        let w = 1.0 / o.max(problem.floor).sqrt();
        let mut col = 0;
        for i in 0..dim {
            design[(k, col)] = w * m[i].norm_sqr();
            col += 1;
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let z = m[i].conj() * m[j];
                design[(k, col)] = w * 2.0 * z.re;
                design[(k, col + 1)] = -w * 2.0 * z.im;
                col += 2;
            }
        }
        rhs[k] = w * o;
    }
    let x = design.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let mut a = CMatrix::zeros(dim);
    let mut col = 0;
    for i in 0..dim {
        a[(i, i)] = C64::new(x[col], 0.0);
        col += 1;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            a[(i, j)] = C64::new(x[col], x[col + 1]);
            a[(j, i)] = a[(i, j)].conj();
            col += 2;
        }
    }
    let clipped = hermitian_eigs(&a).ok()?.map_values(|l| l.max(0.0));
    cholesky_factor(&clipped.hermitian_part()).ok()
}

/// Restart 0 starts from the linear-inversion estimate, the others from the
/// scaled identity; all are jittered and the lowest cost wins.
fn best_of_restarts(problem: &CountsProblem, scale: f64, cfg: &FitConfig) -> Solution {
    let inversion = linear_inversion(problem);
    (0..cfg.restarts)
        .map(|i| {
            let mut start = starting_point(problem.dim, scale, cfg, i);
            if let (0, Some(init)) = (i, &inversion) {
                for (s, (p, d)) in start.iter_mut().zip(init.iter().zip(0..)) {
                    *s += p - if d < problem.dim { scale } else { 0.0 };
                }
            }
            minimize(problem, start, cfg.tolerances())
        })
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("at least one restart")
}

/// Penalized least-squares reconstruction of the causal map from all 216 cells.
pub fn fit_causal_map<D: CountData + ?Sized>(data: &D, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let total = data.total();
    if !(total > 0.0) {
        return Err(Error::EmptyCounts("count table is empty".into()));
    }
    let vectors = table_entries().map(|(s, c)| measurement_vector(s, c).to_vec()).collect();
    let observed = (0..super::TABLE_SIZE).map(|k| data.value(k)).collect();
    let problem = CountsProblem::new(8, vectors, observed, cfg.cell_floor, Some(cfg.lambda));
    // Σ_k f_k = 27 Tr A, so this start predicts the observed total.
    let scale = (total / (SETTING_COUNT * 8) as f64).sqrt();
    let best = best_of_restarts(&problem, scale, cfg);
    let a = problem.gram(&best.params);
    let tau = a.scale_real(1.0 / a.trace().re);
    let penalty_residual = retrocausal_part(&tau).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let state = DensityOperator::from_matrix(tau.hermitian_part(), &[Label::C, Label::B, Label::D])?;
    Ok(FitResult {
        tau_hat: CausalChoi::from_estimate(state)?,
        chi2: problem.chi2(&best.params),
        penalty_residual,
        converged: best.converged,
        iterations: best.iterations,
        config: cfg.clone(),
    })
}

/// Least-squares reconstruction of the two-qubit operator left on the other
/// wires after post-selecting on `condition`, from the 36 matching cells.
pub fn fit_conditioned_state<D: CountData + ?Sized>(
    data: &D,
    condition: Conditioning,
    cfg: &FitConfig,
) -> Result<ConditionedFit> {
    cfg.validate()?;
    let mut vectors = Vec::new();
    let mut observed = Vec::new();
    for (k, (setting, cell)) in table_entries().enumerate() {
        let kc = setting.s.eigenket(cell.c);
        let kb = setting.u.eigenket(cell.b);
        let kd = setting.t.eigenket(cell.d).map(|z| z.conj());
        let (axis, outcome, first, second) = match condition.wire {
            Wire::B => (setting.u, cell.b, kc, kd),
            Wire::C => (setting.s, cell.c, kb, kd),
            Wire::D => (setting.t, cell.d, kc, kb),
        };
        if axis != condition.axis || outcome != condition.outcome {
            continue;
        }
        vectors.push((0..4).map(|i| first[i >> 1] * second[i & 1]).collect());
        observed.push(data.value(k));
    }
    let total: f64 = observed.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyCounts(format!("no counts for {condition:?}")));
    }
    let cells = vectors.len();
    let problem = CountsProblem::new(4, vectors, observed, cfg.cell_floor, None);
    // each of the 9 settings sums to Tr A
    let scale = (total / (cells / 4 * 4) as f64).sqrt();
    let best = best_of_restarts(&problem, scale, cfg);
    let a = problem.gram(&best.params);
    let state = DensityOperator::from_matrix(a.scale_real(1.0 / a.trace().re).hermitian_part(), &condition.remaining())?;
    Ok(ConditionedFit { state, chi2: best.cost, converged: best.converged, iterations: best.iterations })
}
