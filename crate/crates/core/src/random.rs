//! Seeded random states, unitaries, channels and causal maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::causal::CausalChoi;
use crate::matlin::{CMatrix, Label, TensorShape, C64};
use crate::quantum::{choi_of_channel, DensityOperator, KrausChannel};

fn gaussian_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// Columns of `cols` (each of length `len`) orthonormalized by Gram-Schmidt.
fn orthonormal_columns(len: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(cols);
    while out.len() < cols {
        let mut v = gaussian_vec(len, rng);
        for u in &out {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    out
}

pub fn random_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = orthonormal_columns(dim, dim, &mut rng);
    CMatrix::from_fn(dim, |i, j| cols[j][i])
}

/// Full-rank random state, `A A† / Tr`.
pub fn random_density(labels: &[Label], seed: u64) -> DensityOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 << labels.len();
    let a = gaussian_vec(n * n, &mut rng);
    let a = CMatrix::from_row_major(a).expect("square by construction");
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityOperator::from_matrix(m.scale_real(1.0 / tr).hermitian_part(), labels).expect("Gram matrix is a state")
}

/// Random qubit channel with `n_kraus` operators from a random isometry.
pub fn random_channel(input: Label, output: Label, n_kraus: usize, seed: u64) -> KrausChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = orthonormal_columns(2 * n_kraus, 2, &mut rng);
    let ops = (0..n_kraus)
        .map(|k| CMatrix::from_fn(2, |i, j| cols[j][2 * k + i]))
        .collect();
    let input = TensorShape::qubits(&[input]).expect("single label");
    let output = TensorShape::qubits(&[output]).expect("single label");
    KrausChannel::trace_preserving(ops, input, output).expect("isometry blocks are trace preserving")
}

/// `p ρ_CB ⊗ 1/2 + (1−p) ρ_C ⊗ τ_BD` with `ρ_C = Tr_B ρ_CB` and `τ_BD` the
/// Choi state of a random channel `D → B`: a probabilistic mixture of a purely
/// common-cause and a purely cause-effect map.
pub fn random_probabilistic_mixture(seed: u64) -> CausalChoi {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: f64 = rng.gen();
    let rho_cb = random_density(&[Label::C, Label::B], rng.gen());
    let rho_c = rho_cb.partial_trace(&Label::B).expect("label present");
    let n_kraus = rng.gen_range(1..=4);
    let tau_bd = choi_of_channel(&random_channel(Label::D, Label::B, n_kraus, rng.gen()))
        .expect("trace-preserving channel");
    let common = rho_cb.matrix().kron(&CMatrix::identity(2).scale_real(0.5));
    let direct = rho_c.matrix().kron(tau_bd.matrix());
    let m = &common.scale_real(p) + &direct.scale_real(1.0 - p);
    CausalChoi::from_matrix(m.hermitian_part()).expect("mixture of causal maps is causal")
}
