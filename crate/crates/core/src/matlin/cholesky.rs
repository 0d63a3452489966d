use super::{CMatrix, C64};
use crate::{Error, Result};

/// Number of real parameters for a `dim`-dimensional lower-triangular factor.
pub fn cholesky_param_count(dim: usize) -> usize {
    dim * dim
}

/// Builds `J` from `dim` real diagonal entries followed by `(re, im)` pairs of the
/// strictly lower entries in row-major order.
pub fn lower_triangular_from_params(params: &[f64], dim: usize) -> Result<CMatrix> {
    if params.len() != cholesky_param_count(dim) {
        return Err(Error::ParameterCount { expected: cholesky_param_count(dim), got: params.len() });
    }
    let mut j = CMatrix::zeros(dim);
    for i in 0..dim {
        j[(i, i)] = C64::new(params[i], 0.0);
    }
    let mut k = dim;
    for r in 1..dim {
        for c in 0..r {
            j[(r, c)] = C64::new(params[k], params[k + 1]);
            k += 2;
        }
    }
    Ok(j)
}

/// Inverse of [`lower_triangular_from_params`]; the upper triangle and the
/// imaginary part of the diagonal are ignored.
pub fn params_from_lower_triangular(j: &CMatrix) -> Vec<f64> {
    let dim = j.dim();
    let mut params: Vec<f64> = (0..dim).map(|i| j[(i, i)].re).collect();
    for r in 1..dim {
        for c in 0..r {
            params.push(j[(r, c)].re);
            params.push(j[(r, c)].im);
        }
    }
    params
}

/// `J†J` for the lower-triangular `J` encoded by `params`.
pub fn cholesky_psd(params: &[f64], dim: usize) -> Result<CMatrix> {
    let j = lower_triangular_from_params(params, dim)?;
    Ok(&j.adjoint() * &j)
}

/// Parameters `p` with `cholesky_psd(p, dim) == m` for a PSD `m`.
///
/// `J†J` with `J` lower triangular is an upper-lower factorization, so the
/// standard lower Cholesky factor `L` of the index-reversed matrix is reversed
/// back: `J = X L† X` with `X` the exchange matrix.
pub fn cholesky_factor(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let flip = |i: usize| n - 1 - i;
    let a = CMatrix::from_fn(n, |i, j| m[(flip(i), flip(j))]);
    let l = lower_cholesky(&a)?;
    let j = CMatrix::from_fn(n, |r, c| l[(flip(c), flip(r))].conj());
    Ok(params_from_lower_triangular(&j))
}

/// `a = L L†`; zero pivots (rank deficiency) leave the column at zero.
fn lower_cholesky(a: &CMatrix) -> Result<CMatrix> {
    let n = a.dim();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut l = CMatrix::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < -super::PSD_CLIP * scale {
            return Err(Error::NotPsd(d));
        }
        if d <= 1e-14 * scale {
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{hermitian_eigs, ZERO};
    use proptest::prelude::*;

    #[test]
    fn zero_params_give_zero() {
        assert_eq!(cholesky_psd(&[0.0; 64], 8).unwrap(), CMatrix::zeros(8));
    }

    #[test]
    fn identity_params_give_identity() {
        let mut p = vec![0.0; 64];
        p[..8].fill(1.0);
        assert_eq!(cholesky_psd(&p, 8).unwrap(), CMatrix::identity(8));
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(matches!(
            cholesky_psd(&[0.0; 63], 8),
            Err(Error::ParameterCount { expected: 64, got: 63 })
        ));
    }

    #[test]
    fn params_round_trip() {
        let p: Vec<f64> = (0..16).map(|k| k as f64 * 0.1 - 0.7).collect();
        let j = lower_triangular_from_params(&p, 4).unwrap();
        assert_eq!(params_from_lower_triangular(&j), p);
        for r in 0..4 {
            for c in (r + 1)..4 {
                assert_eq!(j[(r, c)], ZERO);
            }
        }
    }

    #[test]
    fn rank_deficient_target_is_factored() {
        let v = [C64::new(0.5, 0.0), C64::new(0.0, 0.5), ZERO, C64::new(0.5, -0.5)];
        let m = CMatrix::outer(&v);
        let p = cholesky_factor(&m).unwrap();
        assert!(cholesky_psd(&p, 4).unwrap().max_abs_diff(&m) < 1e-12);
    }

    proptest! {
        #[test]
        fn output_is_psd(p in prop::collection::vec(-2.0f64..2.0, 64)) {
            let m = cholesky_psd(&p, 8).unwrap();
            prop_assert!(hermitian_eigs(&m).unwrap().min_value() >= -1e-12);
        }

        #[test]
        fn surjective_onto_psd(entries in prop::collection::vec(-1.0f64..1.0, 128), rank in 1usize..=8) {
            let a = CMatrix::from_fn(8, |i, j| {
                if j < rank { C64::new(entries[2 * (i * 8 + j)], entries[2 * (i * 8 + j) + 1]) } else { ZERO }
            });
            let target = &a * &a.adjoint();
            let p = cholesky_factor(&target).unwrap();
            prop_assert!(cholesky_psd(&p, 8).unwrap().max_abs_diff(&target) <= 1e-8);
        }
    }
}
