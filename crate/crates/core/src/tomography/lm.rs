//! Levenberg–Marquardt for small dense least-squares problems, with a
//! backtracking gradient step when the damped solve stops making progress.

use nalgebra::{DMatrix, DVector};

/// Residual vector `r(p)` and its Jacobian `∂r/∂p`; the cost is `Σ r²`.
pub(crate) trait LeastSquares {
    fn param_count(&self) -> usize;
    fn residual_count(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    fn jacobian(&self, params: &[f64], jac: &mut DMatrix<f64>);
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerances {
    pub max_iterations: usize,
    pub gradient: f64,
    pub parameter: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub params: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

const MAX_DAMPING: f64 = 1e16;
const MIN_RELATIVE_DECREASE: f64 = 1e-14;
/// Progress over `STALL_WINDOW` iterations below `STALL_TOL · (1 + cost)` counts as converged.
const STALL_WINDOW: usize = 10;
const STALL_TOL: f64 = 1e-6;

fn cost_at<P: LeastSquares>(problem: &P, params: &[f64], scratch: &mut [f64]) -> f64 {
    problem.residuals(params, scratch);
    scratch.iter().map(|r| r * r).sum()
}

pub(crate) fn minimize<P: LeastSquares>(problem: &P, start: Vec<f64>, tol: Tolerances) -> Solution {
    let n = problem.param_count();
    let m = problem.residual_count();
    let mut params = start;
    let mut r = vec![0.0; m];
    let mut trial_r = vec![0.0; m];
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut cost = cost_at(problem, &params, &mut r);
    let mut damping: Option<f64> = None;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut history = std::collections::VecDeque::with_capacity(STALL_WINDOW + 1);

    while iterations < tol.max_iterations {
        iterations += 1;
        problem.jacobian(&params, &mut jac);
        let rv = DVector::from_column_slice(&r);
        let grad = jac.tr_mul(&rv);
        if grad.amax() <= tol.gradient * (1.0 + cost) {
            converged = true;
            break;
        }
        let normal = jac.tr_mul(&jac);
        let diag_max = normal.diagonal().amax().max(f64::MIN_POSITIVE);
        let mu = damping.get_or_insert(1e-3 * diag_max);

        let mut accepted = false;
        while *mu < MAX_DAMPING * diag_max {
            let mut lhs = normal.clone();
            for i in 0..n {
                lhs[(i, i)] += *mu * normal[(i, i)].max(1e-12 * diag_max);
            }
            let Some(chol) = lhs.cholesky() else {
                *mu *= nu;
                nu *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let trial_cost = cost_at(problem, &trial, &mut trial_r);
            if trial_cost.is_finite() && trial_cost < cost {
                let param_norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
                let small_step = step.norm() <= tol.parameter * (param_norm + tol.parameter);
                let small_gain = cost - trial_cost <= MIN_RELATIVE_DECREASE * cost;
                params = trial;
                cost = trial_cost;
                std::mem::swap(&mut r, &mut trial_r);
                *mu = (*mu / 3.0).max(1e-15 * diag_max);
                nu = 2.0;
                accepted = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            *mu *= nu;
            nu *= 2.0;
        }
        if converged {
            break;
        }
        history.push_back(cost);
        if history.len() > STALL_WINDOW {
            let old = history.pop_front().unwrap_or(cost);
            if old - cost <= STALL_TOL * (1.0 + cost) {
                converged = true;
                break;
            }
        }
        if !accepted {
            match gradient_step(problem, &params, cost, &grad, &mut trial_r) {
                Some((p, c)) if c < cost => {
                    params = p;
                    cost = c;
                    problem.residuals(&params, &mut r);
                    damping = None;
                    nu = 2.0;
                }
                // neither a damped nor a descent step lowers the cost
                _ => {
                    converged = true;
                    break;
                }
            }
        }
    }
    Solution { params, cost, converged, iterations }
}

/// Steepest descent with Armijo backtracking.
fn gradient_step<P: LeastSquares>(
    problem: &P,
    params: &[f64],
    cost: f64,
    grad: &DVector<f64>,
    scratch: &mut [f64],
) -> Option<(Vec<f64>, f64)> {
    let g2 = grad.norm_squared();
    if g2 == 0.0 {
        return None;
    }
    let mut alpha = cost / g2;
    for _ in 0..60 {
        let trial: Vec<f64> = params.iter().zip(grad.iter()).map(|(p, g)| p - 2.0 * alpha * g).collect();
        let c = cost_at(problem, &trial, scratch);
        if c.is_finite() && c <= cost - 1e-4 * 2.0 * alpha * g2 {
            return Some((trial, c));
        }
        alpha *= 0.5;
    }
    None
}
