//! Penalized maximum likelihood for the zero-field Ising model on `{-1, 1}^p`
//! with sufficient statistic `uuᵀ`, by exact enumeration.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::reduce::Input;
use crate::symmat::SymMatrix;

use super::{soft, support_of, SolveReport, SolverOptions};

/// Largest dimension accepted by the exhaustive log-partition computation.
pub const ISING_MAX_DIM: usize = 15;

const MIN_STEP: f64 = 1e-14;

/// `A(θ) = log Σ_u exp(<uuᵀ, θ>)` and its gradient `E_θ[uuᵀ]`.
///
/// The diagonal of `uuᵀ` is identically one, so `θ_ii` only shifts `A`.
pub fn ising_logpartition(theta: &SymMatrix) -> Result<(f64, SymMatrix)> {
    let p = theta.dim();
    if p == 0 {
        return Err(Error::Empty("ising parameter"));
    }
    if p > ISING_MAX_DIM {
        return Err(Error::DimensionLimit {
            what: "ising enumeration",
            p,
            limit: ISING_MAX_DIM,
        });
    }
    let n = 1usize << p;
    let trace: f64 = theta.diag().iter().sum();
    let mut energies = Vec::with_capacity(n);
    let mut u = vec![0.0; p];
    for state in 0..n {
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = if state >> i & 1 == 1 { -1.0 } else { 1.0 };
        }
        let mut e = 0.0;
        for i in 0..p {
            let row = theta.upper_row(i);
            let mut acc = 0.0;
            for (off, &t) in row[1..].iter().enumerate() {
                acc += t * u[i + 1 + off];
            }
            e += u[i] * acc;
        }
        energies.push(trace + 2.0 * e);
    }
    let top = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut moment = vec![0.0; p * (p + 1) / 2];
    for (state, &e) in energies.iter().enumerate() {
        let w = (e - top).exp();
        z += w;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = if state >> i & 1 == 1 { -1.0 } else { 1.0 };
        }
        let mut k = 0;
        for i in 0..p {
            for j in i..p {
                moment[k] += w * u[i] * u[j];
                k += 1;
            }
        }
    }
    let mut m = SymMatrix::zeros(p);
    for (dst, src) in m.packed_mut().iter_mut().zip(&moment) {
        *dst = src / z;
    }
    Ok((top + z.ln(), m))
}

/// `A(θ) - <X, θ> + λ Σ_{i≠j} |θ_ij|`.
pub fn ising_objective(theta: &SymMatrix, x: &SymMatrix, lambda: f64) -> Result<f64> {
    let (a, _) = ising_logpartition(theta)?;
    Ok(a - x.inner(theta)? + lambda * offdiag_l1(theta))
}

fn offdiag_l1(theta: &SymMatrix) -> f64 {
    (0..theta.dim())
        .map(|i| 2.0 * theta.upper_row(i)[1..].iter().map(|v| v.abs()).sum::<f64>())
        .sum()
}

/// Ising penalized MLE: `argmin A(θ) - <X, θ> + λ Σ_{i≠j} |θ_ij|` over
/// symmetric `θ` with zero diagonal.
///
/// Proximal gradient with backtracking; each accepted step satisfies the
/// sufficient-decrease condition, so the objective is monotone.
pub fn ising_pmle(x: &SymMatrix, lambda: f64, opts: &SolverOptions) -> Result<SolveReport> {
    let started = Instant::now();
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let p = x.dim();
    let scale = x.max_abs().max(1.0);
    let mut theta = SymMatrix::zeros(p);
    let (mut a, mut m) = ising_logpartition(&theta)?;
    let mut smooth = a - x.inner(&theta)?;
    let mut step = 1.0;
    let mut residual = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        let grad = m.sub(x)?;
        loop {
            let cand = theta.map_indexed(|i, j, t| {
                if i == j {
                    0.0
                } else {
                    soft(t - step * grad.get(i, j), step * lambda)
                }
            });
            let (a_new, m_new) = ising_logpartition(&cand)?;
            let smooth_new = a_new - x.inner(&cand)?;
            let delta = cand.sub(&theta)?;
            let bound = smooth + grad.inner(&delta)? + delta.inner(&delta)? / (2.0 * step);
            if smooth_new <= bound + 1e-15 * smooth.abs().max(1.0) {
                residual = delta.max_abs() / step / scale;
                theta = cand;
                a = a_new;
                m = m_new;
                smooth = smooth_new;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                return Err(Error::NoConvergence {
                    solver: "ising proximal gradient",
                    iterations: iter,
                    residual,
                });
            }
        }
        if residual <= opts.tol {
            let objective = a - x.inner(&theta)? + lambda * offdiag_l1(&theta);
            let theta = Input::Matrix(theta);
            return Ok(SolveReport {
                support: support_of(&theta),
                theta,
                objective,
                kkt_residual: residual,
                iterations: iter,
                converged: true,
                dual: None,
                blocks: None,
                seconds: started.elapsed().as_secs_f64(),
            });
        }
        // let the step grow back after a conservative stretch
        step *= 1.25;
    }
    Err(Error::NoConvergence {
        solver: "ising proximal gradient",
        iterations: opts.max_iter,
        residual,
    })
}
