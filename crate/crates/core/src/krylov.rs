//! Action of `exp(-i theta H)` on a vector for Hermitian `H`, via a Lanczos
//! (Krylov) subspace. The dense exponential is never formed.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum Krylov dimension before the step is split.
const MAX_KRYLOV_DIM: usize = 40;
/// Target error of one exponential action, relative to `|v|`.
const TOLERANCE: f64 = 1e-13;
/// Deepest recursive split of a single step.
const MAX_SPLIT_DEPTH: u32 = 12;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i theta T) e_1` for the symmetric tridiagonal `T` given by
/// `alpha` (diagonal) and `beta` (off-diagonal).
fn small_expm_e1(alpha: &[f64], beta: &[f64], theta: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let phase = Complex64::from_polar(1.0, -theta * eig.eigenvalues[k]);
                    phase * q[(r, k)] * q[(0, k)]
                })
                .sum()
        })
        .collect()
}

/// Computes `exp(-i theta H) v` where `apply(x, out)` writes `H x`.
pub fn expm_action<F>(apply: &F, v: &[Complex64], theta: f64) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    expm_action_depth(apply, v, theta, 0)
}

fn expm_action_depth<F>(apply: &F, v: &[Complex64], theta: f64, depth: u32) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    match lanczos(apply, v, theta)? {
        Some(w) => Ok(w),
        None if depth < MAX_SPLIT_DEPTH => {
            let half = expm_action_depth(apply, v, theta / 2.0, depth + 1)?;
            expm_action_depth(apply, &half, theta / 2.0, depth + 1)
        }
        None => Err(Error::IntegratorFailure(format!(
            "Krylov exponential did not converge for theta = {theta}"
        ))),
    }
}

/// One Lanczos attempt; `None` when the subspace limit is hit before the
/// error estimate drops below tolerance.
fn lanczos<F>(apply: &F, v: &[Complex64], theta: f64) -> Result<Option<Vec<Complex64>>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let dim = v.len();
    let v_norm = norm(v);
    if v_norm == 0.0 || theta == 0.0 {
        return Ok(Some(v.to_vec()));
    }
    let max_m = MAX_KRYLOV_DIM.min(dim);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_m);
    basis.push(v.iter().map(|x| x / v_norm).collect());
    let mut alpha = Vec::with_capacity(max_m);
    let mut beta: Vec<f64> = Vec::with_capacity(max_m);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];

    for j in 0..max_m {
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // full reorthogonalisation keeps the basis orthonormal to round-off
        for q in &basis {
            let proj = dot(q, &w);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
        }
        let b = norm(&w);
        if !b.is_finite() {
            return Err(Error::IntegratorFailure("non-finite Lanczos coefficient".into()));
        }
        let y = small_expm_e1(&alpha, &beta, theta);
        let m = alpha.len();
        let happy = b <= 1e-14 * a.abs().max(1.0);
        let err = b * y[m - 1].norm();
        if happy || m == dim || (m >= 3 && err < TOLERANCE) {
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            for (coef, q) in y.iter().zip(&basis) {
                let c = coef * v_norm;
                out.iter_mut().zip(q).for_each(|(o, x)| *o += c * x);
            }
            return Ok(Some(out));
        }
        if j + 1 == max_m {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Ok(None)
}
