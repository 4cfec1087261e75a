//! Linear solvers for the symmetric positive definite systems produced by the
//! Dirichlet Laplacian: tridiagonal elimination (1D) and conjugate gradients (2D).

use crate::error::{Error, Result};
use crate::numeric::csum;

/// Solves a symmetric tridiagonal system with constant diagonal `diag` and
/// constant off-diagonal `off` by Thomas elimination.
///
/// The matrix must be diagonally dominant (`|diag| > 2|off|`), which holds for
/// every operator of the form `a I - c Δ_h` with `a, c > 0`.
pub fn solve_tridiagonal_const(diag: f64, off: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Numerical("tridiagonal pivot breakdown".into()));
    }
    c_prime[0] = off / denom;
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag - off * c_prime[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Numerical(format!(
                "tridiagonal pivot breakdown at row {i}"
            )));
        }
        c_prime[i] = off / denom;
        x[i] = (rhs[i] - off * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    csum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Unpreconditioned conjugate gradients for an SPD operator.
///
/// Iterates until `‖b − A x‖₂ ≤ rel_tol · ‖b‖₂`. Accumulation order is fixed,
/// so results are bitwise reproducible.
pub fn conjugate_gradient<A>(
    apply: A,
    rhs: &[f64],
    guess: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut ap = vec![0.0; n];
    apply(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = rel_tol * b_norm;
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Numerical(
                "conjugate gradient breakdown: operator not positive definite".into(),
            ));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    if rr.sqrt() <= target {
        Ok(x)
    } else {
        Err(Error::Numerical(format!(
            "conjugate gradient did not reach relative residual {rel_tol:e} in {max_iter} iterations"
        )))
    }
}
