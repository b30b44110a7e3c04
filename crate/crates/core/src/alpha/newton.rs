use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub solution: DVector<f64>,
    pub iterations: usize,
    /// Residual norm before each iteration and after the last one.
    pub trace: Vec<f64>,
}

/// Newton iteration with a central finite-difference Jacobian rebuilt every
/// iteration. Converges when `‖residual‖₂ ≤ tol`.
pub fn newton_solve<F>(
    residual: F,
    guess: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let jacobian = |x: &DVector<f64>| {
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut xp = x.clone();
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            xp[j] = x[j] + h;
            let fp = residual(&xp);
            xp[j] = x[j] - h;
            let fm = residual(&xp);
            xp[j] = x[j];
            jac.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        jac
    };
    newton_solve_with_jacobian(&residual, jacobian, guess, tol, max_iter)
}

pub fn newton_solve_with_jacobian<F, J>(
    residual: F,
    jacobian: J,
    guess: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = guess;
    let mut r = residual(&x);
    let mut trace = vec![r.norm()];
    for it in 0..max_iter {
        let delta = jacobian(&x).lu().solve(&r).ok_or(Error::SingularJacobian)?;
        x -= delta;
        r = residual(&x);
        let norm = r.norm();
        trace.push(norm);
        if !norm.is_finite() {
            break;
        }
        if norm <= tol {
            return Ok(NewtonReport {
                solution: x,
                iterations: it + 1,
                trace,
            });
        }
    }
    Err(Error::NewtonDivergence {
        iterations: max_iter,
        residual: *trace.last().unwrap_or(&f64::NAN),
        trace,
    })
}
