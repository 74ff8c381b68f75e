use nalgebra::{DMatrix, DVector};

use crate::error::{HkError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final residual relative to the right-hand side.
    pub relative_residual: f64,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients.
///
/// `project` maps a vector onto the admissible subspace (zero on Dirichlet
/// dofs, or zero mean for periodic problems); it is applied to the
/// right-hand side, to every preconditioned residual and to the result, so
/// all iterates stay admissible. `x` holds the initial guess on entry.
#[allow(clippy::too_many_arguments)]
pub(crate) fn pcg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    diag: &[f64],
    project: &dyn Fn(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    solver: &'static str,
) -> Result<CgStats> {
    let n = b.len();
    let mut rhs = b.to_vec();
    project(&mut rhs);
    let bn = norm(&rhs);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    project(x);
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(&rhs) {
        *ri = bi - *ri;
    }
    project(&mut r);
    let inv: Vec<f64> = diag
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = rel_tol * bn;
    let mut rn = norm(&r);
    let mut it = 0;
    while rn > target {
        if it == max_iter {
            return Err(HkError::NonConvergence {
                solver,
                iterations: it,
                residual: rn / bn,
            });
        }
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(HkError::SingularSystem(solver));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rn = norm(&r);
        it += 1;
    }
    project(x);
    Ok(CgStats {
        iterations: it,
        relative_residual: rn / bn,
    })
}

/// Dense Cholesky solve of an assembled symmetric system; `None` when the
/// matrix is not numerically positive definite.
pub(crate) fn dense_solve(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let chol = a.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(b));
    if x.iter().all(|v| v.is_finite()) {
        Some(x.as_slice().to_vec())
    } else {
        None
    }
}
