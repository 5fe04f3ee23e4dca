//! Linear solvers: sparse Cholesky and Jacobi-preconditioned conjugate gradients.

use std::sync::{Arc, Mutex};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};
use serde::{Deserialize, Serialize};

use super::sparse::{dot, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Sparse Cholesky with a fill-reducing ordering. Robust for the badly
    /// conditioned degraded elasticity systems.
    #[default]
    Cholesky,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    #[serde(default)]
    pub method: SolverMethod,
    /// CG stops once ‖b − Ax‖ ≤ rel_tol·‖b‖. A direct solve whose residual
    /// exceeds 1e3·rel_tol is reported as a convergence failure.
    pub rel_tol: f64,
    /// CG iteration cap as a multiple of the system size.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Cholesky,
            rel_tol: 1e-10,
            max_iter_factor: 50,
        }
    }
}

/// Symbolic factorization shared by systems with one sparsity pattern.
#[derive(Clone, Default)]
pub struct SymbolicCache(Arc<Mutex<Option<(usize, usize, SymbolicLlt<usize>)>>>);

impl std::fmt::Debug for SymbolicCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymbolicCache")
    }
}

/// Solves `A x = b` by sparse Cholesky; `A` is symmetric so its CSR arrays are
/// read as CSC. The symbolic factorization is reused from `cache` when the
/// pattern size matches.
pub fn cholesky(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolverOptions, cache: Option<&SymbolicCache>) -> Result<SolveStats> {
    let n = a.size();
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Consistency("right-hand side contains non-finite values".into()));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats::default());
    }
    let (ptr, cols) = a.structure();
    let sym = SymbolicSparseColMatRef::new_checked(n, n, ptr, None, cols);
    let fresh = || SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| Error::Solvability(format!("symbolic factorization failed: {e:?}")));
    let symbolic = match cache {
        Some(c) => {
            let mut slot = c.0.lock().unwrap_or_else(|p| p.into_inner());
            match &*slot {
                Some((m, nnz, s)) if *m == n && *nnz == a.nnz() => s.clone(),
                _ => {
                    let s = fresh()?;
                    *slot = Some((n, a.nnz(), s.clone()));
                    s
                }
            }
        }
        None => fresh()?,
    };
    let llt = Llt::try_new_with_symbolic(symbolic, SparseColMatRef::new(sym, a.values()), Side::Lower)
        .map_err(|e| Error::Solvability(format!("matrix is not positive definite: {e:?}")))?;
    x.copy_from_slice(b);
    llt.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1));
    let mut r = a.mul(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let residual = dot(&r, &r).sqrt() / bnorm;
    if !(residual <= 1e3 * opts.rel_tol) {
        return Err(Error::Convergence { iterations: 1, residual });
    }
    Ok(SolveStats { iterations: 1, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from the
/// contents of `x`. A zero right-hand side returns `x = 0` without iterating.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolverOptions) -> Result<SolveStats> {
    let n = a.size();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Consistency("right-hand side contains non-finite values".into()));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats::default());
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { f64::NAN }).collect();
    if let Some(i) = inv_diag.iter().position(|d| d.is_nan()) {
        return Err(Error::Solvability(format!("nonpositive diagonal entry at row {i}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        x.fill(0.0);
    }
    let mut r = a.mul(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = (opts.max_iter_factor * n).max(100);
    let target = opts.rel_tol * bnorm;
    let mut rnorm = dot(&r, &r).sqrt();
    let mut it = 0;
    while rnorm > target {
        if it == max_iter {
            return Err(Error::Convergence {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solvability(format!(
                "operator is not positive definite (pᵀAp = {pap:e} at iteration {it})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = dot(&r, &r).sqrt();
        it += 1;
    }
    Ok(SolveStats {
        iterations: it,
        residual: rnorm / bnorm,
    })
}
