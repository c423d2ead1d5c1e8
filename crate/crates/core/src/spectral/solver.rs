//! Generalized symmetric eigensolver for the pair `(W, A)` with diagonal
//! positive `A`.
//!
//! The problem `W φ = λ A φ` is reduced to the standard symmetric problem
//! `S y = λ y` with `S = A^{-1/2} W A^{-1/2}` and `φ = A^{-1/2} y`. Small
//! problems go through a dense decomposition; larger ones through Lanczos
//! with full reorthogonalization on the shift-inverted operator
//! `(S + δI)^{-1}`, factored once by skyline Cholesky in RCM order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cholesky::{reverse_cuthill_mckee, SkylineCholesky};
use super::{SpectralBasis, SpectralError};
use crate::laplacian::SparseSymMatrix;

/// Solver knobs. Defaults are deterministic and fit meshes up to a few tens
/// of thousands of vertices.
#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Seed for the Lanczos start vector (and breakdown restarts).
    pub seed: u64,
    /// Hard cap on the Krylov basis size; `None` picks one from `k`.
    pub max_basis: Option<usize>,
    /// Per-column residual target as a fraction of `‖W‖_inf`.
    pub residual_factor: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            seed: 0x6d73635f656967,
            max_basis: None,
            residual_factor: 1e-8,
        }
    }
}

/// Computes the `k` smallest generalized eigenpairs of `(W, A)`.
pub fn eigenpairs(
    w: &SparseSymMatrix,
    a: &SparseSymMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectralBasis, SpectralError> {
    let n = w.n();
    if a.n() != n {
        return Err(SpectralError::DimensionMismatch { w: n, a: a.n() });
    }
    if k == 0 || k > n {
        return Err(SpectralError::KOutOfRange { k, n });
    }
    if !a.is_diagonal() {
        return Err(SpectralError::NonDiagonalMass);
    }
    let diag = a.diag();
    if let Some(v) = diag.iter().position(|&x| x <= 0.0) {
        return Err(SpectralError::SingularMass { vertex: v });
    }

    let inv_sqrt: Vec<f64> = diag.iter().map(|&x| 1.0 / x.sqrt()).collect();
    let s_mat = w.scale_sym(&inv_sqrt);

    let (lambdas, y_cols) = if n <= 200 || 2 * k + 32 >= n {
        dense_smallest(&s_mat, k)
    } else {
        lanczos_smallest(&s_mat, k, opts)?
    };

    // Map back: φ = A^{-1/2} y, stored row-major per vertex.
    let mut phi = vec![0.0; n * k];
    for (i, col) in y_cols.iter().enumerate() {
        for v in 0..n {
            phi[v * k + i] = col[v] * inv_sqrt[v];
        }
    }

    let mut basis = SpectralBasis::from_parts(lambdas, phi, diag);
    basis.fix_signs();
    basis.validate(w, a)?;
    Ok(basis)
}

/// Dense route: full symmetric eigendecomposition, keep the k smallest.
fn dense_smallest(s_mat: &SparseSymMatrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = s_mat.n();
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in s_mat.row(i) {
            dense[(i, j)] = v;
        }
    }
    let eig = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut lambdas = Vec::with_capacity(k);
    let mut cols = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        lambdas.push(eig.eigenvalues[idx]);
        cols.push(eig.eigenvectors.column(idx).iter().copied().collect());
    }
    (lambdas, cols)
}

struct ShiftInvertOp {
    perm: Vec<usize>,
    chol: SkylineCholesky,
    scratch: Vec<f64>,
}

impl ShiftInvertOp {
    fn new(s_mat: &SparseSymMatrix, delta: f64) -> Result<Self, SpectralError> {
        let n = s_mat.n();
        let adj = s_mat.neighbors();
        let perm = reverse_cuthill_mckee(&adj);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let entries = s_mat.entries().map(|(i, j, v)| {
            let vv = if i == j { v + delta } else { v };
            (inv[i], inv[j], if i == j { vv } else { vv / 2.0 })
        });
        // Off-diagonals arrive twice (symmetric storage), halve them above.
        let chol = SkylineCholesky::factor(n, entries)?;
        Ok(Self {
            perm,
            chol,
            scratch: vec![0.0; n],
        })
    }

    fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        for (new, &old) in self.perm.iter().enumerate() {
            self.scratch[new] = x[old];
        }
        self.chol.solve_in_place(&mut self.scratch);
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = self.scratch[new];
        }
    }
}

fn lanczos_smallest(
    s_mat: &SparseSymMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), SpectralError> {
    let n = s_mat.n();
    let mean_diag = s_mat.trace() / n as f64;
    let delta = 1e-3 * mean_diag.max(f64::MIN_POSITIVE);
    let mut op = ShiftInvertOp::new(s_mat, delta)?;

    let res_tol = opts.residual_factor * s_mat.inf_norm();
    let budget = opts
        .max_basis
        .unwrap_or_else(|| (6 * k + 300).clamp(2 * k + 32, n))
        .min(n);
    let mut target = (2 * k + 32).clamp(k + 8, budget);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let q0 = random_unit(&mut rng, n);
    let mut qs: Vec<Vec<f64>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut alpha_scale: f64 = 0.0;
    let mut exhausted = false;

    loop {
        while alphas.len() < target && !exhausted {
            let j = alphas.len();
            let mut z = vec![0.0; n];
            op.apply(&qs[j], &mut z);
            let alpha = dot(&qs[j], &z);
            alpha_scale = alpha_scale.max(alpha.abs());
            axpy(&mut z, -alpha, &qs[j]);
            if j > 0 {
                let b = betas[j - 1];
                axpy(&mut z, -b, &qs[j - 1]);
            }
            // Full reorthogonalization, two classical Gram-Schmidt passes.
            for _ in 0..2 {
                for q in &qs {
                    let c = dot(q, &z);
                    axpy(&mut z, -c, q);
                }
            }
            let beta = norm(&z);
            if beta <= 1e-12 * alpha_scale.max(1e-300) {
                // Invariant subspace found; restart with a fresh direction
                // and record a zero coupling.
                let mut fresh = random_unit(&mut rng, n);
                for _ in 0..2 {
                    for q in &qs {
                        let c = dot(q, &fresh);
                        axpy(&mut fresh, -c, q);
                    }
                }
                let fn_norm = norm(&fresh);
                if fn_norm <= 1e-14 {
                    // No orthogonal direction left: the basis spans the
                    // whole space, so this run cannot be extended further.
                    exhausted = true;
                    break;
                }
                scale(&mut fresh, 1.0 / fn_norm);
                betas.push(0.0);
                qs.push(fresh);
            } else {
                scale(&mut z, 1.0 / beta);
                betas.push(beta);
                qs.push(z);
            }
            alphas.push(alpha);
        }

        let m = alphas.len();
        let (nus, svecs) = tridiag_eigen(&alphas, &betas[..m.saturating_sub(1)]);
        // Largest ν of the inverted operator = smallest λ of S.
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| nus[b].total_cmp(&nus[a]));
        let selected = &order[..k.min(m)];

        let mut lambdas = Vec::with_capacity(k);
        let mut cols = Vec::with_capacity(k);
        for &idx in selected {
            let nu = nus[idx];
            lambdas.push(1.0 / nu - delta);
            let mut y = vec![0.0; n];
            for (j, q) in qs.iter().take(m).enumerate() {
                axpy(&mut y, svecs[(j, idx)], q);
            }
            cols.push(y);
        }

        let worst = worst_residual(s_mat, &lambdas, &cols);
        let converged = worst <= res_tol && lambdas.len() == k;
        if converged {
            let mut idx: Vec<usize> = (0..lambdas.len()).collect();
            idx.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]));
            let lambdas_sorted = idx.iter().map(|&i| lambdas[i]).collect();
            let cols_sorted = idx.iter().map(|&i| cols[i].clone()).collect();
            return Ok((lambdas_sorted, cols_sorted));
        }
        if m >= budget || m >= n || exhausted {
            return Err(SpectralError::NonConvergence {
                residual: worst,
                tol: res_tol,
                iterations: m,
            });
        }
        target = (m + (m / 2).max(32)).min(budget);
    }
}

/// Maximum over columns of `‖S y − λ y‖₂` (standard-form residual; the
/// caller's final validation measures the generalized form).
fn worst_residual(s_mat: &SparseSymMatrix, lambdas: &[f64], cols: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    let mut tmp = vec![0.0; s_mat.n()];
    for (lambda, y) in lambdas.iter().zip(cols) {
        s_mat.mul_vec(y, &mut tmp);
        let mut acc = 0.0;
        for (t, x) in tmp.iter().zip(y) {
            let r = t - lambda * x;
            acc += r * r;
        }
        worst = worst.max(acc.sqrt());
    }
    worst
}

fn tridiag_eigen(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nn = norm(&v);
    scale(&mut v, 1.0 / nn);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn scale(v: &mut [f64], c: f64) {
    for x in v {
        *x *= c;
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
