//! Spectral decomposition of the Laplace–Beltrami pair and the diffusion
//! kernels built on it: heat, auto-diffusivity, commute-time, diffusion
//! distance and the log-derivative Fourier (scale-invariant) transform.

mod cache;
mod cholesky;
mod kernels;
mod solver;

pub use cache::{load_basis_cache, save_basis_cache, CacheContents, CacheError};
pub use kernels::{sihk_spectrum, SihkPlan};
pub use solver::{eigenpairs, EigenOptions};

use rayon::prelude::*;
use thiserror::Error;

use crate::laplacian::SparseSymMatrix;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("stiffness is {w}x{w} but mass is {a}x{a}")]
    DimensionMismatch { w: usize, a: usize },
    #[error("requested {k} eigenpairs of an {n}-vertex problem")]
    KOutOfRange { k: usize, n: usize },
    #[error("mass matrix must be diagonal")]
    NonDiagonalMass,
    #[error("mass matrix entry for vertex {vertex} is not positive")]
    SingularMass { vertex: usize },
    #[error("shifted operator is not positive definite (pivot {pivot}); the stiffness matrix is likely broken")]
    FactorizationFailed { pivot: usize },
    #[error("eigensolver did not converge after {iterations} Lanczos steps: residual {residual:.3e} > tolerance {tol:.3e}")]
    NonConvergence {
        residual: f64,
        tol: f64,
        iterations: usize,
    },
    #[error("diffusion time must be positive, got {t}")]
    NonPositiveTime { t: f64 },
    #[error("commute-time kernel needs at least two eigenpairs")]
    CommuteRequiresTwo,
    #[error(
        "first nonzero eigenvalue {lambda1:.3e} is numerically zero; the mesh is disconnected"
    )]
    Disconnected { lambda1: f64 },
    #[error("heat kernel sample at grid index {index} is not positive ({value:.3e}); the log transform needs positive samples — use the diagonal auto-diffusivity form")]
    NonPositiveKernelSample { index: usize, value: f64 },
    #[error("spectral basis invariant violated: {what}")]
    InvariantViolation { what: String },
}

/// Logarithmic time grid `t_m = 2^(1 + m/16)`, m = 0..=384: 385 samples
/// spanning 2^1 .. 2^25.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn standard() -> Self {
        let times = (0..=384)
            .map(|m| 2f64.powf(1.0 + m as f64 / 16.0))
            .collect();
        Self { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Uniform step of the grid in natural log time.
    pub fn log_step(&self) -> f64 {
        std::f64::consts::LN_2 / 16.0
    }

    /// Indices of grid samples inside `[t1, t2]` (inclusive).
    pub fn indices_in(&self, t1: f64, t2: f64) -> std::ops::Range<usize> {
        let start = self.times.partition_point(|&t| t < t1);
        let end = self.times.partition_point(|&t| t <= t2);
        start..end
    }
}

/// The k smallest generalized eigenpairs `(Λ, Φ)` of `(W, A)` together with
/// the vertex area elements. Immutable after the solve; kernel evaluations
/// are pure and freely parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    /// Row-major: `phi[v*k + i]` is φ_i(v).
    phi: Vec<f64>,
    da: Vec<f64>,
    n: usize,
    k: usize,
}

impl SpectralBasis {
    pub(crate) fn from_parts(eigenvalues: Vec<f64>, phi: Vec<f64>, da: Vec<f64>) -> Self {
        let k = eigenvalues.len();
        let n = da.len();
        assert_eq!(phi.len(), n * k);
        Self {
            eigenvalues,
            phi,
            da,
            n,
            k,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn da(&self) -> &[f64] {
        &self.da
    }

    pub fn total_area(&self) -> f64 {
        self.da.iter().sum()
    }

    pub fn phi_row(&self, v: usize) -> &[f64] {
        &self.phi[v * self.k..(v + 1) * self.k]
    }

    pub(crate) fn phi_raw(&self) -> &[f64] {
        &self.phi
    }

    /// Sign convention: the first component of each eigenvector that is
    /// clearly nonzero is made positive.
    pub(crate) fn fix_signs(&mut self) {
        for i in 0..self.k {
            let mut col_max = 0.0f64;
            for v in 0..self.n {
                col_max = col_max.max(self.phi[v * self.k + i].abs());
            }
            let thresh = 1e-8 * col_max;
            for v in 0..self.n {
                let x = self.phi[v * self.k + i];
                if x.abs() > thresh {
                    if x < 0.0 {
                        for u in 0..self.n {
                            self.phi[u * self.k + i] = -self.phi[u * self.k + i];
                        }
                    }
                    break;
                }
            }
        }
    }

    /// Checks the basis contract: ascending eigenvalues with a numerically
    /// zero head, A-orthonormal columns, and small generalized residuals.
    pub fn validate(&self, w: &SparseSymMatrix, a: &SparseSymMatrix) -> Result<(), SpectralError> {
        let fail = |what: String| Err(SpectralError::InvariantViolation { what });
        if w.n() != self.n || a.n() != self.n {
            return fail(format!(
                "matrix size does not match basis ({} vertices)",
                self.n
            ));
        }
        for pair in self.eigenvalues.windows(2) {
            if pair[1] < pair[0] {
                return fail("eigenvalues are not ascending".into());
            }
        }
        let w_norm = w.inf_norm();
        let lam_last = *self.eigenvalues.last().unwrap();
        let da_min = self.da.iter().cloned().fold(f64::INFINITY, f64::min);
        // Numerical floor keeps the k = 1 case meaningful.
        let zero_tol = (1e-6 * lam_last.abs()).max(1e-12 * w_norm / da_min);
        if self.eigenvalues[0].abs() > zero_tol {
            return fail(format!(
                "smallest eigenvalue {:.3e} is not numerically zero (tol {:.3e})",
                self.eigenvalues[0], zero_tol
            ));
        }

        // Gram matrix ΦᵀAΦ accumulated over vertex chunks.
        let k = self.k;
        let gram = self
            .phi
            .par_chunks(k * 512)
            .enumerate()
            .map(|(chunk_idx, rows)| {
                let mut local = vec![0.0f64; k * k];
                let base = chunk_idx * 512;
                for (r, row) in rows.chunks(k).enumerate() {
                    let weight = self.da[base + r];
                    for i in 0..k {
                        let wi = weight * row[i];
                        for j in i..k {
                            local[i * k + j] += wi * row[j];
                        }
                    }
                }
                local
            })
            .reduce(
                || vec![0.0f64; k * k],
                |mut acc, local| {
                    for (a, b) in acc.iter_mut().zip(local) {
                        *a += b;
                    }
                    acc
                },
            );
        for i in 0..k {
            for j in i..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                let got = gram[i * k + j];
                if (got - expect).abs() > 1e-6 {
                    return fail(format!(
                        "A-orthonormality violated at ({i},{j}): {got:.3e} vs {expect}"
                    ));
                }
            }
        }

        // Column-wise residual ‖Wφ − λAφ‖₂ ≤ 1e-6 ‖W‖.
        let res_tol = 1e-6 * w_norm;
        let mut col = vec![0.0; self.n];
        let mut tmp = vec![0.0; self.n];
        for i in 0..k {
            for v in 0..self.n {
                col[v] = self.phi[v * k + i];
            }
            w.mul_vec(&col, &mut tmp);
            let lam = self.eigenvalues[i];
            let mut acc = 0.0;
            for v in 0..self.n {
                let r = tmp[v] - lam * self.da[v] * col[v];
                acc += r * r;
            }
            let res = acc.sqrt();
            if res > res_tol {
                return fail(format!(
                    "residual of column {i} is {res:.3e} > {res_tol:.3e}"
                ));
            }
        }
        Ok(())
    }

    fn check_time(t: f64) -> Result<(), SpectralError> {
        if t > 0.0 {
            Ok(())
        } else {
            Err(SpectralError::NonPositiveTime { t })
        }
    }

    fn decay(&self, t: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|&l| (-l * t).exp()).collect()
    }

    /// Heat kernel `h_t(v1, v2) = Σ_i e^{-λ_i t} φ_i(v1) φ_i(v2)`.
    pub fn heat_kernel(&self, t: f64, v1: usize, v2: usize) -> Result<f64, SpectralError> {
        Self::check_time(t)?;
        let decay = self.decay(t);
        Ok(self.heat_with_decay(&decay, v1, v2))
    }

    fn heat_with_decay(&self, decay: &[f64], v1: usize, v2: usize) -> f64 {
        let r1 = self.phi_row(v1);
        let r2 = self.phi_row(v2);
        decay
            .iter()
            .zip(r1.iter().zip(r2))
            .map(|(e, (a, b))| e * a * b)
            .sum()
    }

    /// One heat-kernel row `h_t(v, ·)`, the batched form.
    pub fn heat_row(&self, t: f64, v: usize) -> Result<Vec<f64>, SpectralError> {
        Self::check_time(t)?;
        let decay = self.decay(t);
        let rv = self.phi_row(v);
        let weighted: Vec<f64> = decay.iter().zip(rv).map(|(e, p)| e * p).collect();
        Ok((0..self.n)
            .into_par_iter()
            .map(|u| {
                let ru = self.phi_row(u);
                weighted.iter().zip(ru).map(|(w, p)| w * p).sum()
            })
            .collect())
    }

    /// Auto-diffusivity field `h_t(v, v)` for every vertex.
    pub fn auto_diffusivity(&self, t: f64) -> Result<Vec<f64>, SpectralError> {
        Self::check_time(t)?;
        let decay = self.decay(t);
        Ok((0..self.n)
            .into_par_iter()
            .map(|v| {
                self.phi_row(v)
                    .iter()
                    .zip(&decay)
                    .map(|(p, e)| e * p * p)
                    .sum()
            })
            .collect())
    }

    fn commute_guard(&self) -> Result<(), SpectralError> {
        if self.k < 2 {
            return Err(SpectralError::CommuteRequiresTwo);
        }
        let lam_last = *self.eigenvalues.last().unwrap();
        if self.eigenvalues[1] <= 1e-6 * lam_last.abs() {
            return Err(SpectralError::Disconnected {
                lambda1: self.eigenvalues[1],
            });
        }
        Ok(())
    }

    /// Commute-time kernel `c(v1, v2) = Σ_{i≥1} φ_i(v1) φ_i(v2) / λ_i`;
    /// the i = 0 term is excluded.
    pub fn commute_kernel(&self, v1: usize, v2: usize) -> Result<f64, SpectralError> {
        self.commute_guard()?;
        let r1 = self.phi_row(v1);
        let r2 = self.phi_row(v2);
        Ok((1..self.k)
            .map(|i| r1[i] * r2[i] / self.eigenvalues[i])
            .sum())
    }

    /// Diagonal of the commute-time kernel for every vertex.
    pub fn commute_diag(&self) -> Result<Vec<f64>, SpectralError> {
        self.commute_guard()?;
        Ok((0..self.n)
            .into_par_iter()
            .map(|v| {
                let r = self.phi_row(v);
                (1..self.k).map(|i| r[i] * r[i] / self.eigenvalues[i]).sum()
            })
            .collect())
    }

    /// Diffusion distance `sqrt(Σ_i e^{-2 λ_i t} (φ_i(v1) − φ_i(v2))²)`.
    pub fn diffusion_distance(&self, t: f64, v1: usize, v2: usize) -> Result<f64, SpectralError> {
        Self::check_time(t)?;
        let r1 = self.phi_row(v1);
        let r2 = self.phi_row(v2);
        let mut acc = 0.0;
        for i in 0..self.k {
            let d = r1[i] - r2[i];
            acc += (-2.0 * self.eigenvalues[i] * t).exp() * d * d;
        }
        Ok(acc.sqrt())
    }

    /// Heat kernel sampled at a list of times.
    pub fn heat_series(
        &self,
        times: &[f64],
        v1: usize,
        v2: usize,
    ) -> Result<Vec<f64>, SpectralError> {
        for &t in times {
            Self::check_time(t)?;
        }
        let r1 = self.phi_row(v1);
        let r2 = self.phi_row(v2);
        let prod: Vec<f64> = r1.iter().zip(r2).map(|(a, b)| a * b).collect();
        Ok(times
            .iter()
            .map(|&t| {
                self.eigenvalues
                    .iter()
                    .zip(&prod)
                    .map(|(&l, p)| (-l * t).exp() * p)
                    .sum()
            })
            .collect())
    }

    /// Magnitude spectrum of the log-derivative Fourier transform of the
    /// heat kernel over the grid: sample, log, differentiate in log time,
    /// DFT, magnitude. Indexed by discrete frequency 0..grid length.
    pub fn modified_spectrum(
        &self,
        grid: &TimeGrid,
        v1: usize,
        v2: usize,
    ) -> Result<Vec<f64>, SpectralError> {
        let series = self.heat_series(grid.times(), v1, v2)?;
        sihk_spectrum(&series, grid.log_step())
    }

    /// Per-vertex auto-diffusivity series over a list of times.
    pub fn diag_heat_series(&self, times: &[f64]) -> Result<Vec<Vec<f64>>, SpectralError> {
        for &t in times {
            Self::check_time(t)?;
        }
        // decays[m][i] = e^{-λ_i t_m}
        let decays: Vec<Vec<f64>> = times.iter().map(|&t| self.decay(t)).collect();
        Ok((0..self.n)
            .into_par_iter()
            .map(|v| {
                let row = self.phi_row(v);
                let sq: Vec<f64> = row.iter().map(|p| p * p).collect();
                decays
                    .iter()
                    .map(|decay| decay.iter().zip(&sq).map(|(e, s)| e * s).sum())
                    .collect()
            })
            .collect())
    }

    /// Per-vertex magnitude spectra of the log-derivative transform on the
    /// grid; the batched backend of the scale-invariant descriptors.
    pub fn diag_modified_spectra(&self, grid: &TimeGrid) -> Result<Vec<Vec<f64>>, SpectralError> {
        let series = self.diag_heat_series(grid.times())?;
        let plan = SihkPlan::new(grid.len());
        let step = grid.log_step();
        series
            .into_par_iter()
            .map(|s| plan.spectrum(&s, step))
            .collect()
    }
}
