//! Log-derivative Fourier transform of heat-kernel series, the machinery
//! behind the scale-invariant kernels and descriptors.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

/// d(log h)/d(log t) on a uniform log-time grid: central differences in the
/// interior, one-sided at the endpoints.
pub(crate) fn log_derivative(series: &[f64], log_step: f64) -> Result<Vec<f64>, SpectralError> {
    assert!(series.len() >= 3, "need at least three samples");
    let mut logs = Vec::with_capacity(series.len());
    for (index, &value) in series.iter().enumerate() {
        if value <= 0.0 {
            return Err(SpectralError::NonPositiveKernelSample { index, value });
        }
        logs.push(value.ln());
    }
    let m = logs.len();
    let mut deriv = vec![0.0; m];
    deriv[0] = (logs[1] - logs[0]) / log_step;
    deriv[m - 1] = (logs[m - 1] - logs[m - 2]) / log_step;
    for i in 1..m - 1 {
        deriv[i] = (logs[i + 1] - logs[i - 1]) / (2.0 * log_step);
    }
    Ok(deriv)
}

/// Reusable FFT plan for signals of a fixed length; cheap to share across
/// threads with per-thread scratch buffers.
pub struct SihkPlan {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl SihkPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fft: planner.plan_fft_forward(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Full pipeline: log, derivative in log time, DFT magnitude. The DFT
    /// length equals the signal length; no zero padding.
    pub fn spectrum(&self, series: &[f64], log_step: f64) -> Result<Vec<f64>, SpectralError> {
        assert_eq!(series.len(), self.len);
        let deriv = log_derivative(series, log_step)?;
        let mut buf: Vec<Complex64> = deriv.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        Ok(buf.into_iter().map(|c| c.norm()).collect())
    }
}

/// One-shot variant of [`SihkPlan::spectrum`].
pub fn sihk_spectrum(series: &[f64], log_step: f64) -> Result<Vec<f64>, SpectralError> {
    SihkPlan::new(series.len()).spectrum(series, log_step)
}
