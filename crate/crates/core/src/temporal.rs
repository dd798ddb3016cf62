//! Temporal DFT along the time axis of a graph signal matrix.
//!
//! The DFT is unitary (1/sqrt(T) in both directions), so Frobenius norms are
//! preserved by [`dft`], [`idft`] and their composition with the GFT.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// An `N x T` real signal matrix sampled every `sampling_period` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignalMatrix {
    values: DMatrix<f64>,
    sampling_period: f64,
}

impl GraphSignalMatrix {
    pub fn new(values: DMatrix<f64>, sampling_period: f64) -> Result<Self> {
        if !(sampling_period > 0.0) || !sampling_period.is_finite() {
            return Err(Error::InvalidSamplingPeriod(sampling_period));
        }
        for c in 0..values.ncols() {
            for r in 0..values.nrows() {
                if !values[(r, c)].is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self { values, sampling_period })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Sampling period (TR) in seconds.
    pub fn sampling_period(&self) -> f64 {
        self.sampling_period
    }

    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn time_count(&self) -> usize {
        self.values.ncols()
    }

    /// Same sampling period, new values.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::new(values, self.sampling_period)
    }
}

/// Per-row temporal spectrum together with its frequency axis in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSpectrum {
    pub coeffs: DMatrix<Complex64>,
    pub frequency_axis: Vec<f64>,
}

/// Signed frequency of every DFT bin, in Hz; bins above T/2 alias to negatives.
pub fn frequency_axis(t: usize, sampling_period: f64) -> Vec<f64> {
    let span = t as f64 * sampling_period;
    (0..t)
        .map(|k| if 2 * k <= t { k as f64 / span } else { (k as f64 - t as f64) / span })
        .collect()
}

/// Row-wise unitary FFT engine; plans are cached per length.
struct RowFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl RowFft {
    fn new(t: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(t),
            inverse: planner.plan_fft_inverse(t),
            scale: 1.0 / (t as f64).sqrt(),
        }
    }

    fn forward_rows(&self, x: &DMatrix<f64>) -> DMatrix<Complex64> {
        let (n, t) = x.shape();
        let mut out = DMatrix::zeros(n, t);
        let mut buf = vec![Complex64::new(0.0, 0.0); t];
        for r in 0..n {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(x[(r, c)], 0.0);
            }
            self.forward.process(&mut buf);
            for (c, b) in buf.iter().enumerate() {
                out[(r, c)] = b * self.scale;
            }
        }
        out
    }

    fn inverse_rows(&self, xh: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (n, t) = xh.shape();
        let mut out = DMatrix::zeros(n, t);
        let mut buf = vec![Complex64::new(0.0, 0.0); t];
        for r in 0..n {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = xh[(r, c)];
            }
            self.inverse.process(&mut buf);
            for (c, b) in buf.iter().enumerate() {
                out[(r, c)] = b * self.scale;
            }
        }
        out
    }

    /// `x F^H diag(window) F`, taking the real part.
    fn filter_rows(&self, x: &DMatrix<f64>, window: &[Complex64]) -> DMatrix<f64> {
        let (n, t) = x.shape();
        let mut out = DMatrix::zeros(n, t);
        let mut buf = vec![Complex64::new(0.0, 0.0); t];
        let s2 = self.scale * self.scale;
        for r in 0..n {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(x[(r, c)], 0.0);
            }
            self.forward.process(&mut buf);
            for (b, h) in buf.iter_mut().zip(window) {
                *b *= h;
            }
            self.inverse.process(&mut buf);
            for (c, b) in buf.iter().enumerate() {
                out[(r, c)] = b.re * s2;
            }
        }
        out
    }
}

/// Unitary DFT of every row of `x`.
pub fn dft(x: &GraphSignalMatrix) -> Result<TemporalSpectrum> {
    let t = x.time_count();
    if t < 2 {
        return Err(Error::TooShort { min: 2, got: t });
    }
    Ok(TemporalSpectrum {
        coeffs: dft_matrix(x.values()),
        frequency_axis: frequency_axis(t, x.sampling_period()),
    })
}

/// Unitary DFT of every row of a raw matrix.
pub fn dft_matrix(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    RowFft::new(x.ncols()).forward_rows(x)
}

/// Inverse unitary DFT of every row; the caller decides what to do with imaginary parts.
pub fn idft(xh: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    RowFft::new(xh.ncols()).inverse_rows(xh)
}

/// Checks `h[T-k] = conj(h[k])`, which is what makes a filtered real signal stay real.
pub fn check_conjugate_symmetric(window: &[Complex64], tol: f64) -> Result<()> {
    let t = window.len();
    for k in 0..t {
        let mirror = (t - k) % t;
        if (window[mirror] - window[k].conj()).norm() > tol {
            return Err(Error::AsymmetricWindow(k));
        }
    }
    Ok(())
}

/// Real-valued window from bin gains.
pub fn real_window(gains: &[f64]) -> Vec<Complex64> {
    gains.iter().map(|&g| Complex64::new(g, 0.0)).collect()
}

/// Temporal filtering `Y = X F^H H F` with `H = diag(window)`.
pub fn temporal_filter(x: &DMatrix<f64>, window: &[Complex64]) -> Result<DMatrix<f64>> {
    let t = x.ncols();
    if window.len() != t {
        return Err(Error::DimensionMismatch { expected: t, got: window.len() });
    }
    check_conjugate_symmetric(window, 1e-12)?;
    Ok(RowFft::new(t).filter_rows(x, window))
}

/// Reusable temporal filter for a fixed length; used inside surrogate loops.
pub struct TemporalFilterPlan {
    fft: RowFft,
    t: usize,
}

impl TemporalFilterPlan {
    pub fn new(t: usize) -> Self {
        Self { fft: RowFft::new(t), t }
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    /// Applies a window already known to be conjugate-symmetric.
    pub fn apply(&self, x: &DMatrix<f64>, window: &[Complex64]) -> DMatrix<f64> {
        debug_assert_eq!(window.len(), self.t);
        self.fft.filter_rows(x, window)
    }
}

/// DFT bins whose frequency lies in `[f_lo, f_hi)`, together with their mirrors.
///
/// The Nyquist frequency is treated as a closed upper end, so a band ending at
/// Nyquist contains the Nyquist bin for even `T`.
pub fn band_indices(t: usize, sampling_period: f64, f_lo: f64, f_hi: f64) -> Result<Vec<usize>> {
    let nyquist = 0.5 / sampling_period;
    let eps = 1e-12 * nyquist.max(1.0);
    if !(f_lo >= 0.0) || !(f_lo < f_hi) || f_hi > nyquist + eps {
        return Err(Error::AboveNyquist { f_lo, f_hi, nyquist });
    }
    let closed_top = (f_hi - nyquist).abs() <= eps;
    let span = t as f64 * sampling_period;
    let mut bins = Vec::new();
    for k in 0..=t / 2 {
        let f = k as f64 / span;
        let below_hi = f < f_hi - eps || (closed_top && f <= f_hi + eps);
        if f >= f_lo - eps && below_hi {
            bins.push(k);
            let mirror = (t - k) % t;
            if mirror != k {
                bins.push(mirror);
            }
        }
    }
    bins.sort_unstable();
    Ok(bins)
}

/// Indicator window over the given bins.
pub fn band_window(t: usize, bins: &[usize]) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(0.0, 0.0); t];
    for &k in bins {
        w[k] = Complex64::new(1.0, 0.0);
    }
    w
}

/// Joint graph-temporal spectrum `V^T X F^H`.
pub fn joint_spectrum(basis: &SpectralBasis, x: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let coeffs = basis.gft(x)?;
    Ok(dft_matrix(&coeffs))
}
