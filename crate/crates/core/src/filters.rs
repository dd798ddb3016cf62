//! Graph-spectral filters, vertex-domain polynomial filters and graph convolution.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ShiftOperator;
use crate::spectral::SpectralBasis;

/// Default number of modes in the aligned (low) and liberal (high) bands.
pub const DEFAULT_SPLIT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterDescriptor {
    IdealLow(usize),
    IdealHigh(usize),
    /// Frequency ranks (0 = lowest) that pass.
    IdealBand(Vec<usize>),
    Diffusion(f64),
    Custom,
}

/// Spectral window `g(lambda_k)`; gains are aligned with basis storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    gains: DVector<f64>,
    descriptor: FilterDescriptor,
}

impl SpectralFilter {
    pub fn gains(&self) -> &DVector<f64> {
        &self.gains
    }

    pub fn descriptor(&self) -> &FilterDescriptor {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Storage indices with a nonzero gain.
    pub fn support(&self) -> Vec<usize> {
        self.gains.iter().enumerate().filter(|(_, &g)| g != 0.0).map(|(i, _)| i).collect()
    }

    /// Pass the `k` lowest graph frequencies.
    pub fn ideal_low(basis: &SpectralBasis, k: usize) -> Result<Self> {
        check_k(basis, k)?;
        Ok(Self::indicator(basis, basis.lowest(k), FilterDescriptor::IdealLow(k)))
    }

    /// Pass the `k` highest graph frequencies.
    pub fn ideal_high(basis: &SpectralBasis, k: usize) -> Result<Self> {
        check_k(basis, k)?;
        Ok(Self::indicator(basis, basis.highest(k), FilterDescriptor::IdealHigh(k)))
    }

    /// Pass an arbitrary set of frequency ranks.
    pub fn ideal_band(basis: &SpectralBasis, ranks: &[usize]) -> Result<Self> {
        let n = basis.n();
        if ranks.is_empty() {
            return Err(Error::BandOutOfRange("empty rank set".into()));
        }
        if let Some(&r) = ranks.iter().find(|&&r| r >= n) {
            return Err(Error::BandOutOfRange(format!("rank {r} >= N = {n}")));
        }
        let storage: Vec<usize> = ranks.iter().map(|&r| basis.ordering()[r]).collect();
        let mut sorted = ranks.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        Ok(Self::indicator(basis, &storage, FilterDescriptor::IdealBand(sorted)))
    }

    /// Heat kernel `exp(-tau * lambda)`; only meaningful on Laplacian spectra.
    pub fn diffusion(basis: &SpectralBasis, tau: f64) -> Result<Self> {
        if !basis.variant().is_laplacian_family() {
            return Err(Error::WrongVariant);
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("diffusion time must be >= 0, got {tau}")));
        }
        let gains = basis.eigenvalues().map(|l| (-tau * l).exp());
        Ok(Self { gains, descriptor: FilterDescriptor::Diffusion(tau) })
    }

    /// Gains given directly in storage order.
    pub fn custom(basis: &SpectralBasis, gains: DVector<f64>) -> Result<Self> {
        basis.check_rows(gains.len())?;
        Ok(Self { gains, descriptor: FilterDescriptor::Custom })
    }

    /// Spectral response `sum_m c_m lambda_k^m` of a polynomial in the shift.
    pub fn polynomial_response(basis: &SpectralBasis, coeffs: &[f64]) -> Self {
        let gains = basis
            .eigenvalues()
            .map(|l| coeffs.iter().rev().fold(0.0, |acc, &c| acc * l + c));
        Self { gains, descriptor: FilterDescriptor::Custom }
    }

    fn indicator(basis: &SpectralBasis, storage: &[usize], descriptor: FilterDescriptor) -> Self {
        let mut gains = DVector::zeros(basis.n());
        for &i in storage {
            gains[i] = 1.0;
        }
        Self { gains, descriptor }
    }
}

fn check_k(basis: &SpectralBasis, k: usize) -> Result<()> {
    if k == 0 || k > basis.n() {
        return Err(Error::BandOutOfRange(format!("K = {k} not in 1..={}", basis.n())));
    }
    Ok(())
}

/// `Y = V diag(g) V^T X`, touching only modes with nonzero gain.
pub fn apply_spectral_filter(
    basis: &SpectralBasis,
    filter: &SpectralFilter,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    basis.check_rows(x.nrows())?;
    basis.check_rows(filter.len())?;
    let support = filter.support();
    let v = basis.eigenvectors().select_columns(&support);
    let mut coeffs = v.tr_mul(x);
    for (row, &i) in support.iter().enumerate() {
        coeffs.row_mut(row).scale_mut(filter.gains()[i]);
    }
    Ok(v * coeffs)
}

/// `Y = sum_m c_m S^m X`, evaluated by Horner's rule with one shift per degree.
pub fn polynomial_filter_apply(
    shift: &ShiftOperator,
    coeffs: &[f64],
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if x.nrows() != shift.n() {
        return Err(Error::DimensionMismatch { expected: shift.n(), got: x.nrows() });
    }
    let Some((&last, rest)) = coeffs.split_last() else {
        return Err(Error::InvalidParameter("polynomial needs at least one coefficient".into()));
    };
    let mut y = x * last;
    for &c in rest.iter().rev() {
        y = shift.matrix() * y;
        y += x * c;
    }
    Ok(y)
}

/// Graph convolution of a single signal, written as the explicit mode sum
/// `y_i = sum_k V[i, k] g_k x~_k`.
pub fn graph_convolution(
    basis: &SpectralBasis,
    gains: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    basis.check_rows(x.len())?;
    basis.check_rows(gains.len())?;
    let v = basis.eigenvectors();
    let n = basis.n();
    let mut y = DVector::zeros(n);
    for k in 0..n {
        if gains[k] == 0.0 {
            continue;
        }
        let coeff = v.column(k).dot(x) * gains[k];
        for i in 0..n {
            y[i] += v[(i, k)] * coeff;
        }
    }
    Ok(y)
}
