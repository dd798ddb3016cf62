//! Eigendecomposition of shift operators and the graph Fourier transform.
//!
//! Eigenpairs are kept in solver storage order; `ordering` maps frequency rank
//! to storage index (`ordering[0]` is the lowest graph frequency).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{max_asymmetry, ShiftOperator, ShiftVariant};

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;
/// Laplacian-family spectra below this are treated as a PSD violation.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    variant: ShiftVariant,
    ordering: Vec<usize>,
}

impl SpectralBasis {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn variant(&self) -> ShiftVariant {
        self.variant
    }

    /// Storage indices sorted from lowest to highest graph frequency.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Storage indices of the `k` lowest-frequency modes.
    pub fn lowest(&self, k: usize) -> &[usize] {
        &self.ordering[..k.min(self.n())]
    }

    /// Storage indices of the `k` highest-frequency modes.
    pub fn highest(&self, k: usize) -> &[usize] {
        let n = self.n();
        &self.ordering[n - k.min(n)..]
    }

    /// Eigenvalues and eigenvectors of the `m` lowest frequencies, in frequency order.
    pub fn trimmed(&self, m: usize) -> (DVector<f64>, DMatrix<f64>) {
        let idx = self.lowest(m);
        let vals = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.eigenvalues[i]));
        let vecs = self.eigenvectors.select_columns(idx);
        (vals, vecs)
    }

    /// Graph Fourier transform `V^T X`.
    pub fn gft(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(x.nrows())?;
        Ok(self.eigenvectors.tr_mul(x))
    }

    /// Inverse graph Fourier transform `V X~`.
    pub fn igft(&self, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(coeffs.nrows())?;
        Ok(&self.eigenvectors * coeffs)
    }

    pub(crate) fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: rows });
        }
        Ok(())
    }
}

/// Flip `v` so that its largest-magnitude entry is positive.
///
/// Entries within a relative 1e-12 of the maximum are ties and the lowest index wins.
pub fn canonical_sign(v: &[f64]) -> f64 {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 1.0;
    }
    let tol = 1e-12 * max;
    for &x in v {
        if x.abs() >= max - tol {
            return if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    1.0
}

pub(crate) fn apply_sign_convention(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        if canonical_sign(col.as_slice()) < 0.0 {
            col.neg_mut();
        }
    }
}

/// Full dense symmetric eigendecomposition of a shift operator.
pub fn eigendecompose(shift: &ShiftOperator) -> Result<SpectralBasis> {
    let variant = shift.variant();
    if !variant.is_symmetric() {
        return Err(Error::NonSymmetricShift(variant.to_string()));
    }
    let m = shift.matrix();
    let scale = m.amax().max(1.0);
    let asym = max_asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NonSymmetricShift(format!("{variant} (max asymmetry {asym:e})")));
    }
    let eig = SymmetricEigen::try_new(m.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let mut eigenvectors = eig.eigenvectors;
    apply_sign_convention(&mut eigenvectors);
    let eigenvalues = eig.eigenvalues;
    if variant.is_laplacian_family() {
        let min = eigenvalues.min();
        if min < -PSD_TOL * scale {
            return Err(Error::NegativeEigenvalue(min));
        }
    }
    let ordering = frequency_order(eigenvalues.as_slice(), variant);
    Ok(SpectralBasis { eigenvalues, eigenvectors, variant, ordering })
}

/// Low-to-high frequency permutation of `eigenvalues`.
///
/// Laplacian variants sort ascending, the adjacency descending; ties keep storage order.
pub fn frequency_order(eigenvalues: &[f64], variant: ShiftVariant) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..eigenvalues.len()).collect();
    if variant.is_laplacian_family() {
        idx.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    } else {
        idx.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    }
    idx
}

/// Largest eigenvalue of a shift operator; real for every supported variant.
pub fn max_eigenvalue(shift: &ShiftOperator) -> f64 {
    let m = shift.matrix();
    if shift.variant().is_symmetric() {
        m.symmetric_eigenvalues().max()
    } else {
        m.complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Total variation `||x - S x / lambda_max(S)||_1`.
pub fn total_variation(shift: &ShiftOperator, x: &DVector<f64>) -> Result<f64> {
    if x.len() != shift.n() {
        return Err(Error::DimensionMismatch { expected: shift.n(), got: x.len() });
    }
    let lmax = max_eigenvalue(shift);
    if lmax.abs() < 1e-14 {
        return Err(Error::ZeroMaxEigenvalue);
    }
    let sx = shift.matrix() * x;
    Ok((x - sx / lmax).lp_norm(1))
}

/// Quadratic form `x^T S x`.
pub fn quadratic_form(shift: &ShiftOperator, x: &DVector<f64>) -> Result<f64> {
    if x.len() != shift.n() {
        return Err(Error::DimensionMismatch { expected: shift.n(), got: x.len() });
    }
    Ok(x.dot(&(shift.matrix() * x)))
}
