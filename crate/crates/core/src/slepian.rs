//! Graph Slepian bases: band-limited vectors concentrated on a node subset.
//!
//! Two criteria are supported. `EnergyConcentration` diagonalizes
//! `C = Vb^T M Vb`, where `Vb` holds the `M` lowest-frequency Laplacian
//! eigenvectors and `M` is the diagonal selector. `ModifiedEmbeddedDistance`
//! diagonalizes `C2 = Lb^{1/2} C Lb^{1/2}`, whose eigenvalues `xi` act as a
//! localized frequency.
//!
//! Both produce `S = Vb S~` with orthonormal columns. Under the energy
//! criterion `S^T M S = diag(mu)`. Under the modified criterion the diagonal
//! form is `S^T L^{1/2} M L^{1/2} S = diag(xi)`; `S^T M S` is generally not
//! diagonal there.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{canonical_sign, SpectralBasis, PSD_TOL};

/// Default bandwidth of the localized basis.
pub const DEFAULT_BANDWIDTH: usize = 80;
/// Default concentration threshold in the filtering gate.
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Default number of vectors kept by the gate.
pub const DEFAULT_GATE_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlepianCriterion {
    EnergyConcentration,
    ModifiedEmbeddedDistance,
}

impl std::str::FromStr for SlepianCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "energy" | "energy-concentration" => Ok(SlepianCriterion::EnergyConcentration),
            "modified" | "modified-embedded-distance" | "med" => {
                Ok(SlepianCriterion::ModifiedEmbeddedDistance)
            }
            other => Err(Error::InvalidParameter(format!("unknown slepian criterion `{other}`"))),
        }
    }
}

/// Binary node mask (the diagonal of the selectivity matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSelector {
    mask: Vec<bool>,
}

impl NodeSelector {
    pub fn new(mask: Vec<bool>) -> Result<Self> {
        if !mask.iter().any(|&b| b) {
            return Err(Error::EmptySelector);
        }
        Ok(Self { mask })
    }

    pub fn from_nodes(n: usize, nodes: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in nodes {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n_nodes: n });
            }
            mask[i] = true;
        }
        Self::new(mask)
    }

    pub fn all(n: usize) -> Result<Self> {
        Self::new(vec![true; n])
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn members(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone)]
pub struct SlepianBasis {
    /// `N x M`, columns are the Slepian vectors.
    pub vectors: DMatrix<f64>,
    /// `M x M` coefficients in the trimmed eigenbasis: `vectors = Vb * coeffs`.
    pub coeffs: DMatrix<f64>,
    /// Energy fraction inside the subset, `s^T M s`.
    pub concentration: DVector<f64>,
    /// Localized frequency; present for the modified criterion only.
    pub localized_freq: Option<DVector<f64>>,
    /// Embedded distance `s^T L s`.
    pub embedded_distance: DVector<f64>,
    pub bandwidth: usize,
    pub criterion: SlepianCriterion,
    pub selector: NodeSelector,
}

fn check_inputs(basis: &SpectralBasis, selector: &NodeSelector, bandwidth: usize) -> Result<()> {
    if !basis.variant().is_laplacian_family() {
        return Err(Error::WrongVariant);
    }
    if selector.len() != basis.n() {
        return Err(Error::DimensionMismatch { expected: basis.n(), got: selector.len() });
    }
    if bandwidth == 0 || bandwidth > basis.n() {
        return Err(Error::BandwidthTooLarge { bandwidth, n_nodes: basis.n() });
    }
    Ok(())
}

/// Square roots of the trimmed eigenvalues; tiny negative round-off clamps to zero.
fn sqrt_eigenvalues(vals: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = vals.amax().max(1.0);
    vals.iter()
        .map(|&l| {
            if l < -PSD_TOL * scale {
                Err(Error::NegativeEigenvalue(l))
            } else {
                Ok(l.max(0.0).sqrt())
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(DVector::from_vec)
}

/// Concentration matrix `C` or its modified form `C2`.
pub fn concentration_matrix(
    basis: &SpectralBasis,
    selector: &NodeSelector,
    bandwidth: usize,
    criterion: SlepianCriterion,
) -> Result<DMatrix<f64>> {
    check_inputs(basis, selector, bandwidth)?;
    let (vals, vbar) = basis.trimmed(bandwidth);
    let inside = vbar.select_rows(&selector.members());
    let c = inside.tr_mul(&inside);
    match criterion {
        SlepianCriterion::EnergyConcentration => Ok(c),
        SlepianCriterion::ModifiedEmbeddedDistance => {
            let r = sqrt_eigenvalues(&vals)?;
            Ok(DMatrix::from_fn(bandwidth, bandwidth, |i, j| r[i] * c[(i, j)] * r[j]))
        }
    }
}

/// Solve the Slepian concentration problem on the `bandwidth` lowest frequencies.
///
/// Energy-criterion vectors come out in decreasing `mu`; modified-criterion
/// vectors in increasing `xi`. Ties keep solver order.
pub fn slepian_basis(
    basis: &SpectralBasis,
    selector: &NodeSelector,
    bandwidth: usize,
    criterion: SlepianCriterion,
) -> Result<SlepianBasis> {
    let cm = concentration_matrix(basis, selector, bandwidth, criterion)?;
    let eig = SymmetricEigen::try_new(cm, 1e-15, 10_000).ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..bandwidth).collect();
    match criterion {
        SlepianCriterion::EnergyConcentration => {
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]))
        }
        SlepianCriterion::ModifiedEmbeddedDistance => {
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        }
    }
    let mut coeffs = eig.eigenvectors.select_columns(&order);
    let (vals, vbar) = basis.trimmed(bandwidth);
    let mut vectors = &vbar * &coeffs;
    // sign is fixed on the node-domain vector, and the coefficients follow
    for k in 0..bandwidth {
        if canonical_sign(vectors.column(k).as_slice()) < 0.0 {
            vectors.column_mut(k).neg_mut();
            coeffs.column_mut(k).neg_mut();
        }
    }

    let members = selector.members();
    let concentration = DVector::from_fn(bandwidth, |k, _| {
        members.iter().map(|&i| vectors[(i, k)].powi(2)).sum::<f64>()
    });
    let embedded_distance = DVector::from_fn(bandwidth, |k, _| {
        (0..bandwidth).map(|j| vals[j] * coeffs[(j, k)].powi(2)).sum::<f64>()
    });
    let localized_freq = match criterion {
        SlepianCriterion::EnergyConcentration => None,
        SlepianCriterion::ModifiedEmbeddedDistance => {
            Some(DVector::from_iterator(bandwidth, order.iter().map(|&i| eig.eigenvalues[i])))
        }
    };
    Ok(SlepianBasis {
        vectors,
        coeffs,
        concentration,
        localized_freq,
        embedded_distance,
        bandwidth,
        criterion,
        selector: selector.clone(),
    })
}

/// Which Slepian vectors pass into the local projector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlepianGate {
    /// `xi_i < xi_max` and `mu_i > epsilon`.
    Threshold { xi_max: f64, epsilon: f64 },
    /// The `count` lowest-`xi` vectors among those with `mu_i > epsilon`.
    LowestConcentrated { count: usize, epsilon: f64 },
}

impl Default for SlepianGate {
    fn default() -> Self {
        SlepianGate::LowestConcentrated { count: DEFAULT_GATE_SIZE, epsilon: DEFAULT_EPSILON }
    }
}

impl SlepianGate {
    fn epsilon(&self) -> f64 {
        match *self {
            SlepianGate::Threshold { epsilon, .. } | SlepianGate::LowestConcentrated { epsilon, .. } => {
                epsilon
            }
        }
    }
}

/// Output of [`slepian_filter`].
#[derive(Debug, Clone)]
pub struct LocalFilterOutput {
    pub values: DMatrix<f64>,
    /// Indices of the Slepian vectors that passed the gate.
    pub selected: Vec<usize>,
    /// Set when the gate selected nothing and the output is identically zero.
    pub empty_gate: bool,
}

impl SlepianBasis {
    pub fn n_nodes(&self) -> usize {
        self.vectors.nrows()
    }

    /// Indices of the vectors selected by `gate`; requires localized frequencies.
    pub fn gate_indices(&self, gate: &SlepianGate) -> Result<Vec<usize>> {
        let xi = self.localized_freq.as_ref().ok_or(Error::WrongCriterion)?;
        let eps = gate.epsilon();
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {eps}")));
        }
        let concentrated = (0..self.bandwidth).filter(|&k| self.concentration[k] > eps);
        Ok(match *gate {
            SlepianGate::Threshold { xi_max, .. } => concentrated.filter(|&k| xi[k] < xi_max).collect(),
            SlepianGate::LowestConcentrated { count, .. } => {
                let mut idx: Vec<usize> = concentrated.collect();
                idx.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]));
                idx.truncate(count);
                idx.sort_unstable();
                idx
            }
        })
    }

    /// `S_sel S_sel^T X` for an arbitrary set of Slepian indices.
    pub fn project(&self, indices: &[usize], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n_nodes() {
            return Err(Error::DimensionMismatch { expected: self.n_nodes(), got: x.nrows() });
        }
        if let Some(&k) = indices.iter().find(|&&k| k >= self.bandwidth) {
            return Err(Error::ModeOutOfRange { index: k, n_modes: self.bandwidth });
        }
        let s = self.vectors.select_columns(indices);
        Ok(&s * s.tr_mul(x))
    }
}

/// Localized filtering `Y = S Gamma S^T X` with the gate on `xi` and `mu`.
pub fn slepian_filter(
    slepian: &SlepianBasis,
    gate: &SlepianGate,
    x: &DMatrix<f64>,
) -> Result<LocalFilterOutput> {
    if slepian.criterion != SlepianCriterion::ModifiedEmbeddedDistance {
        return Err(Error::WrongCriterion);
    }
    let selected = slepian.gate_indices(gate)?;
    let values = slepian.project(&selected, x)?;
    let empty_gate = selected.is_empty();
    if empty_gate {
        log::warn!("slepian gate selected no vectors; local output is zero");
    }
    Ok(LocalFilterOutput { values, selected, empty_gate })
}
